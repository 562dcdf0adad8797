#pragma once

#include "mfheat/config.hpp"
#include "mfheat/driver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mfheat {

struct BenchRecord {
    Index3 divisions{};
    std::size_t dof = 0;
    Strategy strategy = Strategy::coalesced;
    Precision precision = Precision::dual;
    std::size_t partitions = 1;
    bool skipped = false;
    std::string note;
    RunStats stats;
};

/// One laminate run per (size, strategy, partitions) cell of cfg.bench, on the
/// configured plate bounds, repeated bench.repeats times. A cell that runs out of memory is recorded as
/// skipped and the sweep continues. progress, when set, is called after each cell.
[[nodiscard]] std::vector<BenchRecord> run_bench(const RunConfig& cfg,
                                                 const std::function<void(const BenchRecord&)>& progress = {});

/// dof,cx,cy,cz,strategy,precision,partitions,status,iterations,seconds_per_iteration,total_seconds
void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path);
/// Phase breakdown: dof,strategy,precision,partitions,setup_seconds,rhs_seconds,pcg_seconds,other_seconds
void write_phase_csv(const std::vector<BenchRecord>& records, const std::string& path);

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfheat
