#include "mfheat/bench.hpp"

#include "mfheat/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <new>

namespace mfheat {

std::vector<BenchRecord> run_bench(const RunConfig& cfg, const std::function<void(const BenchRecord&)>& progress)
{
    if (cfg.bench.sizes.empty()) {
        throw ConfigError("bench.sizes is empty");
    }
    std::vector<BenchRecord> out;
    for (const auto& size : cfg.bench.sizes) {
        for (const Strategy strategy : cfg.bench.strategies) {
            for (const std::size_t parts : cfg.bench.partitions) {
                RunConfig cell = cfg;
                cell.grid.divisions = size;
                cell.solver.strategy = strategy;
                cell.solver.partitions = parts;
                cell.time.n_steps = cfg.bench.n_steps;
                BenchRecord rec;
                rec.divisions = size;
                rec.dof = (size[0] + 1) * (size[1] + 1) * (size[2] + 1);
                rec.strategy = strategy;
                rec.precision = cfg.solver.precision;
                rec.partitions = parts;
                try {
                    for (std::size_t r = 0; r < cfg.bench.repeats; ++r) {
                        const RunStats stats = run_transient(cell).stats;
                        if (r == 0 || stats.seconds_per_iteration() < rec.stats.seconds_per_iteration()) {
                            rec.stats = stats;
                        }
                    }
                }
                catch (const std::bad_alloc&) {
                    rec.skipped = true;
                    rec.note = "out of memory";
                }
                out.push_back(rec);
                if (progress) {
                    progress(out.back());
                }
            }
        }
    }
    return out;
}

namespace {

std::ofstream open_csv(const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

}  // namespace

void write_bench_csv(const std::vector<BenchRecord>& records, const std::string& path)
{
    auto out = open_csv(path);
    out << "dof,cx,cy,cz,strategy,precision,partitions,status,iterations,seconds_per_iteration,total_seconds\n";
    for (const auto& r : records) {
        out << r.dof << ',' << r.divisions[0] << ',' << r.divisions[1] << ',' << r.divisions[2] << ','
            << to_string(r.strategy) << ',' << to_string(r.precision) << ',' << r.partitions << ','
            << (r.skipped ? "skipped" : "ok") << ',' << r.stats.total_iterations << ','
            << r.stats.seconds_per_iteration() << ',' << r.stats.total_seconds << '\n';
    }
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

void write_phase_csv(const std::vector<BenchRecord>& records, const std::string& path)
{
    auto out = open_csv(path);
    out << "dof,strategy,precision,partitions,setup_seconds,rhs_seconds,pcg_seconds,other_seconds\n";
    for (const auto& r : records) {
        if (r.skipped) {
            continue;
        }
        out << r.dof << ',' << to_string(r.strategy) << ',' << to_string(r.precision) << ',' << r.partitions << ','
            << r.stats.setup_seconds << ',' << r.stats.rhs_seconds << ',' << r.stats.pcg_seconds << ','
            << r.stats.other_seconds() << '\n';
    }
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("loglog_slope needs at least two matching points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mfheat
