#pragma once

#include "mfheat/config.hpp"
#include "mfheat/solver.hpp"

#include <vector>

namespace mfheat {

/// Wall time per phase of one transient run. setup covers operator
/// construction (fixed-grid matrices, coefficients, Jacobi diagonal) and the
/// load vector; it is excluded from the per-iteration figure.
struct RunStats {
    std::size_t dof = 0;
    std::size_t total_iterations = 0;
    double setup_seconds = 0.0;
    double rhs_seconds = 0.0;
    double pcg_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<StepStats> steps;

    [[nodiscard]] double seconds_per_iteration() const noexcept
    {
        return total_iterations ? pcg_seconds / static_cast<double>(total_iterations) : 0.0;
    }
    [[nodiscard]] double other_seconds() const noexcept
    {
        return total_seconds - setup_seconds - rhs_seconds - pcg_seconds;
    }
};

struct TransientRun {
    std::vector<double> final_field;
    RunStats stats;
};

/// Runs the configured transient problem with the configured precision and
/// partition count. Single precision is only available without partitions.
[[nodiscard]] TransientRun run_transient(const RunConfig& cfg);

}  // namespace mfheat
