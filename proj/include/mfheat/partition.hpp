#pragma once

#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"
#include "mfheat/operator.hpp"
#include "mfheat/solver.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

class PartitionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Half-open z-layer ranges of one worker.
struct WorkerLayers {
    std::size_t owned_begin = 0;
    std::size_t owned_end = 0;
    std::size_t stored_begin = 0;
    std::size_t stored_end = 0;

    [[nodiscard]] std::size_t owned_count() const noexcept { return owned_end - owned_begin; }
    [[nodiscard]] std::size_t stored_count() const noexcept { return stored_end - stored_begin; }
    [[nodiscard]] bool owns(std::size_t layer) const noexcept { return layer >= owned_begin && layer < owned_end; }
    [[nodiscard]] bool stores(std::size_t layer) const noexcept
    {
        return layer >= stored_begin && layer < stored_end;
    }
};

/// Two-worker split of the z layers. With s = ceil(m (C2+1)) worker 1 owns
/// layers [0, s) and stores [0, s] (halo s); worker 2 owns [s, C2+1) and
/// stores from s-2 (halo s-1; layer s-2 completes its overlap but is never
/// read by an owned row).
struct PartitionPlan {
    GridSpec global;
    double m = 0.5;
    std::size_t split = 0;            // first layer owned by worker 2
    std::size_t requested_split = 0;  // ceil(m (C2+1)) before clamping
    bool clamped = false;
    std::array<WorkerLayers, 2> workers{};

    [[nodiscard]] std::size_t layers() const noexcept { return global.points(2); }
    [[nodiscard]] std::size_t layer_size() const noexcept { return global.layer_size(); }
    /// Worker-local grid over the stored layers.
    [[nodiscard]] GridSpec local_spec(std::size_t w) const;
    [[nodiscard]] std::size_t stored_vertices(std::size_t w) const noexcept
    {
        return workers[w].stored_count() * layer_size();
    }
    /// Local vertex range [first, last) of the owned layers.
    [[nodiscard]] std::size_t owned_first(std::size_t w) const noexcept
    {
        return (workers[w].owned_begin - workers[w].stored_begin) * layer_size();
    }
    [[nodiscard]] std::size_t owned_last(std::size_t w) const noexcept
    {
        return (workers[w].owned_end - workers[w].stored_begin) * layer_size();
    }
    /// Layer each worker sends (global index) and the halo layer it receives.
    [[nodiscard]] std::size_t send_layer(std::size_t w) const noexcept { return w == 0 ? split - 1 : split; }
    [[nodiscard]] std::size_t halo_layer(std::size_t w) const noexcept { return w == 0 ? split : split - 1; }
    [[nodiscard]] std::string describe() const;
};

/// Splits at fraction m in (0, 1). A split leaving a worker fewer than two
/// owned layers is clamped and flagged. Needs C2 >= 3.
[[nodiscard]] PartitionPlan split_domain(const GridSpec& spec, double m);

/// Copies of a global vector over each worker's stored layers.
[[nodiscard]] std::array<std::vector<double>, 2> scatter(const PartitionPlan& plan, std::span<const double> global);
/// Concatenation of the owned layers.
void gather(const PartitionPlan& plan, const std::array<std::vector<double>, 2>& local, std::span<double> global);

/// Exchange counters, per sending worker.
struct TransferAudit {
    std::array<std::size_t, 2> layers_sent{};
    std::array<std::size_t, 2> scalars_sent{};
    std::array<std::size_t, 2> bytes_sent{};
    std::size_t iterations = 0;
    /// Exchanges before the first iteration (initial d, delta0 and the b norm).
    std::array<std::size_t, 2> setup_layers_sent{};
    std::array<std::size_t, 2> setup_scalars_sent{};
};

/// Copies worker 1's top owned layer into worker 2's halo and worker 2's
/// bottom owned layer into worker 1's halo.
void exchange_halos(const PartitionPlan& plan, std::array<std::span<double>, 2> d, TransferAudit* audit = nullptr);

/// Partial dots over owned vertices, summed in worker order.
[[nodiscard]] double merged_dot(const PartitionPlan& plan, const std::array<std::vector<double>, 2>& x,
                                const std::array<std::vector<double>, 2>& y);

/// Worker-local operators and Jacobi diagonals.
class PartitionedSystem {
public:
    PartitionedSystem(PartitionPlan plan, const MaterialEvaluator& evaluator, const OperatorParams& params);

    [[nodiscard]] const PartitionPlan& plan() const noexcept { return plan_; }
    [[nodiscard]] const SystemOperator<double>& op(std::size_t w) const { return ops_[w]; }
    [[nodiscard]] std::span<const double> diagonal(std::size_t w) const { return diag_[w]; }

private:
    PartitionPlan plan_;
    std::vector<SystemOperator<double>> ops_;
    std::array<std::vector<double>, 2> diag_;
};

struct PartitionMonitor {
    /// Called from worker w's thread after iteration i with its local vectors.
    std::function<void(std::size_t w, std::size_t i, std::span<const double> x, std::span<const double> r,
                       std::span<const double> d)>
        on_iteration;
};

struct PartitionedResult {
    PcgResult pcg;
    TransferAudit audit;
};

/// Lockstep PCG on two concurrent workers. x holds the global initial guess on
/// entry and the reassembled owned layers on exit.
PartitionedResult pcg_partitioned(const PartitionedSystem& system, std::span<const double> b, std::span<double> x,
                                  const PcgConfig& cfg, const PartitionMonitor* monitor = nullptr);

/// Time stepping with both the right-hand side pass and PCG on the workers.
[[nodiscard]] SimulationResult simulate_partitioned(const TransientProblem& problem, double m,
                                                    const SimulationOptions& options = {},
                                                    TransferAudit* audit = nullptr);

}  // namespace mfheat
