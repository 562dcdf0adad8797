#include "mfheat/partition.hpp"

#include "mfheat/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace mfheat {

GridSpec PartitionPlan::local_spec(std::size_t w) const
{
    return global.z_slab(workers[w].stored_begin, workers[w].stored_end - 1);
}

std::string PartitionPlan::describe() const
{
    std::ostringstream os;
    os << "m=" << m << " split=" << split;
    if (clamped) {
        os << " (clamped from " << requested_split << ")";
    }
    for (std::size_t w = 0; w < 2; ++w) {
        os << "; worker " << w + 1 << " owns [" << workers[w].owned_begin << "," << workers[w].owned_end
           << ") stores [" << workers[w].stored_begin << "," << workers[w].stored_end << ")";
    }
    return os.str();
}

PartitionPlan split_domain(const GridSpec& spec, double m)
{
    if (!(m > 0.0 && m < 1.0)) {
        throw PartitionError("split fraction must lie in (0, 1)");
    }
    if (spec.divisions()[2] < 3) {
        throw PartitionError("two-way z split needs at least 3 cube layers, got " +
                             std::to_string(spec.divisions()[2]));
    }
    PartitionPlan plan;
    plan.global = spec;
    plan.m = m;
    const std::size_t layers = spec.points(2);
    plan.requested_split = static_cast<std::size_t>(std::ceil(m * static_cast<double>(layers)));
    plan.split = std::clamp<std::size_t>(plan.requested_split, 2, layers - 2);
    plan.clamped = plan.split != plan.requested_split;
    const std::size_t s = plan.split;
    plan.workers[0] = {0, s, 0, s + 1};
    plan.workers[1] = {s, layers, s - 2, layers};
    return plan;
}

std::array<std::vector<double>, 2> scatter(const PartitionPlan& plan, std::span<const double> global)
{
    if (global.size() != plan.global.vertex_count()) {
        throw std::invalid_argument("scatter: vector length does not match the grid");
    }
    std::array<std::vector<double>, 2> out;
    for (std::size_t w = 0; w < 2; ++w) {
        const auto first = global.begin() + static_cast<std::ptrdiff_t>(plan.workers[w].stored_begin * plan.layer_size());
        out[w].assign(first, first + static_cast<std::ptrdiff_t>(plan.stored_vertices(w)));
    }
    return out;
}

void gather(const PartitionPlan& plan, const std::array<std::vector<double>, 2>& local, std::span<double> global)
{
    if (global.size() != plan.global.vertex_count()) {
        throw std::invalid_argument("gather: vector length does not match the grid");
    }
    for (std::size_t w = 0; w < 2; ++w) {
        const std::size_t dst = plan.workers[w].owned_begin * plan.layer_size();
        std::copy(local[w].begin() + static_cast<std::ptrdiff_t>(plan.owned_first(w)),
                  local[w].begin() + static_cast<std::ptrdiff_t>(plan.owned_last(w)),
                  global.begin() + static_cast<std::ptrdiff_t>(dst));
    }
}

namespace {

std::size_t local_layer_offset(const PartitionPlan& plan, std::size_t w, std::size_t layer)
{
    return (layer - plan.workers[w].stored_begin) * plan.layer_size();
}

std::span<const double> owned_span(const PartitionPlan& plan, std::size_t w, std::span<const double> v)
{
    return v.subspan(plan.owned_first(w), plan.owned_last(w) - plan.owned_first(w));
}

// Zero everything outside the owned layers.
void mask_unowned(const PartitionPlan& plan, std::size_t w, std::span<double> v)
{
    std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(plan.owned_first(w)), 0.0);
    std::fill(v.begin() + static_cast<std::ptrdiff_t>(plan.owned_last(w)), v.end(), 0.0);
}

}  // namespace

void exchange_halos(const PartitionPlan& plan, std::array<std::span<double>, 2> d, TransferAudit* audit)
{
    const std::size_t ls = plan.layer_size();
    for (std::size_t w = 0; w < 2; ++w) {
        const std::size_t other = 1 - w;
        const auto src = d[w].begin() + static_cast<std::ptrdiff_t>(local_layer_offset(plan, w, plan.send_layer(w)));
        const auto dst =
            d[other].begin() + static_cast<std::ptrdiff_t>(local_layer_offset(plan, other, plan.halo_layer(other)));
        std::copy(src, src + static_cast<std::ptrdiff_t>(ls), dst);
        if (audit) {
            audit->layers_sent[w] += 1;
            audit->bytes_sent[w] += ls * sizeof(double);
        }
    }
}

double merged_dot(const PartitionPlan& plan, const std::array<std::vector<double>, 2>& x,
                  const std::array<std::vector<double>, 2>& y)
{
    std::array<double, 2> partial{};
    for (std::size_t w = 0; w < 2; ++w) {
        partial[w] = dot<double>(owned_span(plan, w, x[w]), owned_span(plan, w, y[w]));
    }
    return partial[0] + partial[1];
}

PartitionedSystem::PartitionedSystem(PartitionPlan plan, const MaterialEvaluator& evaluator,
                                     const OperatorParams& params)
    : plan_(std::move(plan))
{
    ops_.reserve(2);
    for (std::size_t w = 0; w < 2; ++w) {
        ops_.emplace_back(plan_.local_spec(w), evaluator, params);
        diag_[w] = ops_[w].jacobi_diagonal();
    }
}

namespace {

// Rendezvous state shared by the two workers.
struct Channel {
    explicit Channel(std::size_t layer_size) : barrier(2)
    {
        buffer[0].resize(layer_size);
        buffer[1].resize(layer_size);
    }

    std::barrier<> barrier;
    std::array<std::vector<double>, 2> buffer;
    std::array<std::array<double, 2>, 2> partial{};  // [call parity][worker]
    std::atomic<bool> failed{false};
};

class WorkerAbort : public std::exception {};

struct Worker {
    const PartitionedSystem& sys;
    Channel& ch;
    std::size_t w;
    TransferAudit& audit;
    std::size_t dot_calls = 0;

    void sync()
    {
        ch.barrier.arrive_and_wait();
        if (ch.failed.load()) {
            throw WorkerAbort{};
        }
    }

    double merged(std::span<const double> x, std::span<const double> y, bool setup)
    {
        const auto& plan = sys.plan();
        const std::size_t parity = dot_calls++ % 2;
        ch.partial[parity][w] = dot<double>(owned_span(plan, w, x), owned_span(plan, w, y));
        (setup ? audit.setup_scalars_sent : audit.scalars_sent)[w] += 1;
        sync();
        return ch.partial[parity][0] + ch.partial[parity][1];
    }

    void exchange(std::span<double> d, bool setup)
    {
        const auto& plan = sys.plan();
        const std::size_t ls = plan.layer_size();
        const auto src = d.begin() + static_cast<std::ptrdiff_t>(local_layer_offset(plan, w, plan.send_layer(w)));
        std::copy(src, src + static_cast<std::ptrdiff_t>(ls), ch.buffer[w].begin());
        (setup ? audit.setup_layers_sent : audit.layers_sent)[w] += 1;
        audit.bytes_sent[w] += ls * sizeof(double);
        sync();
        const auto& in = ch.buffer[1 - w];
        std::copy(in.begin(), in.end(),
                  d.begin() + static_cast<std::ptrdiff_t>(local_layer_offset(plan, w, plan.halo_layer(w))));
    }

    PcgResult run(std::span<const double> b, std::span<double> x, const PcgConfig& cfg, std::size_t n_global,
                  const PartitionMonitor* monitor)
    {
        const auto& plan = sys.plan();
        const auto& op = sys.op(w);
        const auto diag = sys.diagonal(w);
        const std::size_t n = x.size();
        const std::size_t i_max = cfg.max_iterations(n_global);
        OperatorWorkspace<double> ws;
        std::vector<double> r(n), d(n), q(n), s(n);

        std::copy(b.begin(), b.end(), r.begin());
        mask_unowned(plan, w, r);
        dimvm<double>(diag, r, s);
        const double delta_b = merged(r, s, true);
        op.apply_fused(x, -1.0, b, r, ws);
        mask_unowned(plan, w, r);
        dimvm<double>(diag, r, d);
        exchange(d, true);
        double delta_new = merged(r, d, true);
        const double delta0 = delta_new;
        const double threshold = cfg.threshold(delta0, delta_b);
        double delta_old = delta_new;

        std::size_t i = 0;
        while (i < i_max && delta_new > threshold) {
            op.apply(d, q, ws);
            mask_unowned(plan, w, q);
            const double dq = merged(d, q, false);
            if (!(dq > 0.0)) {
                throw BreakdownError("partitioned PCG breakdown: d^T A d = " + std::to_string(dq) +
                                     " is not positive");
            }
            const double alpha = delta_new / dq;
            axpy<double>(x, d, alpha, x);
            if (i % cfg.recompute_period == 0) {
                op.apply_fused(x, -1.0, b, r, ws);
                mask_unowned(plan, w, r);
            }
            else {
                axpy<double>(r, q, -alpha, r);
            }
            dimvm<double>(diag, r, s);
            delta_new = merged(r, s, false);
            if (!std::isfinite(delta_new)) {
                throw BreakdownError("partitioned PCG breakdown: non-finite residual");
            }
            const double beta = beta_update(delta_new, delta_old);
            axpy<double>(s, d, beta, d);
            exchange(d, false);
            ++i;
            if (monitor && monitor->on_iteration) {
                monitor->on_iteration(w, i, x, r, d);
            }
        }
        if (w == 0) {
            audit.iterations = i;
        }
        if (delta_new > threshold) {
            throw NonConvergenceError(i, delta_new);
        }
        return {i, delta_new, delta0};
    }
};

}  // namespace

PartitionedResult pcg_partitioned(const PartitionedSystem& system, std::span<const double> b, std::span<double> x,
                                  const PcgConfig& cfg, const PartitionMonitor* monitor)
{
    cfg.validate();
    const auto& plan = system.plan();
    auto bl = scatter(plan, b);
    auto xl = scatter(plan, x);
    Channel channel(plan.layer_size());
    PartitionedResult result;
    std::array<PcgResult, 2> res{};
    std::array<std::exception_ptr, 2> errors{};

    auto body = [&](std::size_t w) {
        Worker worker{system, channel, w, result.audit};
        try {
            res[w] = worker.run(bl[w], xl[w], cfg, plan.global.vertex_count(), monitor);
        }
        catch (const WorkerAbort&) {
            channel.barrier.arrive_and_drop();
        }
        catch (...) {
            errors[w] = std::current_exception();
            channel.failed.store(true);
            channel.barrier.arrive_and_drop();
        }
    };
    {
        std::jthread second(body, 1);
        body(0);
    }
    gather(plan, xl, x);
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    if (res[0].iterations != res[1].iterations) {
        throw std::logic_error("partitioned PCG: workers disagree on the iteration count");
    }
    result.pcg = res[0];
    return result;
}

SimulationResult simulate_partitioned(const TransientProblem& problem, double m, const SimulationOptions& options,
                                      TransferAudit* audit)
{
    using clock = std::chrono::steady_clock;
    const auto& spec = problem.spec();
    const std::size_t n = spec.vertex_count();
    auto plan = split_domain(spec, m);
    const PartitionedSystem sys_a(plan, problem.op_A.evaluator(), problem.op_A.params());
    const PartitionedSystem sys_l(plan, problem.op_L.evaluator(), problem.op_L.params());
    const auto load = scatter(plan, problem.load);

    std::vector<double> u = options.initial ? *options.initial : std::vector<double>(n, problem.ambient);
    if (u.size() != n) {
        throw std::invalid_argument("initial field length does not match the grid");
    }
    SimulationResult result;
    if (options.keep_snapshots) {
        result.snapshots.push_back(u);
    }
    std::vector<double> guess = u;
    std::vector<double> b(n);
    for (std::size_t step_no = 0; step_no < problem.n_steps; ++step_no) {
        StepStats stats;
        const auto t0 = clock::now();
        auto ul = scatter(plan, u);
        std::array<std::vector<double>, 2> bl;
        for (std::size_t w = 0; w < 2; ++w) {
            bl[w].resize(ul[w].size());
            sys_l.op(w).apply_fused(ul[w], 1.0, load[w], bl[w]);
        }
        gather(plan, bl, b);
        const auto t1 = clock::now();
        std::vector<double> next = guess;
        const auto res = pcg_partitioned(sys_a, b, next, problem.pcg);
        const auto t2 = clock::now();
        stats.iterations = res.pcg.iterations;
        stats.rhs_seconds = std::chrono::duration<double>(t1 - t0).count();
        stats.pcg_seconds = std::chrono::duration<double>(t2 - t1).count();
        if (audit) {
            for (std::size_t w = 0; w < 2; ++w) {
                audit->layers_sent[w] += res.audit.layers_sent[w];
                audit->scalars_sent[w] += res.audit.scalars_sent[w];
                audit->bytes_sent[w] += res.audit.bytes_sent[w];
                audit->setup_layers_sent[w] += res.audit.setup_layers_sent[w];
                audit->setup_scalars_sent[w] += res.audit.setup_scalars_sent[w];
            }
            audit->iterations += res.audit.iterations;
        }
        guess = u;
        extrapolate_guess<double>(guess, next);
        u = std::move(next);
        result.steps.push_back(stats);
        if (options.keep_snapshots) {
            result.snapshots.push_back(u);
        }
        if (options.on_step) {
            options.on_step(step_no + 1, u);
        }
    }
    result.final_field = std::move(u);
    return result;
}

}  // namespace mfheat
