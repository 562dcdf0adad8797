#include "mfheat/driver.hpp"

#include "mfheat/linalg.hpp"
#include "mfheat/partition.hpp"

#include <algorithm>
#include <array>
#include <chrono>

namespace mfheat {

namespace {

using clock = std::chrono::steady_clock;

double since(clock::time_point t)
{
    return std::chrono::duration<double>(clock::now() - t).count();
}

// Theta-scheme loop on Real-valued operators; mirrors simulate().
template <class Real>
std::vector<double> march(const GridSpec& spec, const MaterialEvaluator& eval, std::span<const double> load,
                          const ProblemSetup& setup, RunStats& stats)
{
    const auto t0 = clock::now();
    OperatorParams pa{setup.strategy, Mode::A, setup.theta, setup.dt, setup.flip_stiffness_sign};
    OperatorParams pl = pa;
    pl.mode = Mode::L;
    const SystemOperator<Real> op_a(spec, eval, pa);
    const SystemOperator<Real> op_l(spec, eval, pl);
    const auto diag = op_a.jacobi_diagonal();
    const std::vector<Real> f(load.begin(), load.end());
    stats.setup_seconds += since(t0);

    const std::size_t n = spec.vertex_count();
    std::vector<Real> u(n, static_cast<Real>(setup.ambient));
    std::vector<Real> guess = u;
    std::vector<Real> b(n);
    for (std::size_t s = 0; s < setup.n_steps; ++s) {
        StepStats st;
        const auto t1 = clock::now();
        op_l.apply_fused(u, Real(1), f, b);
        st.rhs_seconds = since(t1);
        std::vector<Real> x = guess;
        const auto t2 = clock::now();
        st.iterations = pcg<Real>(op_a, b, x, diag, setup.pcg).iterations;
        st.pcg_seconds = since(t2);
        guess = u;
        extrapolate_guess<Real>(guess, x);
        u = std::move(x);
        stats.steps.push_back(st);
    }
    return {u.begin(), u.end()};
}

}  // namespace

TransientRun run_transient(const RunConfig& cfg)
{
    const auto t0 = clock::now();
    TransientRun run;
    const GridSpec spec = cfg.grid.spec();
    run.stats.dof = spec.vertex_count();
    const MaterialEvaluator eval(cfg.material, spec);
    const std::array<FaceFlux, 1> flux{cfg.load.flux()};
    ProblemSetup setup = cfg.problem_setup();

    auto ts = clock::now();
    auto load = boundary_load(spec, flux, setup.dt);
    run.stats.setup_seconds = since(ts);

    if (cfg.solver.precision == Precision::single) {
        if (cfg.solver.partitions != 1) {
            throw ConfigError("single precision is only supported with solver.partitions = 1");
        }
        // Rounding in float stalls the relative test near 1e-7; accept that level.
        setup.pcg.floor = std::max(setup.pcg.floor, 1e-6);
        run.final_field = march<float>(spec, eval, load, setup, run.stats);
    }
    else if (cfg.solver.partitions == 1) {
        run.final_field = march<double>(spec, eval, load, setup, run.stats);
    }
    else {
        ts = clock::now();
        const auto problem = make_problem(spec, eval, std::move(load), setup);
        run.stats.setup_seconds += since(ts);
        auto res = simulate_partitioned(problem, cfg.solver.split_fraction);
        run.final_field = std::move(res.final_field);
        run.stats.steps = std::move(res.steps);
    }
    for (const auto& s : run.stats.steps) {
        run.stats.total_iterations += s.iterations;
        run.stats.rhs_seconds += s.rhs_seconds;
        run.stats.pcg_seconds += s.pcg_seconds;
    }
    run.stats.total_seconds = since(t0);
    return run;
}

}  // namespace mfheat
