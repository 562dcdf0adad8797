#include "mfheat/solver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace mfheat {

void PcgConfig::validate() const
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("pcg tolerance must be positive");
    }
    if (!(floor >= 0.0)) {
        throw std::invalid_argument("pcg roundoff floor must be non-negative");
    }
    if (recompute_period < 1) {
        throw std::invalid_argument("pcg recompute period must be at least 1");
    }
}

std::string to_string(Face f)
{
    switch (f) {
    case Face::x_min:
        return "x_min";
    case Face::x_max:
        return "x_max";
    case Face::y_min:
        return "y_min";
    case Face::y_max:
        return "y_max";
    case Face::z_min:
        return "z_min";
    case Face::z_max:
        return "z_max";
    }
    return "unknown";
}

Face parse_face(const std::string& name)
{
    for (Face f : {Face::x_min, Face::x_max, Face::y_min, Face::y_max, Face::z_min, Face::z_max}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw std::invalid_argument("unknown face '" + name + "'");
}

FluxFunction gaussian_beam(double power, double sigma, double cx, double cy)
{
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("beam width must be positive");
    }
    const double peak = power / (2.0 * std::numbers::pi * sigma * sigma);
    return [=](const Vec3& p) {
        const double dx = p[0] - cx;
        const double dy = p[1] - cy;
        return peak * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    };
}

std::vector<double> boundary_load(const GridSpec& spec, std::span<const FaceFlux> fluxes, double dt)
{
    std::vector<double> load(spec.vertex_count(), 0.0);
    const auto& div = spec.divisions();
    for (const auto& ff : fluxes) {
        if (!ff.flux) {
            continue;
        }
        const auto face = static_cast<int>(ff.face);
        const std::size_t axis = static_cast<std::size_t>(face / 2);
        const bool upper = (face % 2) == 1;
        const std::size_t corner_bit = upper ? 1U : 0U;
        const std::size_t u = (axis + 1) % 3;
        const std::size_t w = (axis + 2) % 3;
        for (std::size_t a = 0; a < div[u]; ++a) {
            for (std::size_t c = 0; c < div[w]; ++c) {
                Index3 cube{};
                cube[axis] = upper ? div[axis] - 1 : 0;
                cube[u] = a;
                cube[w] = c;
                for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
                    // Triangular faces of tet t lying on the boundary plane.
                    std::array<std::size_t, 4> on{};
                    std::size_t count = 0;
                    for (std::size_t v = 0; v < 4; ++v) {
                        const auto corner = TetTable::corner_of[t][v];
                        if (TetTable::corner_offset(corner)[axis] == corner_bit) {
                            on[count++] = corner;
                        }
                    }
                    if (count != 3) {
                        continue;
                    }
                    std::array<Vec3, 3> p{};
                    std::array<std::size_t, 3> idx{};
                    for (std::size_t m = 0; m < 3; ++m) {
                        const auto off = TetTable::corner_offset(on[m]);
                        Index3 g{cube[0] + off[0], cube[1] + off[1], cube[2] + off[2]};
                        p[m] = spec.point(g[0], g[1], g[2]);
                        idx[m] = spec.vertex_index(g[0], g[1], g[2]);
                    }
                    const Vec3 e1{p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]};
                    const Vec3 e2{p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]};
                    const Vec3 cr{e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
                                  e1[0] * e2[1] - e1[1] * e2[0]};
                    const double area = 0.5 * std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
                    const Vec3 centroid{(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                                        (p[0][2] + p[1][2] + p[2][2]) / 3.0};
                    const double share = area / 3.0 * dt * ff.flux(centroid);
                    for (std::size_t m = 0; m < 3; ++m) {
                        load[idx[m]] += share;
                    }
                }
            }
        }
    }
    return load;
}

TransientProblem make_problem(const GridSpec& spec, const MaterialEvaluator& materials, std::vector<double> load,
                              const ProblemSetup& setup)
{
    if (load.size() != spec.vertex_count()) {
        throw std::invalid_argument("load vector length does not match the grid");
    }
    OperatorParams pa{setup.strategy, Mode::A, setup.theta, setup.dt, setup.flip_stiffness_sign};
    OperatorParams pl = pa;
    pl.mode = Mode::L;
    TransientProblem problem{SystemOperator<double>(spec, materials, pa),
                             SystemOperator<double>(spec, materials, pl),
                             std::move(load),
                             {},
                             setup.ambient,
                             setup.n_steps,
                             setup.pcg};
    problem.diagonal = problem.op_A.jacobi_diagonal();
    return problem;
}

std::vector<double> step(const TransientProblem& problem, std::span<const double> u_prev,
                         std::span<const double> guess, StepStats* stats)
{
    using clock = std::chrono::steady_clock;
    const std::size_t n = problem.spec().vertex_count();
    const auto t0 = clock::now();
    std::vector<double> b(n);
    problem.op_L.apply_fused(u_prev, 1.0, problem.load, b);
    const auto t1 = clock::now();
    std::vector<double> x(guess.begin(), guess.end());
    const auto res = pcg<double>(problem.op_A, b, x, problem.diagonal, problem.pcg);
    const auto t2 = clock::now();
    if (stats) {
        stats->iterations = res.iterations;
        stats->rhs_seconds = std::chrono::duration<double>(t1 - t0).count();
        stats->pcg_seconds = std::chrono::duration<double>(t2 - t1).count();
    }
    return x;
}

std::size_t SimulationResult::total_iterations() const noexcept
{
    std::size_t total = 0;
    for (const auto& s : steps) {
        total += s.iterations;
    }
    return total;
}

double SimulationResult::total_pcg_seconds() const noexcept
{
    double total = 0.0;
    for (const auto& s : steps) {
        total += s.pcg_seconds;
    }
    return total;
}

SimulationResult simulate(const TransientProblem& problem, const SimulationOptions& options)
{
    const std::size_t n = problem.spec().vertex_count();
    std::vector<double> u = options.initial ? *options.initial : std::vector<double>(n, problem.ambient);
    if (u.size() != n) {
        throw std::invalid_argument("initial field length does not match the grid");
    }
    SimulationResult result;
    if (options.keep_snapshots) {
        result.snapshots.push_back(u);
    }
    std::vector<double> guess = u;
    result.steps.reserve(problem.n_steps);
    for (std::size_t i = 0; i < problem.n_steps; ++i) {
        StepStats stats;
        auto next = step(problem, u, guess, &stats);
        guess = u;
        extrapolate_guess<double>(guess, next);
        u = std::move(next);
        result.steps.push_back(stats);
        if (options.keep_snapshots) {
            result.snapshots.push_back(u);
        }
        if (options.on_step) {
            options.on_step(i + 1, u);
        }
    }
    result.final_field = std::move(u);
    return result;
}

}  // namespace mfheat
