#pragma once

#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = dist(rng);
    }
    return v;
}

inline double linf(std::span<const double> a)
{
    double m = 0.0;
    for (double x : a) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

inline double linf_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

/// ||a - b||_inf / ||b||_inf (absolute when b vanishes).
inline double rel_linf(std::span<const double> a, std::span<const double> b)
{
    const double scale = linf(b);
    const double d = linf_diff(a, b);
    return scale > 0.0 ? d / scale : d;
}

/// Front face heated plate of the laminate benchmark, h = 1 in x and y.
inline mfheat::GridSpec laminate_grid(std::size_t cx, std::size_t cy, std::size_t cz)
{
    return {{-15.0, -15.0, 0.0}, {15.0, 15.0, 10.0}, {cx, cy, cz}};
}

inline mfheat::GridSpec unit_grid(std::size_t c0, std::size_t c1, std::size_t c2)
{
    return {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {c0, c1, c2}};
}

/// Material kinds exercised by the oracle sweeps, scaled to a grid's extent.
inline std::vector<mfheat::MaterialField> all_fields(const mfheat::GridSpec& spec)
{
    const double z0 = spec.bounds_min()[2];
    const double z1 = spec.bounds_max()[2];
    const double zc = 0.5 * (z0 + z1);
    const double thick = z1 - z0;
    return {
        {mfheat::TwoLayer{zc}, {}},
        {mfheat::SmoothedLayer{zc, 0.4 * thick}, {}},
        {mfheat::Functional{}, {}},
        {mfheat::Corrosion{0.6 * thick, 0.0}, {}},
    };
}

}  // namespace testing

#include "mfheat/solver.hpp"

namespace testing {

/// Laminate benchmark: two_layer at z = 5, unit flux on the front face.
inline mfheat::TransientProblem laminate_problem(const mfheat::GridSpec& spec, mfheat::Strategy strategy,
                                                 std::size_t n_steps, double dt = 0.01, double tol = 1e-6)
{
    const mfheat::MaterialEvaluator eval({mfheat::TwoLayer{5.0}, {}}, spec);
    const std::array<mfheat::FaceFlux, 1> flux{
        mfheat::FaceFlux{mfheat::Face::z_min, [](const mfheat::Vec3&) { return 1.0; }}};
    mfheat::ProblemSetup setup;
    setup.strategy = strategy;
    setup.dt = dt;
    setup.n_steps = n_steps;
    setup.pcg.tol = tol;
    return mfheat::make_problem(spec, eval, mfheat::boundary_load(spec, flux, dt), setup);
}

inline double layer_mean(const mfheat::GridSpec& spec, std::span<const double> u, std::size_t k)
{
    double sum = 0.0;
    for (std::size_t j = 0; j < spec.points(1); ++j) {
        for (std::size_t i = 0; i < spec.points(0); ++i) {
            sum += u[spec.vertex_index(i, j, k)];
        }
    }
    return sum / static_cast<double>(spec.layer_size());
}

}  // namespace testing
