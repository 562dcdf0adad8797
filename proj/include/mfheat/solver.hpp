#pragma once

#include "mfheat/linalg.hpp"
#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"
#include "mfheat/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

struct PcgConfig {
    std::size_t i_max = 0;  // 0 selects ceil(10 sqrt(N))
    double tol = 1e-6;      // relative: stop when r^T P^{-1} r <= tol^2 times its initial value
    std::size_t recompute_period = 50;
    /// Roundoff floor: also stop once sqrt(delta_new) <= floor * sqrt(b^T P^{-1} b).
    /// Keeps an exact initial guess from iterating on rounding noise.
    double floor = 1e-13;

    void validate() const;
    [[nodiscard]] double threshold(double delta0, double delta_b) const noexcept
    {
        return std::max(tol * tol * delta0, floor * floor * delta_b);
    }
    [[nodiscard]] std::size_t max_iterations(std::size_t n) const noexcept
    {
        return i_max > 0 ? i_max : static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
    }
};

struct PcgResult {
    std::size_t iterations = 0;
    double delta = 0.0;
    double delta0 = 0.0;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(std::size_t iterations, double delta)
        : std::runtime_error("PCG did not converge after " + std::to_string(iterations) +
                             " iterations (delta = " + std::to_string(delta) + ")"),
          iterations_(iterations), delta_(delta)
    {
    }
    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }

private:
    std::size_t iterations_;
    double delta_;
};

class BreakdownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optional observation hooks; used by tests and the verification harness.
template <class Real>
struct PcgMonitor {
    /// After iteration i (1-based) with the current x, r, d and delta.
    std::function<void(std::size_t, std::span<const Real>, std::span<const Real>, std::span<const Real>, double)>
        on_iteration;
    /// At a recompute iteration: ||r_exact - r_recurrence||_2 and ||b||_2.
    std::function<void(std::size_t, double, double)> on_refresh;
};

/// Jacobi-preconditioned conjugate gradients. x holds the initial guess on
/// entry and the iterate on exit (also when an exception is thrown). Stops when
/// delta_new <= tol^2 delta_0 or at the roundoff floor. Every
/// `recompute_period` iterations, starting with the first, the residual is
/// recomputed as b - A x instead of by recurrence. Op needs apply(x, y) and
/// apply_fused(x, c, b, y) computing y = c A x + b.
template <class Real, class Op>
PcgResult pcg(const Op& op, std::span<const Real> b, std::span<Real> x, std::span<const Real> precond,
              const PcgConfig& cfg, const PcgMonitor<Real>* monitor = nullptr)
{
    cfg.validate();
    const std::size_t n = b.size();
    if (x.size() != n || precond.size() != n) {
        throw std::invalid_argument("pcg: vector length mismatch");
    }
    const std::size_t i_max = cfg.max_iterations(n);
    std::vector<Real> r(n), d(n), q(n), s(n);
    std::vector<Real> r_rec;

    op.apply_fused(std::span<const Real>(x), Real(-1), b, std::span<Real>(r));
    dimvm<Real>(precond, b, s);
    const double delta_b = static_cast<double>(dot<Real>(b, std::span<const Real>(s)));
    dimvm<Real>(precond, r, d);
    double delta_new = static_cast<double>(dot<Real>(r, d));
    const double delta0 = delta_new;
    const double threshold = cfg.threshold(delta0, delta_b);
    double delta_old = delta_new;

    std::size_t i = 0;
    while (i < i_max && delta_new > threshold) {
        op.apply(std::span<const Real>(d), std::span<Real>(q));
        const double dq = static_cast<double>(dot<Real>(d, q));
        if (!(dq > 0.0)) {
            throw BreakdownError("PCG breakdown: d^T A d = " + std::to_string(dq) +
                                 " is not positive (operator not SPD?)");
        }
        const auto alpha = static_cast<Real>(delta_new / dq);
        axpy<Real>(x, d, alpha, x);
        if (i % cfg.recompute_period == 0) {
            if (monitor && monitor->on_refresh) {
                r_rec.resize(n);
                axpy<Real>(r, q, -alpha, r_rec);
            }
            op.apply_fused(std::span<const Real>(x), Real(-1), b, std::span<Real>(r));
            if (monitor && monitor->on_refresh) {
                double diff = 0.0;
                double bn = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double e = static_cast<double>(r[k]) - static_cast<double>(r_rec[k]);
                    diff += e * e;
                    bn += static_cast<double>(b[k]) * static_cast<double>(b[k]);
                }
                monitor->on_refresh(i, std::sqrt(diff), std::sqrt(bn));
            }
        }
        else {
            axpy<Real>(r, q, -alpha, r);
        }
        dimvm<Real>(precond, r, s);
        delta_new = static_cast<double>(dot<Real>(r, s));
        if (!std::isfinite(delta_new)) {
            throw BreakdownError("PCG breakdown: non-finite residual");
        }
        const double beta = beta_update(delta_new, delta_old);
        axpy<Real>(s, d, static_cast<Real>(beta), d);
        ++i;
        if (monitor && monitor->on_iteration) {
            monitor->on_iteration(i, x, r, d, delta_new);
        }
    }
    if (delta_new > threshold) {
        throw NonConvergenceError(i, delta_new);
    }
    return {i, delta_new, delta0};
}

enum class Face { x_min, x_max, y_min, y_max, z_min, z_max };

[[nodiscard]] std::string to_string(Face f);
[[nodiscard]] Face parse_face(const std::string& name);

using FluxFunction = std::function<double(const Vec3&)>;

struct FaceFlux {
    Face face = Face::z_min;
    FluxFunction flux;
};

/// Consistent boundary load dt * int f phi ds with one-point centroid
/// quadrature per boundary triangle (area/3 * dt * f(centroid) per vertex).
[[nodiscard]] std::vector<double> boundary_load(const GridSpec& spec, std::span<const FaceFlux> fluxes, double dt);

/// Gaussian beam P/(2 pi sigma^2) exp(-r^2 / (2 sigma^2)) centered at (cx, cy).
[[nodiscard]] FluxFunction gaussian_beam(double power, double sigma, double cx, double cy);

/// The implicit system of one material parameterization: A and L operators,
/// their shared Jacobi diagonal and the dt-scaled load.
struct TransientProblem {
    SystemOperator<double> op_A;
    SystemOperator<double> op_L;
    std::vector<double> load;  // F pre-scaled by dt
    std::vector<double> diagonal;
    double ambient = 0.0;
    std::size_t n_steps = 0;
    PcgConfig pcg{};

    [[nodiscard]] const GridSpec& spec() const noexcept { return op_A.spec(); }
    [[nodiscard]] double dt() const noexcept { return op_A.params().dt; }
    [[nodiscard]] double theta() const noexcept { return op_A.params().theta; }
};

struct ProblemSetup {
    Strategy strategy = Strategy::coalesced;
    double theta = 0.5;
    double dt = 0.01;
    std::size_t n_steps = 50;
    double ambient = 0.0;
    PcgConfig pcg{};
    bool flip_stiffness_sign = false;
};

[[nodiscard]] TransientProblem make_problem(const GridSpec& spec, const MaterialEvaluator& materials,
                                            std::vector<double> load, const ProblemSetup& setup);

struct StepStats {
    std::size_t iterations = 0;
    double pcg_seconds = 0.0;
    double rhs_seconds = 0.0;
};

/// One theta-scheme step: b = L U_prev + F (fused pass), then PCG on A from
/// guess. Returns the new field.
[[nodiscard]] std::vector<double> step(const TransientProblem& problem, std::span<const double> u_prev,
                                       std::span<const double> guess, StepStats* stats = nullptr);

struct SimulationOptions {
    std::optional<std::vector<double>> initial;  // defaults to the ambient temperature everywhere
    bool keep_snapshots = false;
    std::function<void(std::size_t, std::span<const double>)> on_step;
};

struct SimulationResult {
    std::vector<double> final_field;
    std::vector<std::vector<double>> snapshots;  // includes the initial field when kept
    std::vector<StepStats> steps;

    [[nodiscard]] std::size_t total_iterations() const noexcept;
    [[nodiscard]] double total_pcg_seconds() const noexcept;
};

[[nodiscard]] SimulationResult simulate(const TransientProblem& problem, const SimulationOptions& options = {});

}  // namespace mfheat
