#pragma once

#include "mfheat/parallel.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

/// Work-group width of the reduction tree. Must be a power of two.
inline constexpr std::size_t kReduceGroup = 256;

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": vector length mismatch");
    }
}

// One reduction level: groups of kReduceGroup inputs are folded by halving.
// The shape depends only on the input length, so results do not depend on
// the number of threads.
template <class Real, class Load>
std::vector<Real> reduce_level(std::size_t n, Load&& load)
{
    const std::size_t groups = (n + kReduceGroup - 1) / kReduceGroup;
    std::vector<Real> out(groups);
    parallel_for(groups, [&](std::size_t g) {
        std::array<Real, kReduceGroup> loc{};
        const std::size_t base = g * kReduceGroup;
        const std::size_t len = std::min(kReduceGroup, n - base);
        for (std::size_t i = 0; i < len; ++i) {
            loc[i] = load(base + i);
        }
        for (std::size_t stride = kReduceGroup / 2; stride > 0; stride /= 2) {
            for (std::size_t i = 0; i < stride; ++i) {
                loc[i] += loc[i + stride];
            }
        }
        out[g] = loc[0];
    });
    return out;
}

}  // namespace detail

/// Tree-reduced scalar product (pairwise products, then repeated group folds
/// until one value remains).
template <class Real>
[[nodiscard]] Real dot(std::span<const Real> x, std::span<const Real> y)
{
    detail::require_same_length(x.size(), y.size(), "dot");
    if (x.empty()) {
        return Real(0);
    }
    auto partial = detail::reduce_level<Real>(x.size(), [&](std::size_t i) { return x[i] * y[i]; });
    while (partial.size() > 1) {
        const auto& prev = partial;
        partial = detail::reduce_level<Real>(prev.size(), [&prev](std::size_t i) { return prev[i]; });
    }
    return partial[0];
}

template <class Real>
[[nodiscard]] Real dot(const std::vector<Real>& x, const std::vector<Real>& y)
{
    return dot(std::span<const Real>(x), std::span<const Real>(y));
}

/// out = x + a y. out may alias x or y.
template <class Real>
void axpy(std::span<const Real> x, std::span<const Real> y, Real a, std::span<Real> out)
{
    detail::require_same_length(x.size(), y.size(), "axpy");
    detail::require_same_length(x.size(), out.size(), "axpy");
    const std::size_t n = x.size();
    parallel_for((n + 4095) / 4096, [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * 4096);
        for (std::size_t i = b * 4096; i < end; ++i) {
            out[i] = x[i] + a * y[i];
        }
    });
}

/// out = P^{-1} x for diagonal P.
template <class Real>
void dimvm(std::span<const Real> diag, std::span<const Real> x, std::span<Real> out)
{
    detail::require_same_length(diag.size(), x.size(), "dimvm");
    detail::require_same_length(x.size(), out.size(), "dimvm");
    const std::size_t n = x.size();
    parallel_for((n + 4095) / 4096, [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * 4096);
        for (std::size_t i = b * 4096; i < end; ++i) {
            out[i] = x[i] / diag[i];
        }
    });
}

/// beta = delta_new / delta_old, then delta_old <- delta_new.
template <class Real>
[[nodiscard]] Real beta_update(Real delta_new, Real& delta_old)
{
    const Real beta = delta_new / delta_old;
    delta_old = delta_new;
    return beta;
}

/// Next initial guess by linear extrapolation. `guess` holds the previous
/// step's solution on entry and u_solved + (u_solved - previous) on exit.
template <class Real>
void extrapolate_guess(std::span<Real> guess, std::span<const Real> u_solved)
{
    detail::require_same_length(guess.size(), u_solved.size(), "extrapolate_guess");
    for (std::size_t i = 0; i < guess.size(); ++i) {
        guess[i] = u_solved[i] + (u_solved[i] - guess[i]);
    }
}

}  // namespace mfheat
