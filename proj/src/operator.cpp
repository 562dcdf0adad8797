#include "mfheat/operator.hpp"

#include "mfheat/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace mfheat {

std::string to_string(Strategy s)
{
    switch (s) {
    case Strategy::flexible:
        return "flexible";
    case Strategy::singlepass:
        return "singlepass";
    case Strategy::coalesced:
        return "coalesced";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name)
{
    if (name == "flexible") {
        return Strategy::flexible;
    }
    if (name == "singlepass") {
        return Strategy::singlepass;
    }
    if (name == "coalesced") {
        return Strategy::coalesced;
    }
    throw std::invalid_argument("unknown strategy '" + name + "' (expected flexible, singlepass or coalesced)");
}

namespace {

constexpr std::size_t kPass2Block = 4096;

template <class Real>
std::array<Real, 16> flatten(const Mat4& m)
{
    std::array<Real, 16> out{};
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            out[4 * r + c] = static_cast<Real>(m[r][c]);
        }
    }
    return out;
}

template <class Real>
inline Real row_dot(const std::array<Real, 16>& m, std::size_t row, const std::array<Real, 4>& x)
{
    const Real* r = m.data() + 4 * row;
    return r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3] * x[3];
}

// Strip index (0..3) of a cube corner within the coalesced prism: the
// corner's (dy, dz) quadrant.
constexpr std::size_t strip_of(std::size_t corner) noexcept
{
    return ((corner >> 1U) & 1U) + 2U * ((corner >> 2U) & 1U);
}

}  // namespace

template <class Real>
SystemOperator<Real>::SystemOperator(const GridSpec& spec, const MaterialEvaluator& evaluator,
                                     const OperatorParams& params)
    : spec_(spec), eval_(evaluator), params_(params), padded_(padded_spec(spec))
{
    if (params_.theta < 0.0 || params_.theta > 1.0) {
        throw std::invalid_argument("theta must lie in [0, 1]");
    }
    if (params_.dt < 0.0) {
        throw std::invalid_argument("time step must be non-negative");
    }
    stiffness_scale_ = params_.stiffness_scale() * (params_.flip_stiffness_sign ? -1.0 : 1.0);

    const auto fg = fixed_grid_matrices(spec_);
    for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
        mass_[t] = flatten<Real>(fg.per_shape[t].mass);
        stiff_[t] = flatten<Real>(fg.per_shape[t].stiffness);
    }

    const auto& inc = corner_incidence();
    for (std::size_t c = 0; c < TetTable::corners_per_cube; ++c) {
        const auto off = TetTable::corner_offset(c);
        // The scratch of a strip position collects the -x cube's corner (1,dy,dz)
        // after the +x cube's corner (0,dy,dz).
        const std::size_t partner = c ^ 1U;
        const std::size_t lower = off[0] == 0 ? c : partner;
        const std::size_t base = off[0] == 0 ? 0 : std::size_t(inc.offset[lower + 1] - inc.offset[lower]);
        for (std::size_t n = inc.offset[c]; n < inc.offset[c + 1]; ++n) {
            const auto [t, local] = inc.entries[n];
            flexible_slot_[t][local] = static_cast<std::uint8_t>(n);
            scratch_slot_[t][local] = static_cast<std::uint8_t>(base + (n - inc.offset[c]));
        }
    }

    if (params_.strategy == Strategy::flexible) {
        // Preprocessing: per-element matrices from the general (non fixed-grid)
        // element routine, scaled by the local material coefficients.
        scaled_.resize(spec_.element_count());
        parallel_for(spec_.cube_count(), [&](std::size_t q) {
            for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
                const std::size_t e = 6 * q + t;
                const auto pos = element_positions(spec_, e);
                const auto local = local_matrices(pos);
                const auto coef = eval_.element(pos);
                Mat4 a{};
                for (std::size_t r = 0; r < 4; ++r) {
                    for (std::size_t c = 0; c < 4; ++c) {
                        a[r][c] = coef.rhoC * local.mass[r][c] + stiffness_scale_ * coef.k * local.stiffness[r][c];
                    }
                }
                scaled_[e] = flatten<Real>(a);
            }
        });
    }
}

template <class Real>
ElementCoefficients SystemOperator<Real>::cube_tet_coefficients(std::size_t i, std::size_t j, std::size_t k,
                                                                std::size_t t) const
{
    std::array<Vec3, 4> pos{};
    for (std::size_t v = 0; v < 4; ++v) {
        const auto off = TetTable::corner_offset(TetTable::corner_of[t][v]);
        pos[v] = spec_.point(i + off[0], j + off[1], k + off[2]);
    }
    return eval_.element(pos);
}

template <class Real>
ElementCoefficients SystemOperator<Real>::coefficients(std::size_t e) const
{
    return eval_.element(element_positions(spec_, e));
}

template <class Real>
std::size_t SystemOperator<Real>::split_slots() const noexcept
{
    switch (params_.strategy) {
    case Strategy::flexible:
        return kFlexibleSlots;
    case Strategy::coalesced:
        return 4;
    case Strategy::singlepass:
        return 0;
    }
    return 0;
}

template <class Real>
std::size_t SystemOperator<Real>::group_count() const noexcept
{
    switch (params_.strategy) {
    case Strategy::flexible:
        return spec_.cube_count();
    case Strategy::coalesced:
        return (padded_.cube_count + kStoredPerStrip - 1) / kStoredPerStrip;
    case Strategy::singlepass: {
        const std::size_t blocks = (spec_.points(0) + kSinglePassBlock - 1) / kSinglePassBlock;
        return blocks * spec_.points(1) * spec_.points(2);
    }
    }
    return 0;
}

template <class Real>
WorkGroupPlan SystemOperator<Real>::plan() const
{
    WorkGroupPlan p;
    p.strategy = params_.strategy;
    p.split_slots = split_slots();
    p.group_count = group_count();
    switch (params_.strategy) {
    case Strategy::flexible:
        p.group_size = 24;
        p.block_len = 1;
        break;
    case Strategy::singlepass:
        p.group_size = kSinglePassBlock;
        p.block_len = kSinglePassBlock;
        break;
    case Strategy::coalesced:
        p.group_size = 6 * kCubesPerGroup;
        p.block_len = kCubesPerGroup;
        break;
    }
    return p;
}

// One work group of the flexible strategy: the 24 (element, local DoF) pairs
// of a cube. Each item writes its vertex's private slot.
template <class Real>
template <class Sink, class Fetch>
void SystemOperator<Real>::flexible_pass1(std::size_t cube, Fetch&& fetch, Sink& sink, bool diagonal) const
{
    const auto [ci, cj, ck] = spec_.cube_ijk(cube);
    const std::size_t first = spec_.vertex_index(ci, cj, ck);
    const std::size_t nx = spec_.points(0);
    const std::size_t layer = spec_.layer_size();
    std::array<std::size_t, 8> corner_vertex{};
    for (std::size_t c = 0; c < 8; ++c) {
        const auto off = TetTable::corner_offset(c);
        corner_vertex[c] = first + off[0] + nx * off[1] + layer * off[2];
    }
    std::array<Real, 8> x_local{};
    if (!diagonal) {
        for (std::size_t c = 0; c < 8; ++c) {
            x_local[c] = fetch(corner_vertex[c]);
        }
    }
    for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
        const auto& row = scaled_[6 * cube + t];
        const auto& corners = TetTable::corner_of[t];
        const std::array<Real, 4> xe{x_local[corners[0]], x_local[corners[1]], x_local[corners[2]],
                                     x_local[corners[3]]};
        for (std::size_t j = 0; j < 4; ++j) {
            const Real value = diagonal ? row[5 * j] : row_dot(row, j, xe);
            sink(corner_vertex[corners[j]] * kFlexibleSlots + flexible_slot_[t][j], value);
        }
    }
}

// One work group of the coalesced strategy: 31 consecutive padded cubes
// (186 elements) fed by four 32-long strips of the input vector, one per
// horizontal edge of the prism. Contributions are reduced in a 12-entry
// scratch per strip position; only the 30 interior positions of each strip
// are stored, as the strip's quadrant slot of that vertex.
template <class Real>
template <class Sink, class Fetch>
void SystemOperator<Real>::coalesced_pass1(std::size_t group, Fetch&& fetch, Sink& sink, bool diagonal) const
{
    const std::size_t nx = spec_.points(0);
    const std::size_t layer = spec_.layer_size();
    const std::size_t n = spec_.vertex_count();
    const std::array<std::size_t, 4> strip_offset{0, nx, layer, nx + layer};
    // First cube / first loaded vertex of the group; -1 for group 0.
    const auto origin = static_cast<long long>(group * kStoredPerStrip) - 1;

    std::array<std::array<Real, kStripLength>, 4> x_local{};
    if (!diagonal) {
        for (std::size_t s = 0; s < 4; ++s) {
            for (std::size_t p = 0; p < kStripLength; ++p) {
                const long long idx = origin + static_cast<long long>(p + strip_offset[s]);
                x_local[s][p] = (idx >= 0 && static_cast<std::size_t>(idx) < n) ? fetch(static_cast<std::size_t>(idx))
                                                                                   : Real(0);
            }
        }
    }

    std::array<std::array<std::array<Real, kScratchPerDof>, kStripLength>, 4> scratch{};
    const double sk = stiffness_scale_;
    for (std::size_t cp = 0; cp < kCubesPerGroup; ++cp) {
        const long long q_signed = origin + static_cast<long long>(cp);
        if (q_signed < 0 || static_cast<std::size_t>(q_signed) >= padded_.cube_count) {
            continue;
        }
        const auto q = static_cast<std::size_t>(q_signed);
        const bool padding = padded_.is_padding(q);
        const auto [ci, cj, ck] = spec_.vertex_ijk(q);
        for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
            const auto coef = cube_tet_coefficients(ci, cj, ck, t);
            const auto rc = static_cast<Real>(coef.rhoC);
            const auto kc = static_cast<Real>(sk * coef.k);
            const auto& corners = TetTable::corner_of[t];
            std::array<Real, 4> out{};
            if (diagonal) {
                for (std::size_t j = 0; j < 4; ++j) {
                    out[j] = rc * mass_[t][5 * j] + kc * stiff_[t][5 * j];
                }
            }
            else {
                std::array<Real, 4> xe{};
                for (std::size_t m = 0; m < 4; ++m) {
                    xe[m] = x_local[strip_of(corners[m])][cp + (corners[m] & 1U)];
                }
                for (std::size_t j = 0; j < 4; ++j) {
                    out[j] = rc * row_dot(mass_[t], j, xe) + kc * row_dot(stiff_[t], j, xe);
                }
            }
            if (padding) {
                continue;  // computed, discarded on store
            }
            for (std::size_t j = 0; j < 4; ++j) {
                scratch[strip_of(corners[j])][cp + (corners[j] & 1U)][scratch_slot_[t][j]] = out[j];
            }
        }
    }

    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t p = 1; p <= kStoredPerStrip; ++p) {
            const long long v_signed = origin + static_cast<long long>(p + strip_offset[s]);
            if (v_signed < 0 || static_cast<std::size_t>(v_signed) >= n) {
                continue;
            }
            Real sum = 0;
            for (std::size_t k = 0; k < kScratchPerDof; ++k) {
                sum += scratch[s][p][k];
            }
            sink(static_cast<std::size_t>(v_signed) * 4 + s, sum);
        }
    }
}

// Whole output entry of vertex v: loop over its up to 24 (element, DoF)
// contributions with in-loop material scaling.
template <class Real>
template <class Fetch>
Real SystemOperator<Real>::singlepass_entry(std::size_t v, Fetch&& fetch, bool diagonal) const
{
    const auto [i, j, k] = spec_.vertex_ijk(v);
    const auto& div = spec_.divisions();
    const auto& inc = corner_incidence();
    const std::size_t nx = spec_.points(0);
    const std::size_t layer = spec_.layer_size();
    const double sk = stiffness_scale_;
    Real sum = 0;
    for (std::size_t c = 0; c < 8; ++c) {
        const auto off = TetTable::corner_offset(c);
        if (i < off[0] || j < off[1] || k < off[2]) {
            continue;
        }
        const std::size_t ci = i - off[0];
        const std::size_t cj = j - off[1];
        const std::size_t ck = k - off[2];
        if (ci >= div[0] || cj >= div[1] || ck >= div[2]) {
            continue;
        }
        const std::size_t first = spec_.vertex_index(ci, cj, ck);
        for (std::size_t n = inc.offset[c]; n < inc.offset[c + 1]; ++n) {
            const auto [t, local] = inc.entries[n];
            const auto coef = cube_tet_coefficients(ci, cj, ck, t);
            const auto rc = static_cast<Real>(coef.rhoC);
            const auto kc = static_cast<Real>(sk * coef.k);
            if (diagonal) {
                sum += rc * mass_[t][5 * local] + kc * stiff_[t][5 * local];
                continue;
            }
            std::array<Real, 4> xe{};
            for (std::size_t m = 0; m < 4; ++m) {
                const auto o = TetTable::corner_offset(TetTable::corner_of[t][m]);
                xe[m] = fetch(first + o[0] + nx * o[1] + layer * o[2]);
            }
            sum += rc * row_dot(mass_[t], local, xe) + kc * row_dot(stiff_[t], local, xe);
        }
    }
    return sum;
}

template <class Real>
void SystemOperator<Real>::run(std::span<const Real> x, Real c, std::span<const Real> b, std::span<Real> y,
                               OperatorWorkspace<Real>& ws, bool fused) const
{
    const std::size_t n = spec_.vertex_count();
    if (x.size() != n || y.size() != n || (fused && b.size() != n)) {
        throw std::invalid_argument("operator vector length mismatch");
    }
    auto fetch = [&x](std::size_t idx) { return x[idx]; };
    auto finish = [&](std::size_t v, Real value) { y[v] = fused ? c * value + b[v] : value; };

    if (params_.strategy == Strategy::singlepass) {
        const std::size_t nx = spec_.points(0);
        const std::size_t blocks = (nx + kSinglePassBlock - 1) / kSinglePassBlock;
        parallel_for(group_count(), [&](std::size_t g) {
            const std::size_t row = g / blocks;
            const std::size_t i0 = (g % blocks) * kSinglePassBlock;
            const std::size_t i1 = std::min(nx, i0 + kSinglePassBlock);
            for (std::size_t i = i0; i < i1; ++i) {
                const std::size_t v = row * nx + i;
                finish(v, singlepass_entry(v, fetch, false));
            }
        });
        return;
    }

    const std::size_t slots = split_slots();
    if (ws.split.size() != slots * n) {
        ws.split.assign(slots * n, Real(0));
    }
    Real* split = ws.split.data();
    auto store = [split](std::size_t slot, Real value) { split[slot] = value; };

    if (params_.strategy == Strategy::flexible) {
        parallel_for(group_count(), [&](std::size_t q) { flexible_pass1(q, fetch, store, false); });
    }
    else {
        parallel_for(group_count(), [&](std::size_t g) { coalesced_pass1(g, fetch, store, false); });
    }

    parallel_for((n + kPass2Block - 1) / kPass2Block, [&](std::size_t blk) {
        const std::size_t v1 = std::min(n, (blk + 1) * kPass2Block);
        for (std::size_t v = blk * kPass2Block; v < v1; ++v) {
            const Real* s = split + v * slots;
            Real sum = 0;
            for (std::size_t k = 0; k < slots; ++k) {
                sum += s[k];
            }
            finish(v, sum);
        }
    });
}

template <class Real>
void SystemOperator<Real>::apply(std::span<const Real> x, std::span<Real> y) const
{
    std::lock_guard lock(scratch_->mutex);
    run(x, Real(1), {}, y, scratch_->ws, false);
}

template <class Real>
void SystemOperator<Real>::apply(std::span<const Real> x, std::span<Real> y, OperatorWorkspace<Real>& ws) const
{
    run(x, Real(1), {}, y, ws, false);
}

template <class Real>
void SystemOperator<Real>::apply_fused(std::span<const Real> x, Real c, std::span<const Real> b,
                                       std::span<Real> y) const
{
    std::lock_guard lock(scratch_->mutex);
    run(x, c, b, y, scratch_->ws, true);
}

template <class Real>
void SystemOperator<Real>::apply_fused(std::span<const Real> x, Real c, std::span<const Real> b, std::span<Real> y,
                                       OperatorWorkspace<Real>& ws) const
{
    run(x, c, b, y, ws, true);
}

template <class Real>
std::vector<Real> SystemOperator<Real>::jacobi_diagonal() const
{
    const std::size_t n = spec_.vertex_count();
    std::vector<Real> diag(n);
    auto no_fetch = [](std::size_t) { return Real(0); };
    if (params_.strategy == Strategy::singlepass) {
        parallel_for(n, [&](std::size_t v) { diag[v] = singlepass_entry(v, no_fetch, true); });
        return diag;
    }
    const std::size_t slots = split_slots();
    std::vector<Real> split(slots * n, Real(0));
    auto store = [&split](std::size_t slot, Real value) { split[slot] = value; };
    if (params_.strategy == Strategy::flexible) {
        parallel_for(group_count(), [&](std::size_t q) { flexible_pass1(q, no_fetch, store, true); });
    }
    else {
        parallel_for(group_count(), [&](std::size_t g) { coalesced_pass1(g, no_fetch, store, true); });
    }
    for (std::size_t v = 0; v < n; ++v) {
        Real sum = 0;
        for (std::size_t k = 0; k < slots; ++k) {
            sum += split[v * slots + k];
        }
        diag[v] = sum;
    }
    return diag;
}

template <class Real>
std::vector<std::size_t> SystemOperator<Real>::audit_writes() const
{
    const std::size_t n = spec_.vertex_count();
    if (params_.strategy == Strategy::singlepass) {
        std::vector<std::size_t> counts(n, 0);
        const std::size_t nx = spec_.points(0);
        const std::size_t blocks = (nx + kSinglePassBlock - 1) / kSinglePassBlock;
        for (std::size_t g = 0; g < group_count(); ++g) {
            const std::size_t row = g / blocks;
            const std::size_t i0 = (g % blocks) * kSinglePassBlock;
            for (std::size_t i = i0; i < std::min(nx, i0 + kSinglePassBlock); ++i) {
                ++counts[row * nx + i];
            }
        }
        return counts;
    }
    std::vector<std::size_t> counts(split_slots() * n, 0);
    auto count = [&counts](std::size_t slot, Real) { ++counts.at(slot); };
    auto fetch = [](std::size_t) { return Real(0); };
    for (std::size_t g = 0; g < group_count(); ++g) {
        if (params_.strategy == Strategy::flexible) {
            flexible_pass1(g, fetch, count, false);
        }
        else {
            coalesced_pass1(g, fetch, count, false);
        }
    }
    return counts;
}

template class SystemOperator<double>;
template class SystemOperator<float>;

}  // namespace mfheat
