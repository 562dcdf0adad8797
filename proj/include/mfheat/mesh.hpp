#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mfheat {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<std::size_t, 3>;

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fixed-grid box domain. Vertices are numbered x-fastest, then y, then z;
/// cubes (and their six tetrahedra) follow the same ordering.
class GridSpec {
public:
    GridSpec() = default;
    GridSpec(Vec3 bounds_min, Vec3 bounds_max, Index3 divisions);

    /// Sub-grid of global z layers [k0, k1] sharing this grid's spacing and origin.
    /// Local layer k sits at global layer k + k0, so positions are bitwise
    /// identical to the parent's.
    [[nodiscard]] GridSpec z_slab(std::size_t k0, std::size_t k1) const;
    /// Global z layer of local layer 0.
    [[nodiscard]] std::size_t layer_offset() const noexcept { return k_offset_; }

    [[nodiscard]] const Vec3& bounds_min() const noexcept { return min_; }
    [[nodiscard]] const Vec3& bounds_max() const noexcept { return max_; }
    [[nodiscard]] const Index3& divisions() const noexcept { return div_; }
    [[nodiscard]] const Vec3& spacing() const noexcept { return h_; }

    /// Vertices per axis, C[a] + 1.
    [[nodiscard]] std::size_t points(std::size_t axis) const noexcept { return div_[axis] + 1; }
    [[nodiscard]] std::size_t vertex_count() const noexcept { return points(0) * points(1) * points(2); }
    [[nodiscard]] std::size_t cube_count() const noexcept { return div_[0] * div_[1] * div_[2]; }
    [[nodiscard]] std::size_t element_count() const noexcept { return 6 * cube_count(); }
    /// Vertices in one z layer.
    [[nodiscard]] std::size_t layer_size() const noexcept { return points(0) * points(1); }

    [[nodiscard]] std::size_t vertex_index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + points(0) * (j + points(1) * k);
    }
    [[nodiscard]] Index3 vertex_ijk(std::size_t idx) const noexcept
    {
        const std::size_t nx = points(0);
        const std::size_t ny = points(1);
        return {idx % nx, (idx / nx) % ny, idx / (nx * ny)};
    }
    [[nodiscard]] std::size_t cube_index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + div_[0] * (j + div_[1] * k);
    }
    [[nodiscard]] Index3 cube_ijk(std::size_t cube) const noexcept
    {
        return {cube % div_[0], (cube / div_[0]) % div_[1], cube / (div_[0] * div_[1])};
    }

    /// Position of grid point (i,j,k); no range check.
    [[nodiscard]] Vec3 point(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return {min_[0] + static_cast<double>(i) * h_[0], min_[1] + static_cast<double>(j) * h_[1],
                origin_z_ + static_cast<double>(k + k_offset_) * h_[2]};
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    Vec3 min_{0.0, 0.0, 0.0};
    Vec3 max_{1.0, 1.0, 1.0};
    Index3 div_{1, 1, 1};
    Vec3 h_{1.0, 1.0, 1.0};
    std::size_t k_offset_ = 0;
    double origin_z_ = 0.0;
};

/// Kuhn subdivision of the unit cube. Corner ids encode offsets as
/// id = dx + 2 dy + 4 dz. Tetrahedron t is the monotone lattice path
/// 0 -> e_a -> e_a + e_b -> 7 for the t-th axis permutation (a, b, c).
struct TetTable {
    static constexpr std::size_t tets_per_cube = 6;
    static constexpr std::size_t corners_per_cube = 8;

    static constexpr std::array<std::array<std::uint8_t, 3>, 6> axis_order{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    }};

    static constexpr std::array<std::array<std::uint8_t, 4>, 6> corner_of{{
        {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
    }};

    [[nodiscard]] static constexpr std::array<std::uint8_t, 3> corner_offset(std::size_t corner) noexcept
    {
        return {static_cast<std::uint8_t>(corner & 1U), static_cast<std::uint8_t>((corner >> 1U) & 1U),
                static_cast<std::uint8_t>((corner >> 2U) & 1U)};
    }

    /// +1 for even axis permutations, -1 for odd ones. This is the sign of
    /// the determinant of (v1-v0, v2-v0, v3-v0) in stored order.
    [[nodiscard]] static constexpr int orientation(std::size_t t) noexcept
    {
        return (t == 0 || t == 3 || t == 4) ? 1 : -1;
    }
};

/// One (element-in-cube, local DoF) pair touching a given cube corner.
struct CornerIncidence {
    std::uint8_t tet;
    std::uint8_t local;
};

/// For every cube corner, the tetrahedra containing it and the local slot of
/// the corner within each. Corners 0 and 7 have six entries, the others two.
/// Flattened: entries for corner c live at [offset[c], offset[c+1]).
struct CornerIncidenceTable {
    std::array<CornerIncidence, 24> entries{};
    std::array<std::uint8_t, 9> offset{};
};

[[nodiscard]] const CornerIncidenceTable& corner_incidence() noexcept;

[[nodiscard]] Vec3 vertex_position(const GridSpec& spec, std::size_t idx);
[[nodiscard]] std::array<std::size_t, 4> element_vertices(const GridSpec& spec, std::size_t e);
[[nodiscard]] std::array<Vec3, 4> element_positions(const GridSpec& spec, std::size_t e);

/// Index space for the coalesced kernels: one extra cube layer in +x and +y.
/// A padded cube is addressed by the vertex index of its (0,0,0) corner, so the
/// padded cube count per z layer is (C0+1)(C1+1) and cubes with i == C0 or
/// j == C1 are non-physical.
struct PaddedSpec {
    GridSpec base;
    std::size_t cube_count = 0;
    std::size_t layer_cubes = 0;

    [[nodiscard]] bool is_padding(std::size_t padded_cube) const noexcept
    {
        const auto [i, j, k] = base.vertex_ijk(padded_cube);
        (void)k;
        return i == base.divisions()[0] || j == base.divisions()[1];
    }
    /// Vertex index of corner c of padded cube q. May exceed the vertex range
    /// for padding cubes in the last layers.
    [[nodiscard]] std::size_t corner_vertex(std::size_t padded_cube, std::size_t corner) const noexcept
    {
        const auto off = TetTable::corner_offset(corner);
        return padded_cube + off[0] + base.points(0) * off[1] + base.layer_size() * off[2];
    }
    [[nodiscard]] std::size_t padding_cube_count() const noexcept;
    [[nodiscard]] std::vector<bool> padding_mask() const;
};

[[nodiscard]] PaddedSpec padded_spec(const GridSpec& spec);

}  // namespace mfheat
