#include "mfheat/mesh.hpp"

#include <string>

namespace mfheat {

GridSpec::GridSpec(Vec3 bounds_min, Vec3 bounds_max, Index3 divisions)
    : min_(bounds_min), max_(bounds_max), div_(divisions)
{
    for (std::size_t a = 0; a < 3; ++a) {
        if (!(max_[a] > min_[a])) {
            throw GridError("grid bounds must satisfy max > min on axis " + std::to_string(a));
        }
        if (div_[a] == 0) {
            throw GridError("grid divisions must be positive on axis " + std::to_string(a));
        }
        h_[a] = (max_[a] - min_[a]) / static_cast<double>(div_[a]);
    }
    origin_z_ = min_[2];
}

GridSpec GridSpec::z_slab(std::size_t k0, std::size_t k1) const
{
    if (k0 < k_offset_ || k1 <= k0 || k1 > k_offset_ + div_[2]) {
        throw GridError("z slab [" + std::to_string(k0) + ", " + std::to_string(k1) + "] outside the grid");
    }
    GridSpec slab = *this;
    slab.div_[2] = k1 - k0;
    slab.k_offset_ = k0;
    slab.min_[2] = point(0, 0, k0 - k_offset_)[2];
    slab.max_[2] = point(0, 0, k1 - k_offset_)[2];
    return slab;
}

namespace {

CornerIncidenceTable build_corner_incidence() noexcept
{
    CornerIncidenceTable table{};
    std::size_t n = 0;
    for (std::size_t c = 0; c < TetTable::corners_per_cube; ++c) {
        table.offset[c] = static_cast<std::uint8_t>(n);
        for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
            for (std::size_t v = 0; v < 4; ++v) {
                if (TetTable::corner_of[t][v] == c) {
                    table.entries[n++] = {static_cast<std::uint8_t>(t), static_cast<std::uint8_t>(v)};
                }
            }
        }
    }
    table.offset[8] = static_cast<std::uint8_t>(n);
    return table;
}

}  // namespace

const CornerIncidenceTable& corner_incidence() noexcept
{
    static const CornerIncidenceTable table = build_corner_incidence();
    return table;
}

Vec3 vertex_position(const GridSpec& spec, std::size_t idx)
{
    if (idx >= spec.vertex_count()) {
        throw IndexError("vertex index " + std::to_string(idx) + " out of range [0, " +
                         std::to_string(spec.vertex_count()) + ")");
    }
    const auto [i, j, k] = spec.vertex_ijk(idx);
    return spec.point(i, j, k);
}

std::array<std::size_t, 4> element_vertices(const GridSpec& spec, std::size_t e)
{
    if (e >= spec.element_count()) {
        throw IndexError("element index " + std::to_string(e) + " out of range [0, " +
                         std::to_string(spec.element_count()) + ")");
    }
    const auto [ci, cj, ck] = spec.cube_ijk(e / TetTable::tets_per_cube);
    const auto& corners = TetTable::corner_of[e % TetTable::tets_per_cube];
    std::array<std::size_t, 4> out{};
    for (std::size_t v = 0; v < 4; ++v) {
        const auto off = TetTable::corner_offset(corners[v]);
        out[v] = spec.vertex_index(ci + off[0], cj + off[1], ck + off[2]);
    }
    return out;
}

std::array<Vec3, 4> element_positions(const GridSpec& spec, std::size_t e)
{
    const auto verts = element_vertices(spec, e);
    std::array<Vec3, 4> out{};
    for (std::size_t v = 0; v < 4; ++v) {
        const auto [i, j, k] = spec.vertex_ijk(verts[v]);
        out[v] = spec.point(i, j, k);
    }
    return out;
}

std::size_t PaddedSpec::padding_cube_count() const noexcept
{
    return cube_count - base.cube_count();
}

std::vector<bool> PaddedSpec::padding_mask() const
{
    std::vector<bool> mask(cube_count);
    for (std::size_t q = 0; q < cube_count; ++q) {
        mask[q] = is_padding(q);
    }
    return mask;
}

PaddedSpec padded_spec(const GridSpec& spec)
{
    PaddedSpec p;
    p.base = spec;
    p.layer_cubes = spec.layer_size();
    p.cube_count = p.layer_cubes * spec.divisions()[2];
    return p;
}

}  // namespace mfheat
