#include "mfheat/elements.hpp"

#include <algorithm>
#include <cmath>

namespace mfheat {

ElementMatrices local_matrices(const std::array<Vec3, 4>& v)
{
    // Columns of the affine map from the reference tetrahedron.
    double J[3][3];
    double scale = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        double len2 = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            J[r][c] = v[c + 1][r] - v[0][r];
            len2 += J[r][c] * J[r][c];
        }
        scale = std::max(scale, std::sqrt(len2));
    }

    const double c00 = J[1][1] * J[2][2] - J[1][2] * J[2][1];
    const double c01 = J[1][2] * J[2][0] - J[1][0] * J[2][2];
    const double c02 = J[1][0] * J[2][1] - J[1][1] * J[2][0];
    const double det = J[0][0] * c00 + J[0][1] * c01 + J[0][2] * c02;
    const double volume = std::abs(det) / 6.0;
    if (!(volume > 1e-12 * scale * scale * scale)) {
        throw DegenerateElementError("degenerate tetrahedron: volume below 1e-12 of its length scale cubed");
    }

    // Rows of J^{-1} are the gradients of the barycentric functions 1..3.
    double inv[3][3];
    inv[0][0] = c00 / det;
    inv[1][0] = c01 / det;
    inv[2][0] = c02 / det;
    inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
    inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
    inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
    inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
    inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
    inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;

    std::array<Vec3, 4> grad{};
    for (std::size_t m = 1; m < 4; ++m) {
        for (std::size_t d = 0; d < 3; ++d) {
            grad[m][d] = inv[m - 1][d];
        }
    }
    for (std::size_t d = 0; d < 3; ++d) {
        grad[0][d] = -(grad[1][d] + grad[2][d] + grad[3][d]);
    }

    ElementMatrices out;
    out.volume = volume;
    for (std::size_t m = 0; m < 4; ++m) {
        for (std::size_t n = 0; n < 4; ++n) {
            out.mass[m][n] = volume / 20.0 * (m == n ? 2.0 : 1.0);
            out.stiffness[m][n] =
                volume * (grad[m][0] * grad[n][0] + grad[m][1] * grad[n][1] + grad[m][2] * grad[n][2]);
        }
    }
    // Exact zero row sums: the diagonal is minus the sum of the off-diagonals.
    for (std::size_t m = 0; m < 4; ++m) {
        double off = 0.0;
        for (std::size_t n = 0; n < 4; ++n) {
            if (n != m) {
                off += out.stiffness[m][n];
            }
        }
        out.stiffness[m][m] = -off;
    }
    return out;
}

FixedGridMatrices fixed_grid_matrices(const GridSpec& spec)
{
    const Vec3& h = spec.spacing();
    FixedGridMatrices fg;
    for (std::size_t t = 0; t < TetTable::tets_per_cube; ++t) {
        std::array<Vec3, 4> verts{};
        for (std::size_t v = 0; v < 4; ++v) {
            const auto off = TetTable::corner_offset(TetTable::corner_of[t][v]);
            verts[v] = {off[0] * h[0], off[1] * h[1], off[2] * h[2]};
        }
        fg.per_shape[t] = local_matrices(verts);
    }
    return fg;
}

}  // namespace mfheat
