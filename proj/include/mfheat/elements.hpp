#pragma once

#include "mfheat/mesh.hpp"

#include <array>
#include <stdexcept>

namespace mfheat {

using Mat4 = std::array<std::array<double, 4>, 4>;

class DegenerateElementError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Linear-tetrahedron mass and stiffness matrices, not yet scaled by
/// material coefficients.
struct ElementMatrices {
    Mat4 mass{};
    Mat4 stiffness{};
    double volume = 0.0;
};

/// Exact P1 matrices for the tetrahedron (v0, v1, v2, v3).
[[nodiscard]] ElementMatrices local_matrices(const std::array<Vec3, 4>& v);

/// One matrix pair per Kuhn tetrahedron of the reference cell [0,h0]x[0,h1]x[0,h2].
struct FixedGridMatrices {
    std::array<ElementMatrices, TetTable::tets_per_cube> per_shape{};
};

[[nodiscard]] FixedGridMatrices fixed_grid_matrices(const GridSpec& spec);

}  // namespace mfheat
