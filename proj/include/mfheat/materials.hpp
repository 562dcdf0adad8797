#pragma once

#include "mfheat/mesh.hpp"

#include <array>
#include <string>
#include <variant>

namespace mfheat {

/// Volumetric heat capacity and conductivity of the base material (index 0)
/// and the altered material (index 1). Values are carried in the units of the
/// laminate setup without conversion.
struct MaterialCoefficients {
    std::array<double, 2> rhoC{3.724e6, 1.65e6};
    std::array<double, 2> k{4.9e8, 4.0e6};

    void validate() const;
};

struct ElementCoefficients {
    double rhoC = 0.0;
    double k = 0.0;
};

/// Altered material strictly above z_threshold.
struct TwoLayer {
    double z_threshold = 5.0;
};

/// Linear ramp from base to altered over [z_center - width/2, z_center + width/2].
struct SmoothedLayer {
    double z_center = 5.0;
    double width = 2.0;
};

/// Blend fraction from x^2 - 0.2 y^2 + 10 z, min-max normalized over the grid vertices.
struct Functional {};

/// Parabolic corrosion grown from the rear face (z = bounds_max.z) toward the
/// front face. depth is the apex penetration; half_height <= 0 selects half the
/// plate height in y; the parabola axis sits at the plate's mid-height.
struct Corrosion {
    double depth = 0.0;
    double half_height = 0.0;
};

using MaterialKind = std::variant<TwoLayer, SmoothedLayer, Functional, Corrosion>;

struct MaterialField {
    MaterialKind kind = TwoLayer{};
    MaterialCoefficients coefficients{};
};

[[nodiscard]] std::string kind_name(const MaterialKind& kind);

/// Plate geometry in which the corrosion parabola is defined.
struct CorrosionGeometry {
    double rear_z = 0.0;
    double thickness = 0.0;
    double y_center = 0.0;
    double half_height = 0.0;
};

[[nodiscard]] CorrosionGeometry corrosion_geometry(const GridSpec& spec, double half_height);

/// True iff pos lies in the corroded region of apex depth theta:
/// d <= theta (1 - (y/half_height)^2) and |y| <= half_height, with d the depth
/// below the rear face and y measured from the parabola axis.
[[nodiscard]] bool corrosion_indicator(double theta, const Vec3& pos, const CorrosionGeometry& geo);

/// Resolved field bound to the global grid (normalization constants and
/// plate geometry). Cheap to copy; shared by partitioned sub-operators so that
/// blending stays a function of absolute position.
class MaterialEvaluator {
public:
    MaterialEvaluator(const MaterialField& field, const GridSpec& global_spec);

    /// Fraction of altered material at a point, in [0, 1].
    [[nodiscard]] double vertex_fraction(const Vec3& pos) const;

    /// Vertex-averaged fraction, then a linear blend of the two coefficient pairs.
    [[nodiscard]] ElementCoefficients element(const std::array<Vec3, 4>& verts) const
    {
        const double f = 0.25 * (vertex_fraction(verts[0]) + vertex_fraction(verts[1]) +
                                 vertex_fraction(verts[2]) + vertex_fraction(verts[3]));
        const auto& c = field_.coefficients;
        return {(1.0 - f) * c.rhoC[0] + f * c.rhoC[1], (1.0 - f) * c.k[0] + f * c.k[1]};
    }

    [[nodiscard]] const MaterialField& field() const noexcept { return field_; }

private:
    MaterialField field_;
    double g_min_ = 0.0;
    double g_range_ = 1.0;
    CorrosionGeometry corrosion_{};
};

[[nodiscard]] ElementCoefficients element_coefficients(const MaterialField& field, const GridSpec& spec,
                                                       std::size_t e);

}  // namespace mfheat
