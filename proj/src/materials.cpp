#include "mfheat/materials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfheat {

void MaterialCoefficients::validate() const
{
    for (std::size_t m = 0; m < 2; ++m) {
        if (!(rhoC[m] > 0.0) || !(k[m] > 0.0)) {
            throw std::invalid_argument("material coefficients must be positive");
        }
    }
}

std::string kind_name(const MaterialKind& kind)
{
    struct Visitor {
        std::string operator()(const TwoLayer&) const { return "two_layer"; }
        std::string operator()(const SmoothedLayer&) const { return "smoothed_layer"; }
        std::string operator()(const Functional&) const { return "functional"; }
        std::string operator()(const Corrosion&) const { return "corrosion"; }
    };
    return std::visit(Visitor{}, kind);
}

CorrosionGeometry corrosion_geometry(const GridSpec& spec, double half_height)
{
    const auto& lo = spec.bounds_min();
    const auto& hi = spec.bounds_max();
    CorrosionGeometry geo;
    geo.rear_z = hi[2];
    geo.thickness = hi[2] - lo[2];
    geo.y_center = 0.5 * (lo[1] + hi[1]);
    geo.half_height = half_height > 0.0 ? half_height : 0.5 * (hi[1] - lo[1]);
    return geo;
}

bool corrosion_indicator(double theta, const Vec3& pos, const CorrosionGeometry& geo)
{
    if (theta < 0.0 || theta > geo.thickness) {
        throw std::invalid_argument("corrosion depth outside [0, plate thickness]");
    }
    if (theta == 0.0) {
        return false;
    }
    const double y = pos[1] - geo.y_center;
    if (std::abs(y) > geo.half_height) {
        return false;
    }
    const double d = geo.rear_z - pos[2];
    const double s = y / geo.half_height;
    return d <= theta * (1.0 - s * s);
}

namespace {

double functional_value(const Vec3& p)
{
    return p[0] * p[0] - 0.2 * p[1] * p[1] + 10.0 * p[2];
}

// Extremes of a separable term over the grid coordinates of one axis.
template <class F>
std::pair<double, double> axis_extremes(const GridSpec& spec, std::size_t axis, F term)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < spec.points(axis); ++i) {
        const double x = spec.bounds_min()[axis] + static_cast<double>(i) * spec.spacing()[axis];
        const double v = term(x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace

MaterialEvaluator::MaterialEvaluator(const MaterialField& field, const GridSpec& global_spec) : field_(field)
{
    field_.coefficients.validate();
    if (const auto* f = std::get_if<Functional>(&field_.kind)) {
        (void)f;
        const auto [x0, x1] = axis_extremes(global_spec, 0, [](double x) { return x * x; });
        const auto [y0, y1] = axis_extremes(global_spec, 1, [](double y) { return -0.2 * y * y; });
        const auto [z0, z1] = axis_extremes(global_spec, 2, [](double z) { return 10.0 * z; });
        g_min_ = x0 + y0 + z0;
        g_range_ = (x1 + y1 + z1) - g_min_;
        if (!(g_range_ > 0.0)) {
            g_range_ = 1.0;
        }
    }
    else if (const auto* c = std::get_if<Corrosion>(&field_.kind)) {
        corrosion_ = corrosion_geometry(global_spec, c->half_height);
        if (c->depth < 0.0 || c->depth > corrosion_.thickness) {
            throw std::invalid_argument("corrosion depth outside [0, plate thickness]");
        }
    }
    else if (const auto* s = std::get_if<SmoothedLayer>(&field_.kind)) {
        if (!(s->width > 0.0)) {
            throw std::invalid_argument("smoothed_layer width must be positive");
        }
    }
}

double MaterialEvaluator::vertex_fraction(const Vec3& pos) const
{
    switch (field_.kind.index()) {
    case 0:
        return pos[2] > std::get<TwoLayer>(field_.kind).z_threshold ? 1.0 : 0.0;
    case 1: {
        const auto& s = std::get<SmoothedLayer>(field_.kind);
        return std::clamp((pos[2] - (s.z_center - 0.5 * s.width)) / s.width, 0.0, 1.0);
    }
    case 2:
        return std::clamp((functional_value(pos) - g_min_) / g_range_, 0.0, 1.0);
    default:
        return corrosion_indicator(std::get<Corrosion>(field_.kind).depth, pos, corrosion_) ? 1.0 : 0.0;
    }
}

ElementCoefficients element_coefficients(const MaterialField& field, const GridSpec& spec, std::size_t e)
{
    const MaterialEvaluator eval(field, spec);
    return eval.element(element_positions(spec, e));
}

}  // namespace mfheat
