#pragma once

#include "mfheat/inverse.hpp"
#include "mfheat/mesh.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Legacy VTK STRUCTURED_POINTS file with one double scalar per vertex in
/// GridSpec order (x fastest). Values are written with 17 significant digits.
void export_vtk(std::span<const double> field, const GridSpec& spec, const std::string& path,
                const std::string& name = "temperature");

struct VtkField {
    Index3 dimensions{};
    Vec3 origin{};
    Vec3 spacing{};
    std::vector<double> values;
};

[[nodiscard]] VtkField read_vtk(const std::string& path);

/// Image as CSV: a "# nx ny x0 y0 pitch" header line, then ny rows of nx values.
void write_image_csv(const Image& img, const std::string& path);
[[nodiscard]] Image read_image_csv(const std::string& path);

/// iteration,theta,loglik,accepted for every proposal.
void write_chain_csv(const Chain& chain, const std::string& path);

/// Creates the directory (and parents) if needed.
void ensure_directory(const std::string& dir);

}  // namespace mfheat
