#include "mfheat/io.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mfheat {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing: " + std::strerror(errno));
    }
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading: " + std::strerror(errno));
    }
    return in;
}

void finish(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

}  // namespace

void export_vtk(std::span<const double> field, const GridSpec& spec, const std::string& path,
                const std::string& name)
{
    if (field.size() != spec.vertex_count()) {
        throw std::invalid_argument("export_vtk: field has " + std::to_string(field.size()) + " values, grid has " +
                                    std::to_string(spec.vertex_count()) + " vertices");
    }
    auto out = open_out(path);
    const auto& o = spec.bounds_min();
    const auto& h = spec.spacing();
    out << "# vtk DataFile Version 3.0\n"
        << "mfheat field\n"
        << "ASCII\n"
        << "DATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << spec.points(0) << ' ' << spec.points(1) << ' ' << spec.points(2) << '\n'
        << "ORIGIN " << o[0] << ' ' << o[1] << ' ' << o[2] << '\n'
        << "SPACING " << h[0] << ' ' << h[1] << ' ' << h[2] << '\n'
        << "POINT_DATA " << field.size() << '\n'
        << "SCALARS " << name << " double 1\n"
        << "LOOKUP_TABLE default\n";
    for (double v : field) {
        out << v << '\n';
    }
    finish(out, path);
}

VtkField read_vtk(const std::string& path)
{
    auto in = open_in(path);
    VtkField f;
    std::string line;
    std::size_t count = 0;
    bool in_data = false;
    auto fail = [&](const std::string& what) { throw IoError(path + ": " + what); };
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) {
        fail("not a legacy VTK file");
    }
    std::getline(in, line);  // title
    std::getline(in, line);
    if (line != "ASCII") {
        fail("only ASCII files are supported");
    }
    while (!in_data && std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "DATASET") {
            std::string kind;
            ls >> kind;
            if (kind != "STRUCTURED_POINTS") {
                fail("expected STRUCTURED_POINTS, got " + kind);
            }
        }
        else if (key == "DIMENSIONS") {
            ls >> f.dimensions[0] >> f.dimensions[1] >> f.dimensions[2];
        }
        else if (key == "ORIGIN") {
            ls >> f.origin[0] >> f.origin[1] >> f.origin[2];
        }
        else if (key == "SPACING") {
            ls >> f.spacing[0] >> f.spacing[1] >> f.spacing[2];
        }
        else if (key == "POINT_DATA") {
            ls >> count;
        }
        else if (key == "SCALARS") {
            std::string name, type;
            ls >> name >> type;
            if (type != "double") {
                fail("expected double scalars, got " + type);
            }
        }
        else if (key == "LOOKUP_TABLE") {
            in_data = true;
        }
    }
    if (!in_data) {
        fail("missing scalar data");
    }
    if (count != f.dimensions[0] * f.dimensions[1] * f.dimensions[2]) {
        fail("POINT_DATA does not match DIMENSIONS");
    }
    f.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> line)) {
            fail("truncated scalar data");
        }
        f.values[i] = std::stod(line);
    }
    return f;
}

void write_image_csv(const Image& img, const std::string& path)
{
    auto out = open_out(path);
    out << "# " << img.nx << ' ' << img.ny << ' ' << img.x0 << ' ' << img.y0 << ' ' << img.pitch << '\n';
    for (std::size_t j = 0; j < img.ny; ++j) {
        for (std::size_t i = 0; i < img.nx; ++i) {
            out << (i ? "," : "") << img.at(i, j);
        }
        out << '\n';
    }
    finish(out, path);
}

Image read_image_csv(const std::string& path)
{
    auto in = open_in(path);
    Image img;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw IoError(path + ": missing image header");
    }
    std::istringstream hs(line.substr(2));
    if (!(hs >> img.nx >> img.ny >> img.x0 >> img.y0 >> img.pitch)) {
        throw IoError(path + ": malformed image header");
    }
    img.pixels.reserve(img.nx * img.ny);
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            img.pixels.push_back(std::stod(cell));
        }
    }
    if (img.pixels.size() != img.nx * img.ny) {
        throw IoError(path + ": expected " + std::to_string(img.nx * img.ny) + " pixels, found " +
                      std::to_string(img.pixels.size()));
    }
    return img;
}

void write_chain_csv(const Chain& chain, const std::string& path)
{
    auto out = open_out(path);
    out << "iteration,theta,loglik,accepted\n";
    for (std::size_t i = 0; i < chain.proposals.size(); ++i) {
        out << i << ',' << chain.proposals[i] << ',' << chain.proposal_log_likelihoods[i] << ','
            << int(chain.accepted[i]) << '\n';
    }
    finish(out, path);
}

void ensure_directory(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + dir + "': " + ec.message());
    }
}

}  // namespace mfheat
