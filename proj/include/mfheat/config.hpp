#pragma once

#include "mfheat/inverse.hpp"
#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"
#include "mfheat/operator.hpp"
#include "mfheat/solver.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Precision { single, dual };

[[nodiscard]] std::string to_string(Precision p);
[[nodiscard]] Precision parse_precision(const std::string& name);

struct GridConfig {
    Vec3 min{-15.0, -15.0, 0.0};
    Vec3 max{15.0, 15.0, 10.0};
    Index3 divisions{30, 30, 10};

    [[nodiscard]] GridSpec spec() const { return GridSpec(min, max, divisions); }
};

struct SolverConfig {
    Strategy strategy = Strategy::coalesced;
    Precision precision = Precision::dual;
    double tol = 1e-6;
    std::size_t i_max = 0;
    double floor = 1e-13;
    std::size_t partitions = 1;
    double split_fraction = 0.5;

    [[nodiscard]] PcgConfig pcg() const;
};

struct TimeConfig {
    double dt = 0.01;
    double theta = 0.5;
    std::size_t n_steps = 50;
    double ambient = 0.0;
};

enum class LoadKind { uniform, gaussian_beam };

struct LoadConfig {
    LoadKind kind = LoadKind::uniform;
    Face face = Face::z_min;
    double value = 1.0;     // uniform flux
    double power = 1.0e10;  // beam
    double sigma = 2.0;
    std::array<double, 2> center{0.0, 0.0};

    [[nodiscard]] FaceFlux flux() const;
};

struct BenchConfig {
    std::vector<Index3> sizes;
    std::vector<Strategy> strategies{Strategy::flexible, Strategy::singlepass, Strategy::coalesced};
    std::vector<std::size_t> partitions{1};
    std::size_t n_steps = 50;
    /// Runs per cell; the fastest (by PCG time per iteration) is reported.
    std::size_t repeats = 1;
};

struct InverseConfig {
    double theta_true = 3.175;
    std::uint64_t data_seed = 1;
    std::string data_path;  // empty: synthesize from theta_true
    LikelihoodKind likelihood = LikelihoodKind::interval;
    double corrosion_half_height = 0.0;
    CameraModel camera{};
    ChainConfig chain{};
};

struct OutputConfig {
    std::string dir = "out";
};

/// Whole-run configuration. Every section is optional in the file; unknown keys
/// anywhere are rejected.
struct RunConfig {
    GridConfig grid{};
    MaterialField material{};
    SolverConfig solver{};
    TimeConfig time{};
    LoadConfig load{};
    BenchConfig bench{};
    InverseConfig inverse{};
    OutputConfig output{};

    /// Cross-field checks (positive sizes, fractions in range, ...).
    void validate() const;

    [[nodiscard]] ProblemSetup problem_setup() const;
    [[nodiscard]] ForwardConfig forward_config() const;
};

[[nodiscard]] RunConfig parse_config(const std::string& json_text);
[[nodiscard]] RunConfig load_config(const std::string& path);

}  // namespace mfheat
