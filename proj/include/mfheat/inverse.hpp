#pragma once

#include "mfheat/materials.hpp"
#include "mfheat/mesh.hpp"
#include "mfheat/operator.hpp"
#include "mfheat/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfheat {

/// Pixel grid over the measured face plus the noise model of the camera.
struct CameraModel {
    double pitch = 0.5;         // mm
    double sigma = 0.1;         // C
    double quantization = 0.1;  // C
    std::uint64_t seed = 1;

    void validate() const;
};

/// Row-major image, x fastest. Pixel (i, j) covers
/// [x0 + i pitch, x0 + (i+1) pitch] x [y0 + j pitch, y0 + (j+1) pitch].
struct Image {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double pitch = 1.0;
    std::vector<double> pixels;

    [[nodiscard]] double& at(std::size_t i, std::size_t j) { return pixels[j * nx + i]; }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return pixels[j * nx + i]; }
    [[nodiscard]] Vec3 center(std::size_t i, std::size_t j) const
    {
        return {x0 + (static_cast<double>(i) + 0.5) * pitch, y0 + (static_cast<double>(j) + 0.5) * pitch, 0.0};
    }
};

/// Samples per pixel edge for rendering.
inline constexpr std::size_t kSubpixels = 4;

/// Values of layer k = 0 (the z_min face), x fastest.
[[nodiscard]] std::vector<double> front_face(const GridSpec& spec, std::span<const double> field);

/// Bilinear interpolation of the face values to 4x4 sample points per pixel,
/// averaged per pixel. No noise. Throws if the pixels do not tile the face.
[[nodiscard]] Image render_measurement(const GridSpec& spec, std::span<const double> face_values,
                                       const CameraModel& camera);

/// Adds N(0, sigma^2) per pixel (camera.sigma overridden by sigma_override
/// when it is >= 0) and rounds to the nearest multiple of the quantization.
[[nodiscard]] Image corrupt(const Image& image, const CameraModel& camera, std::uint64_t seed,
                            double sigma_override = -1.0);

enum class LikelihoodKind { interval, gaussian };

/// Sum over pixels of log[Phi((d + q/2 - mu)/s) - Phi((d - q/2 - mu)/s)], or
/// the Gaussian log density for LikelihoodKind::gaussian.
[[nodiscard]] double image_log_likelihood(const Image& data, const Image& model, const CameraModel& camera,
                                          LikelihoodKind kind = LikelihoodKind::interval);

/// log(Phi(b) - Phi(a)) for a < b, accurate in both tails.
[[nodiscard]] double log_normal_interval(double a, double b);

class LikelihoodError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Forward map theta -> rendered front-face image after n_steps of beam heating.
struct ForwardConfig {
    Vec3 plate_min{-15.0, -15.0, 0.0};
    Vec3 plate_max{15.0, 15.0, 12.7};
    std::array<std::size_t, 3> divisions{30, 30, 10};
    MaterialCoefficients coefficients{};
    double corrosion_half_height = 0.0;  // <= 0: half the plate height
    // The material constants are per mm^3 in J/(m^3 K), so a beam power in W
    // is multiplied by 1e9 to stay consistent (10 W -> 1e10).
    double beam_power = 1.0e10;
    double beam_sigma = 2.0;
    double dt = 0.1;
    double theta = 0.5;
    std::size_t n_steps = 100;
    double ambient = 0.0;
    Strategy strategy = Strategy::flexible;
    PcgConfig pcg{};
    CameraModel camera{};
    /// Distinct material states kept by ForwardModel; 0 disables caching.
    std::size_t cache_capacity = 256;

    [[nodiscard]] GridSpec grid() const { return GridSpec(plate_min, plate_max, divisions); }
    [[nodiscard]] double thickness() const noexcept { return plate_max[2] - plate_min[2]; }
};

/// theta only enters through the per-vertex corrosion fractions, so results
/// are cached under that vector and reused exactly. Not thread-safe; use one
/// model per chain.
class ForwardModel {
public:
    explicit ForwardModel(ForwardConfig cfg);

    /// Front-face temperatures at the final time for corrosion depth theta.
    [[nodiscard]] std::vector<double> surface(double theta) const;
    /// surface() rendered through the camera (noise-free).
    [[nodiscard]] Image render(double theta) const;

    [[nodiscard]] const ForwardConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const GridSpec& grid() const noexcept { return spec_; }
    /// Forward simulations actually run.
    [[nodiscard]] std::size_t solves() const noexcept { return solves_; }
    [[nodiscard]] std::size_t cache_hits() const noexcept { return hits_; }

private:
    ForwardConfig cfg_;
    GridSpec spec_;
    std::vector<double> load_;
    mutable std::map<std::vector<double>, std::vector<double>> cache_;
    mutable std::size_t solves_ = 0;
    mutable std::size_t hits_ = 0;
};

/// log p(D | theta); forward failures surface as LikelihoodError.
[[nodiscard]] double log_likelihood(double theta, const Image& data, const ForwardModel& model,
                                    LikelihoodKind kind = LikelihoodKind::interval);

struct ChainConfig {
    std::size_t n_burn = 200;
    std::size_t n_keep = 2500;
    double sigma_prop = 0.1;
    double lower = 0.0;
    double upper = 12.7;
    std::uint64_t seed = 1;
    std::size_t stall_window = 200;

    void validate() const;
};

struct ChainSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double acceptance_rate = 0.0;
};

struct Chain {
    std::vector<double> samples;          // kept states, one per kept iteration
    std::vector<double> log_likelihoods;  // of the kept states
    /// Every proposal in order (burn-in included).
    std::vector<double> proposals;
    std::vector<double> proposal_log_likelihoods;  // NaN where the forward solve failed
    std::vector<char> accepted;
    std::size_t accept_count = 0;
    std::size_t failed_evaluations = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] ChainSummary summary() const;
};

/// Folds x into [lo, hi] by mirror reflection at the bounds.
[[nodiscard]] double reflect(double x, double lo, double hi);

using LogTarget = std::function<double(double)>;

/// Random-walk Metropolis-Hastings with a uniform prior on [lower, upper],
/// starting at the prior midpoint. A target that throws LikelihoodError
/// rejects the proposal; the exception text goes to the chain warnings and
/// to log when set.
[[nodiscard]] Chain metropolis_hastings(const LogTarget& log_target, const ChainConfig& cfg,
                                        const std::function<void(const std::string&)>& log = {});

}  // namespace mfheat
