#include "mfheat/inverse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mfheat {

void CameraModel::validate() const
{
    if (!(pitch > 0.0)) {
        throw std::invalid_argument("camera pitch must be positive");
    }
    if (!(sigma >= 0.0)) {
        throw std::invalid_argument("camera noise sigma must be non-negative");
    }
    if (!(quantization > 0.0)) {
        throw std::invalid_argument("camera quantization must be positive");
    }
}

std::vector<double> front_face(const GridSpec& spec, std::span<const double> field)
{
    if (field.size() != spec.vertex_count()) {
        throw std::invalid_argument("front_face: field length does not match the grid");
    }
    return {field.begin(), field.begin() + static_cast<std::ptrdiff_t>(spec.layer_size())};
}

namespace {

std::size_t pixel_count(double extent, double pitch, const char* axis)
{
    const double n = std::round(extent / pitch);
    if (n < 1.0 || std::abs(n * pitch - extent) > 1e-9 * extent) {
        std::ostringstream os;
        os << "camera pitch " << pitch << " does not tile the face along " << axis << " (extent " << extent << ")";
        throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(n);
}

// Cell index and local coordinate of x on a uniform axis with `cells` cells.
std::pair<std::size_t, double> locate(double x, double x0, double h, std::size_t cells)
{
    const double s = (x - x0) / h;
    const auto c = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(cells - 1)));
    return {c, s - static_cast<double>(c)};
}

}  // namespace

Image render_measurement(const GridSpec& spec, std::span<const double> face_values, const CameraModel& camera)
{
    camera.validate();
    if (face_values.size() != spec.layer_size()) {
        throw std::invalid_argument("render_measurement: expected one value per face vertex");
    }
    const auto& lo = spec.bounds_min();
    const auto& hi = spec.bounds_max();
    const auto& h = spec.spacing();
    const auto& div = spec.divisions();
    const std::size_t px = spec.points(0);

    Image img;
    img.nx = pixel_count(hi[0] - lo[0], camera.pitch, "x");
    img.ny = pixel_count(hi[1] - lo[1], camera.pitch, "y");
    img.x0 = lo[0];
    img.y0 = lo[1];
    img.pitch = camera.pitch;
    img.pixels.assign(img.nx * img.ny, 0.0);

    const double sub = camera.pitch / static_cast<double>(kSubpixels);
    const double w = 1.0 / static_cast<double>(kSubpixels * kSubpixels);
    for (std::size_t j = 0; j < img.ny; ++j) {
        for (std::size_t i = 0; i < img.nx; ++i) {
            double acc = 0.0;
            for (std::size_t b = 0; b < kSubpixels; ++b) {
                const double y = img.y0 + static_cast<double>(j) * camera.pitch + (static_cast<double>(b) + 0.5) * sub;
                const auto [cy, ty] = locate(y, lo[1], h[1], div[1]);
                for (std::size_t a = 0; a < kSubpixels; ++a) {
                    const double x =
                        img.x0 + static_cast<double>(i) * camera.pitch + (static_cast<double>(a) + 0.5) * sub;
                    const auto [cx, tx] = locate(x, lo[0], h[0], div[0]);
                    const double v00 = face_values[cy * px + cx];
                    const double v10 = face_values[cy * px + cx + 1];
                    const double v01 = face_values[(cy + 1) * px + cx];
                    const double v11 = face_values[(cy + 1) * px + cx + 1];
                    acc += (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
                }
            }
            img.at(i, j) = acc * w;
        }
    }
    return img;
}

Image corrupt(const Image& image, const CameraModel& camera, std::uint64_t seed, double sigma_override)
{
    camera.validate();
    const double sigma = sigma_override >= 0.0 ? sigma_override : camera.sigma;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Image out = image;
    for (double& v : out.pixels) {
        const double z = noise(rng);  // drawn even when sigma = 0 so streams line up
        v = std::round((v + sigma * z) / camera.quantization) * camera.quantization;
    }
    return out;
}

double log_normal_interval(double a, double b)
{
    constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    double p = 0.0;
    if (a >= 0.0) {
        p = 0.5 * (std::erfc(a * inv_sqrt2) - std::erfc(b * inv_sqrt2));
    }
    else if (b <= 0.0) {
        p = 0.5 * (std::erfc(-b * inv_sqrt2) - std::erfc(-a * inv_sqrt2));
    }
    else {
        p = 1.0 - 0.5 * (std::erfc(-a * inv_sqrt2) + std::erfc(b * inv_sqrt2));
    }
    if (p > 0.0) {
        return std::log(p);
    }
    // Both ends far in one tail: density at the nearer end times the width,
    // corrected by the exponential decay across the interval.
    const double near = std::min(std::abs(a), std::abs(b));
    const double far = std::max(std::abs(a), std::abs(b));
    const double log_phi = -0.5 * near * near - 0.5 * std::log(2.0 * std::numbers::pi);
    return log_phi - std::log(near) + std::log1p(-std::exp(-near * (far - near)));
}

double image_log_likelihood(const Image& data, const Image& model, const CameraModel& camera, LikelihoodKind kind)
{
    if (data.pixels.size() != model.pixels.size()) {
        throw std::invalid_argument("log-likelihood: image sizes differ");
    }
    const double s = camera.sigma;
    if (!(s > 0.0)) {
        throw std::invalid_argument("log-likelihood needs a positive noise sigma");
    }
    const double half = 0.5 * camera.quantization;
    double sum = 0.0;
    if (kind == LikelihoodKind::interval) {
        for (std::size_t p = 0; p < data.pixels.size(); ++p) {
            const double d = data.pixels[p];
            const double mu = model.pixels[p];
            sum += log_normal_interval((d - half - mu) / s, (d + half - mu) / s);
        }
    }
    else {
        const double c = -std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
        for (std::size_t p = 0; p < data.pixels.size(); ++p) {
            const double z = (data.pixels[p] - model.pixels[p]) / s;
            sum += c - 0.5 * z * z;
        }
    }
    return sum;
}

ForwardModel::ForwardModel(ForwardConfig cfg) : cfg_(std::move(cfg)), spec_(cfg_.grid())
{
    cfg_.coefficients.validate();
    cfg_.camera.validate();
    cfg_.pcg.validate();
    if (!(cfg_.dt > 0.0)) {
        throw std::invalid_argument("forward model: dt must be positive");
    }
    const std::array<FaceFlux, 1> beam{FaceFlux{
        Face::z_min, gaussian_beam(cfg_.beam_power, cfg_.beam_sigma, 0.5 * (cfg_.plate_min[0] + cfg_.plate_max[0]),
                                   0.5 * (cfg_.plate_min[1] + cfg_.plate_max[1]))}};
    load_ = boundary_load(spec_, beam, cfg_.dt);
}

std::vector<double> ForwardModel::surface(double theta) const
{
    const MaterialEvaluator eval({Corrosion{theta, cfg_.corrosion_half_height}, cfg_.coefficients}, spec_);
    std::vector<double> key;
    if (cfg_.cache_capacity > 0) {
        key.resize(spec_.vertex_count());
        for (std::size_t v = 0; v < key.size(); ++v) {
            key[v] = eval.vertex_fraction(vertex_position(spec_, v));
        }
        if (const auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    ProblemSetup setup;
    setup.strategy = cfg_.strategy;
    setup.dt = cfg_.dt;
    setup.theta = cfg_.theta;
    setup.n_steps = cfg_.n_steps;
    setup.ambient = cfg_.ambient;
    setup.pcg = cfg_.pcg;
    const auto problem = make_problem(spec_, eval, load_, setup);
    ++solves_;
    auto face = front_face(spec_, simulate(problem).final_field);
    if (cfg_.cache_capacity > 0) {
        if (cache_.size() >= cfg_.cache_capacity) {
            cache_.clear();
        }
        cache_.emplace(std::move(key), face);
    }
    return face;
}

Image ForwardModel::render(double theta) const
{
    return render_measurement(spec_, surface(theta), cfg_.camera);
}

double log_likelihood(double theta, const Image& data, const ForwardModel& model, LikelihoodKind kind)
{
    Image mu;
    try {
        mu = model.render(theta);
    }
    catch (const NonConvergenceError& e) {
        throw LikelihoodError("forward solve failed at theta = " + std::to_string(theta) + ": " + e.what());
    }
    catch (const BreakdownError& e) {
        throw LikelihoodError("forward solve failed at theta = " + std::to_string(theta) + ": " + e.what());
    }
    return image_log_likelihood(data, mu, model.config().camera, kind);
}

void ChainConfig::validate() const
{
    if (!(upper > lower)) {
        throw std::invalid_argument("chain prior needs upper > lower");
    }
    if (!(sigma_prop > 0.0)) {
        throw std::invalid_argument("chain proposal sigma must be positive");
    }
    if (n_keep == 0) {
        throw std::invalid_argument("chain must keep at least one sample");
    }
    if (stall_window == 0) {
        throw std::invalid_argument("chain stall window must be positive");
    }
}

ChainSummary Chain::summary() const
{
    ChainSummary s;
    if (!samples.empty()) {
        double sum = 0.0;
        for (double v : samples) {
            sum += v;
        }
        s.mean = sum / static_cast<double>(samples.size());
        double ss = 0.0;
        for (double v : samples) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.stddev = samples.size() > 1 ? std::sqrt(ss / static_cast<double>(samples.size() - 1)) : 0.0;
    }
    if (!proposals.empty()) {
        s.acceptance_rate = static_cast<double>(accept_count) / static_cast<double>(proposals.size());
    }
    return s;
}

double reflect(double x, double lo, double hi)
{
    const double width = hi - lo;
    double t = std::fmod(x - lo, 2.0 * width);
    if (t < 0.0) {
        t += 2.0 * width;
    }
    return t <= width ? lo + t : hi - (t - width);
}

Chain metropolis_hastings(const LogTarget& log_target, const ChainConfig& cfg,
                          const std::function<void(const std::string&)>& log)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> step(0.0, cfg.sigma_prop);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto note = [&](Chain& chain, std::string msg) {
        if (log) {
            log(msg);
        }
        chain.warnings.push_back(std::move(msg));
    };

    Chain chain;
    double theta = 0.5 * (cfg.lower + cfg.upper);
    double current = log_target(theta);
    if (!std::isfinite(current)) {
        throw LikelihoodError("log-likelihood at the starting point is not finite");
    }
    const std::size_t total = cfg.n_burn + cfg.n_keep;
    chain.samples.reserve(cfg.n_keep);
    chain.log_likelihoods.reserve(cfg.n_keep);
    chain.proposals.reserve(total);
    chain.proposal_log_likelihoods.reserve(total);
    chain.accepted.reserve(total);
    std::size_t rejected_run = 0;

    for (std::size_t it = 0; it < total; ++it) {
        const double candidate = reflect(theta + step(rng), cfg.lower, cfg.upper);
        const double u = unif(rng);
        double ll = std::numeric_limits<double>::quiet_NaN();
        bool ok = false;
        try {
            ll = log_target(candidate);
            ok = !std::isnan(ll);
        }
        catch (const LikelihoodError& e) {
            ++chain.failed_evaluations;
            note(chain, "iteration " + std::to_string(it) + ": proposal rejected, " + e.what());
        }
        bool accept = false;
        if (ok) {
            const double log_ratio = ll - current;
            accept = log_ratio >= 0.0 || std::log(u) < log_ratio;
        }
        chain.proposals.push_back(candidate);
        chain.proposal_log_likelihoods.push_back(ll);
        chain.accepted.push_back(accept ? 1 : 0);
        if (accept) {
            theta = candidate;
            current = ll;
            ++chain.accept_count;
            rejected_run = 0;
        }
        else if (++rejected_run % cfg.stall_window == 0) {
            std::ostringstream os;
            os << "chain stalled: " << rejected_run << " consecutive rejections at iteration " << it
               << " (theta = " << theta << ", log-likelihood = " << current << ", last proposal " << candidate
               << " with log-likelihood " << ll << ", sigma_prop = " << cfg.sigma_prop << ")";
            note(chain, os.str());
        }
        if (it >= cfg.n_burn) {
            chain.samples.push_back(theta);
            chain.log_likelihoods.push_back(current);
        }
    }
    return chain;
}

}  // namespace mfheat
