#include "mfheat/verify.hpp"

#include "mfheat/baseline.hpp"
#include "mfheat/linalg.hpp"
#include "mfheat/parallel.hpp"
#include "mfheat/partition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <iomanip>
#include <sstream>

namespace mfheat {

namespace {

constexpr double kBudgetSeconds = 300.0;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

double linf(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double linf_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

GridSpec laminate(std::size_t cx, std::size_t cy, std::size_t cz)
{
    return GridSpec({-15.0, -15.0, 0.0}, {15.0, 15.0, 10.0}, {cx, cy, cz});
}

ProblemSetup setup_for(const VerifyOptions& opt, std::size_t n_steps, double tol)
{
    ProblemSetup s;
    s.n_steps = n_steps;
    s.pcg.tol = tol;
    s.flip_stiffness_sign = opt.inject_fault == "flip_k_sign";
    return s;
}

std::vector<double> uniform_front_load(const GridSpec& g, double dt)
{
    const std::array<FaceFlux, 1> flux{FaceFlux{Face::z_min, [](const Vec3&) { return 1.0; }}};
    return boundary_load(g, flux, dt);
}

// Each suite returns "" on success or a description of the first failure.
std::string oracle_suite(const VerifyOptions& opt)
{
    const bool flip = opt.inject_fault == "flip_k_sign";
    for (const Index3 c : {Index3{2, 2, 2}, Index3{3, 3, 3}}) {
        const GridSpec g({-15, -15, 0}, {15, 15, 10}, c);
        const std::array<MaterialField, 4> fields{MaterialField{TwoLayer{5.0}, {}},
                                                  MaterialField{SmoothedLayer{5.0, 4.0}, {}},
                                                  MaterialField{Functional{}, {}},
                                                  MaterialField{Corrosion{6.0, 0.0}, {}}};
        for (const auto& field : fields) {
            const MaterialEvaluator eval(field, g);
            for (const Mode mode : {Mode::A, Mode::L}) {
                const OperatorParams base{Strategy::flexible, mode, 0.5, 0.01, false};
                const auto csr = assemble_csr(g, eval, base);
                for (const Strategy s : {Strategy::flexible, Strategy::singlepass, Strategy::coalesced}) {
                    OperatorParams p = base;
                    p.strategy = s;
                    p.flip_stiffness_sign = flip;
                    const SystemOperator<double> op(g, eval, p);
                    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                        const auto x = random_vector(op.size(), seed);
                        std::vector<double> y(x.size()), ref(x.size());
                        op.apply(x, y);
                        csr.multiply(x, ref);
                        const double rel = linf_diff(y, ref) / linf(ref);
                        if (!(rel <= 1e-12)) {
                            std::ostringstream os;
                            os << to_string(s) << " " << kind_name(field.kind) << " mode "
                               << (mode == Mode::A ? "A" : "L") << " on " << c[0] << "x" << c[1] << "x" << c[2]
                               << ": relative difference " << rel << " vs CSR oracle";
                            return os.str();
                        }
                    }
                }
            }
        }
    }
    return "";
}

std::string nullspace_suite(const VerifyOptions& opt)
{
    const auto g = laminate(5, 5, 5);
    const MaterialEvaluator eval({TwoLayer{5.0}, {}}, g);
    auto p = make_problem(g, eval, std::vector<double>(g.vertex_count(), 0.0), setup_for(opt, 20, 1e-10));
    SimulationOptions so;
    so.initial = std::vector<double>(g.vertex_count(), 21.5);
    const auto res = simulate(p, so);
    double dev = 0.0;
    for (double v : res.final_field) {
        dev = std::max(dev, std::abs(v - 21.5));
    }
    if (!(dev <= 1e-10)) {
        return "constant field drifted by " + std::to_string(dev);
    }
    return "";
}

std::string energy_suite(const VerifyOptions& opt)
{
    const auto g = laminate(10, 10, 5);
    const MaterialEvaluator eval({TwoLayer{5.0}, {}}, g);
    const auto setup = setup_for(opt, 10, 1e-6);
    const auto p = make_problem(g, eval, uniform_front_load(g, setup.dt), setup);
    const SystemOperator<double> mass(g, eval, {Strategy::coalesced, Mode::A, 0.5, 0.0, false});
    const double load_total = std::accumulate(p.load.begin(), p.load.end(), 0.0);
    std::vector<double> u(g.vertex_count(), 0.0), guess = u, b(u.size()), du(u.size()), mdu(u.size());
    for (std::size_t s = 0; s < p.n_steps; ++s) {
        auto next = step(p, u, guess);
        p.op_L.apply_fused(u, 1.0, p.load, b);
        for (std::size_t i = 0; i < u.size(); ++i) {
            du[i] = next[i] - u[i];
        }
        mass.apply(du, mdu);
        const double bnorm = std::sqrt(dot(b, b));
        const double gap = std::abs(std::accumulate(mdu.begin(), mdu.end(), 0.0) - load_total);
        if (!(gap <= 10.0 * p.pcg.tol * bnorm)) {
            std::ostringstream os;
            os << "step " << s + 1 << ": |1'M dU - 1'F| = " << gap << " exceeds " << 10.0 * p.pcg.tol * bnorm;
            return os.str();
        }
        guess = u;
        extrapolate_guess<double>(guess, next);
        u = std::move(next);
    }
    return "";
}

std::string partition_suite(const VerifyOptions& opt)
{
    const GridSpec g({0, 0, 0}, {6, 6, 6}, {6, 6, 6});
    const MaterialEvaluator eval({SmoothedLayer{3.0, 2.0}, {}}, g);
    const OperatorParams params{Strategy::coalesced, Mode::A, 0.5, 0.1, opt.inject_fault == "flip_k_sign"};
    const SystemOperator<double> op(g, eval, params);
    const auto b = random_vector(op.size(), 17);
    PcgConfig cfg;
    cfg.tol = 1e-10;
    std::vector<double> ref(b.size(), 0.0);
    const auto mono = pcg<double>(op, b, ref, op.jacobi_diagonal(), cfg);
    for (const double m : {0.3, 0.5, 0.7}) {
        const PartitionedSystem sys(split_domain(g, m), eval, params);
        std::vector<double> x(b.size(), 0.0);
        const auto res = pcg_partitioned(sys, b, x, cfg);
        const double diff = linf_diff(x, ref);
        std::ostringstream os;
        if (!(diff <= 1e-10 * linf(ref))) {
            os << "m = " << m << ": reassembled solution differs by " << diff;
        }
        else if (res.pcg.iterations != mono.iterations) {
            os << "m = " << m << ": " << res.pcg.iterations << " iterations vs " << mono.iterations << " monolithic";
        }
        else if (res.audit.layers_sent[0] != mono.iterations || res.audit.layers_sent[1] != mono.iterations) {
            os << "m = " << m << ": halo traffic is not one layer per direction per iteration";
        }
        if (!os.str().empty()) {
            return os.str();
        }
    }
    return "";
}

std::string reduction_suite(const VerifyOptions&)
{
    const auto x = random_vector(200003, 5);
    const auto y = random_vector(200003, 6);
    const int saved = thread_count();
    std::vector<double> results;
    for (const int t : {1, 2, 4}) {
        set_thread_count(t);
        results.push_back(dot(x, y));
    }
    set_thread_count(saved);
    if (!std::all_of(results.begin(), results.end(), [&](double r) { return r == results[0]; })) {
        return "dot product depends on the thread count";
    }
    long double exact = 0.0L;
    double mag = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        exact += static_cast<long double>(x[i]) * static_cast<long double>(y[i]);
        mag += std::abs(x[i] * y[i]);
    }
    if (!(std::abs(results[0] - static_cast<double>(exact)) <= 1e-14 * mag)) {
        return "tree reduction error exceeds 1e-14 sum|x_i y_i|";
    }
    return "";
}

struct Suite {
    const char* name;
    const char* module;
    std::function<std::string(const VerifyOptions&)> run;
};

const std::vector<Suite>& suites()
{
    static const std::vector<Suite> all{
        {"oracle-equivalence", "operator", oracle_suite},
        {"nullspace", "solver", nullspace_suite},
        {"energy-balance", "solver", energy_suite},
        {"partition-reassembly", "partition", partition_suite},
        {"reduction-order", "linalg", reduction_suite},
    };
    return all;
}

}  // namespace

bool VerifyReport::passed() const noexcept
{
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

std::string VerifyReport::format() const
{
    std::ostringstream os;
    for (const auto& s : suites) {
        os << (s.passed ? "PASS " : "FAIL ") << s.name << " [" << s.module << "] " << std::fixed
           << std::setprecision(2) << s.seconds << " s";
        if (!s.detail.empty()) {
            os << ": " << s.detail;
        }
        os << '\n';
    }
    os << (passed() ? "all suites passed" : "verification FAILED") << " in " << std::fixed << std::setprecision(1)
       << seconds << " s\n";
    if (over_budget) {
        os << "warning: verification exceeded the " << kBudgetSeconds << " s budget\n";
    }
    return os.str();
}

std::vector<std::string> suite_names()
{
    std::vector<std::string> out;
    for (const auto& s : suites()) {
        out.emplace_back(s.name);
    }
    return out;
}

VerifyReport verify(const VerifyOptions& options)
{
    if (!options.inject_fault.empty() && options.inject_fault != "flip_k_sign") {
        throw std::invalid_argument("unknown fault '" + options.inject_fault + "' (supported: flip_k_sign)");
    }
    for (const auto& name : options.only) {
        const auto names = suite_names();
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw std::invalid_argument("unknown verify suite '" + name + "'");
        }
    }
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    VerifyReport report;
    for (const auto& suite : suites()) {
        if (!options.only.empty() &&
            std::find(options.only.begin(), options.only.end(), suite.name) == options.only.end()) {
            continue;
        }
        SuiteResult r{suite.name, suite.module, false, "", 0.0};
        const auto ts = clock::now();
        try {
            r.detail = suite.run(options);
            r.passed = r.detail.empty();
        }
        catch (const std::exception& e) {
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(clock::now() - ts).count();
        report.suites.push_back(std::move(r));
    }
    report.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    report.over_budget = report.seconds > kBudgetSeconds;
    return report;
}

}  // namespace mfheat
