// Command-line driver: bench | simulate | invert | verify.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid input or
// configuration, 3 solver or I/O failure.

#include "mfheat/bench.hpp"
#include "mfheat/config.hpp"
#include "mfheat/driver.hpp"
#include "mfheat/elements.hpp"
#include "mfheat/inverse.hpp"
#include "mfheat/io.hpp"
#include "mfheat/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

using namespace mfheat;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> partitions;
    std::optional<double> split_fraction;
    std::optional<std::string> strategy;
    std::optional<std::string> precision;
    std::optional<std::string> out;
};

RunConfig resolve(const Overrides& o)
{
    RunConfig cfg = o.config.empty() ? parse_config("{}") : load_config(o.config);
    if (o.seed) {
        cfg.inverse.chain.seed = *o.seed;
    }
    if (o.partitions) {
        cfg.solver.partitions = *o.partitions;
    }
    if (o.split_fraction) {
        cfg.solver.split_fraction = *o.split_fraction;
    }
    if (o.strategy) {
        try {
            cfg.solver.strategy = parse_strategy(*o.strategy);
        }
        catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--strategy: ") + e.what());
        }
        cfg.bench.strategies = {cfg.solver.strategy};
    }
    if (o.precision) {
        cfg.solver.precision = parse_precision(*o.precision);
    }
    if (o.partitions) {
        cfg.bench.partitions = {*o.partitions};
    }
    if (o.out) {
        cfg.output.dir = *o.out;
    }
    cfg.validate();
    return cfg;
}

std::string join(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

void dump_element_matrices(const RunConfig& cfg)
{
    const auto fg = fixed_grid_matrices(cfg.grid.spec());
    nlohmann::json j;
    j["spacing"] = cfg.grid.spec().spacing();
    for (std::size_t t = 0; t < fg.per_shape.size(); ++t) {
        const auto& e = fg.per_shape[t];
        j["tets"].push_back({{"shape", t}, {"volume", e.volume}, {"mass", e.mass}, {"stiffness", e.stiffness}});
    }
    std::cout << std::setprecision(17) << j.dump(2) << '\n';
}

int cmd_simulate(const RunConfig& cfg)
{
    ensure_directory(cfg.output.dir);
    const auto run = run_transient(cfg);
    const auto spec = cfg.grid.spec();
    const auto vtk = join(cfg.output.dir, "final.vtk");
    export_vtk(run.final_field, spec, vtk);
    const auto csv = join(cfg.output.dir, "steps.csv");
    std::ofstream out(csv);
    if (!out) {
        throw IoError("cannot open '" + csv + "' for writing");
    }
    out << "step,iterations,rhs_seconds,pcg_seconds,seconds_per_iteration\n";
    for (std::size_t s = 0; s < run.stats.steps.size(); ++s) {
        const auto& st = run.stats.steps[s];
        out << s + 1 << ',' << st.iterations << ',' << st.rhs_seconds << ',' << st.pcg_seconds << ','
            << (st.iterations ? st.pcg_seconds / static_cast<double>(st.iterations) : 0.0) << '\n';
    }
    std::cout << "dof " << run.stats.dof << ", " << run.stats.steps.size() << " steps, "
              << run.stats.total_iterations << " PCG iterations, " << run.stats.seconds_per_iteration()
              << " s per iteration\nwrote " << vtk << " and " << csv << '\n';
    return 0;
}

int cmd_invert(const RunConfig& cfg)
{
    ensure_directory(cfg.output.dir);
    const ForwardModel model(cfg.forward_config());
    Image data;
    if (cfg.inverse.data_path.empty()) {
        data = corrupt(model.render(cfg.inverse.theta_true), cfg.inverse.camera, cfg.inverse.data_seed);
    }
    else {
        data = read_image_csv(cfg.inverse.data_path);
    }
    write_image_csv(data, join(cfg.output.dir, "data.csv"));
    const auto kind = cfg.inverse.likelihood;
    const auto chain = metropolis_hastings(
        [&](double theta) { return log_likelihood(theta, data, model, kind); }, cfg.inverse.chain,
        [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; });
    write_chain_csv(chain, join(cfg.output.dir, "chain.csv"));
    const auto s = chain.summary();
    nlohmann::json j{{"mean", s.mean},
                     {"std", s.stddev},
                     {"acceptance_rate", s.acceptance_rate},
                     {"n_burn", cfg.inverse.chain.n_burn},
                     {"n_keep", cfg.inverse.chain.n_keep},
                     {"seed", cfg.inverse.chain.seed},
                     {"forward_solves", model.solves()},
                     {"cache_hits", model.cache_hits()},
                     {"failed_evaluations", chain.failed_evaluations},
                     {"warnings", chain.warnings}};
    const auto path = join(cfg.output.dir, "summary.json");
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << std::setprecision(17) << j.dump(2) << '\n';
    std::cout << "posterior mean " << s.mean << " mm, std " << s.stddev << " mm, acceptance " << s.acceptance_rate
              << " (" << model.solves() << " forward solves)\nwrote " << path << '\n';
    return 0;
}

int cmd_bench(const RunConfig& cfg)
{
    ensure_directory(cfg.output.dir);
    const auto records = run_bench(cfg, [](const BenchRecord& r) {
        std::cout << r.dof << " dof, " << to_string(r.strategy) << ", " << r.partitions << " partition(s): ";
        if (r.skipped) {
            std::cout << "skipped (" << r.note << ")\n";
        }
        else {
            std::cout << r.stats.total_iterations << " iterations, " << r.stats.seconds_per_iteration()
                      << " s per iteration\n";
        }
    });
    write_bench_csv(records, join(cfg.output.dir, "bench.csv"));
    write_phase_csv(records, join(cfg.output.dir, "bench_phases.csv"));
    std::cout << "wrote " << join(cfg.output.dir, "bench.csv") << " and " << join(cfg.output.dir, "bench_phases.csv")
              << '\n';
    return 0;
}

int cmd_verify(const std::string& fault, const std::vector<std::string>& only)
{
    const auto report = verify({fault, only});
    std::cout << report.format();
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Assembly-free transient heat conduction: benchmarks, simulation, inversion, verification"};
    app.require_subcommand(0, 1);
    Overrides o;
    bool dump = false;
    std::string fault;
    std::vector<std::string> only;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "MCMC chain seed");
        sub->add_option("--partitions", o.partitions, "1 or 2 workers");
        sub->add_option("--split-fraction", o.split_fraction, "fraction m of z layers owned by worker 1");
        sub->add_option("--strategy", o.strategy, "flexible | singlepass | coalesced");
        sub->add_option("--precision", o.precision, "single | double");
        sub->add_option("--out", o.out, "output directory");
    };
    app.add_option("--config", o.config, "JSON run configuration (for --dump-element-matrices)")
        ->check(CLI::ExistingFile);
    app.add_flag("--dump-element-matrices", dump, "print the six fixed-grid element matrices as JSON and exit");

    auto* bench = app.add_subcommand("bench", "time-per-iteration sweep over mesh sizes and strategies");
    auto* simulate = app.add_subcommand("simulate", "run one transient simulation");
    auto* invert = app.add_subcommand("invert", "Metropolis-Hastings estimate of the corrosion depth");
    auto* verify_cmd = app.add_subcommand("verify", "run the self-check suites");
    for (auto* sub : {bench, simulate, invert}) {
        add_common(sub);
        sub->get_option("--config")->required();
    }
    verify_cmd->add_option("--inject-fault", fault, "mutation hook: flip_k_sign");
    verify_cmd->add_option("--suite", only, "run only the named suite(s)");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        // --help and --version come through here with exit code 0.
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (dump) {
            dump_element_matrices(resolve(o));
            return 0;
        }
        if (*verify_cmd) {
            return cmd_verify(fault, only);
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 2;
        }
        const RunConfig cfg = resolve(o);
        if (*bench) {
            return cmd_bench(cfg);
        }
        if (*simulate) {
            return cmd_simulate(cfg);
        }
        return cmd_invert(cfg);
    }
    catch (const std::invalid_argument& e) {  // ConfigError, PartitionError, GridError, ...
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
