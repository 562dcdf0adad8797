#include "mfheat/config.hpp"

#include "json.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace mfheat {

using nlohmann::json;

std::string to_string(Precision p)
{
    return p == Precision::single ? "single" : "double";
}

Precision parse_precision(const std::string& name)
{
    if (name == "single" || name == "float") {
        return Precision::single;
    }
    if (name == "double") {
        return Precision::dual;
    }
    throw ConfigError("unknown precision '" + name + "' (expected single or double)");
}

PcgConfig SolverConfig::pcg() const
{
    PcgConfig cfg;
    cfg.tol = tol;
    cfg.i_max = i_max;
    cfg.floor = floor;
    return cfg;
}

FaceFlux LoadConfig::flux() const
{
    if (kind == LoadKind::uniform) {
        const double v = value;
        return {face, [v](const Vec3&) { return v; }};
    }
    return {face, gaussian_beam(power, sigma, center[0], center[1])};
}

namespace {

// Reads one section with a fixed key set. Keys are checked before any value
// is read so that typos are reported even when other keys are fine.
class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
        for (const auto& [key, value] : j_.items()) {
            bool known = false;
            for (const char* k : keys) {
                known = known || key == k;
            }
            if (!known) {
                std::string list;
                for (const char* k : keys) {
                    list += list.empty() ? k : std::string(", ") + k;
                }
                throw ConfigError(path_ + ": unknown key '" + key + "' (allowed: " + list + ")");
            }
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }
    [[nodiscard]] const json& at(const char* key) const { return j_.at(key); }
    [[nodiscard]] std::string where(const char* key) const { return path_ + "." + key; }

    template <class T>
    void read(const char* key, T& out) const
    {
        if (!has(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        }
        catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    void read_size(const char* key, std::size_t& out) const
    {
        if (!has(key)) {
            return;
        }
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(where(key) + ": expected a non-negative integer");
        }
        out = v.get<std::size_t>();
    }

private:
    const json& j_;
    std::string path_;
};

Index3 read_index3(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 3) {
        throw ConfigError(where + ": expected three integers");
    }
    Index3 out{};
    for (std::size_t a = 0; a < 3; ++a) {
        if (!v[a].is_number_integer() || v[a].get<long long>() <= 0) {
            throw ConfigError(where + ": expected three positive integers");
        }
        out[a] = v[a].get<std::size_t>();
    }
    return out;
}

void parse_grid(const json& j, GridConfig& g)
{
    const Section s(j, "grid", {"min", "max", "divisions"});
    s.read("min", g.min);
    s.read("max", g.max);
    if (s.has("divisions")) {
        g.divisions = read_index3(s.at("divisions"), s.where("divisions"));
    }
}

void parse_material(const json& j, MaterialField& m)
{
    const Section s(j, "material", {"kind", "z_threshold", "z_center", "width", "depth", "half_height", "rhoC", "k"});
    std::string kind = "two_layer";
    s.read("kind", kind);
    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) {
            if (s.has(k)) {
                throw ConfigError(s.where(k) + ": not a parameter of material kind '" + kind + "'");
            }
        }
    };
    if (kind == "two_layer") {
        reject({"z_center", "width", "depth", "half_height"});
        TwoLayer t;
        s.read("z_threshold", t.z_threshold);
        m.kind = t;
    }
    else if (kind == "smoothed") {
        reject({"z_threshold", "depth", "half_height"});
        SmoothedLayer t;
        s.read("z_center", t.z_center);
        s.read("width", t.width);
        m.kind = t;
    }
    else if (kind == "functional") {
        reject({"z_threshold", "z_center", "width", "depth", "half_height"});
        m.kind = Functional{};
    }
    else if (kind == "corrosion") {
        reject({"z_threshold", "z_center", "width"});
        Corrosion t;
        s.read("depth", t.depth);
        s.read("half_height", t.half_height);
        m.kind = t;
    }
    else {
        throw ConfigError("material.kind: unknown kind '" + kind +
                          "' (expected two_layer, smoothed, functional or corrosion)");
    }
    s.read("rhoC", m.coefficients.rhoC);
    s.read("k", m.coefficients.k);
}

void parse_solver(const json& j, SolverConfig& c)
{
    const Section s(j, "solver", {"strategy", "precision", "tol", "i_max", "floor", "partitions", "split_fraction"});
    if (s.has("strategy")) {
        std::string name;
        s.read("strategy", name);
        try {
            c.strategy = parse_strategy(name);
        }
        catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("solver.strategy: ") + e.what());
        }
    }
    if (s.has("precision")) {
        std::string name;
        s.read("precision", name);
        c.precision = parse_precision(name);
    }
    s.read("tol", c.tol);
    s.read_size("i_max", c.i_max);
    s.read("floor", c.floor);
    s.read_size("partitions", c.partitions);
    s.read("split_fraction", c.split_fraction);
}

void parse_time(const json& j, TimeConfig& t)
{
    const Section s(j, "time", {"dt", "theta", "n_steps", "ambient"});
    s.read("dt", t.dt);
    s.read("theta", t.theta);
    s.read_size("n_steps", t.n_steps);
    s.read("ambient", t.ambient);
}

void parse_load(const json& j, LoadConfig& l)
{
    const Section s(j, "load", {"kind", "face", "value", "power", "sigma", "center"});
    std::string kind = "uniform";
    s.read("kind", kind);
    if (kind == "uniform") {
        l.kind = LoadKind::uniform;
        for (const char* k : {"power", "sigma", "center"}) {
            if (s.has(k)) {
                throw ConfigError(s.where(k) + ": not a parameter of a uniform load");
            }
        }
    }
    else if (kind == "gaussian_beam") {
        l.kind = LoadKind::gaussian_beam;
        if (s.has("value")) {
            throw ConfigError("load.value: not a parameter of a gaussian_beam load");
        }
    }
    else {
        throw ConfigError("load.kind: unknown kind '" + kind + "' (expected uniform or gaussian_beam)");
    }
    if (s.has("face")) {
        std::string face;
        s.read("face", face);
        try {
            l.face = parse_face(face);
        }
        catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("load.face: ") + e.what());
        }
    }
    s.read("value", l.value);
    s.read("power", l.power);
    s.read("sigma", l.sigma);
    s.read("center", l.center);
}

void parse_bench(const json& j, BenchConfig& b)
{
    const Section s(j, "bench", {"sizes", "strategies", "partitions", "n_steps", "repeats"});
    if (s.has("sizes")) {
        const auto& v = s.at("sizes");
        if (!v.is_array()) {
            throw ConfigError("bench.sizes: expected an array of [cx, cy, cz]");
        }
        b.sizes.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            b.sizes.push_back(read_index3(v[i], "bench.sizes[" + std::to_string(i) + "]"));
        }
    }
    if (s.has("strategies")) {
        std::vector<std::string> names;
        s.read("strategies", names);
        b.strategies.clear();
        for (const auto& n : names) {
            try {
                b.strategies.push_back(parse_strategy(n));
            }
            catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("bench.strategies: ") + e.what());
            }
        }
    }
    s.read("partitions", b.partitions);
    s.read_size("n_steps", b.n_steps);
    s.read_size("repeats", b.repeats);
}

void parse_camera(const json& j, CameraModel& c)
{
    const Section s(j, "inverse.camera", {"pitch", "sigma", "quantization", "seed"});
    s.read("pitch", c.pitch);
    s.read("sigma", c.sigma);
    s.read("quantization", c.quantization);
    s.read("seed", c.seed);
}

void parse_chain(const json& j, ChainConfig& c)
{
    const Section s(j, "inverse.chain", {"n_burn", "n_keep", "sigma_prop", "lower", "upper", "seed", "stall_window"});
    s.read_size("n_burn", c.n_burn);
    s.read_size("n_keep", c.n_keep);
    s.read("sigma_prop", c.sigma_prop);
    s.read("lower", c.lower);
    s.read("upper", c.upper);
    s.read("seed", c.seed);
    s.read_size("stall_window", c.stall_window);
}

void parse_inverse(const json& j, InverseConfig& inv, bool& upper_given)
{
    const Section s(j, "inverse",
                    {"theta_true", "data_seed", "data_path", "likelihood", "corrosion_half_height", "camera", "chain"});
    s.read("theta_true", inv.theta_true);
    s.read("data_seed", inv.data_seed);
    s.read("data_path", inv.data_path);
    s.read("corrosion_half_height", inv.corrosion_half_height);
    if (s.has("likelihood")) {
        std::string name;
        s.read("likelihood", name);
        if (name == "interval") {
            inv.likelihood = LikelihoodKind::interval;
        }
        else if (name == "gaussian") {
            inv.likelihood = LikelihoodKind::gaussian;
        }
        else {
            throw ConfigError("inverse.likelihood: expected interval or gaussian, got '" + name + "'");
        }
    }
    if (s.has("camera")) {
        parse_camera(s.at("camera"), inv.camera);
    }
    if (s.has("chain")) {
        parse_chain(s.at("chain"), inv.chain);
        upper_given = s.at("chain").contains("upper");
    }
}

}  // namespace

RunConfig parse_config(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    }
    catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const Section top(j, "config", {"grid", "material", "solver", "time", "load", "bench", "inverse", "output"});
    RunConfig cfg;
    if (top.has("grid")) {
        parse_grid(top.at("grid"), cfg.grid);
    }
    if (top.has("material")) {
        parse_material(top.at("material"), cfg.material);
    }
    if (top.has("solver")) {
        parse_solver(top.at("solver"), cfg.solver);
    }
    if (top.has("time")) {
        parse_time(top.at("time"), cfg.time);
    }
    if (top.has("load")) {
        parse_load(top.at("load"), cfg.load);
    }
    if (top.has("bench")) {
        parse_bench(top.at("bench"), cfg.bench);
    }
    bool upper_given = false;
    if (top.has("inverse")) {
        parse_inverse(top.at("inverse"), cfg.inverse, upper_given);
    }
    if (!upper_given) {
        // Prior support defaults to the full plate thickness.
        cfg.inverse.chain.upper = cfg.grid.max[2] - cfg.grid.min[2];
    }
    if (top.has("output")) {
        const Section s(top.at("output"), "output", {"dir"});
        s.read("dir", cfg.output.dir);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    try {
        return parse_config(os.str());
    }
    catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void RunConfig::validate() const
{
    auto check = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw ConfigError(msg);
        }
    };
    try {
        (void)grid.spec();
        material.coefficients.validate();
        solver.pcg().validate();
        inverse.camera.validate();
        inverse.chain.validate();
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    check(solver.partitions == 1 || solver.partitions == 2, "solver.partitions must be 1 or 2");
    check(solver.split_fraction > 0.0 && solver.split_fraction < 1.0, "solver.split_fraction must lie in (0, 1)");
    check(time.dt > 0.0, "time.dt must be positive");
    check(time.theta >= 0.0 && time.theta <= 1.0, "time.theta must lie in [0, 1]");
    check(load.kind != LoadKind::gaussian_beam || load.sigma > 0.0, "load.sigma must be positive");
    for (std::size_t p : bench.partitions) {
        check(p == 1 || p == 2, "bench.partitions entries must be 1 or 2");
    }
    check(!bench.strategies.empty(), "bench.strategies must not be empty");
    check(bench.repeats >= 1, "bench.repeats must be at least 1");
    const double thickness = grid.max[2] - grid.min[2];
    check(inverse.chain.lower >= 0.0 && inverse.chain.upper <= thickness + 1e-12,
          "inverse.chain prior bounds must lie within [0, plate thickness]");
    check(inverse.theta_true >= inverse.chain.lower && inverse.theta_true <= inverse.chain.upper,
          "inverse.theta_true must lie within the prior bounds");
}

ProblemSetup RunConfig::problem_setup() const
{
    ProblemSetup s;
    s.strategy = solver.strategy;
    s.theta = time.theta;
    s.dt = time.dt;
    s.n_steps = time.n_steps;
    s.ambient = time.ambient;
    s.pcg = solver.pcg();
    return s;
}

ForwardConfig RunConfig::forward_config() const
{
    ForwardConfig f;
    f.plate_min = grid.min;
    f.plate_max = grid.max;
    f.divisions = grid.divisions;
    f.coefficients = material.coefficients;
    f.corrosion_half_height = inverse.corrosion_half_height;
    f.beam_power = load.power;
    f.beam_sigma = load.sigma;
    f.dt = time.dt;
    f.theta = time.theta;
    f.n_steps = time.n_steps;
    f.ambient = time.ambient;
    f.strategy = solver.strategy;
    f.pcg = solver.pcg();
    f.camera = inverse.camera;
    return f;
}

}  // namespace mfheat
