#include "doctest.h"
#include "support.hpp"

#include "mfheat/bench.hpp"
#include "mfheat/config.hpp"
#include "mfheat/driver.hpp"
#include "mfheat/io.hpp"
#include "mfheat/verify.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace mfheat;

namespace {

std::string temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "mfheat_test_cli";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("config parsing is strict")
{
    const auto cfg = parse_config(R"({"grid": {"divisions": [4, 5, 6]}, "solver": {"strategy": "flexible"}})");
    CHECK(cfg.grid.divisions == Index3{4, 5, 6});
    CHECK(cfg.solver.strategy == Strategy::flexible);
    CHECK(cfg.time.n_steps == RunConfig{}.time.n_steps);

    CHECK_THROWS_AS((void)parse_config(R"({"grid": {"divisons": [4, 5, 6]}})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config(R"({"extra": 1})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config(R"({"solver": {"strategy": "fastest"}})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config(R"({"solver": {"partitions": 3}})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config(R"({"time": {"dt": -1}})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config(R"({"bench": {"repeats": 0}})"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS((void)load_config(temp_path("missing.json")), std::exception);
}

TEST_CASE("shipped configs load")
{
    const auto lam = load_config(MFHEAT_SOURCE_DIR "/configs/laminate.json");
    CHECK(lam.grid.divisions == Index3{30, 30, 10});
    const auto cor = load_config(MFHEAT_SOURCE_DIR "/configs/corrosion.json");
    CHECK(cor.inverse.chain.n_keep == 500);
    CHECK(cor.forward_config().thickness() == doctest::Approx(12.7));
}

TEST_CASE("VTK round trip is bitwise")
{
    const GridSpec spec({-1, 0, 2}, {1, 3, 4}, {2, 2, 2});
    const auto field = testing::random_vector(spec.vertex_count(), 3, -1e3, 1e3);
    const auto path = temp_path("field.vtk");
    export_vtk(field, spec, path);
    {
        std::ifstream in(path);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(text.find("POINT_DATA 27") != std::string::npos);
    }
    const auto back = read_vtk(path);
    CHECK(back.dimensions == Index3{3, 3, 3});
    CHECK(back.origin == spec.bounds_min());
    CHECK(back.spacing == spec.spacing());
    REQUIRE(back.values.size() == field.size());
    CHECK(std::memcmp(back.values.data(), field.data(), field.size() * sizeof(double)) == 0);

    CHECK_THROWS_AS(export_vtk(std::vector<double>(5, 0.0), spec, path), std::invalid_argument);
    CHECK_THROWS_AS((void)read_vtk(temp_path("nope.vtk")), IoError);
}

TEST_CASE("image CSV round trip")
{
    Image img{3, 2, -1.5, 0.25, 0.5, {0.1, 0.2, 0.3, -4.4, 5.5, 6.0}};
    const auto path = temp_path("img.csv");
    write_image_csv(img, path);
    const auto back = read_image_csv(path);
    CHECK(back.nx == 3);
    CHECK(back.ny == 2);
    CHECK(back.x0 == img.x0);
    CHECK(back.y0 == img.y0);
    CHECK(back.pitch == img.pitch);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("simulate runs are deterministic and precision-aware")
{
    RunConfig cfg;
    cfg.grid.divisions = {6, 6, 4};
    cfg.time.n_steps = 5;
    const auto a = run_transient(cfg);
    const auto b = run_transient(cfg);
    CHECK(a.final_field == b.final_field);
    CHECK(a.stats.total_iterations > 0);

    cfg.solver.partitions = 2;
    const auto p = run_transient(cfg);
    CHECK(testing::rel_linf(p.final_field, a.final_field) <= 1e-8);

    cfg.solver.precision = Precision::single;
    CHECK_THROWS_AS((void)run_transient(cfg), ConfigError);
    cfg.solver.partitions = 1;
    const auto s = run_transient(cfg);
    CHECK(testing::rel_linf(s.final_field, a.final_field) <= 1e-3);
}

TEST_CASE("bench table shape")
{
    RunConfig cfg;
    cfg.bench.sizes = {{4, 4, 4}, {6, 6, 4}, {8, 8, 4}};
    cfg.bench.n_steps = 2;
    const auto records = run_bench(cfg);
    REQUIRE(records.size() == 9);
    for (const auto& r : records) {
        CHECK_FALSE(r.skipped);
        CHECK(r.stats.seconds_per_iteration() > 0.0);
    }
    const auto path = temp_path("bench.csv");
    write_bench_csv(records, path);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    std::getline(in, line);
    CHECK(line.rfind("dof,", 0) == 0);
    while (std::getline(in, line)) {
        ++lines;
    }
    CHECK(lines == 9);

    cfg.bench.sizes.clear();
    CHECK_THROWS_AS((void)run_bench(cfg), ConfigError);
}

TEST_CASE("verify passes and catches an injected fault")
{
    const auto clean = verify();
    CHECK(clean.passed());
    CHECK(clean.suites.size() == suite_names().size());

    const auto faulty = verify({"flip_k_sign", {"oracle-equivalence"}});
    REQUIRE(faulty.suites.size() == 1);
    CHECK_FALSE(faulty.passed());
    CHECK(faulty.suites[0].module == "operator");
    CHECK(faulty.format().find("FAIL oracle-equivalence [operator]") != std::string::npos);

    CHECK_THROWS_AS((void)verify({"bogus", {}}), std::invalid_argument);
    CHECK_THROWS_AS((void)verify({"", {"no-such-suite"}}), std::invalid_argument);
}
