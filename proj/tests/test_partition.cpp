#include "doctest.h"
#include "support.hpp"

#include "mfheat/partition.hpp"

#include <numeric>

using namespace mfheat;

TEST_CASE("layer split")
{
    const auto g = testing::laminate_grid(30, 30, 10);
    SUBCASE("even split of eleven layers")
    {
        const auto plan = split_domain(g, 0.5);
        CHECK(plan.split == 6);
        CHECK_FALSE(plan.clamped);
        CHECK(plan.workers[0].owned_count() == 6);
        CHECK(plan.workers[1].owned_count() == 5);
        CHECK(plan.workers[0].stored_count() == 7);
        CHECK(plan.workers[1].stored_count() == 7);
        CHECK(plan.stored_vertices(0) == 7 * 31 * 31);
        CHECK(plan.send_layer(0) == 5);
        CHECK(plan.send_layer(1) == 6);
        CHECK(plan.halo_layer(0) == 6);
        CHECK(plan.halo_layer(1) == 5);
        CHECK(plan.describe().find("split=6") != std::string::npos);
    }
    SUBCASE("extreme fractions are clamped")
    {
        const auto lo = split_domain(g, 0.01);
        CHECK(lo.clamped);
        CHECK(lo.requested_split == 1);
        CHECK(lo.split == 2);
        const auto hi = split_domain(g, 0.99);
        CHECK(hi.clamped);
        CHECK(hi.split == 9);
        CHECK(hi.describe().find("clamped") != std::string::npos);
    }
    SUBCASE("invalid requests")
    {
        CHECK_THROWS_AS((void)split_domain(g, 0.0), PartitionError);
        CHECK_THROWS_AS((void)split_domain(g, 1.0), PartitionError);
        CHECK_THROWS_AS((void)split_domain(testing::laminate_grid(4, 4, 2), 0.5), PartitionError);
    }
    SUBCASE("ownership and storage cover the stencil")
    {
        for (double m = 0.05; m < 1.0; m += 0.05) {
            const auto plan = split_domain(g, m);
            for (std::size_t layer = 0; layer < plan.layers(); ++layer) {
                const int owners = int(plan.workers[0].owns(layer)) + int(plan.workers[1].owns(layer));
                REQUIRE(owners == 1);
            }
            for (const auto& wl : plan.workers) {
                REQUIRE(wl.owned_count() >= 2);
                for (std::size_t layer = wl.owned_begin; layer < wl.owned_end; ++layer) {
                    REQUIRE(wl.stores(layer));
                    if (layer > 0) {
                        REQUIRE(wl.stores(layer - 1));
                    }
                    if (layer + 1 < plan.layers()) {
                        REQUIRE(wl.stores(layer + 1));
                    }
                }
            }
        }
    }
    SUBCASE("local grids match the global positions")
    {
        const auto plan = split_domain(g, 0.4);
        for (std::size_t w = 0; w < 2; ++w) {
            const auto local = plan.local_spec(w);
            REQUIRE(local.vertex_count() == plan.stored_vertices(w));
            for (std::size_t v = 0; v < local.vertex_count(); v += 97) {
                const auto gv = v + plan.workers[w].stored_begin * plan.layer_size();
                REQUIRE(vertex_position(local, v) == vertex_position(g, gv));
            }
        }
    }
}

TEST_CASE("scatter, gather and exchange")
{
    const auto g = testing::laminate_grid(4, 3, 6);
    const auto plan = split_domain(g, 0.5);
    std::vector<double> global(g.vertex_count());
    std::iota(global.begin(), global.end(), 0.0);
    auto local = scatter(plan, global);
    std::vector<double> back(global.size(), -1.0);
    gather(plan, local, back);
    CHECK(back == global);

    const std::size_t ls = plan.layer_size();
    for (std::size_t w = 0; w < 2; ++w) {
        const std::size_t off = (plan.halo_layer(w) - plan.workers[w].stored_begin) * ls;
        std::fill(local[w].begin() + static_cast<std::ptrdiff_t>(off),
                  local[w].begin() + static_cast<std::ptrdiff_t>(off + ls), -7.0);
    }
    TransferAudit audit;
    exchange_halos(plan, {std::span<double>(local[0]), std::span<double>(local[1])}, &audit);
    for (std::size_t w = 0; w < 2; ++w) {
        const std::size_t first = plan.workers[w].stored_begin * ls;
        for (std::size_t i = 0; i < local[w].size(); ++i) {
            REQUIRE(local[w][i] == global[first + i]);
        }
        CHECK(audit.layers_sent[w] == 1);
        CHECK(audit.bytes_sent[w] == ls * sizeof(double));
    }
    CHECK_THROWS_AS((void)scatter(plan, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("merged dot product")
{
    const auto g = testing::laminate_grid(7, 5, 9);
    const auto x = testing::random_vector(g.vertex_count(), 21);
    const auto y = testing::random_vector(g.vertex_count(), 22);
    const double ref = dot(x, y);
    const std::vector<double> ones(g.vertex_count(), 1.0);
    for (double m : {0.2, 0.5, 0.8}) {
        const auto plan = split_domain(g, m);
        CHECK(merged_dot(plan, scatter(plan, x), scatter(plan, y)) == doctest::Approx(ref).epsilon(1e-13));
        CHECK(merged_dot(plan, scatter(plan, ones), scatter(plan, ones)) ==
              static_cast<double>(g.vertex_count()));
    }
}

TEST_CASE("partitioned PCG reproduces the monolithic solve")
{
    const GridSpec g({0, 0, 0}, {6, 6, 6}, {6, 6, 6});
    const MaterialEvaluator eval({SmoothedLayer{3.0, 2.0}, {}}, g);
    const OperatorParams params{Strategy::coalesced, Mode::A, 0.5, 0.1, false};
    const SystemOperator<double> op(g, eval, params);
    const auto b = testing::random_vector(op.size(), 23);
    PcgConfig cfg;
    cfg.tol = 1e-10;
    std::vector<double> x_ref(b.size(), 0.0);
    std::vector<std::vector<double>> ref_iterates;
    PcgMonitor<double> mon;
    mon.on_iteration = [&](std::size_t, std::span<const double> x, std::span<const double>, std::span<const double>,
                           double) { ref_iterates.emplace_back(x.begin(), x.end()); };
    const auto ref = pcg<double>(op, b, x_ref, op.jacobi_diagonal(), cfg, &mon);

    for (double m : {0.3, 0.5, 0.7}) {
        CAPTURE(m);
        const PartitionedSystem sys(split_domain(g, m), eval, params);
        const auto& plan = sys.plan();
        std::array<std::vector<std::vector<double>>, 2> local_iterates;
        PartitionMonitor pm;
        pm.on_iteration = [&](std::size_t w, std::size_t, std::span<const double> x, std::span<const double>,
                              std::span<const double>) { local_iterates[w].emplace_back(x.begin(), x.end()); };
        std::vector<double> x(b.size(), 0.0);
        const auto res = pcg_partitioned(sys, b, x, cfg, &pm);
        CHECK(res.pcg.iterations == ref.iterations);
        CHECK(testing::linf_diff(x, x_ref) <= 1e-10 * testing::linf(x_ref));

        REQUIRE(local_iterates[0].size() == ref_iterates.size());
        REQUIRE(local_iterates[1].size() == ref_iterates.size());
        for (std::size_t i = 0; i < ref_iterates.size(); ++i) {
            std::vector<double> merged(b.size());
            gather(plan, {local_iterates[0][i], local_iterates[1][i]}, merged);
            REQUIRE(testing::linf_diff(merged, ref_iterates[i]) <= 1e-12 * testing::linf(ref_iterates[i]));
        }

        const auto& a = res.audit;
        CHECK(a.iterations == ref.iterations);
        for (std::size_t w = 0; w < 2; ++w) {
            CHECK(a.setup_layers_sent[w] == 1);
            CHECK(a.setup_scalars_sent[w] == 2);
            CHECK(a.layers_sent[w] == ref.iterations);
            CHECK(a.scalars_sent[w] == 2 * ref.iterations);
            CHECK(a.bytes_sent[w] == (ref.iterations + 1) * plan.layer_size() * sizeof(double));
        }
    }
}

TEST_CASE("partitioned solve propagates failures without hanging")
{
    const GridSpec g({0, 0, 0}, {4, 4, 4}, {4, 4, 4});
    const MaterialEvaluator eval({Functional{}, {}}, g);
    const PartitionedSystem sys(split_domain(g, 0.5), eval, {Strategy::coalesced, Mode::A, 0.5, 1.0, false});
    const auto b = testing::random_vector(g.vertex_count(), 24);
    std::vector<double> x(b.size(), 0.0);
    PcgConfig cfg;
    cfg.tol = 1e-12;
    cfg.i_max = 2;
    CHECK_THROWS_AS((void)pcg_partitioned(sys, b, x, cfg), NonConvergenceError);

    // A throwing monitor on one worker must release the other.
    PartitionMonitor pm;
    pm.on_iteration = [](std::size_t w, std::size_t i, std::span<const double>, std::span<const double>,
                         std::span<const double>) {
        if (w == 1 && i == 2) {
            throw std::runtime_error("injected");
        }
    };
    cfg.i_max = 0;
    std::fill(x.begin(), x.end(), 0.0);
    CHECK_THROWS_AS((void)pcg_partitioned(sys, b, x, cfg, &pm), std::runtime_error);
}

TEST_CASE("partitioned time stepping matches the monolithic run")
{
    const auto g = testing::laminate_grid(8, 8, 8);
    auto p = testing::laminate_problem(g, Strategy::coalesced, 5, 0.01, 1e-10);
    const auto mono = simulate(p);
    TransferAudit audit;
    const auto part = simulate_partitioned(p, 0.5, {}, &audit);
    CHECK(testing::rel_linf(part.final_field, mono.final_field) <= 1e-9);
    REQUIRE(part.steps.size() == mono.steps.size());
    std::size_t total = 0;
    for (std::size_t s = 0; s < mono.steps.size(); ++s) {
        CHECK(part.steps[s].iterations == mono.steps[s].iterations);
        total += part.steps[s].iterations;
    }
    CHECK(audit.iterations == total);
    CHECK(audit.layers_sent[0] == total);
}
