#include "doctest.h"
#include "support.hpp"

#include "mfheat/baseline.hpp"
#include "mfheat/operator.hpp"

#include <algorithm>
#include <numeric>

using namespace mfheat;

namespace {

constexpr std::array<Strategy, 3> kStrategies{Strategy::flexible, Strategy::singlepass, Strategy::coalesced};

OperatorParams params_for(Strategy s, Mode m, double theta = 0.5, double dt = 0.01)
{
    return {s, m, theta, dt, false};
}

std::vector<double> product(const SystemOperator<double>& op, std::span<const double> x)
{
    std::vector<double> y(x.size());
    op.apply(x, y);
    return y;
}

}  // namespace

TEST_CASE("strategies match the CSR oracle")
{
    const std::vector<GridSpec> grids{
        testing::unit_grid(2, 2, 2),
        testing::unit_grid(3, 3, 2),
        GridSpec({-1, 0, 0}, {2, 0.5, 1.5}, {5, 3, 4}),
        // Several coalesced groups and singlepass blocks per row.
        GridSpec({0, 0, 0}, {7, 0.3, 0.2}, {70, 3, 2}),
    };
    std::uint64_t seed = 1;
    for (const auto& g : grids) {
        for (const auto& field : testing::all_fields(g)) {
            const MaterialEvaluator eval(field, g);
            for (const Mode mode : {Mode::A, Mode::L}) {
                const auto oracle = assemble_csr(g, eval, params_for(Strategy::flexible, mode));
                for (const Strategy s : kStrategies) {
                    const SystemOperator<double> op(g, eval, params_for(s, mode));
                    for (int rep = 0; rep < 3; ++rep) {
                        const auto x = testing::random_vector(g.vertex_count(), seed++);
                        std::vector<double> ref(x.size());
                        oracle.multiply(x, ref);
                        const auto y = product(op, x);
                        INFO("strategy " << to_string(s) << " field " << kind_name(field.kind));
                        REQUIRE(testing::rel_linf(y, ref) <= 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("CSR oracle agrees with the dense element loop")
{
    const auto g = testing::unit_grid(3, 2, 2);
    const MaterialEvaluator eval({Functional{}, {}}, g);
    const auto p = params_for(Strategy::coalesced, Mode::A);
    const auto csr = assemble_csr(g, eval, p);
    const auto dense = assemble_dense(g, eval, p);
    const auto from_csr = to_dense(csr);
    for (std::size_t i = 0; i < dense.a.size(); ++i) {
        REQUIRE(from_csr.a[i] == doctest::Approx(dense.a[i]).epsilon(1e-14));
    }
    CHECK(csr.nnz() <= g.vertex_count() * 15);
}

TEST_CASE("single cube pattern follows the Kuhn adjacency")
{
    // Two corners share a tetrahedron iff one's offset bits contain the other's.
    const auto g = testing::unit_grid(1, 1, 1);
    const MaterialEvaluator eval({TwoLayer{0.5}, {}}, g);
    const auto csr = assemble_csr(g, eval, params_for(Strategy::flexible, Mode::A));
    CHECK(csr.n == 8);
    std::size_t expected = 0;
    for (std::size_t a = 0; a < 8; ++a) {
        for (std::size_t b = 0; b < 8; ++b) {
            const bool linked = (a & b) == a || (a & b) == b;
            expected += linked ? 1 : 0;
            CHECK((csr.at(a, b) != 0.0) == linked);
        }
    }
    CHECK(csr.nnz() == expected);
    CHECK(expected == 46);
}

TEST_CASE("zero input gives zero output")
{
    const GridSpec g({0, 0, 0}, {1, 1, 1}, {3, 3, 2});
    const MaterialEvaluator eval({TwoLayer{0.5}, {}}, g);
    for (const Strategy s : kStrategies) {
        const SystemOperator<double> op(g, eval, params_for(s, Mode::A));
        std::vector<double> x(g.vertex_count(), 0.0);
        std::vector<double> y(g.vertex_count(), 42.0);
        op.apply(x, y);
        CHECK(testing::linf(y) == 0.0);
    }
}

TEST_CASE("constants are annihilated by the stiffness part")
{
    const auto g = testing::unit_grid(3, 3, 3);
    for (const auto& field : testing::all_fields(g)) {
        const MaterialEvaluator eval(field, g);
        for (const Strategy s : kStrategies) {
            const SystemOperator<double> a(g, eval, params_for(s, Mode::A));
            const SystemOperator<double> l(g, eval, params_for(s, Mode::L));
            const SystemOperator<double> m(g, eval, params_for(s, Mode::A, 0.5, 0.0));
            const std::vector<double> ones(g.vertex_count(), 1.0);
            const auto ya = product(a, ones);
            const auto yl = product(l, ones);
            const auto ym = product(m, ones);
            CHECK(testing::rel_linf(ya, ym) <= 1e-9);
            CHECK(testing::rel_linf(yl, ym) <= 1e-9);
            // 1^T M 1 is the total heat capacity.
            const double total = std::accumulate(ym.begin(), ym.end(), 0.0);
            double expect = 0.0;
            for (std::size_t e = 0; e < g.element_count(); ++e) {
                expect += a.coefficients(e).rhoC / 6.0 / 27.0;
            }
            CHECK(total == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("implied matrix is symmetric")
{
    const GridSpec g({0, 0, 0}, {1, 2, 1}, {4, 3, 3});
    const MaterialEvaluator eval({Functional{}, {}}, g);
    for (const Strategy s : kStrategies) {
        for (const Mode mode : {Mode::A, Mode::L}) {
            const SystemOperator<double> op(g, eval, params_for(s, mode));
            const auto x = testing::random_vector(g.vertex_count(), 11);
            const auto y = testing::random_vector(g.vertex_count(), 12);
            const auto ax = product(op, x);
            const auto ay = product(op, y);
            const double yax = std::inner_product(y.begin(), y.end(), ax.begin(), 0.0);
            const double xay = std::inner_product(x.begin(), x.end(), ay.begin(), 0.0);
            CHECK(yax == doctest::Approx(xay).epsilon(1e-10));
        }
    }
}

TEST_CASE("repeated application is bitwise identical")
{
    const GridSpec g({0, 0, 0}, {1, 1, 1}, {40, 5, 4});
    const MaterialEvaluator eval({Corrosion{0.4, 0.0}, {}}, g);
    const auto x = testing::random_vector(g.vertex_count(), 5);
    for (const Strategy s : kStrategies) {
        const SystemOperator<double> op(g, eval, params_for(s, Mode::A));
        const auto y1 = product(op, x);
        const auto y2 = product(op, x);
        CHECK(std::equal(y1.begin(), y1.end(), y2.begin()));
    }
}

TEST_CASE("fused pass computes b + c A x")
{
    const GridSpec g({0, 0, 0}, {1, 1, 1}, {3, 3, 2});
    const MaterialEvaluator eval({SmoothedLayer{0.5, 0.3}, {}}, g);
    const auto x = testing::random_vector(g.vertex_count(), 21);
    const auto b = testing::random_vector(g.vertex_count(), 22);
    for (const Strategy s : kStrategies) {
        const SystemOperator<double> op(g, eval, params_for(s, Mode::A));
        const auto ax = product(op, x);
        std::vector<double> y(x.size());
        op.apply_fused(x, -1.0, b, y);
        for (std::size_t i = 0; i < y.size(); ++i) {
            REQUIRE(y[i] == doctest::Approx(b[i] - ax[i]).epsilon(1e-13));
        }
        // Output may alias b.
        std::vector<double> inplace = b;
        op.apply_fused(x, 2.0, inplace, inplace);
        for (std::size_t i = 0; i < y.size(); ++i) {
            REQUIRE(inplace[i] == doctest::Approx(b[i] + 2.0 * ax[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("Jacobi diagonal")
{
    const GridSpec g({0, 0, 0}, {3, 3, 3}, {3, 3, 3});
    SUBCASE("matches the assembled diagonal for every field")
    {
        for (const auto& field : testing::all_fields(g)) {
            const MaterialEvaluator eval(field, g);
            const auto ref = assemble_csr(g, eval, params_for(Strategy::flexible, Mode::A)).diagonal();
            for (const Strategy s : kStrategies) {
                const SystemOperator<double> op(g, eval, params_for(s, Mode::A));
                const auto d = op.jacobi_diagonal();
                CHECK(testing::rel_linf(d, ref) <= 1e-12);
                CHECK(*std::min_element(d.begin(), d.end()) > 0.0);
            }
        }
    }
    SUBCASE("homogeneous interior entries coincide")
    {
        MaterialCoefficients same;
        same.rhoC = {2.0, 2.0};
        same.k = {3.0, 3.0};
        const GridSpec big({0, 0, 0}, {4, 4, 4}, {4, 4, 4});
        const MaterialEvaluator eval({TwoLayer{2.0}, same}, big);
        const SystemOperator<double> op(big, eval, params_for(Strategy::coalesced, Mode::A));
        const auto d = op.jacobi_diagonal();
        const double ref = d[big.vertex_index(1, 1, 1)];
        for (std::size_t k = 1; k < 4; ++k) {
            for (std::size_t j = 1; j < 4; ++j) {
                for (std::size_t i = 1; i < 4; ++i) {
                    CHECK(d[big.vertex_index(i, j, k)] == doctest::Approx(ref).epsilon(1e-14));
                }
            }
        }
    }
    SUBCASE("two-layer diagonal jumps across the interface")
    {
        const GridSpec lam = testing::laminate_grid(4, 4, 10);
        const MaterialEvaluator eval({TwoLayer{5.0}, {}}, lam);
        const SystemOperator<double> op(lam, eval, params_for(Strategy::singlepass, Mode::A));
        const auto d = op.jacobi_diagonal();
        CHECK(d[lam.vertex_index(2, 2, 3)] > 1.5 * d[lam.vertex_index(2, 2, 7)]);
    }
}

TEST_CASE("write-set audit: one writer per slot")
{
    for (const GridSpec& g : {testing::unit_grid(3, 3, 2), GridSpec({0, 0, 0}, {1, 1, 1}, {65, 2, 3})}) {
        const MaterialEvaluator eval({TwoLayer{0.5}, {}}, g);
        SUBCASE("flexible")
        {
            const SystemOperator<double> op(g, eval, params_for(Strategy::flexible, Mode::A));
            const auto counts = op.audit_writes();
            CHECK(counts.size() == 24 * g.vertex_count());
            CHECK(*std::max_element(counts.begin(), counts.end()) == 1);
            CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 4 * g.element_count());
        }
        SUBCASE("coalesced")
        {
            const SystemOperator<double> op(g, eval, params_for(Strategy::coalesced, Mode::A));
            const auto counts = op.audit_writes();
            CHECK(counts.size() == 4 * g.vertex_count());
            CHECK(*std::max_element(counts.begin(), counts.end()) == 1);
            // Every slot whose quadrant has a cube below/behind it is written.
            for (std::size_t v = 0; v < g.vertex_count(); ++v) {
                const auto [i, j, k] = g.vertex_ijk(v);
                (void)i;
                for (std::size_t s = 0; s < 4; ++s) {
                    const std::size_t dy = s & 1U;
                    const std::size_t dz = s >> 1U;
                    if (j >= dy && k >= dz && k - dz < g.divisions()[2]) {
                        REQUIRE(counts[4 * v + s] == 1);
                    }
                }
            }
        }
        SUBCASE("singlepass")
        {
            const SystemOperator<double> op(g, eval, params_for(Strategy::singlepass, Mode::A));
            const auto counts = op.audit_writes();
            CHECK(std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 1; }));
        }
    }
}

TEST_CASE("work-group plans")
{
    const auto g = testing::laminate_grid(30, 30, 10);
    const MaterialEvaluator eval({TwoLayer{5.0}, {}}, g);
    const SystemOperator<double> f(g, eval, params_for(Strategy::flexible, Mode::A));
    const SystemOperator<double> s(g, eval, params_for(Strategy::singlepass, Mode::A));
    const SystemOperator<double> c(g, eval, params_for(Strategy::coalesced, Mode::A));
    CHECK(f.plan().group_size == 24);
    CHECK(f.plan().split_slots == 24);
    CHECK(f.plan().group_count == g.cube_count());
    CHECK(s.plan().group_size == 64);
    CHECK(s.plan().split_slots == 0);
    CHECK(c.plan().group_size == 186);
    CHECK(c.plan().block_len == 31);
    CHECK(c.plan().split_slots == 4);
    CHECK(c.plan().group_count == (31 * 31 * 10 + 29) / 30);
}

TEST_CASE("single precision tracks double precision")
{
    const GridSpec g({0, 0, 0}, {1, 1, 1}, {6, 5, 4});
    const MaterialEvaluator eval({Functional{}, {}}, g);
    const auto x = testing::random_vector(g.vertex_count(), 77);
    std::vector<float> xf(x.begin(), x.end());
    for (const Strategy s : kStrategies) {
        const SystemOperator<double> opd(g, eval, params_for(s, Mode::A));
        const SystemOperator<float> opf(g, eval, params_for(s, Mode::A));
        const auto yd = product(opd, x);
        std::vector<float> yf(xf.size());
        opf.apply(xf, yf);
        std::vector<double> yfd(yf.begin(), yf.end());
        CHECK(testing::rel_linf(yfd, yd) <= 1e-5);
    }
}

TEST_CASE("operator argument validation")
{
    const auto g = testing::unit_grid(2, 2, 2);
    const MaterialEvaluator eval({TwoLayer{0.5}, {}}, g);
    CHECK_THROWS_AS(SystemOperator<double>(g, eval, params_for(Strategy::coalesced, Mode::A, 1.5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(SystemOperator<double>(g, eval, params_for(Strategy::coalesced, Mode::A, 0.5, -1.0)),
                    std::invalid_argument);
    const SystemOperator<double> op(g, eval, params_for(Strategy::coalesced, Mode::A));
    std::vector<double> x(5), y(27);
    CHECK_THROWS_AS(op.apply(x, y), std::invalid_argument);
    CHECK(parse_strategy("singlepass") == Strategy::singlepass);
    CHECK(to_string(Strategy::flexible) == "flexible");
    CHECK_THROWS_AS((void)parse_strategy("gpu"), std::invalid_argument);
}

TEST_CASE("stiffness sign hook only affects the matrix-free kernels")
{
    const auto g = testing::unit_grid(3, 3, 3);
    const MaterialEvaluator eval({TwoLayer{0.5}, {}}, g);
    auto p = params_for(Strategy::coalesced, Mode::A);
    p.flip_stiffness_sign = true;
    const SystemOperator<double> op(g, eval, p);
    const auto csr = assemble_csr(op);
    const auto x = testing::random_vector(g.vertex_count(), 3);
    std::vector<double> ref(x.size());
    csr.multiply(x, ref);
    CHECK(testing::rel_linf(product(op, x), ref) > 1e-3);
}
