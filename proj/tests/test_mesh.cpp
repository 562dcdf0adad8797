#include "doctest.h"
#include "support.hpp"

#include "mfheat/mesh.hpp"

#include <map>
#include <set>

using namespace mfheat;

namespace {

double signed_volume(const std::array<Vec3, 4>& p)
{
    Vec3 a{}, b{}, c{};
    for (std::size_t d = 0; d < 3; ++d) {
        a[d] = p[1][d] - p[0][d];
        b[d] = p[2][d] - p[0][d];
        c[d] = p[3][d] - p[0][d];
    }
    return (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
            a[2] * (b[0] * c[1] - b[1] * c[0])) /
           6.0;
}

}  // namespace

TEST_CASE("grid counts and spacing")
{
    const GridSpec g({0, 0, 0}, {2, 3, 4}, {2, 3, 8});
    CHECK(g.vertex_count() == 3 * 4 * 9);
    CHECK(g.element_count() == 6 * 2 * 3 * 8);
    CHECK(g.spacing()[0] == doctest::Approx(1.0));
    CHECK(g.spacing()[2] == doctest::Approx(0.5));
    CHECK(g.vertex_index(1, 2, 3) == 1 + 3 * (2 + 4 * 3));
}

TEST_CASE("invalid grids are rejected")
{
    CHECK_THROWS_AS(GridSpec({0, 0, 0}, {1, 0, 1}, {1, 1, 1}), GridError);
    CHECK_THROWS_AS(GridSpec({0, 0, 0}, {1, 1, 1}, {1, 0, 1}), GridError);
    CHECK_THROWS_AS(GridSpec({0, 0, 2}, {1, 1, 1}, {1, 1, 1}), GridError);
}

TEST_CASE("vertex_position examples")
{
    const auto g = testing::unit_grid(2, 2, 2);
    const auto p0 = vertex_position(g, 0);
    CHECK(p0 == Vec3{0, 0, 0});
    const auto p26 = vertex_position(g, 26);
    CHECK(p26[0] == doctest::Approx(1.0));
    CHECK(p26[1] == doctest::Approx(1.0));
    CHECK(p26[2] == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)vertex_position(g, 27), IndexError);

    // Decode oracle: enumerate (i,j,k) in storage order and compare.
    const auto lam = testing::laminate_grid(30, 30, 10);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < 11; ++k) {
        for (std::size_t j = 0; j < 31; ++j) {
            for (std::size_t i = 0; i < 31; ++i, ++idx) {
                const auto p = vertex_position(lam, idx);
                REQUIRE(p[0] == doctest::Approx(-15.0 + static_cast<double>(i)));
                REQUIRE(p[1] == doctest::Approx(-15.0 + static_cast<double>(j)));
                REQUIRE(p[2] == doctest::Approx(static_cast<double>(k)));
            }
        }
    }
    const auto p31 = vertex_position(lam, 31);
    CHECK(p31[0] == doctest::Approx(-15.0));
    CHECK(p31[1] == doctest::Approx(-14.0));
    CHECK(p31[2] == doctest::Approx(0.0));
}

TEST_CASE("index round trip")
{
    const GridSpec g({-1, 0, 2}, {1, 5, 3}, {4, 5, 3});
    for (std::size_t k = 0; k < g.points(2); ++k) {
        for (std::size_t j = 0; j < g.points(1); ++j) {
            for (std::size_t i = 0; i < g.points(0); ++i) {
                const auto ijk = g.vertex_ijk(g.vertex_index(i, j, k));
                REQUIRE(ijk == Index3{i, j, k});
            }
        }
    }
    for (std::size_t q = 0; q < g.cube_count(); ++q) {
        const auto [i, j, k] = g.cube_ijk(q);
        REQUIRE(g.cube_index(i, j, k) == q);
    }
}

TEST_CASE("element_vertices on a single cube")
{
    const auto g = testing::unit_grid(1, 1, 1);
    std::set<std::size_t> seen;
    for (std::size_t e = 0; e < 6; ++e) {
        const auto v = element_vertices(g, e);
        for (auto x : v) {
            CHECK(x < 8);
            seen.insert(x);
        }
        CHECK(v[0] == 0);
        CHECK(v[3] == 7);
    }
    CHECK(seen.size() == 8);
    CHECK_THROWS_AS((void)element_vertices(g, 6), IndexError);
}

TEST_CASE("element 6 of a two-cube row is shifted by one in x")
{
    const GridSpec g({0, 0, 0}, {2, 1, 1}, {2, 1, 1});
    for (std::size_t t = 0; t < 6; ++t) {
        const auto a = element_vertices(g, t);
        const auto b = element_vertices(g, 6 + t);
        for (std::size_t v = 0; v < 4; ++v) {
            CHECK(b[v] == a[v] + 1);
        }
    }
}

TEST_CASE("Kuhn tetrahedra tile any box cell")
{
    for (const Vec3 h : {Vec3{1, 1, 1}, Vec3{1, 2, 1}, Vec3{0.3, 1.7, 2.9}}) {
        const GridSpec g({0, 0, 0}, h, {1, 1, 1});
        double sum = 0.0;
        for (std::size_t t = 0; t < 6; ++t) {
            const double vol = signed_volume(element_positions(g, t));
            CHECK(std::abs(vol) > 0.0);
            CHECK((vol > 0.0 ? 1 : -1) == TetTable::orientation(t));
            sum += std::abs(vol);
        }
        CHECK(sum == doctest::Approx(h[0] * h[1] * h[2]).epsilon(1e-14));
    }
}

TEST_CASE("tetrahedra follow monotone lattice paths")
{
    for (std::size_t t = 0; t < 6; ++t) {
        const auto& c = TetTable::corner_of[t];
        const auto& ax = TetTable::axis_order[t];
        CHECK(c[0] == 0);
        CHECK(c[1] == (1U << ax[0]));
        CHECK(c[2] == ((1U << ax[0]) | (1U << ax[1])));
        CHECK(c[3] == 7);
    }
}

TEST_CASE("mesh is conforming and interior vertices touch 24 tetrahedra")
{
    const GridSpec g({0, 0, 0}, {2, 3, 2}, {2, 3, 2});
    std::map<std::array<std::size_t, 3>, int> faces;
    std::vector<int> touches(g.vertex_count(), 0);
    for (std::size_t e = 0; e < g.element_count(); ++e) {
        const auto v = element_vertices(g, e);
        for (auto x : v) {
            ++touches[x];
        }
        for (std::size_t skip = 0; skip < 4; ++skip) {
            std::array<std::size_t, 3> f{};
            std::size_t n = 0;
            for (std::size_t m = 0; m < 4; ++m) {
                if (m != skip) {
                    f[n++] = v[m];
                }
            }
            std::sort(f.begin(), f.end());
            ++faces[f];
        }
    }
    std::size_t boundary = 0;
    for (const auto& [f, count] : faces) {
        REQUIRE(count <= 2);
        if (count == 1) {
            ++boundary;
            // A boundary face lies in one of the six box planes.
            bool on_plane = false;
            for (std::size_t a = 0; a < 3; ++a) {
                for (std::size_t side : {std::size_t{0}, g.divisions()[a]}) {
                    bool all = true;
                    for (auto x : f) {
                        all = all && g.vertex_ijk(x)[a] == side;
                    }
                    on_plane = on_plane || all;
                }
            }
            CHECK(on_plane);
        }
    }
    CHECK(boundary == 2 * 2 * (2 * 3 + 3 * 2 + 2 * 2));
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto [i, j, k] = g.vertex_ijk(v);
        const bool interior = i > 0 && j > 0 && k > 0 && i < 2 && j < 3 && k < 2;
        if (interior) {
            CHECK(touches[v] == 24);
        }
        else {
            CHECK(touches[v] < 24);
            CHECK(touches[v] >= 1);
        }
    }
}

TEST_CASE("corner incidence table")
{
    const auto& inc = corner_incidence();
    CHECK(inc.offset[8] == 24);
    for (std::size_t c = 0; c < 8; ++c) {
        const int count = inc.offset[c + 1] - inc.offset[c];
        CHECK(count == ((c == 0 || c == 7) ? 6 : 2));
        for (std::size_t n = inc.offset[c]; n < inc.offset[c + 1]; ++n) {
            CHECK(TetTable::corner_of[inc.entries[n].tet][inc.entries[n].local] == c);
        }
    }
}

TEST_CASE("padded index space")
{
    SUBCASE("3x3 layer has 7 padding cubes")
    {
        const GridSpec g({0, 0, 0}, {3, 3, 1}, {3, 3, 1});
        const auto p = padded_spec(g);
        CHECK(p.cube_count == 16);
        CHECK(p.padding_cube_count() == 7);
        const auto mask = p.padding_mask();
        for (std::size_t q = 0; q < p.cube_count; ++q) {
            const auto [i, j, k] = g.vertex_ijk(q);
            (void)k;
            CHECK(mask[q] == (i == 3 || j == 3));
        }
    }
    SUBCASE("laminate padding fraction")
    {
        const auto p = padded_spec(testing::laminate_grid(30, 30, 10));
        const auto mask = p.padding_mask();
        const auto padding = static_cast<double>(std::count(mask.begin(), mask.end(), true));
        CHECK(padding / static_cast<double>(p.cube_count) == doctest::Approx(61.0 / 961.0));
    }
    SUBCASE("physical cubes map to their own corners")
    {
        const GridSpec g({0, 0, 0}, {1, 1, 1}, {2, 3, 2});
        const auto p = padded_spec(g);
        for (std::size_t q = 0; q < p.cube_count; ++q) {
            if (p.is_padding(q)) {
                continue;
            }
            const auto [i, j, k] = g.vertex_ijk(q);
            for (std::size_t c = 0; c < 8; ++c) {
                const auto off = TetTable::corner_offset(c);
                CHECK(p.corner_vertex(q, c) == g.vertex_index(i + off[0], j + off[1], k + off[2]));
            }
        }
    }
}

TEST_CASE("z slabs reproduce parent positions bitwise")
{
    const GridSpec g({-0.3, 0.1, 0.7}, {1.1, 2.0, 3.3}, {3, 4, 7});
    const auto slab = g.z_slab(2, 5);
    CHECK(slab.divisions() == Index3{3, 4, 3});
    CHECK(slab.layer_offset() == 2);
    for (std::size_t k = 0; k < slab.points(2); ++k) {
        for (std::size_t j = 0; j < slab.points(1); ++j) {
            for (std::size_t i = 0; i < slab.points(0); ++i) {
                REQUIRE(slab.point(i, j, k) == g.point(i, j, k + 2));
            }
        }
    }
    CHECK(slab.bounds_min()[2] == g.point(0, 0, 2)[2]);
    CHECK(slab.bounds_max()[2] == g.point(0, 0, 5)[2]);
    CHECK_THROWS_AS((void)g.z_slab(3, 3), GridError);
    CHECK_THROWS_AS((void)g.z_slab(0, 8), GridError);
}
