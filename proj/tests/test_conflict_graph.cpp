#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "opfsphere/conflict_graph.hpp"
#include "oracles/grid_oracle.hpp"

using namespace opf;

namespace {

DyadicCell random_cell(int level, Rng& rng) {
    return DyadicCell::from_ordinal(level, static_cast<std::uint32_t>(rng() % cell_count(level)));
}

ConvexPolygon triangle_around(const UnitVector& c, double r, double spin) {
    const TangentFrame f(c);
    return {{f.polar_point(r, spin), f.polar_point(r, spin + 2.1), f.polar_point(r, spin + 4.2)}, c};
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(ConflictGraph, DotRangeExamples) {
    const SphericalBox north{{1, 1}, {0, 0}}, east{{0, 0}, {0, 0}};
    const DotRange pts = dot_range_boxes(north, east);
    EXPECT_EQ(pts.lo, 0.0);
    EXPECT_EQ(pts.hi, 0.0);

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const DyadicCell c = random_cell(1 + i % 5, rng);
        EXPECT_DOUBLE_EQ(dot_range_cells(c, c).hi, 1.0);
    }

    const DotRange r = dot_range_cells({1, 0, 0}, {1, 3, 0});
    EXPECT_NEAR(r.lo, -1.0, 1e-15);
    EXPECT_NEAR(r.hi, 0.5, 1e-15);
    const auto g = oracle::grid_dot_range_cells({1, 0, 0}, {1, 3, 0});
    EXPECT_NEAR(g.lo, -1.0, 1e-3);
    EXPECT_NEAR(g.hi, 0.5, 1e-3);
}

TEST(ConflictGraph, CellsConflictExamples) {
    // Pole cell against an equator cell in the same sector.
    EXPECT_TRUE(cells_conflict({2, 0, 1}, {2, 3, 1}));
    // Both in the open cap of radius pi/4 about the north pole.
    EXPECT_FALSE(cells_conflict({3, 0, 2}, {3, 1, 5}));
    // (pi/2, 0) and (pi/2, pi/2) are both in the closed cell.
    EXPECT_TRUE(cells_conflict({1, 1, 0}, {1, 1, 0}));
    const auto g = oracle::grid_dot_range_cells({1, 1, 0}, {1, 1, 0}, 50);
    EXPECT_LE(g.lo, 1e-12);
}

TEST(ConflictGraph, AgreesWithGridOracle) {
    Rng rng(41);
    int decided = 0;
    for (int i = 0; i < 200; ++i) {
        const int level = 1 + i % 4;
        const DyadicCell a = random_cell(level, rng), b = random_cell(level, rng);
        const DotRange r = dot_range_cells(a, b);
        const auto g = oracle::grid_dot_range_cells(a, b, 60);
        // Closed form is exact, the grid only sees a subset of the box.
        EXPECT_LE(r.lo, g.lo + 1e-12);
        EXPECT_GE(r.hi, g.hi - 1e-12);
        if (std::abs(r.lo) < 1e-3 || std::abs(r.hi) < 1e-3) continue;
        ++decided;
        EXPECT_EQ(r.contains_zero(), g.lo <= 0 && 0 <= g.hi) << level;
    }
    EXPECT_GT(decided, 150);
}

TEST(ConflictGraph, RefinementMonotone) {
    Rng rng(43);
    for (int i = 0; i < 500; ++i) {
        const int level = 1 + i % 4;
        const DyadicCell a = random_cell(level, rng), b = random_cell(level, rng);
        const DotRange outer = dot_range_cells(a, b);
        const auto ka = refine(a), kb = refine(b);
        const DotRange inner = dot_range_cells(ka[rng() % 4], kb[rng() % 4]);
        EXPECT_TRUE(outer.contains(inner, 1e-12));
    }
}

TEST(ConflictGraph, AntipodalSymmetry) {
    Rng rng(47);
    for (int i = 0; i < 500; ++i) {
        const int level = 1 + i % 4;
        const DyadicCell a = random_cell(level, rng), b = random_cell(level, rng);
        EXPECT_EQ(cells_conflict(a, b), cells_conflict(antipodal(a), antipodal(b)));
    }
}

TEST(ConflictGraph, BuildLevel0And1) {
    const ConflictGraph g0 = build_conflict_graph(0);
    EXPECT_EQ(g0.self_conflicts.size(), 4u);
    EXPECT_EQ(g0.edges.size(), 6u);

    const ConflictGraph g1 = build_conflict_graph(1);
    for (std::uint32_t o = 0; o < 16; ++o) {
        const DyadicCell c = DyadicCell::from_ordinal(1, o);
        const bool equatorial = c.band == 1 || c.band == 2;
        EXPECT_EQ(g1.self_conflicting(o), equatorial);
        const auto grid = oracle::grid_dot_range_cells(c, c, 60);
        EXPECT_EQ(grid.lo <= 1e-12, equatorial);
    }
}

TEST(ConflictGraph, SymmetricAndRotationInvariant) {
    const ConflictGraph g = build_conflict_graph(2);
    const std::uint32_t n = divisions_at(2);
    for (std::uint32_t a = 0; a < g.vertex_count(); ++a)
        for (std::uint32_t b = 0; b < g.vertex_count(); ++b) {
            ASSERT_EQ(g.has_edge(a, b), g.has_edge(b, a));
            const DyadicCell ca = DyadicCell::from_ordinal(2, a), cb = DyadicCell::from_ordinal(2, b);
            const DyadicCell ra{2, ca.band, (ca.sector + 1) % n}, rb{2, cb.band, (cb.sector + 1) % n};
            ASSERT_EQ(g.has_edge(a, b), g.has_edge(ra.ordinal(), rb.ordinal()));
            ASSERT_EQ(g.has_edge(a, b), cells_conflict(ca, cb));
        }
    EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end()));
}

TEST(ConflictGraph, WorkerCountDoesNotChangeResult) {
    GraphBuildOptions opt;
    opt.workers = 3;
    EXPECT_EQ(build_conflict_graph(3, 0, opt), build_conflict_graph(3));
}

TEST(ConflictGraph, LevelCap) {
    EXPECT_THROW(build_conflict_graph(8), Error);
    try {
        build_conflict_graph(8);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::resource_cap);
    }
}

TEST(ConflictGraph, SaveLoadRoundTrip) {
    const ConflictGraph g = build_conflict_graph(3, 1e-9);
    const std::string path = temp_path("opf_graph_l3.bin");
    save_graph(g, path);
    EXPECT_EQ(load_graph(path), g);

    // Flip one payload byte: checksum mismatch, no partial graph.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-3, std::ios::end);
        char ch;
        f.read(&ch, 1);
        f.seekp(-3, std::ios::end);
        ch = static_cast<char>(ch ^ 0x5A);
        f.write(&ch, 1);
    }
    try {
        (void)load_graph(path);
        FAIL() << "corrupt cache accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::corrupt_cache);
    }
    std::remove(path.c_str());
}

TEST(ConflictGraph, CacheHitSkipsBuild) {
    const std::string path = temp_path("opf_graph_cache_l2.bin");
    std::remove(path.c_str());
    int builds = 0;
    const auto builder = [&] {
        ++builds;
        return build_conflict_graph(2);
    };
    const ConflictGraph a = load_or_build_graph(path, 2, 0, builder);
    EXPECT_EQ(builds, 1);
    const ConflictGraph b = load_or_build_graph(path, 2, 0, builder);
    EXPECT_EQ(builds, 1);
    EXPECT_EQ(a, b);
    std::remove(path.c_str());
}

TEST(ConflictGraph, PolygonDotRange) {
    const ConvexPolygon t = triangle_around({0.1, 0.2, 0.9}, 0.2, 0.0);
    EXPECT_NEAR(dot_range_polygons(t, t).hi, 1.0, 1e-15);

    const ConvexPolygon p({UnitVector{0, 0, 1}}, UnitVector{0, 0, 1});
    const ConvexPolygon q({UnitVector{1, 0, 0}}, UnitVector{1, 0, 0});
    const DotRange pq = dot_range_polygons(p, q);
    EXPECT_NEAR(pq.lo, 0.0, 1e-15);
    EXPECT_NEAR(pq.hi, 0.0, 1e-15);

    // Small triangles in opposite pi/4 caps: all inner products negative.
    const ConvexPolygon a = triangle_around(UnitVector::north(), 0.5, 0.3);
    const ConvexPolygon b = triangle_around(UnitVector::south(), 0.5, 1.1);
    const DotRange ab = dot_range_polygons(a, b);
    EXPECT_LT(ab.hi, 0.0);
    Rng rng(53);
    double hi = -2, lo = 2;
    const auto sample = [&rng](const ConvexPolygon& poly) {
        for (;;) {
            const UnitVector x = sample_in_cap(poly.hemisphere_center(), poly.radius(), rng);
            if (poly.contains(x, 0)) return x;
        }
    };
    for (int i = 0; i < 100000; ++i) {
        const double d = dot(sample(a), sample(b));
        hi = std::max(hi, d);
        lo = std::min(lo, d);
    }
    EXPECT_EQ(hi < 0, ab.hi < 0);
    EXPECT_LE(ab.lo, lo + 1e-12);
    EXPECT_GE(ab.hi, hi - 1e-12);
    EXPECT_NEAR(ab.hi, std::cos(polygon_distance(a, b)), 1e-9);
}
