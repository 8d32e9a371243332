#include <gtest/gtest.h>

#include <cmath>

#include "opfsphere/density_filter.hpp"

using namespace opf;

namespace {

// Plain hit-or-miss estimate that only uses point membership.
double sampled_density(const MembershipOracle& m, const DyadicCell& c, int n, std::uint64_t seed, double* sigma) {
    Rng rng(seed);
    const SphericalBox b = c.box();
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double z = b.z.lo + (b.z.hi - b.z.lo) * uniform01(rng);
        const double t = b.turns.lo + (b.turns.hi - b.turns.lo) * uniform01(rng);
        hits += oracle_contains(m, from_z_turns(z, t));
    }
    const double p = static_cast<double>(hits) / n;
    *sigma = std::sqrt(std::max(p * (1 - p), 1.0 / n) / n);
    return p;
}

}  // namespace

TEST(DensityFilter, Examples) {
    const MembershipOracle everything = CapOracle{UnitVector::north(), kPi};
    EXPECT_EQ(estimate_cell_density(everything, {3, 5, 9}, 100, 1).value, 1.0);

    const MembershipOracle dc = DoubleCapOracle{};
    EXPECT_EQ(estimate_cell_density(dc, {2, 0, 3}, 100, 1).value, 1.0);
    const DensityEstimate d = estimate_cell_density(dc, {2, 1, 3}, 100, 1);
    EXPECT_TRUE(d.exact);
    EXPECT_NEAR(d.value, (0.75 - std::sqrt(0.5)) / 0.25, 1e-14);
    EXPECT_NEAR(d.value, 0.17157, 1e-5);
    double sigma = 0;
    const double mc = sampled_density(dc, {2, 1, 3}, 200000, 9, &sigma);
    EXPECT_NEAR(mc, d.value, 3 * sigma);
}

TEST(DensityFilter, OffPoleCapQuadratureMatchesSampling) {
    const MembershipOracle cap = CapOracle{UnitVector{0.4, -0.3, 0.5}, 0.6};
    Rng pick(5);
    int partial = 0;
    for (int i = 0; i < 40 && partial < 8; ++i) {
        const DyadicCell c = DyadicCell::from_ordinal(3, static_cast<std::uint32_t>(pick() % cell_count(3)));
        const DensityEstimate q = estimate_cell_density(cap, c, 100, 0);
        if (q.value == 0 || q.value == 1) continue;
        ++partial;
        double sigma = 0;
        const double mc = sampled_density(cap, c, 100000, 77 + i, &sigma);
        EXPECT_NEAR(mc, q.value, 3 * sigma) << c.band << " " << c.sector;
    }
    EXPECT_GT(partial, 0);
    // Whole-sphere sum of cap densities recovers the cap area.
    double total = 0;
    for (std::uint32_t o = 0; o < cell_count(3); ++o)
        total += estimate_cell_density(cap, DyadicCell::from_ordinal(3, o), 100, 0).value * cell_area(3);
    EXPECT_NEAR(total, cap_area(0.6), 1e-9);
}

TEST(DensityFilter, CellSetOracleSelectsItself) {
    const CellSet s(2, {1, 5, 17, 40, 63});
    const MembershipOracle m = CellSetOracle{s};
    for (double eps : {0.001, 0.01, 0.015}) {
        EXPECT_EQ(select_dense_cells(m, 2, eps, 100, 3).selected, s);
        EXPECT_EQ(select_dense_cells(m, 4, eps, 100, 3).selected, s.refined_to(4));
    }
}

TEST(DensityFilter, DoubleCapLevel6) {
    const DensityReport r = select_dense_cells(DoubleCapOracle{}, 6, 0.01, 100, 0);
    EXPECT_TRUE(r.within_beta);
    EXPECT_GE(r.selected.fraction(), 0.27);
    for (const auto& c : r.cells)
        if (c.selected) {
            EXPECT_TRUE(c.density.exact);
            EXPECT_GE(c.density.value, 0.99);
        }
}

TEST(DensityFilter, SieveAtMatchingLevel) {
    const CellSet sieve = sieve_cells(3);
    EXPECT_LT(sieve.size(), cell_count(3));
    EXPECT_GT(sieve.size(), cell_count(3) / 2);
    const DensityReport r = select_dense_cells(SieveOracle{3}, 3, 0.01, 100, 0);
    EXPECT_EQ(r.selected, sieve);
    for (const auto& c : r.cells) EXPECT_TRUE(c.density.value == 1.0 || c.density.value < 0.99);
    // Coarser levels see fractional densities summing to the retained measure.
    double total = 0;
    for (std::uint32_t o = 0; o < cell_count(1); ++o)
        total += estimate_cell_density(SieveOracle{3}, DyadicCell::from_ordinal(1, o), 100, 0).value * cell_area(1);
    EXPECT_NEAR(total, sieve.measure(), 1e-12);
    // Membership agrees with the cell set.
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        const UnitVector p = sample_uniform(rng);
        EXPECT_EQ(oracle_contains(SieveOracle{3}, p), sieve.contains(locate_point(p, 3)));
    }
}

TEST(DensityFilter, SelectionMonotoneInEpsilon) {
    const MembershipOracle cap = CapOracle{UnitVector{0.1, 0.7, -0.2}, 1.0};
    const auto a = select_dense_cells(cap, 4, 0.05, 100, 0, EpsilonPolicy::relaxed).selected;
    const auto b = select_dense_cells(cap, 4, 0.3, 100, 0, EpsilonPolicy::relaxed).selected;
    EXPECT_TRUE(std::includes(b.ordinals().begin(), b.ordinals().end(), a.ordinals().begin(), a.ordinals().end()));
    EXPECT_LT(a.size(), b.size());
}

TEST(DensityFilter, EpsilonRangePolicy) {
    EXPECT_THROW(select_dense_cells(DoubleCapOracle{}, 3, 0.05, 100, 0), Error);
    EXPECT_THROW(select_dense_cells(DoubleCapOracle{}, 3, 0.0, 100, 0, EpsilonPolicy::relaxed), Error);
    EXPECT_THROW(select_dense_cells(DoubleCapOracle{}, 3, 1.0, 100, 0, EpsilonPolicy::relaxed), Error);
    const auto r = select_dense_cells(DoubleCapOracle{}, 3, 0.05, 100, 0, EpsilonPolicy::relaxed);
    EXPECT_FALSE(r.within_beta);
}

TEST(DensityFilter, CapCapturedMeasureAtLevel5) {
    const MembershipOracle cap = CapOracle{UnitVector::north(), kPi / 4};
    const DensityReport r = select_dense_cells(cap, 5, 0.05, 100, 0, EpsilonPolicy::relaxed);
    EXPECT_GE(r.captured_measure, 0.95 * cap_area(kPi / 4));
    EXPECT_TRUE(r.captured_exceeds_bound);
    const CoveringReport cov = covering_report(cap, r.selected, 100, 0);
    EXPECT_NEAR(cov.inside.value, r.captured_measure, 1e-12);
    EXPECT_GE(cov.missed, 0);
    EXPECT_LT(cov.missed, 0.05 * cap_area(kPi / 4));

    // Independent sampling of the union against the cap.
    Rng rng(8);
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const UnitVector p = sample_uniform(rng);
        hits += oracle_contains(cap, p) && r.selected.contains(locate_point(p, 5));
    }
    const double p = static_cast<double>(hits) / n;
    EXPECT_NEAR(p * kFourPi, r.captured_measure, 3 * std::sqrt(p * (1 - p) / n) * kFourPi);
}

TEST(DensityFilter, CoveringExtremes) {
    const MembershipOracle cap = CapOracle{UnitVector{1, 0, 0}, 0.7};
    const CoveringReport all = covering_report(cap, CellSet::all(3), 100, 0);
    EXPECT_NEAR(all.inside.value, cap_area(0.7), 1e-9);
    EXPECT_NEAR(all.cover.value, kFourPi, 1e-12);
    const CoveringReport none = covering_report(cap, CellSet(3), 100, 0);
    EXPECT_EQ(none.inside.value, 0.0);
    EXPECT_EQ(none.cover.value, 0.0);
}

TEST(DensityFilter, PolygonSetSampledAndDeterministic) {
    const TangentFrame f(UnitVector{0.2, 0.2, 0.9});
    const ConvexPolygon tri({f.polar_point(0.5, 0), f.polar_point(0.5, 2.1), f.polar_point(0.5, 4.2)}, f.center());
    const MembershipOracle m = PolygonSetOracle{{tri}};
    const DensityReport a = select_dense_cells(m, 3, 0.01, 400, 11);
    const DensityReport b = select_dense_cells(m, 3, 0.01, 400, 11);
    ASSERT_EQ(a.cells.size(), b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].density.value, b.cells[i].density.value);
    EXPECT_FALSE(a.cells.empty());
    EXPECT_NEAR(*oracle_measure(m), tri.area(), 0);
    const CoveringReport cov = covering_report(m, CellSet::all(3), 400, 11);
    EXPECT_NEAR(cov.inside.value, tri.area(), 4 * cov.inside.std_error + 1e-12);
}
