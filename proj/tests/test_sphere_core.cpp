#include <gtest/gtest.h>

#include <cmath>

#include "opfsphere/sphere_core.hpp"

using namespace opf;

namespace {

UnitVector random_in_hemisphere(const UnitVector& c, double max_radius, Rng& rng) {
    return sample_in_cap(c, max_radius, rng);
}

}  // namespace

TEST(SphereCore, GeodesicDistanceExamples) {
    EXPECT_EQ(geodesic_distance(UnitVector::north(), UnitVector::north()), 0.0);
    EXPECT_NEAR(geodesic_distance(UnitVector::north(), {1, 0, 0}), kPi / 2, 1e-15);
    EXPECT_NEAR(geodesic_distance(UnitVector::north(), UnitVector::south()), kPi, 1e-15);
}

TEST(SphereCore, PolarDotExamples) {
    EXPECT_EQ(polar_dot({0, 0, 1}, {1, 0, 0}), 0.0);
    const UnitVector u{0.3, -0.4, 0.5};
    EXPECT_NEAR(polar_dot(u, u), 1.0, 1e-15);
    const UnitVector v{0, std::sin(kPi / 4), std::cos(kPi / 4)};
    EXPECT_NEAR(polar_dot({0, 0, 1}, v), std::sqrt(2.0) / 2, 1e-15);
    EXPECT_NEAR(geodesic_distance({0, 0, 1}, v), kPi / 4, 1e-15);
}

TEST(SphereCore, OrthogonalityMatchesRightAngle) {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const UnitVector u = sample_uniform(rng);
        const UnitVector w = sample_uniform(rng);
        const UnitVector v(cross(u.vec(), w.vec()));
        EXPECT_LE(std::abs(polar_dot(u, v)), 1e-12);
        EXPECT_NEAR(geodesic_distance(u, v), kPi / 2, 1e-12);
        const UnitVector r = sample_uniform(rng);
        if (std::abs(polar_dot(u, r)) > 1e-12) {
            EXPECT_NE(geodesic_distance(u, r), kPi / 2);
        }
    }
}

TEST(SphereCore, TriangleInequality) {
    Rng rng(11);
    double worst = 1;
    for (int i = 0; i < 10000; ++i) {
        const UnitVector a = sample_uniform(rng), b = sample_uniform(rng), c = sample_uniform(rng);
        worst = std::min(worst, geodesic_distance(a, b) + geodesic_distance(b, c) - geodesic_distance(a, c));
    }
    EXPECT_GE(worst, -1e-10);
}

TEST(SphereCore, CapAreaExamples) {
    EXPECT_NEAR(cap_area(kPi / 2), 2 * kPi, 1e-14);
    EXPECT_EQ(cap_area(0), 0.0);
    EXPECT_NEAR(cap_area(kPi / 4), 2 * kPi * (1 - std::sqrt(2.0) / 2), 1e-14);
    EXPECT_NEAR(cap_area(kPi / 4), 1.84030, 1e-5);
    EXPECT_NEAR(cap_area(kPi), 4 * kPi, 1e-14);
    EXPECT_THROW(cap_area(-0.1), Error);
    for (double r = 0; r <= kPi; r += 0.01) EXPECT_NEAR(cap_area(r) + cap_area(kPi - r), 4 * kPi, 1e-13);
    for (double r = 0.01; r <= kPi; r += 0.01) EXPECT_GT(cap_area(r), cap_area(r - 0.01));
}

TEST(SphereCore, UniformSamplingStatistics) {
    Rng rng(2024);
    const int n = 1000000;
    int north = 0, in_cap = 0;
    const Cap cap(UnitVector::north(), kPi / 4);
    for (int i = 0; i < n; ++i) {
        const UnitVector p = sample_uniform(rng);
        north += p.z() > 0;
        in_cap += cap.contains(p);
    }
    EXPECT_NEAR(static_cast<double>(north) / n, 0.5, 0.002);
    EXPECT_NEAR(static_cast<double>(in_cap) / n, cap_area(kPi / 4) / kFourPi, 0.002);
    EXPECT_NEAR(cap_area(kPi / 4) / kFourPi, 0.14645, 1e-5);
}

TEST(SphereCore, SamplingIsDeterministic) {
    Rng a(99), b(99);
    const UnitVector p = sample_uniform(a), q = sample_uniform(b);
    EXPECT_EQ(p.x(), q.x());
    EXPECT_EQ(p.y(), q.y());
    EXPECT_EQ(p.z(), q.z());
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(SphereCore, PolarRoundTrip) {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const UnitVector p = sample_uniform(rng);
        const PolarAngles a = to_polar(p);
        ASSERT_GE(a.theta, 0);
        ASSERT_LE(a.theta, kPi);
        ASSERT_GE(a.phi, 0);
        ASSERT_LT(a.phi, kTwoPi);
        EXPECT_LT(geodesic_distance(p, from_polar(a)), 1e-10);
    }
}

TEST(SphereCore, GnomonicExamples) {
    const UnitVector c{0.2, -0.5, 0.7};
    const PlanarPoint o = gnomonic_project(c, c);
    EXPECT_NEAR(o.x, 0, 1e-15);
    EXPECT_NEAR(o.y, 0, 1e-15);
    const TangentFrame f(c);
    const UnitVector p = f.polar_point(kPi / 4, 0.3);
    const PlanarPoint q = gnomonic_project(c, p);
    EXPECT_NEAR(std::hypot(q.x, q.y), 1.0, 1e-12);
    EXPECT_LT(geodesic_distance(gnomonic_unproject(c, q), p), 1e-10);
    EXPECT_THROW(gnomonic_project(c, f.polar_point(kPi / 2, 0.0)), Error);
    EXPECT_THROW(gnomonic_project(c, -c), Error);
}

TEST(SphereCore, GnomonicMapsGreatCirclesToLines) {
    Rng rng(13);
    const UnitVector c = sample_uniform(rng);
    for (int i = 0; i < 1000; ++i) {
        const UnitVector a = random_in_hemisphere(c, 1.3, rng), b = random_in_hemisphere(c, 1.3, rng);
        const GeodesicSegment seg(a, b);
        const PlanarPoint pa = gnomonic_project(c, a), pb = gnomonic_project(c, b);
        const PlanarPoint pm = gnomonic_project(c, seg.at(uniform01(rng)));
        const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
        const double residual = std::abs((pb.x - pa.x) * (pm.y - pa.y) - (pb.y - pa.y) * (pm.x - pa.x)) / len;
        EXPECT_LT(residual, 1e-9);
        // Midpoint of the arc lands on the segment between the images.
        const PlanarPoint mid = gnomonic_project(c, seg.at(0.5));
        const double t = ((mid.x - pa.x) * (pb.x - pa.x) + (mid.y - pa.y) * (pb.y - pa.y)) / (len * len);
        EXPECT_GE(t, -1e-9);
        EXPECT_LE(t, 1 + 1e-9);
    }
}

TEST(SphereCore, LuneHalfAngle) {
    EXPECT_EQ(lune_half_angle(0, 1.0), 0.0);
    EXPECT_NEAR(lune_half_angle(0.2, kPi / 2), 0.2, 1e-15);
    EXPECT_NEAR(lune_half_angle(0.01, kPi / 4), std::asin(std::sin(0.01) / std::sin(kPi / 4)), 1e-15);
    EXPECT_NEAR(lune_half_angle(0.01, kPi / 4), 0.014142, 1e-6);
    EXPECT_THROW(lune_half_angle(0.5, 0.1), Error);

    // Rotating the meridian phi = 0 by the returned angle puts the point at
    // the given colatitude exactly `shrink` away from the original great circle.
    for (double theta : {0.3, 0.8, 1.2, 2.0}) {
        const double s = 0.05;
        const double w = lune_half_angle(s, theta);
        const UnitVector p = from_polar({theta, w});
        const double to_meridian = std::asin(std::abs(p.y()));  // great circle y = 0
        EXPECT_NEAR(to_meridian, s, 1e-12);
    }
}

TEST(SphereCore, PolygonAreaExamples) {
    const std::vector<UnitVector> octant{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
    EXPECT_NEAR(spherical_polygon_area(octant), kPi / 2, 1e-12);
    const GeodesicSegment s({1, 0, 0}, {0, 0.6, 0.8});
    const std::vector<UnitVector> needle{s.a, s.at(0.4), s.b};
    EXPECT_NEAR(spherical_polygon_area(needle), 0.0, 1e-10);
    EXPECT_THROW(spherical_polygon_area(std::vector<UnitVector>{{0, 0, 1}, {1, 0, 0}}), Error);
}

TEST(SphereCore, PolygonAreaMatchesMonteCarlo) {
    // Small quadrilateral about a random center; Monte Carlo inside a bounding cap.
    Rng rng(31);
    const UnitVector c = sample_uniform(rng);
    const TangentFrame f(c);
    std::vector<UnitVector> quad{f.polar_point(0.3, 0.1), f.polar_point(0.25, 1.7), f.polar_point(0.35, 3.3),
                                 f.polar_point(0.2, 4.9)};
    const double girard = spherical_polygon_area(quad);
    const auto inside = [&](const UnitVector& p) {
        for (std::size_t i = 0; i < 4; ++i)
            if (dot(cross(quad[i].vec(), quad[(i + 1) % 4].vec()), p.vec()) < 0) return false;
        return true;
    };
    const double rad = 0.4;
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += inside(sample_in_cap(c, rad, rng));
    const double frac = static_cast<double>(hits) / n;
    const double est = frac * cap_area(rad);
    const double sigma = std::sqrt(frac * (1 - frac) / n) * cap_area(rad);
    EXPECT_NEAR(est, girard, 3 * sigma);
}
