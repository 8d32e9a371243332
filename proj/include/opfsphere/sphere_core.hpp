#pragma once
// Points, distances, caps, lunes and projections on the unit sphere S^2.
//
// Areas are in steradians (the sphere has area 4*pi); normalized fractions
// are area / (4*pi). Angles are radians unless a name says "turns".

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace opf {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

namespace tol {
inline constexpr double construction = 1e-12;
inline constexpr double roundtrip = 1e-10;
inline constexpr double predicate = 1e-9;
}  // namespace tol

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

inline double normalized_fraction(double steradians) { return steradians / kFourPi; }

/// cos(2*pi*t) that is exact when t is a multiple of 1/4.
///
/// Grid boundaries sit at dyadic fractions of a turn, and the closed-cell
/// conflict test needs cos(pi/2) == 0 rather than 6e-17.
inline double cos_turns(double t) {
    double r = t - std::floor(t);
    const double q = r * 4.0;
    if (q == std::floor(q)) {
        switch (static_cast<int>(q) & 3) {
            case 0: return 1.0;
            case 1: return 0.0;
            case 2: return -1.0;
            default: return 0.0;
        }
    }
    return std::cos(kTwoPi * r);
}

inline double sin_turns(double t) { return cos_turns(t - 0.25); }

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool operator==(const Vec3&) const = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// A point of S^2. Construction normalizes; the zero vector is rejected.
class UnitVector {
public:
    UnitVector() : v_{0, 0, 1} {}
    UnitVector(double x, double y, double z) : UnitVector(Vec3{x, y, z}) {}
    explicit UnitVector(const Vec3& v) {
        const double n = v.norm();
        if (!(n > 0) || !std::isfinite(n)) fail(ErrorKind::domain, "cannot normalize a zero or non-finite vector");
        v_ = v * (1.0 / n);
    }

    /// Keeps components bit-for-bit when already unit length to 1e-12, so
    /// stored vectors round-trip exactly; renormalizes otherwise.
    static UnitVector from_stored(double x, double y, double z) {
        const Vec3 v{x, y, z};
        if (std::abs(v.norm() - 1.0) <= 1e-12) return UnitVector(v, Trusted{});
        return UnitVector(v);
    }

    static UnitVector north() { return {0, 0, 1}; }
    static UnitVector south() { return {0, 0, -1}; }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }

    UnitVector operator-() const { return UnitVector(-v_, Trusted{}); }
    bool operator==(const UnitVector&) const = default;

private:
    struct Trusted {};
    UnitVector(const Vec3& v, Trusted) : v_(v) {}
    Vec3 v_;
};

inline double dot(const UnitVector& a, const UnitVector& b) { return dot(a.vec(), b.vec()); }

/// theta is the colatitude in [0, pi], phi the azimuth in [0, 2*pi).
struct PolarAngles {
    double theta = 0;
    double phi = 0;
};

inline double azimuth(const Vec3& v) {
    double phi = std::atan2(v.y, v.x);
    if (phi < 0) phi += kTwoPi;
    if (phi >= kTwoPi) phi = 0;
    return phi;
}

inline PolarAngles to_polar(const UnitVector& u) {
    return {std::atan2(std::hypot(u.x(), u.y()), u.z()), azimuth(u.vec())};
}

inline UnitVector from_polar(const PolarAngles& a) {
    const double s = std::sin(a.theta);
    return {s * std::cos(a.phi), s * std::sin(a.phi), std::cos(a.theta)};
}

/// Point with the given cos(colatitude) and azimuth in turns.
inline UnitVector from_z_turns(double z, double turns) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * cos_turns(turns), s * sin_turns(turns), z};
}

/// Length of the minor arc, in [0, pi]. Mathematically acos(<u, v>); the
/// atan2 form keeps full precision for nearly coincident or antipodal points.
inline double geodesic_distance(const UnitVector& u, const UnitVector& v) {
    return std::atan2(cross(u.vec(), v.vec()).norm(), dot(u, v));
}

/// Inner product; v lies on the great circle polar to u iff this is zero.
inline double polar_dot(const UnitVector& u, const UnitVector& v) { return dot(u, v); }

inline double cap_area(double radius) {
    if (!(radius >= 0) || radius > kPi) fail(ErrorKind::domain, "cap radius must lie in [0, pi]");
    // 2*pi*(1 - cos r) written with the half-angle form to keep small radii accurate.
    const double s = std::sin(0.5 * radius);
    return 4.0 * kPi * s * s;
}

struct Cap {
    UnitVector center;
    double radius;

    Cap(UnitVector c, double r) : center(c), radius(r) {
        if (!(r > 0) || r > kPi / 2) fail(ErrorKind::domain, "cap radius must lie in (0, pi/2]");
    }
    bool contains(const UnitVector& p) const { return geodesic_distance(center, p) < radius; }
    double area() const { return cap_area(radius); }
};

/// Minor great-circle arc between two non-antipodal points.
struct GeodesicSegment {
    UnitVector a, b;

    GeodesicSegment(UnitVector a_, UnitVector b_) : a(a_), b(b_) {
        if (geodesic_distance(a, b) >= kPi - tol::roundtrip)
            fail(ErrorKind::domain, "geodesic segment endpoints are (nearly) antipodal");
    }

    double length() const { return geodesic_distance(a, b); }

    /// Point at fraction t in [0, 1] of the arc (slerp).
    UnitVector at(double t) const {
        const double len = length();
        if (len < 1e-15) return a;
        const double s = std::sin(len);
        return UnitVector(a.vec() * (std::sin((1 - t) * len) / s) + b.vec() * (std::sin(t * len) / s));
    }
};

struct PlanarPoint {
    double x = 0, y = 0;
};

/// Orthonormal frame (e1, e2, center) with e1 x e2 = center. Counterclockwise
/// in (e1, e2) coordinates is counterclockwise seen from outside the sphere.
class TangentFrame {
public:
    explicit TangentFrame(const UnitVector& center) : c_(center) {
        const Vec3& c = center.vec();
        const double ax = std::abs(c.x), ay = std::abs(c.y), az = std::abs(c.z);
        const Vec3 pick = (ax <= ay && ax <= az) ? Vec3{1, 0, 0} : (ay <= az ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
        const Vec3 e1 = cross(pick, c);
        e1_ = e1 * (1.0 / e1.norm());
        e2_ = cross(c, e1_);
    }

    const UnitVector& center() const { return c_; }
    const Vec3& e1() const { return e1_; }
    const Vec3& e2() const { return e2_; }

    /// Gnomonic (central) projection onto the tangent plane at the center.
    PlanarPoint project(const UnitVector& p) const {
        const double h = dot(p.vec(), c_.vec());
        if (!(h > 0)) fail(ErrorKind::out_of_hemisphere, "gnomonic projection needs a point in the open hemisphere");
        return {dot(p.vec(), e1_) / h, dot(p.vec(), e2_) / h};
    }

    UnitVector unproject(const PlanarPoint& q) const { return UnitVector(c_.vec() + e1_ * q.x + e2_ * q.y); }

    /// Point at geodesic distance `rho` from the center in azimuthal direction `alpha`.
    UnitVector polar_point(double rho, double alpha) const {
        return UnitVector(c_.vec() * std::cos(rho) + (e1_ * std::cos(alpha) + e2_ * std::sin(alpha)) * std::sin(rho));
    }

private:
    UnitVector c_;
    Vec3 e1_, e2_;
};

inline PlanarPoint gnomonic_project(const UnitVector& center, const UnitVector& p) {
    if (geodesic_distance(center, p) >= kPi / 2)
        fail(ErrorKind::out_of_hemisphere, "point is not in the open hemisphere around the projection center");
    return TangentFrame(center).project(p);
}

inline UnitVector gnomonic_unproject(const UnitVector& center, const PlanarPoint& q) {
    return TangentFrame(center).unproject(q);
}

/// Azimuthal rotation that moves a meridian far enough that every point of
/// the rotated meridian at this colatitude is at least `shrink` away from the
/// original one: arcsin(sin(shrink) / sin(colatitude)).
inline double lune_half_angle(double shrink, double colatitude) {
    if (!(colatitude > 0 && colatitude < kPi)) fail(ErrorKind::domain, "colatitude must lie in (0, pi)");
    if (!(shrink >= 0)) fail(ErrorKind::domain, "shrink must be non-negative");
    const double ratio = std::sin(shrink) / std::sin(colatitude);
    if (ratio > 1.0 + tol::construction) fail(ErrorKind::infeasible, "shrink exceeds the lune width at this colatitude");
    return std::asin(std::min(ratio, 1.0));
}

/// Normalized vector sum; used as a hemisphere witness for small point sets.
inline UnitVector spherical_centroid(std::span<const UnitVector> pts) {
    Vec3 s;
    for (const auto& p : pts) s += p.vec();
    if (s.norm() < 1e-14) fail(ErrorKind::out_of_hemisphere, "points have no well-defined centroid");
    return UnitVector(s);
}

/// Interior angle at b of the spherical polygon path a -> b -> c, in [0, pi].
inline double interior_angle(const UnitVector& a, const UnitVector& b, const UnitVector& c) {
    const Vec3 ta = a.vec() - b.vec() * dot(a, b);
    const Vec3 tc = c.vec() - b.vec() * dot(c, b);
    return std::atan2(cross(ta, tc).norm(), dot(ta, tc));
}

/// Girard area (angle excess) of a convex spherical polygon.
inline double spherical_polygon_area(std::span<const UnitVector> vertices) {
    const std::size_t n = vertices.size();
    if (n < 3) fail(ErrorKind::domain, "a spherical polygon needs at least 3 vertices");
    const UnitVector c = spherical_centroid(vertices);
    for (const auto& v : vertices)
        if (!(dot(c, v) > 0)) fail(ErrorKind::out_of_hemisphere, "polygon vertices are not in one open hemisphere");
    double angle_sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        angle_sum += interior_angle(vertices[(i + n - 1) % n], vertices[i], vertices[(i + 1) % n]);
    return std::max(0.0, angle_sum - static_cast<double>(n - 2) * kPi);
}

// ---------------------------------------------------------------------------
// Sampling

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from (base, index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Area-uniform point on S^2 (uniform in cos(theta) and phi).
inline UnitVector sample_uniform(Rng& rng) {
    const double z = 2.0 * uniform01(rng) - 1.0;
    return from_z_turns(z, uniform01(rng));
}

/// Area-uniform point in the closed cap of `radius` about `center`.
inline UnitVector sample_in_cap(const UnitVector& center, double radius, Rng& rng) {
    const double zlo = std::cos(radius);
    const double z = zlo + (1.0 - zlo) * uniform01(rng);
    const double rho = std::acos(clamp_unit(z));
    return TangentFrame(center).polar_point(rho, kTwoPi * uniform01(rng));
}

}  // namespace opf
