#pragma once
// Test-only geometry written from first principles: plain vectors, angle
// excess, half-plane signs. No calls into the polygon or scaling code.

#include <array>
#include <cmath>
#include <vector>

#include "opfsphere/sphere_core.hpp"

namespace opf::oracle {

using V3 = std::array<double, 3>;

inline V3 v3(const UnitVector& u) { return {u.x(), u.y(), u.z()}; }
inline double dot3(const V3& a, const V3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline V3 cross3(const V3& a, const V3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Interior angle at b of the spherical polygon ... a, b, c ... (angle between
/// the planes through (b, a) and (b, c)).
inline double corner_angle(const V3& a, const V3& b, const V3& c) {
    const V3 n1 = cross3(b, a), n2 = cross3(b, c);
    return std::atan2(dot3(cross3(n1, n2), b), dot3(n1, n2));
}

/// Area by angle excess: sum of interior angles - (n - 2) pi. Vertices
/// counterclockwise seen from outside.
inline double girard_area(const std::vector<UnitVector>& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return 0;
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const V3 a = v3(poly[(i + n - 1) % n]), b = v3(poly[i]), c = v3(poly[(i + 1) % n]);
        double ang = corner_angle(c, b, a);
        if (ang < 0) ang += 2 * kPi;
        sum += ang;
    }
    return sum - static_cast<double>(n - 2) * kPi;
}

/// Left of every directed edge, with slack.
inline bool in_convex_polygon(const std::vector<UnitVector>& poly, const UnitVector& p, double slack = 1e-12) {
    const V3 q = v3(p);
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
        if (dot3(q, cross3(v3(poly[i]), v3(poly[(i + 1) % n]))) < -slack) return false;
    return true;
}

/// Distance from p to the great circle through the meridian at azimuth phi0
/// (radians): asin(|p . n|) with n the plane normal.
inline double meridian_circle_distance(const UnitVector& p, double phi0) {
    const V3 n{-std::sin(phi0), std::cos(phi0), 0};
    return std::asin(std::min(1.0, std::abs(dot3(v3(p), n))));
}

/// Distance from p to the latitude circle z = z0 along its own meridian.
inline double latitude_distance(const UnitVector& p, double z0) {
    return std::abs(std::acos(std::clamp(p.z(), -1.0, 1.0)) - std::acos(std::clamp(z0, -1.0, 1.0)));
}

}  // namespace opf::oracle
