#pragma once
// Convexification of a cell selection: connected components become spherical
// convex hulls (conv1), hulls at distance zero are merged until every pair is
// at positive distance (conv2). Both stages re-certify the result against
// orthogonal pairs. Also the Hausdorff distance and two property probes
// (segment closure inside a polygon, Pasch's axiom) used to test the hulls.
//
// Latitude edges are small circles, so hulls are built from samples. On the
// convex side of an edge (where the cell bulges outward) the tangent great
// circles at consecutive samples are intersected as well, which makes every
// hull an outer approximation: it contains the cells it was built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "conflict_graph.hpp"
#include "convex_polygon.hpp"
#include "dyadic_grid.hpp"

namespace opf {

/// Partition under `neighbors` (shared closure points, poles and the phi seam
/// included). Components are ordered by their smallest ordinal.
inline std::vector<CellSet> connected_components(const CellSet& selection) {
    const auto& ords = selection.ordinals();
    std::vector<std::size_t> parent(ords.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < ords.size(); ++i)
        for (const DyadicCell& nb : neighbors(selection.cell(i))) {
            const auto it = std::lower_bound(ords.begin(), ords.end(), nb.ordinal());
            if (it == ords.end() || *it != nb.ordinal()) continue;
            const std::size_t a = find(i), b = find(static_cast<std::size_t>(it - ords.begin()));
            // Smaller index as root keeps the root at the smallest ordinal.
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    std::vector<std::vector<std::uint32_t>> groups;
    std::vector<std::size_t> slot(ords.size(), SIZE_MAX);
    for (std::size_t i = 0; i < ords.size(); ++i) {
        const std::size_t r = find(i);
        if (slot[r] == SIZE_MAX) {
            slot[r] = groups.size();
            groups.emplace_back();
        }
        groups[slot[r]].push_back(ords[i]);
    }
    std::vector<CellSet> out;
    out.reserve(groups.size());
    for (auto& g : groups) out.emplace_back(selection.level(), std::move(g));
    return out;
}

struct HullOptions {
    std::uint32_t initial_samples = 32;  // per latitude edge
    std::uint32_t max_samples = 4096;
    double area_tolerance = 1e-8;        // steradians between successive doublings
};

namespace detail {

// Intersection of the great circles tangent to a latitude circle at a and b,
// on the side of the arc between them.
inline UnitVector tangent_corner(const UnitVector& a, const UnitVector& b) {
    const auto normal = [](const UnitVector& p) { return cross(p.vec(), Vec3{-p.y(), p.x(), 0}); };
    Vec3 x = cross(normal(a), normal(b));
    if (dot(x, a.vec() + b.vec()) < 0) x = -x;
    return UnitVector(x);
}

inline void add_latitude_edge(std::vector<UnitVector>& pts, double z, const Interval& turns, std::uint32_t h,
                              bool convex) {
    UnitVector prev = from_z_turns(z, turns.lo);
    pts.push_back(prev);
    for (std::uint32_t i = 1; i <= h; ++i) {
        const UnitVector cur = from_z_turns(z, turns.lo + (turns.hi - turns.lo) * i / h);
        if (convex) pts.push_back(tangent_corner(prev, cur));
        pts.push_back(cur);
        prev = cur;
    }
}

/// Corners of every cell plus samples along latitude edges on the boundary
/// of the component.
inline std::vector<UnitVector> hull_points(const CellSet& comp, std::uint32_t h) {
    std::vector<UnitVector> pts;
    const std::uint32_t n = divisions_at(comp.level());
    for (std::size_t i = 0; i < comp.size(); ++i) {
        const DyadicCell c = comp.cell(i);
        const SphericalBox b = c.box();
        for (double z : {b.z.lo, b.z.hi})
            for (double t : {b.turns.lo, b.turns.hi}) pts.push_back(from_z_turns(z, t));
        // Bottom edge: the cell lies above it, so it bulges outward when z > 0.
        if (c.band + 1 < n && !comp.contains(DyadicCell{c.level, c.band + 1, c.sector}))
            add_latitude_edge(pts, b.z.lo, b.turns, h, b.z.lo > 0);
        if (c.band > 0 && !comp.contains(DyadicCell{c.level, c.band - 1, c.sector}))
            add_latitude_edge(pts, b.z.hi, b.turns, h, b.z.hi < 0);
    }
    return pts;
}

/// Normalized sum of the points, rejected unless every point is more than
/// 1e-9 inside the open hemisphere about it.
inline UnitVector hemisphere_witness(std::span<const UnitVector> pts) {
    Vec3 s;
    for (const auto& p : pts) s += p.vec();
    if (s.norm() < 1e-12) fail(ErrorKind::hull_infeasible, "points have no hemisphere witness");
    const UnitVector c(s);
    const double floor = std::sin(1e-9);
    for (const auto& p : pts)
        if (!(dot(c, p) > floor)) fail(ErrorKind::hull_infeasible, "points do not fit in an open hemisphere");
    return c;
}

inline ConvexPolygon hull_at(const CellSet& comp, std::uint32_t h) {
    const std::vector<UnitVector> pts = hull_points(comp, h);
    return hull_of_points(pts, hemisphere_witness(pts));
}

}  // namespace detail

/// Spherical convex hull of a component, refined by doubling the samples per
/// latitude edge until the area settles.
inline ConvexPolygon convex_hull(const CellSet& component, const HullOptions& opt = {}) {
    if (component.empty()) fail(ErrorKind::domain, "hull of an empty component");
    if (opt.initial_samples == 0 || opt.max_samples < opt.initial_samples)
        fail(ErrorKind::domain, "hull sample counts must satisfy 0 < initial <= max");
    std::uint32_t h = opt.initial_samples;
    ConvexPolygon hull = detail::hull_at(component, h);
    while (h <= opt.max_samples / 2) {
        h *= 2;
        ConvexPolygon next = detail::hull_at(component, h);
        const double change = std::abs(next.area() - hull.area());
        hull = std::move(next);
        if (change < opt.area_tolerance) break;
    }
    return hull;
}

/// Hull of the union of several polygons (their vertices suffice, since the
/// edges are geodesics).
inline ConvexPolygon merge_polygons(const std::vector<const ConvexPolygon*>& parts) {
    std::vector<UnitVector> pts;
    for (const ConvexPolygon* p : parts) pts.insert(pts.end(), p->vertices().begin(), p->vertices().end());
    return hull_of_points(pts, detail::hemisphere_witness(pts));
}

struct ConvexDecomposition {
    std::vector<ConvexPolygon> polygons;
    double pairwise_min_distance = std::numeric_limits<double>::infinity();  // infinite below two polygons

    double area() const {
        double s = 0;
        for (const auto& p : polygons) s += p.area();
        return s;
    }
};

inline double min_pairwise_distance(const std::vector<ConvexPolygon>& polys) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polys.size(); ++i)
        for (std::size_t j = i + 1; j < polys.size(); ++j)
            best = std::min(best, polygon_distance_below(polys[i], polys[j], best));
    return best;
}

struct PolygonViolation {
    std::size_t step = 0;  // 0: certification of the stage result; k: right after merge k
    std::size_t a = 0, b = 0;  // polygon indices at that step; a == b for a self-conflict
    DotRange range;
};

/// Every polygon pair (self pairs included) whose closed dot range holds 0.
inline std::vector<PolygonViolation> certify_polygons(const std::vector<ConvexPolygon>& polys, std::size_t step = 0) {
    std::vector<PolygonViolation> out;
    for (std::size_t i = 0; i < polys.size(); ++i)
        for (std::size_t j = i; j < polys.size(); ++j)
            if (polygons_conflict(polys[i], polys[j])) out.push_back({step, i, j, dot_range_polygons(polys[i], polys[j])});
    return out;
}

struct ConvexifyReport {
    ConvexDecomposition decomposition;
    std::size_t input_cells = 0;
    double input_measure = 0;  // cells for conv1 and conv, polygon area for conv2
    std::size_t components = 0;
    std::size_t merges = 0;
    std::vector<PolygonViolation> violations;

    double output_area() const { return decomposition.area(); }
    bool clean() const { return violations.empty(); }
};

inline ConvexifyReport conv1(const CellSet& selection, const HullOptions& opt = {}) {
    ConvexifyReport r;
    r.input_cells = selection.size();
    r.input_measure = selection.measure();
    const std::vector<CellSet> comps = connected_components(selection);
    r.components = comps.size();
    for (const auto& c : comps) r.decomposition.polygons.push_back(convex_hull(c, opt));
    r.decomposition.pairwise_min_distance = min_pairwise_distance(r.decomposition.polygons);
    r.violations = certify_polygons(r.decomposition.polygons);
    return r;
}

struct MergeOptions {
    double tolerance = 1e-9;  // distances at or below this count as touching
};

/// Merges the lowest-index pair at distance <= tolerance until none is left.
inline ConvexifyReport conv2(const ConvexDecomposition& input, const MergeOptions& opt = {}) {
    ConvexifyReport r;
    r.input_measure = input.area();
    r.components = input.polygons.size();
    std::vector<ConvexPolygon> polys = input.polygons;
    const std::size_t m = polys.size();
    // Touching matrix, updated only for rows that change.
    std::vector<std::vector<char>> d(m, std::vector<char>(m, 0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            d[i][j] = d[j][i] = polygon_distance_at_most(polys[i], polys[j], opt.tolerance);

    for (;;) {
        std::optional<std::pair<std::size_t, std::size_t>> hit;
        for (std::size_t i = 0; i < polys.size() && !hit; ++i)
            for (std::size_t j = i + 1; j < polys.size(); ++j)
                if (d[i][j]) {
                    hit.emplace(i, j);
                    break;
                }
        if (!hit) break;
        const auto [i, j] = *hit;
        polys[i] = merge_polygons({&polys[i], &polys[j]});
        polys.erase(polys.begin() + static_cast<std::ptrdiff_t>(j));
        d.erase(d.begin() + static_cast<std::ptrdiff_t>(j));
        for (auto& row : d) row.erase(row.begin() + static_cast<std::ptrdiff_t>(j));
        ++r.merges;
        for (std::size_t k = 0; k < polys.size(); ++k) {
            if (polygons_conflict(polys[i], polys[k]))
                r.violations.push_back({r.merges, std::min(i, k), std::max(i, k), dot_range_polygons(polys[i], polys[k])});
            if (k != i) d[i][k] = d[k][i] = polygon_distance_at_most(polys[i], polys[k], opt.tolerance);
        }
    }
    r.decomposition.polygons = std::move(polys);
    r.decomposition.pairwise_min_distance = min_pairwise_distance(r.decomposition.polygons);
    auto final_check = certify_polygons(r.decomposition.polygons);
    r.violations.insert(r.violations.end(), final_check.begin(), final_check.end());
    return r;
}

/// conv2 after conv1; the report keeps conv1's input side and all violations.
inline ConvexifyReport conv(const CellSet& selection, const HullOptions& hull = {}, const MergeOptions& merge = {}) {
    const ConvexifyReport first = conv1(selection, hull);
    ConvexifyReport r = conv2(first.decomposition, merge);
    r.input_cells = first.input_cells;
    r.input_measure = first.input_measure;
    r.components = first.components;
    std::vector<PolygonViolation> all = first.violations;
    all.insert(all.end(), r.violations.begin(), r.violations.end());
    r.violations = std::move(all);
    return r;
}

// ---------------------------------------------------------------------------
// Hausdorff distance

struct HausdorffOptions {
    std::uint32_t initial_samples = 4;  // per edge
    std::uint32_t max_samples = 256;
    double tolerance = 1e-10;
};

namespace detail {

inline UnitVector arc_point(const UnitVector& a, const UnitVector& b, double t) {
    return UnitVector(a.vec() * (1 - t) + b.vec() * t);
}

inline double directed_hausdorff_at(const ConvexPolygon& from, const ConvexPolygon& to, std::uint32_t h) {
    double best = 0;
    for (const auto& [a, b] : from.edges())
        for (std::uint32_t i = 0; i < h; ++i)
            best = std::max(best, point_polygon_distance(arc_point(a, b, static_cast<double>(i) / h), to));
    return best;
}

}  // namespace detail

/// sup over the boundary of `from` of the distance to `to`, by boundary
/// sampling with doubling until the value settles.
inline double directed_hausdorff(const ConvexPolygon& from, const ConvexPolygon& to, const HausdorffOptions& opt = {}) {
    std::uint32_t h = std::max(1u, opt.initial_samples);
    double v = detail::directed_hausdorff_at(from, to, h);
    while (h <= opt.max_samples / 2) {
        h *= 2;
        const double next = detail::directed_hausdorff_at(from, to, h);
        const bool settled = std::abs(next - v) < opt.tolerance;
        v = std::max(v, next);
        if (settled) break;
    }
    return v;
}

inline double hausdorff_distance(const ConvexPolygon& p1, const ConvexPolygon& p2, const HausdorffOptions& opt = {}) {
    // Boundary samples of a polygon can round just outside it.
    if (p1.vertices() == p2.vertices()) return 0.0;
    return std::max(directed_hausdorff(p1, p2, opt), directed_hausdorff(p2, p1, opt));
}

// ---------------------------------------------------------------------------
// Property probes

namespace detail {

/// Rejection sampling from the polygon's bounding cap about its witness.
inline UnitVector sample_in_polygon(const ConvexPolygon& p, double radius, Rng& rng) {
    for (;;) {
        const UnitVector x = sample_in_cap(p.hemisphere_center(), radius, rng);
        if (p.contains(x, 0.0)) return x;
    }
}

inline std::vector<std::size_t> solid_polygons(const ConvexDecomposition& d) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d.polygons.size(); ++i)
        if (d.polygons[i].size() >= 3 && d.polygons[i].area() > 0) out.push_back(i);
    return out;
}

}  // namespace detail

struct TriangleWitness {
    std::size_t polygon = 0;
    UnitVector x, y, z;
    bool segment_escapes = false;  // some point of x-z fell outside
    double max_distance = 0;       // largest pairwise distance of x, y, z
};

struct TriangleLemmaReport {
    std::uint64_t trials = 0;
    std::uint64_t segment_violations = 0;
    std::uint64_t distance_violations = 0;
    std::vector<TriangleWitness> witnesses;  // first few

    bool passed() const { return segment_violations == 0 && distance_violations == 0; }
};

/// Random x, y, z in one polygon: the segment x-z must stay inside and all
/// three pairwise distances must be below pi/2.
inline TriangleLemmaReport check_triangle_lemma(const ConvexDecomposition& d, std::uint64_t trials, std::uint64_t seed,
                                                std::size_t max_witnesses = 10) {
    TriangleLemmaReport rep;
    const auto solid = detail::solid_polygons(d);
    if (solid.empty()) return rep;
    std::vector<double> radius(d.polygons.size());
    for (std::size_t i : solid) radius[i] = d.polygons[i].radius();
    Rng rng(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        const std::size_t k = solid[static_cast<std::size_t>(rng() % solid.size())];
        const ConvexPolygon& p = d.polygons[k];
        TriangleWitness w{k, detail::sample_in_polygon(p, radius[k], rng), detail::sample_in_polygon(p, radius[k], rng),
                          detail::sample_in_polygon(p, radius[k], rng)};
        for (int i = 1; i < 16 && !w.segment_escapes; ++i)
            w.segment_escapes = !p.contains(detail::arc_point(w.x, w.z, i / 16.0));
        w.max_distance = std::max({geodesic_distance(w.x, w.y), geodesic_distance(w.y, w.z), geodesic_distance(w.x, w.z)});
        const bool far = w.max_distance >= kPi / 2;
        ++rep.trials;
        rep.segment_violations += w.segment_escapes;
        rep.distance_violations += far;
        if ((w.segment_escapes || far) && rep.witnesses.size() < max_witnesses) rep.witnesses.push_back(w);
    }
    return rep;
}

struct PaschReport {
    std::uint64_t trials = 0;
    std::uint64_t violations = 0;

    bool passed() const { return violations == 0; }
};

/// Random triangle abc in one polygon and a random great circle through a
/// random point of ab; the circle must also meet bc or ca. Signs are taken on
/// the gnomonic images, where the great circle is a line.
inline PaschReport check_pasch(const ConvexDecomposition& d, std::uint64_t trials, std::uint64_t seed) {
    PaschReport rep;
    const auto solid = detail::solid_polygons(d);
    if (solid.empty()) return rep;
    std::vector<double> radius(d.polygons.size());
    for (std::size_t i : solid) radius[i] = d.polygons[i].radius();
    Rng rng(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        const std::size_t k = solid[static_cast<std::size_t>(rng() % solid.size())];
        const ConvexPolygon& poly = d.polygons[k];
        const TangentFrame f(poly.hemisphere_center());
        const UnitVector a = detail::sample_in_polygon(poly, radius[k], rng);
        const UnitVector b = detail::sample_in_polygon(poly, radius[k], rng);
        const UnitVector c = detail::sample_in_polygon(poly, radius[k], rng);
        const UnitVector p = detail::arc_point(a, b, uniform01(rng));
        Vec3 n = cross(p.vec(), sample_uniform(rng).vec());
        if (n.norm() < 1e-9) continue;
        n = n * (1.0 / n.norm());
        // The circle's image: n.c + x n.e1 + y n.e2 = 0.
        const double n0 = dot(n, f.center().vec()), n1 = dot(n, f.e1()), n2 = dot(n, f.e2());
        const auto side = [&](const UnitVector& v) {
            const PlanarPoint q = f.project(v);
            return n0 + q.x * n1 + q.y * n2;
        };
        const double sa = side(a), sb = side(b), sc = side(c);
        const double slack = 1e-12 * (std::abs(sa) + std::abs(sb) + std::abs(sc));
        ++rep.trials;
        if (sb * sc > slack * slack && sc * sa > slack * slack) ++rep.violations;
    }
    return rep;
}

}  // namespace opf
