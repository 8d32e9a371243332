#pragma once
// Geodesic convex polygons inside an open hemisphere, plus the distance
// primitives used by conflict tests, convexification and Hausdorff distance.
//
// Hulls of cell unions carry tens of thousands of vertices, so containment
// uses a fan binary search and distances go through a tree of bounding caps
// over contiguous edge runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "sphere_core.hpp"

namespace opf {

/// Distance from p to the minor arc a-b (a == b allowed).
inline double point_arc_distance(const UnitVector& p, const UnitVector& a, const UnitVector& b) {
    const Vec3 n = cross(a.vec(), b.vec());
    const double nn = n.norm();
    const double ends = std::min(geodesic_distance(p, a), geodesic_distance(p, b));
    if (nn < 1e-15) return ends;
    const Vec3 nh = n * (1.0 / nn);
    const double h = dot(p.vec(), nh);
    const Vec3 q = p.vec() - nh * h;
    const double qn = q.norm();
    if (qn < 1e-15) return ends;  // p is a pole of the arc's great circle
    const Vec3 f = q * (1.0 / qn);
    if (dot(cross(a.vec(), f), nh) >= 0 && dot(cross(f, b.vec()), nh) >= 0) return std::atan2(std::abs(h), qn);
    return ends;
}

namespace detail {

inline bool on_arc(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& nh, double eps) {
    return dot(cross(a, x), nh) >= -eps && dot(cross(x, b), nh) >= -eps && dot(x, a + b) > 0;
}

}  // namespace detail

/// True if two minor arcs share a point (within `eps` radians).
inline bool arcs_intersect(const UnitVector& a, const UnitVector& b, const UnitVector& c, const UnitVector& d,
                           double eps = tol::predicate) {
    const Vec3 n1 = cross(a.vec(), b.vec()), n2 = cross(c.vec(), d.vec());
    const double l1 = n1.norm(), l2 = n2.norm();
    if (l1 < 1e-15 || l2 < 1e-15 || cross(n1, n2).norm() < 1e-15 * l1 * l2) {
        return point_arc_distance(a, c, d) <= eps || point_arc_distance(b, c, d) <= eps ||
               point_arc_distance(c, a, b) <= eps || point_arc_distance(d, a, b) <= eps;
    }
    const Vec3 n1h = n1 * (1.0 / l1), n2h = n2 * (1.0 / l2);
    Vec3 x = cross(n1h, n2h);
    x = x * (1.0 / x.norm());
    for (const Vec3& cand : {x, -x})
        if (detail::on_arc(cand, a.vec(), b.vec(), n1h, eps) && detail::on_arc(cand, c.vec(), d.vec(), n2h, eps))
            return true;
    return false;
}

/// Distance between two minor arcs: 0 if they cross, else the best endpoint.
inline double arc_arc_distance(const UnitVector& a, const UnitVector& b, const UnitVector& c, const UnitVector& d) {
    if (arcs_intersect(a, b, c, d, 0.0)) return 0.0;
    return std::min({point_arc_distance(a, c, d), point_arc_distance(b, c, d), point_arc_distance(c, a, b),
                     point_arc_distance(d, a, b)});
}

namespace detail {

// A point, arc or triangle used as a cheap bounding shape.
struct Shape {
    std::array<UnitVector, 3> v;
    int n = 0;  // 0: none
};

inline bool in_triangle(const Shape& s, const UnitVector& p) {
    const double o = dot(cross(s.v[0].vec(), s.v[1].vec()), s.v[2].vec());
    if (o == 0 || !(dot(p.vec(), s.v[0].vec() + s.v[1].vec() + s.v[2].vec()) > 0)) return false;
    for (int i = 0; i < 3; ++i)
        if (dot(cross(s.v[i].vec(), s.v[(i + 1) % 3].vec()), p.vec()) * o < 0) return false;
    return true;
}

inline int shape_edges(const Shape& s) { return s.n == 3 ? 3 : 1; }

inline double shape_point_distance(const Shape& s, const UnitVector& p) {
    if (s.n == 3 && in_triangle(s, p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < shape_edges(s); ++i) best = std::min(best, point_arc_distance(p, s.v[i], s.v[(i + 1) % s.n]));
    return best;
}

inline double shape_distance(const Shape& x, const Shape& y) {
    if ((y.n == 3 && in_triangle(y, x.v[0])) || (x.n == 3 && in_triangle(x, y.v[0]))) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < shape_edges(x); ++i)
        for (int j = 0; j < shape_edges(y); ++j)
            best = std::min(best, arc_arc_distance(x.v[i], x.v[(i + 1) % x.n], y.v[j], y.v[(j + 1) % y.n]));
    return best;
}

// Tree over runs of consecutive edges. Each node keeps a bounding cap (a cap
// narrower than a hemisphere is convex, so holding both ends of an arc means
// holding the arc) and, for runs of a convex polygon that turn by less than
// pi/2, the triangle between the chord and the tangent lines at both ends.
// The run lies inside that triangle, which stays thin where the cap is fat.
class EdgeTree {
public:
    using Edge = std::pair<UnitVector, UnitVector>;

    struct Node {
        UnitVector center;
        double radius = kPi;
        Shape shape;
        std::uint32_t lo = 0, hi = 0;
        std::int32_t left = -1, right = -1;
    };

    explicit EdgeTree(std::vector<Edge> edges) : edges_(std::move(edges)) {
        if (edges_.empty()) return;
        turn_.assign(edges_.size() + 1, 0.0);
        for (std::size_t i = 1; i < edges_.size(); ++i) {
            const Vec3 a = cross(edges_[i - 1].first.vec(), edges_[i - 1].second.vec());
            const Vec3 b = cross(edges_[i].first.vec(), edges_[i].second.vec());
            turn_[i + 1] = turn_[i] + std::atan2(cross(a, b).norm(), dot(a, b));
        }
        build(0, static_cast<std::uint32_t>(edges_.size()));
    }

    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Node>& nodes() const { return nodes_; }

    double lower_bound(const UnitVector& p, const Node& n, double best) const {
        const double cap = std::max(0.0, geodesic_distance(p, n.center) - n.radius);
        if (cap >= best || n.shape.n == 0) return cap;
        return std::max(cap, shape_point_distance(n.shape, p));
    }

    /// min over edges of point_arc_distance, or `best` if nothing beats it.
    double point_distance(const UnitVector& p, double best = std::numeric_limits<double>::infinity()) const {
        if (nodes_.empty()) return best;
        std::vector<std::pair<double, std::int32_t>> stack{{0.0, 0}};
        while (!stack.empty()) {
            const auto [lb, id] = stack.back();
            stack.pop_back();
            if (lb >= best) continue;
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.left < 0) {
                for (std::uint32_t i = n.lo; i < n.hi; ++i)
                    best = std::min(best, point_arc_distance(p, edges_[i].first, edges_[i].second));
                continue;
            }
            const double dl = lower_bound(p, nodes_[static_cast<std::size_t>(n.left)], best);
            const double dr = lower_bound(p, nodes_[static_cast<std::size_t>(n.right)], best);
            // Nearer child on top.
            if (dl < dr) {
                stack.emplace_back(dr, n.right);
                stack.emplace_back(dl, n.left);
            } else {
                stack.emplace_back(dl, n.left);
                stack.emplace_back(dr, n.right);
            }
        }
        return best;
    }

    /// min arc-to-arc distance between the two edge sets. Subtrees farther
    /// than `prune_above` are skipped and the search ends once the best is
    /// at or below `stop_at`, so with both set to a limit L the result is
    /// <= L exactly when the true distance is.
    static double distance(const EdgeTree& s, const EdgeTree& t, double stop_at = 0,
                           double prune_above = std::numeric_limits<double>::infinity()) {
        double best = std::numeric_limits<double>::infinity();
        if (s.nodes_.empty() || t.nodes_.empty()) return best;
        const auto bound = [&](std::int32_t i, std::int32_t j) {
            const Node& a = s.nodes_[static_cast<std::size_t>(i)];
            const Node& b = t.nodes_[static_cast<std::size_t>(j)];
            const double cap = std::max(0.0, geodesic_distance(a.center, b.center) - a.radius - b.radius);
            if (cap >= best || cap > prune_above || a.shape.n == 0 || b.shape.n == 0) return cap;
            return std::max(cap, shape_distance(a.shape, b.shape));
        };
        struct Item {
            double lb;
            std::int32_t i, j;
        };
        std::vector<Item> stack{{0.0, 0, 0}};
        while (!stack.empty() && best > stop_at) {
            const Item it = stack.back();
            stack.pop_back();
            if (it.lb >= best || it.lb > prune_above) continue;
            const Node& a = s.nodes_[static_cast<std::size_t>(it.i)];
            const Node& b = t.nodes_[static_cast<std::size_t>(it.j)];
            const bool leaf_a = a.left < 0, leaf_b = b.left < 0;
            if (leaf_a && leaf_b) {
                for (std::uint32_t x = a.lo; x < a.hi; ++x)
                    for (std::uint32_t y = b.lo; y < b.hi; ++y) {
                        const auto& [p, q] = s.edges_[x];
                        const auto& [u, v] = t.edges_[y];
                        best = std::min(best, arc_arc_distance(p, q, u, v));
                    }
                continue;
            }
            Item c1, c2;
            if (!leaf_a && (leaf_b || a.hi - a.lo >= b.hi - b.lo)) {
                c1 = {bound(a.left, it.j), a.left, it.j};
                c2 = {bound(a.right, it.j), a.right, it.j};
            } else {
                c1 = {bound(it.i, b.left), it.i, b.left};
                c2 = {bound(it.i, b.right), it.i, b.right};
            }
            if (c1.lb < c2.lb) std::swap(c1, c2);
            stack.push_back(c1);
            stack.push_back(c2);
        }
        return best;
    }

private:
    static constexpr std::uint32_t kLeaf = 4;

    Shape run_shape(std::uint32_t lo, std::uint32_t hi) const {
        Shape s;
        const UnitVector& a = edges_[lo].first;
        const UnitVector& b = edges_[hi - 1].second;
        if (hi - lo == 1) {
            s.v = {a, b, b};
            s.n = 2;
            return s;
        }
        if (!(turn_[hi] - turn_[lo + 1] < kPi / 2)) return s;
        const Vec3 nf = cross(edges_[lo].first.vec(), edges_[lo].second.vec());
        const Vec3 nl = cross(edges_[hi - 1].first.vec(), edges_[hi - 1].second.vec());
        Vec3 t = cross(nf, nl);
        // Nearly straight runs have no reliable apex.
        if (t.norm() < 1e-9 * nf.norm() * nl.norm()) return s;
        if (dot(t, a.vec() + b.vec()) < 0) t = -t;
        const UnitVector apex(t);
        // The apex sits on the outer side of the chord a -> b.
        if (dot(cross(a.vec(), b.vec()), apex.vec()) > 0) return s;
        s.v = {a, apex, b};
        s.n = 3;
        return s;
    }

    std::int32_t build(std::uint32_t lo, std::uint32_t hi) {
        Vec3 sum;
        for (std::uint32_t i = lo; i < hi; ++i) sum += edges_[i].first.vec() + edges_[i].second.vec();
        Node n;
        n.lo = lo;
        n.hi = hi;
        if (sum.norm() > 1e-12) {
            n.center = UnitVector(sum);
            double r = 0;
            for (std::uint32_t i = lo; i < hi; ++i)
                r = std::max({r, geodesic_distance(n.center, edges_[i].first),
                              geodesic_distance(n.center, edges_[i].second)});
            n.radius = r < kPi / 2 - 1e-6 ? r * (1 + 1e-12) + 1e-15 : kPi;
        }
        if (edges_.size() >= 3) n.shape = run_shape(lo, hi);
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(n);
        if (hi - lo > kLeaf) {
            const std::uint32_t mid = lo + (hi - lo) / 2;
            const std::int32_t l = build(lo, mid);
            const std::int32_t r = build(mid, hi);
            nodes_[static_cast<std::size_t>(id)].left = l;
            nodes_[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }

    std::vector<Edge> edges_;
    std::vector<double> turn_;  // turn_[i]: turning from edge 0 to edge i-1
    std::vector<Node> nodes_;
};

}  // namespace detail

/// Vertices are counterclockwise seen from outside the sphere and lie within
/// pi/2 - 1e-9 of `hemisphere_center`. One or two vertices describe a point
/// or a geodesic segment.
class ConvexPolygon {
public:
    ConvexPolygon() = default;
    ConvexPolygon(std::vector<UnitVector> vertices, UnitVector hemisphere_center)
        : vertices_(std::move(vertices)), center_(hemisphere_center) {
        if (vertices_.empty()) fail(ErrorKind::domain, "polygon has no vertices");
        const double min_height = std::sin(tol::predicate);
        for (const auto& v : vertices_)
            if (!(dot(v, center_) > min_height))
                fail(ErrorKind::out_of_hemisphere, "polygon vertex is not inside the witness hemisphere");
        tree_ = std::make_shared<const detail::EdgeTree>(edges());
    }

    const std::vector<UnitVector>& vertices() const { return vertices_; }
    const UnitVector& hemisphere_center() const { return center_; }
    std::size_t size() const { return vertices_.size(); }

    /// Edges as (start, end); a point polygon yields one degenerate edge.
    std::vector<std::pair<UnitVector, UnitVector>> edges() const {
        std::vector<std::pair<UnitVector, UnitVector>> out;
        const std::size_t n = vertices_.size();
        if (n == 1) out.emplace_back(vertices_[0], vertices_[0]);
        else if (n == 2) out.emplace_back(vertices_[0], vertices_[1]);
        else
            for (std::size_t i = 0; i < n; ++i) out.emplace_back(vertices_[i], vertices_[(i + 1) % n]);
        return out;
    }

    /// Sum of signed fan triangles about the center, each by the
    /// tan(E/2) = |a.(b x c)| / (1 + a.b + b.c + c.a) formula. Stays accurate
    /// with tens of thousands of nearly straight vertices, where angle-sum
    /// cancellation would not.
    double area() const {
        const std::size_t n = vertices_.size();
        if (n < 3) return 0.0;
        const Vec3& c = center_.vec();
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& a = vertices_[i].vec();
            const Vec3& b = vertices_[(i + 1) % n].vec();
            sum += 2 * std::atan2(dot(c, cross(a, b)), 1 + dot(c, a) + dot(a, b) + dot(b, c));
        }
        return std::max(0.0, sum);
    }

    /// Closed containment with `eps` radians of slack past each edge.
    bool contains(const UnitVector& p, double eps = tol::predicate) const {
        const std::size_t n = vertices_.size();
        if (n < 3) return point_arc_distance(p, vertices_.front(), vertices_.back()) <= eps;
        if (!(dot(p, center_) > 0)) return false;
        const auto outside = [&](std::size_t i, std::size_t j) {
            const Vec3 e = cross(vertices_[i].vec(), vertices_[j].vec());
            const double len = e.norm();
            return len >= 1e-15 && dot(e, p.vec()) < -eps * len;
        };
        if (outside(0, 1) || outside(n - 1, 0)) return false;
        // The fan planes through v0 turn monotonically; find the wedge holding p.
        const Vec3& v0 = vertices_[0].vec();
        std::size_t lo = 1, hi = n - 2;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (dot(cross(v0, vertices_[mid].vec()), p.vec()) >= 0) lo = mid;
            else hi = mid - 1;
        }
        return !outside(lo, lo + 1);
    }

    /// Left turn at every vertex in gnomonic coordinates about the center.
    bool is_convex(double eps = 1e-12) const {
        const std::size_t n = vertices_.size();
        if (n < 3) return true;
        const TangentFrame f(center_);
        for (std::size_t i = 0; i < n; ++i) {
            const PlanarPoint a = f.project(vertices_[i]), b = f.project(vertices_[(i + 1) % n]),
                              c = f.project(vertices_[(i + 2) % n]);
            if ((b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) < -eps) return false;
        }
        return true;
    }

    /// Largest geodesic distance from the center to a vertex.
    double radius() const {
        double r = 0;
        for (const auto& v : vertices_) r = std::max(r, geodesic_distance(center_, v));
        return r;
    }

    /// Image under p -> -p (orientation restored by reversing the vertex order).
    ConvexPolygon negated() const {
        std::vector<UnitVector> v;
        v.reserve(vertices_.size());
        for (auto it = vertices_.rbegin(); it != vertices_.rend(); ++it) v.push_back(-*it);
        return {std::move(v), -center_};
    }

    const detail::EdgeTree& edge_tree() const { return *tree_; }

private:
    std::vector<UnitVector> vertices_;
    UnitVector center_;
    std::shared_ptr<const detail::EdgeTree> tree_;
};

inline double point_polygon_distance(const UnitVector& p, const ConvexPolygon& poly) {
    if (poly.size() >= 3 && poly.contains(p, 0.0)) return 0.0;
    return poly.edge_tree().point_distance(p);
}

/// inf d(x, y) over x in P1, y in P2; zero iff the closures meet.
inline double polygon_distance(const ConvexPolygon& p1, const ConvexPolygon& p2) {
    // Disjoint boundaries leave nesting as the only way to meet.
    if (p2.size() >= 3 && p2.contains(p1.vertices().front(), 0.0)) return 0.0;
    if (p1.size() >= 3 && p1.contains(p2.vertices().front(), 0.0)) return 0.0;
    return detail::EdgeTree::distance(p1.edge_tree(), p2.edge_tree());
}

/// polygon_distance(p1, p2) <= limit, without computing it in full.
inline bool polygon_distance_at_most(const ConvexPolygon& p1, const ConvexPolygon& p2, double limit) {
    if (p2.size() >= 3 && p2.contains(p1.vertices().front(), 0.0)) return true;
    if (p1.size() >= 3 && p1.contains(p2.vertices().front(), 0.0)) return true;
    return detail::EdgeTree::distance(p1.edge_tree(), p2.edge_tree(), limit, limit) <= limit;
}

/// Exact distance when it is below `bound`, otherwise some value >= bound.
inline double polygon_distance_below(const ConvexPolygon& p1, const ConvexPolygon& p2, double bound) {
    if (p2.size() >= 3 && p2.contains(p1.vertices().front(), 0.0)) return 0.0;
    if (p1.size() >= 3 && p1.contains(p2.vertices().front(), 0.0)) return 0.0;
    return detail::EdgeTree::distance(p1.edge_tree(), p2.edge_tree(), 0, bound);
}

inline bool polygons_intersect(const ConvexPolygon& p1, const ConvexPolygon& p2, double eps = tol::predicate) {
    return polygon_distance_at_most(p1, p2, eps);
}

/// Planar convex hull (monotone chain) of the gnomonic images about `center`,
/// mapped back to the sphere. Collinear points are dropped.
inline ConvexPolygon hull_of_points(std::span<const UnitVector> pts, const UnitVector& center) {
    if (pts.empty()) fail(ErrorKind::domain, "hull of an empty point set");
    const TangentFrame frame(center);
    std::vector<PlanarPoint> q;
    q.reserve(pts.size());
    double scale = 0;
    for (const auto& p : pts) {
        q.push_back(frame.project(p));
        scale = std::max({scale, std::abs(q.back().x), std::abs(q.back().y)});
    }
    std::sort(q.begin(), q.end(), [](const PlanarPoint& a, const PlanarPoint& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    const double eps = 1e-14 * std::max(1.0, scale * scale);
    const auto turn = [](const PlanarPoint& o, const PlanarPoint& a, const PlanarPoint& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<PlanarPoint> h(2 * q.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        while (k >= 2 && turn(h[k - 2], h[k - 1], q[i]) <= eps) --k;
        h[k++] = q[i];
    }
    for (std::size_t i = q.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && turn(h[k - 2], h[k - 1], q[i]) <= eps) --k;
        h[k++] = q[i];
    }
    h.resize(k > 1 ? k - 1 : k);
    // Duplicate points collapse to a single vertex.
    std::vector<UnitVector> verts;
    for (const auto& p : h) {
        UnitVector u = frame.unproject(p);
        if (verts.empty() || geodesic_distance(verts.back(), u) > 0) verts.push_back(u);
    }
    while (verts.size() > 1 && geodesic_distance(verts.front(), verts.back()) == 0) verts.pop_back();
    return {std::move(verts), center};
}

}  // namespace opf
