#pragma once
// Orthogonal-pair detection between cells and between convex polygons, and
// the level-k conflict graph with its binary cache format.
//
// Two regions "conflict" when some u in the first and v in the second have
// <u, v> = 0. For closed regions the set of inner products is an interval
// [lo, hi], so conflict <=> lo <= 0 <= hi.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "convex_polygon.hpp"
#include "dyadic_grid.hpp"

namespace opf {

struct DotRange {
    double lo = 1, hi = -1;

    bool contains_zero(double margin = 0) const { return lo - margin <= 0 && 0 <= hi + margin; }
    bool contains(const DotRange& inner, double eps = 0) const { return lo <= inner.lo + eps && inner.hi <= hi + eps; }
};

namespace detail {

inline double sine_of(double z) { return std::sqrt(std::max(0.0, 1.0 - z * z)); }

// Range of cos(dphi) for dphi (in turns) in [lo, hi].
inline std::pair<double, double> cos_range_turns(double lo, double hi) {
    const double clo = cos_turns(lo), chi = cos_turns(hi);
    const double cmax = (std::floor(hi) >= lo) ? 1.0 : std::max(clo, chi);
    const double cmin = (std::floor(hi - 0.5) >= lo - 0.5) ? -1.0 : std::min(clo, chi);
    return {cmin, cmax};
}

// Extreme of f = z1 z2 + c s1 s2 over the (z1, z2) rectangle. f has no interior
// local extrema, so it suffices to take the corners and the stationary point
// of A cos(t) + B sin(t) along each edge.
inline double box_extreme(const Interval& z1, const Interval& z2, double c, bool want_max) {
    double best = want_max ? -2.0 : 2.0;
    const auto take = [&](double v) { best = want_max ? std::max(best, v) : std::min(best, v); };
    for (double a : {z1.lo, z1.hi})
        for (double b : {z2.lo, z2.hi}) take(a * b + c * sine_of(a) * sine_of(b));
    const auto edge = [&](double fixed, const Interval& free) {
        const double a = fixed, b = c * sine_of(fixed);
        const double r = std::hypot(a, b);
        if (r == 0) return;
        if (b >= 0 && free.contains(a / r)) take(r);
        if (b <= 0 && free.contains(-a / r)) take(-r);
    };
    edge(z2.lo, z1);
    edge(z2.hi, z1);
    edge(z1.lo, z2);
    edge(z1.hi, z2);
    return best;
}

}  // namespace detail

/// Exact range of <u, v> for u in box a, v in box b (both closed).
inline DotRange dot_range_boxes(const SphericalBox& a, const SphericalBox& b) {
    const auto [cmin, cmax] = detail::cos_range_turns(a.turns.lo - b.turns.hi, a.turns.hi - b.turns.lo);
    return {detail::box_extreme(a.z, b.z, cmin, false), detail::box_extreme(a.z, b.z, cmax, true)};
}

inline DotRange dot_range_cells(const DyadicCell& c1, const DyadicCell& c2) { return dot_range_boxes(c1.box(), c2.box()); }

/// Closed-cell semantics: true iff [lo - margin, hi + margin] contains 0.
inline bool cells_conflict(const DyadicCell& c1, const DyadicCell& c2, double margin = 0) {
    return dot_range_cells(c1, c2).contains_zero(margin);
}

/// hi = cos(min distance), lo = cos(max distance) = -cos(min distance to -P1).
inline DotRange dot_range_polygons(const ConvexPolygon& p1, const ConvexPolygon& p2) {
    return {-std::cos(polygon_distance(p1.negated(), p2)), std::cos(polygon_distance(p1, p2))};
}

/// Same verdict as dot_range_polygons(p1, p2).contains_zero(): both the
/// nearest and the farthest pair sit within pi/2 of orthogonal.
inline bool polygons_conflict(const ConvexPolygon& p1, const ConvexPolygon& p2) {
    return polygon_distance_at_most(p1, p2, kPi / 2) && polygon_distance_at_most(p1.negated(), p2, kPi / 2);
}

struct ConflictGraph {
    int level = 0;
    double margin = 0;
    std::vector<std::uint32_t> self_conflicts;                     // sorted ordinals
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // sorted, first < second

    std::uint32_t vertex_count() const { return static_cast<std::uint32_t>(cell_count(level)); }
    bool self_conflicting(std::uint32_t v) const {
        return std::binary_search(self_conflicts.begin(), self_conflicts.end(), v);
    }
    bool has_edge(std::uint32_t a, std::uint32_t b) const {
        if (a == b) return self_conflicting(a);
        return std::binary_search(edges.begin(), edges.end(), std::pair<std::uint32_t, std::uint32_t>(std::min(a, b), std::max(a, b)));
    }
    bool operator==(const ConflictGraph&) const = default;
};

/// Compressed adjacency of a conflict graph (self loops excluded).
struct Adjacency {
    std::vector<std::uint64_t> offsets;
    std::vector<std::uint32_t> targets;
    std::vector<char> self;

    explicit Adjacency(const ConflictGraph& g) : offsets(g.vertex_count() + 1, 0), self(g.vertex_count(), 0) {
        for (auto v : g.self_conflicts) self[v] = 1;
        for (const auto& [a, b] : g.edges) {
            ++offsets[a + 1];
            ++offsets[b + 1];
        }
        for (std::size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
        targets.resize(offsets.back());
        std::vector<std::uint64_t> fill(offsets.begin(), offsets.end() - 1);
        for (const auto& [a, b] : g.edges) {
            targets[fill[a]++] = b;
            targets[fill[b]++] = a;
        }
        for (std::size_t v = 0; v + 1 < offsets.size(); ++v)
            std::sort(targets.begin() + static_cast<std::ptrdiff_t>(offsets[v]),
                      targets.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]));
    }

    std::size_t size() const { return self.size(); }
    std::uint64_t degree(std::uint32_t v) const { return offsets[v + 1] - offsets[v]; }
    std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
        return {targets.data() + offsets[v], static_cast<std::size_t>(degree(v))};
    }
};

struct GraphBuildOptions {
    int max_level = 7;
    unsigned workers = 1;
};

/// Conflict between two level-k cells depends only on their bands and the
/// sector offset, so one dot-range evaluation per (band, band, offset) triple
/// covers the whole level. n^3 bytes; level 7 is 16 MiB.
class ConflictTable {
public:
    explicit ConflictTable(int level, double margin = 0) : level_(level), margin_(margin), n_(divisions_at(level)) {
        table_.resize(static_cast<std::size_t>(n_) * n_ * n_);
        for (std::uint32_t b1 = 0; b1 < n_; ++b1)
            for (std::uint32_t b2 = 0; b2 < n_; ++b2)
                for (std::uint32_t d = 0; d < n_; ++d)
                    table_[(static_cast<std::size_t>(b1) * n_ + b2) * n_ + d] =
                        cells_conflict(DyadicCell{level, b1, d}, DyadicCell{level, b2, 0}, margin);
    }

    int level() const { return level_; }
    double margin() const { return margin_; }

    bool conflict(std::uint32_t a, std::uint32_t b) const {
        const std::uint32_t b1 = a / n_, s1 = a % n_, b2 = b / n_, s2 = b % n_;
        return table_[(static_cast<std::size_t>(b1) * n_ + b2) * n_ + (s1 + n_ - s2) % n_] != 0;
    }

private:
    int level_;
    double margin_;
    std::uint32_t n_;
    std::vector<char> table_;
};

struct Violation {
    std::uint32_t a = 0, b = 0;  // a == b for a self-conflict
    bool operator==(const Violation&) const = default;
};

/// Every self-conflicting member and conflicting pair (a < b) of `ordinals`.
/// Stops after `limit` findings.
inline std::vector<Violation> find_violations(const ConflictTable& t, std::span<const std::uint32_t> ordinals,
                                              std::size_t limit = 1000) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < ordinals.size() && out.size() < limit; ++i) {
        if (t.conflict(ordinals[i], ordinals[i])) out.push_back({ordinals[i], ordinals[i]});
        for (std::size_t j = i + 1; j < ordinals.size() && out.size() < limit; ++j)
            if (t.conflict(ordinals[i], ordinals[j]))
                out.push_back({std::min(ordinals[i], ordinals[j]), std::max(ordinals[i], ordinals[j])});
    }
    return out;
}

/// All pairs and self-pairs at `level`. Output is independent of `workers`.
inline ConflictGraph build_conflict_graph(int level, double margin = 0, const GraphBuildOptions& opt = {}) {
    check_level(level);
    if (level > opt.max_level)
        fail(ErrorKind::resource_cap, "conflict graph level " + std::to_string(level) + " exceeds the configured maximum " +
                                          std::to_string(opt.max_level));
    const ConflictTable table(level, margin);
    const auto conflict = [&](std::uint32_t a, std::uint32_t b) { return table.conflict(a, b); };

    ConflictGraph g;
    g.level = level;
    g.margin = margin;
    const std::uint32_t cells = g.vertex_count();
    for (std::uint32_t a = 0; a < cells; ++a)
        if (conflict(a, a)) g.self_conflicts.push_back(a);

    const unsigned workers = std::max(1u, opt.workers);
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> parts(workers);
    const auto run = [&](unsigned w) {
        // Row blocks of equal pair count would balance better; contiguous rows keep the merge a concatenation.
        const std::uint32_t begin = static_cast<std::uint32_t>(std::uint64_t{cells} * w / workers);
        const std::uint32_t end = static_cast<std::uint32_t>(std::uint64_t{cells} * (w + 1) / workers);
        for (std::uint32_t a = begin; a < end; ++a)
            for (std::uint32_t b = a + 1; b < cells; ++b)
                if (conflict(a, b)) parts[w].emplace_back(a, b);
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    g.edges.reserve(total);
    for (auto& p : parts) g.edges.insert(g.edges.end(), p.begin(), p.end());
    return g;
}

// ---------------------------------------------------------------------------
// Cache file (little-endian):
//   "OPFCGRPH" | u32 version | u32 level | f64 margin | u64 n_self | u64 n_edges | u64 checksum
//   | n_self x u32 ordinal | n_edges x (u32 a, u32 b)
// The checksum is FNV-1a 64 over every byte after the magic except the checksum itself.

inline constexpr std::uint32_t kGraphFormatVersion = 1;
inline constexpr char kGraphMagic[8] = {'O', 'P', 'F', 'C', 'G', 'R', 'P', 'H'};

namespace detail {

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    }
};

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

template <class T>
T get_le(const unsigned char* p) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_graph(const ConflictGraph& g) {
    std::vector<unsigned char> head, body;
    detail::put_le<std::uint32_t>(head, kGraphFormatVersion);
    detail::put_le<std::uint32_t>(head, static_cast<std::uint32_t>(g.level));
    detail::put_le<std::uint64_t>(head, std::bit_cast<std::uint64_t>(g.margin));
    detail::put_le<std::uint64_t>(head, g.self_conflicts.size());
    detail::put_le<std::uint64_t>(head, g.edges.size());
    body.reserve(4 * g.self_conflicts.size() + 8 * g.edges.size());
    for (auto v : g.self_conflicts) detail::put_le<std::uint32_t>(body, v);
    for (const auto& [a, b] : g.edges) {
        detail::put_le<std::uint32_t>(body, a);
        detail::put_le<std::uint32_t>(body, b);
    }
    detail::Fnv1a fnv;
    fnv.add(head.data(), head.size());
    fnv.add(body.data(), body.size());

    std::vector<unsigned char> out(kGraphMagic, kGraphMagic + 8);
    out.insert(out.end(), head.begin(), head.end());
    detail::put_le<std::uint64_t>(out, fnv.h);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline ConflictGraph decode_graph(std::span<const unsigned char> bytes) {
    const auto corrupt = [](const std::string& why) { fail(ErrorKind::corrupt_cache, "conflict graph cache: " + why); };
    constexpr std::size_t head_size = 4 + 4 + 8 + 8 + 8;
    if (bytes.size() < 8 + head_size + 8 || std::memcmp(bytes.data(), kGraphMagic, 8) != 0) corrupt("bad magic");
    const unsigned char* head = bytes.data() + 8;
    if (detail::get_le<std::uint32_t>(head) != kGraphFormatVersion) corrupt("unsupported version");
    ConflictGraph g;
    g.level = static_cast<int>(detail::get_le<std::uint32_t>(head + 4));
    g.margin = std::bit_cast<double>(detail::get_le<std::uint64_t>(head + 8));
    const auto n_self = detail::get_le<std::uint64_t>(head + 16);
    const auto n_edges = detail::get_le<std::uint64_t>(head + 24);
    const auto checksum = detail::get_le<std::uint64_t>(head + head_size);
    const unsigned char* body = head + head_size + 8;
    const std::size_t body_size = bytes.size() - (8 + head_size + 8);
    if (g.level < 0 || g.level > kMaxGridLevel) corrupt("bad level");
    if (n_self > body_size / 4 || n_edges > body_size / 8 || 4 * n_self + 8 * n_edges != body_size) corrupt("bad length");
    detail::Fnv1a fnv;
    fnv.add(head, head_size);
    fnv.add(body, body_size);
    if (fnv.h != checksum) corrupt("checksum mismatch");
    g.self_conflicts.resize(n_self);
    for (std::size_t i = 0; i < n_self; ++i) g.self_conflicts[i] = detail::get_le<std::uint32_t>(body + 4 * i);
    const unsigned char* e = body + 4 * n_self;
    g.edges.resize(n_edges);
    for (std::size_t i = 0; i < n_edges; ++i)
        g.edges[i] = {detail::get_le<std::uint32_t>(e + 8 * i), detail::get_le<std::uint32_t>(e + 8 * i + 4)};
    return g;
}

inline void save_graph(const ConflictGraph& g, const std::string& path) {
    const auto bytes = encode_graph(g);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "failed writing " + path);
}

inline ConflictGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_graph(bytes);
}

/// Loads `path` when it holds a graph for (level, margin); otherwise calls
/// `build` and writes the result. Corrupt files are reported, not rebuilt.
inline ConflictGraph load_or_build_graph(const std::string& path, int level, double margin,
                                         const std::function<ConflictGraph()>& build) {
    if (std::ifstream probe(path, std::ios::binary); probe) {
        probe.close();
        ConflictGraph g = load_graph(path);
        if (g.level == level && g.margin == margin) return g;
    }
    ConflictGraph g = build();
    save_graph(g, path);
    return g;
}

}  // namespace opf
