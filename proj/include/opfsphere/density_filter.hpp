#pragma once
// Dense-cell selection for a measurable set given by a membership oracle.
//
// For a set M and a level k, keep every cell c with mu(c & M) >= (1 - eps) mu(c)
// and report how much of M the kept cells capture. Densities are exact where
// the oracle allows it (pole-centred caps, cell unions, the sieve), computed
// by quadrature for off-pole caps, and sampled otherwise.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "convex_polygon.hpp"
#include "dyadic_grid.hpp"

namespace opf {

/// Open cap of angular radius `radius` (in [0, pi]) about `center`.
struct CapOracle {
    UnitVector center = UnitVector::north();
    double radius = kPi / 4;
};

/// Union of the open caps of radius `radius` about both poles.
struct DoubleCapOracle {
    double radius = kPi / 4;
};

struct CellSetOracle {
    CellSet cells;
};

struct PolygonSetOracle {
    std::vector<ConvexPolygon> polygons;
};

/// Depth-truncated sieve: starting from the four level-0 cells, step i refines
/// every kept cell and, for kept parents whose ordinal is a multiple of
/// 2^(i-1), throws away the (odd band, odd sector) child. The removed share
/// shrinks each step, so the limit keeps positive measure with no interior
/// ball surviving everywhere.
struct SieveOracle {
    int depth = 3;
};

using MembershipOracle = std::variant<CapOracle, DoubleCapOracle, CellSetOracle, PolygonSetOracle, SieveOracle>;

inline CellSet sieve_cells(int depth) {
    check_level(depth);
    CellSet cur = CellSet::all(0);
    for (int i = 1; i <= depth; ++i) {
        const std::uint64_t stride = std::uint64_t{1} << (i - 1);
        std::vector<std::uint32_t> next;
        next.reserve(cur.size() * 4);
        for (auto o : cur.ordinals()) {
            const bool sieved = o % stride == 0;
            for (const auto& ch : refine(DyadicCell::from_ordinal(i - 1, o)))
                if (!(sieved && ch.band % 2 == 1 && ch.sector % 2 == 1)) next.push_back(ch.ordinal());
        }
        cur = CellSet(i, std::move(next));
    }
    return cur;
}

inline std::string oracle_kind(const MembershipOracle& m) {
    struct {
        std::string operator()(const CapOracle&) const { return "cap"; }
        std::string operator()(const DoubleCapOracle&) const { return "double_cap"; }
        std::string operator()(const CellSetOracle&) const { return "cell_set"; }
        std::string operator()(const PolygonSetOracle&) const { return "polygon_set"; }
        std::string operator()(const SieveOracle&) const { return "sieve_fractal"; }
    } v;
    return std::visit(v, m);
}

namespace detail {

inline bool cellset_contains_point(const CellSet& s, const UnitVector& p) { return s.contains(locate_point(p, s.level())); }

inline bool in_double_cap(double r, double z) {
    const double c = std::cos(r);
    return z > c || z < -c;
}

// Length of [a, b] (turns, b - a <= 1) overlapping [lo, hi] modulo 1.
inline double circular_overlap(double a, double b, double lo, double hi) {
    double total = 0;
    for (int k = -1; k <= 1; ++k) total += std::max(0.0, std::min(b + k, hi) - std::max(a + k, lo));
    return total;
}

// Measure of z-interval [lo, hi] falling in {z > t} (north) or {z < t}.
inline double above(const Interval& z, double t) { return std::max(0.0, z.hi - std::max(z.lo, t)); }
inline double below(const Interval& z, double t) { return std::max(0.0, std::min(z.hi, t) - z.lo); }

// Fraction of `cells` (any level) covering `c`.
inline double cellset_density(const CellSet& s, const DyadicCell& c) {
    if (s.level() <= c.level) return s.contains(ancestor(c, s.level())) ? 1.0 : 0.0;
    const int diff = s.level() - c.level;
    std::uint64_t hits = 0;
    for (auto o : s.ordinals()) hits += ancestor(DyadicCell::from_ordinal(s.level(), o), c.level) == c;
    return std::ldexp(static_cast<double>(hits), -2 * diff);
}

// The phi-slice of the cap at height z is an arc of half-width w(z) about
// the centre's azimuth. The slice length inside the cell changes form only
// where w hits 0 or pi or an arc end crosses a cell meridian; those heights
// are solved for exactly and each smooth piece is integrated on its own.
inline double off_pole_cap_density(const CapOracle& cap, const DyadicCell& c) {
    const Interval z = c.cos_theta(), t = c.turns();
    const double cz = cap.center.z(), sc = std::sqrt(std::max(0.0, 1 - cz * cz));
    const double ct = azimuth(cap.center.vec()) / kTwoPi;
    const double cr = std::cos(cap.radius);
    const auto slice = [&](double zz) {
        const double s = std::sqrt(std::max(0.0, 1 - zz * zz));
        const double den = s * sc;
        if (den == 0) return zz * cz > cr ? t.width() : 0.0;
        const double q = (cr - zz * cz) / den;
        if (q <= -1) return t.width();
        if (q >= 1) return 0.0;
        const double w = std::acos(q) / kTwoPi;
        return circular_overlap(ct - w, ct + w, t.lo, t.hi);
    };

    // Heights where z cz + sqrt(1 - z^2) sc cos(d) = cr for the critical d.
    std::vector<double> cuts{z.lo, z.hi};
    const auto solve = [&](double cos_d) {
        const double a = cz, b = sc * cos_d;
        const double r = std::hypot(a, b);
        if (r == 0 || std::abs(cr) > r) return;
        const double alpha = std::atan2(b, a), beta = std::acos(cr / r);
        for (double th : {alpha - beta, alpha + beta})
            if (th >= 0 && th <= kPi) cuts.push_back(std::cos(th));
    };
    solve(1.0);
    solve(-1.0);
    for (double edge : {t.lo, t.hi}) solve(cos_turns(edge - ct));
    std::sort(cuts.begin(), cuts.end());

    boost::math::quadrature::tanh_sinh<double> integrator;
    double integral = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(cuts[i], z.lo), b = std::min(cuts[i + 1], z.hi);
        if (!(b > a)) continue;
        const double mid = slice(0.5 * (a + b));
        if (mid == 0 || mid == t.width()) {
            integral += mid * (b - a);
            continue;
        }
        integral += integrator.integrate(slice, a, b, 1e-12);
    }
    return std::clamp(integral / (z.width() * t.width()), 0.0, 1.0);
}

}  // namespace detail

/// Exact point membership.
inline bool oracle_contains(const MembershipOracle& m, const UnitVector& p) {
    struct {
        const UnitVector& p;
        bool operator()(const CapOracle& o) const { return dot(o.center, p) > std::cos(o.radius); }
        bool operator()(const DoubleCapOracle& o) const { return detail::in_double_cap(o.radius, p.z()); }
        bool operator()(const CellSetOracle& o) const { return detail::cellset_contains_point(o.cells, p); }
        bool operator()(const PolygonSetOracle& o) const {
            return std::any_of(o.polygons.begin(), o.polygons.end(), [&](const auto& q) { return q.contains(p, 0); });
        }
        bool operator()(const SieveOracle& o) const {
            return detail::cellset_contains_point(sieve_cells(o.depth), p);
        }
    } v{p};
    return std::visit(v, m);
}

/// mu(M) in steradians when it has a closed form. Polygon sets are assumed
/// pairwise disjoint.
inline std::optional<double> oracle_measure(const MembershipOracle& m) {
    if (const auto* o = std::get_if<CapOracle>(&m)) return cap_area(o->radius);
    if (const auto* o = std::get_if<DoubleCapOracle>(&m)) {
        const double c = std::cos(o->radius);
        return c >= 0 ? 2 * cap_area(o->radius) : kFourPi;
    }
    if (const auto* o = std::get_if<CellSetOracle>(&m)) return o->cells.measure();
    if (const auto* o = std::get_if<SieveOracle>(&m)) return sieve_cells(o->depth).measure();
    if (const auto* o = std::get_if<PolygonSetOracle>(&m)) {
        double a = 0;
        for (const auto& q : o->polygons) a += q.area();
        return a;
    }
    return std::nullopt;
}

struct DensityEstimate {
    double value = 0;
    double std_error = 0;
    bool exact = false;  // closed form or quadrature; std_error is 0
};

/// mu(c & M) / mu(c). Sampling is area-uniform in the cell with a seed derived
/// from (seed, ordinal), so results do not depend on evaluation order.
inline DensityEstimate estimate_cell_density(const MembershipOracle& m, const DyadicCell& c, std::uint64_t samples,
                                             std::uint64_t seed) {
    const Interval z = c.cos_theta();
    if (const auto* o = std::get_if<CapOracle>(&m)) {
        if (o->radius >= kPi) return {1.0, 0, true};
        if (o->radius <= 0) return {0.0, 0, true};
        if (o->center.vec() == UnitVector::north().vec()) return {detail::above(z, std::cos(o->radius)) / z.width(), 0, true};
        if (o->center.vec() == UnitVector::south().vec()) return {detail::below(z, -std::cos(o->radius)) / z.width(), 0, true};
        return {detail::off_pole_cap_density(*o, c), 0, true};
    }
    if (const auto* o = std::get_if<DoubleCapOracle>(&m)) {
        const double t = std::cos(o->radius);
        if (t <= 0) return {1.0, 0, true};
        return {(detail::above(z, t) + detail::below(z, -t)) / z.width(), 0, true};
    }
    if (const auto* o = std::get_if<CellSetOracle>(&m)) return {detail::cellset_density(o->cells, c), 0, true};
    if (const auto* o = std::get_if<SieveOracle>(&m)) return {detail::cellset_density(sieve_cells(o->depth), c), 0, true};

    if (samples < 100) fail(ErrorKind::domain, "density estimation needs at least 100 samples");
    Rng rng(derive_seed(seed, c.ordinal()));
    const SphericalBox box = c.box();
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < samples; ++i) hits += oracle_contains(m, sample_in_box(box, rng));
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1 - p) / static_cast<double>(samples)), false};
}

inline constexpr double kDensityBeta = 1.0 / 64;

/// strict: 0 < eps < 1/64, the range under which captured measure is
/// guaranteed for a fine enough level. relaxed: 0 < eps < 1, reported as out
/// of range.
enum class EpsilonPolicy { strict, relaxed };

struct CellDensity {
    DyadicCell cell;
    DensityEstimate density;
    bool selected = false;
};

struct DensityReport {
    std::string oracle;
    int level = 0;
    double epsilon = 0;
    double beta = kDensityBeta;
    bool within_beta = false;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    CellSet selected;
    std::vector<CellDensity> cells;  // every cell with positive density, ordinal order
    double captured_measure = 0;     // sum of density * cell area over selected cells
    double captured_std_error = 0;
    std::optional<double> oracle_measure;
    bool captured_exceeds_bound = false;  // captured > (1 - eps) mu(M), when mu(M) is known
};

inline void check_epsilon(double epsilon, EpsilonPolicy policy) {
    if (!(epsilon > 0 && epsilon < 1)) fail(ErrorKind::domain, "epsilon must lie in (0, 1)");
    if (policy == EpsilonPolicy::strict && !(epsilon < kDensityBeta))
        fail(ErrorKind::domain, "epsilon must lie in (0, 1/64); pass the relaxed policy to go beyond");
}

inline DensityReport select_dense_cells(const MembershipOracle& m, int level, double epsilon, std::uint64_t samples,
                                        std::uint64_t seed, EpsilonPolicy policy = EpsilonPolicy::strict) {
    check_level(level);
    check_epsilon(epsilon, policy);
    DensityReport r;
    r.oracle = oracle_kind(m);
    r.level = level;
    r.epsilon = epsilon;
    r.within_beta = epsilon < kDensityBeta;
    r.samples = samples;
    r.seed = seed;
    r.selected = CellSet(level);
    r.oracle_measure = oracle_measure(m);

    // The sieve is rebuilt once instead of per cell.
    MembershipOracle local = m;
    if (const auto* s = std::get_if<SieveOracle>(&m)) local = CellSetOracle{sieve_cells(s->depth)};

    const double area = cell_area(level);
    std::vector<std::uint32_t> chosen;
    double var = 0;
    for (std::uint32_t o = 0; o < cell_count(level); ++o) {
        const DyadicCell c = DyadicCell::from_ordinal(level, o);
        const DensityEstimate d = estimate_cell_density(local, c, samples, seed);
        if (d.value <= 0) continue;
        const bool keep = d.value >= 1 - epsilon;
        r.cells.push_back({c, d, keep});
        if (!keep) continue;
        chosen.push_back(o);
        r.captured_measure += d.value * area;
        var += d.std_error * d.std_error * area * area;
    }
    r.selected = CellSet(level, std::move(chosen));
    r.captured_std_error = std::sqrt(var);
    if (r.oracle_measure) r.captured_exceeds_bound = r.captured_measure > (1 - epsilon) * *r.oracle_measure;
    return r;
}

struct Estimate {
    double value = 0;
    double std_error = 0;
};

struct CoveringReport {
    Estimate inside;   // mu(M & union of cells)
    Estimate cover;    // mu(union of cells), exact
    Estimate measure;  // mu(M)
    double missed = 0;  // mu(M) - inside: the uncovered part of M
    double excess = 0;  // cover - mu(M)
};

inline CoveringReport covering_report(const MembershipOracle& m, const CellSet& selection, std::uint64_t samples,
                                      std::uint64_t seed) {
    MembershipOracle local = m;
    if (const auto* s = std::get_if<SieveOracle>(&m)) local = CellSetOracle{sieve_cells(s->depth)};
    CoveringReport r;
    const double area = selection.empty() ? 0.0 : cell_area(selection.level());
    double var = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        const DensityEstimate d = estimate_cell_density(local, selection.cell(i), samples, seed);
        r.inside.value += d.value * area;
        var += d.std_error * d.std_error * area * area;
    }
    r.inside.std_error = std::sqrt(var);
    r.cover.value = selection.measure();
    if (const auto mu = oracle_measure(local)) {
        r.measure.value = *mu;
    } else {
        if (samples < 100) fail(ErrorKind::domain, "measure estimation needs at least 100 samples");
        Rng rng(derive_seed(seed, cell_count(kMaxGridLevel)));
        std::uint64_t hits = 0;
        for (std::uint64_t i = 0; i < samples; ++i) hits += oracle_contains(local, sample_uniform(rng));
        const double p = static_cast<double>(hits) / static_cast<double>(samples);
        r.measure = {p * kFourPi, std::sqrt(p * (1 - p) / static_cast<double>(samples)) * kFourPi};
    }
    r.missed = r.measure.value - r.inside.value;
    r.excess = r.cover.value - r.measure.value;
    return r;
}

}  // namespace opf
