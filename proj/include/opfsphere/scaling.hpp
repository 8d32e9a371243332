#pragma once
// Scaling a cell selection inward: drop cells near the poles, then replace
// each remaining cell by the sub-box at distance >= r1 from its boundary,
// r1 = eps1^(1/3) * sqrt(cell area). Shrunk boxes are certified pairwise with
// the same closed-form dot ranges as the conflict graph.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "conflict_graph.hpp"
#include "dyadic_grid.hpp"

namespace opf {

/// The two constraints tying eps, eps1 = eps^6 and delta together.
struct Feasibility {
    double epsilon = 0;
    double mu = 0;
    double first_lhs = 0, first_rhs = 0;
    double second_lhs = 0, second_rhs = 0;
    bool first_holds = false, second_holds = false;

    bool holds() const { return first_holds && second_holds; }
};

inline double scaling_delta(double epsilon, double mu) { return std::sqrt(epsilon * mu / kFourPi); }

/// eps1^(1/3) * (3 sqrt(pi) + 2 / (sin(delta) sqrt(pi))): relative area lost
/// per cell, at most.
inline double shrink_loss_factor(double epsilon1, double delta) {
    const double sp = std::sqrt(kPi);
    return std::cbrt(epsilon1) * (3 * sp + 2 / (std::sin(delta) * sp));
}

inline Feasibility evaluate_feasibility(double epsilon, double mu) {
    Feasibility f;
    f.epsilon = epsilon;
    f.mu = mu;
    const double e1 = std::pow(epsilon, 6);
    const double delta = scaling_delta(epsilon, mu);
    f.first_lhs = (1 - shrink_loss_factor(e1, delta)) * (1 - e1) * (1 - epsilon / 2);
    f.first_rhs = 1 - epsilon;
    f.first_holds = f.first_lhs >= f.first_rhs;
    f.second_lhs = std::sin(kPi / 8) * (1 - 16 * std::sqrt(2.0) / std::sqrt(kPi) * std::cbrt(e1)) * std::cbrt(e1 * e1);
    f.second_rhs = 2 * e1;
    f.second_holds = f.second_lhs > f.second_rhs;
    return f;
}

struct ScaleConstants {
    double epsilon = 0;
    double epsilon1 = 0;  // epsilon^6
    int N = 3;
    double delta = 0;     // polar cap radius removed before shrinking
    double mu = 0;        // measure of the set being scaled, steradians

    /// r1 for a cell at `level`.
    double shrink_at(int level) const { return std::cbrt(epsilon1) * std::sqrt(cell_area(level)); }
};

/// Largest eps in (0, hi] passing both constraints, by bisection on the
/// boundary. The constraints fail for large eps and hold as eps -> 0.
inline double max_feasible_epsilon(double mu, double hi = 0.999) {
    if (evaluate_feasibility(hi, mu).holds()) return hi;
    double lo = hi;
    while (lo > 1e-12 && !evaluate_feasibility(lo, mu).holds()) lo /= 2;
    if (lo <= 1e-12) return 0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (evaluate_feasibility(mid, mu).holds() ? lo : hi) = mid;
    }
    return lo;
}

struct ConstantsChoice {
    Feasibility feasibility;
    std::optional<ScaleConstants> constants;  // empty when infeasible
    std::optional<double> suggested_epsilon;  // set when infeasible
};

inline ConstantsChoice choose_constants(double epsilon, double mu) {
    if (!(epsilon > 0 && epsilon < 1)) fail(ErrorKind::domain, "epsilon must lie in (0, 1)");
    if (!(mu > 0)) fail(ErrorKind::domain, "set measure must be positive");
    ConstantsChoice c;
    c.feasibility = evaluate_feasibility(epsilon, mu);
    if (c.feasibility.holds()) {
        c.constants = ScaleConstants{epsilon, std::pow(epsilon, 6), 3, scaling_delta(epsilon, mu), mu};
    } else {
        c.suggested_epsilon = max_feasible_epsilon(mu, epsilon);
    }
    return c;
}

/// Drops every cell whose closure meets the open cap of radius `delta` about
/// either pole.
inline CellSet remove_polar_caps(const CellSet& selection, double delta) {
    const double c = std::cos(delta);
    std::vector<std::uint32_t> keep;
    keep.reserve(selection.size());
    for (std::size_t i = 0; i < selection.size(); ++i) {
        const Interval z = selection.cell(i).cos_theta();
        if (z.hi > c || z.lo < -c) continue;
        keep.push_back(selection.ordinals()[i]);
    }
    return {selection.level(), std::move(keep)};
}

struct ScaledRegion {
    DyadicCell parent;
    double shrink = 0;
    double z_limit = 1;    // |z| bound applied before shrinking; 1 when nothing was clipped
    SphericalBox box;      // meaningless when empty
    bool empty = false;

    double area() const { return empty ? 0.0 : box.area(); }
};

/// The sub-box of `box` at distance >= shrink from its boundary: colatitudes
/// pulled in by `shrink`, azimuths by the lune angle that keeps every point of
/// the shrunk band `shrink` away from both side meridians.
inline ScaledRegion shrink_box(const DyadicCell& parent, const SphericalBox& box, double shrink) {
    if (!(shrink >= 0)) fail(ErrorKind::domain, "shrink must be non-negative");
    ScaledRegion r;
    r.parent = parent;
    r.shrink = shrink;
    r.box = box;
    r.empty = box.empty();
    if (shrink == 0 || r.empty) return r;

    const double th1 = std::acos(r.box.z.hi) + shrink, th2 = std::acos(r.box.z.lo) - shrink;
    if (th1 > th2) {
        r.empty = true;
        return r;
    }
    // sin is concave on [0, pi], so its minimum sits at an end.
    const double worst = std::min(std::sin(th1), std::sin(th2));
    if (worst <= 0 || std::sin(shrink) > worst) {
        r.empty = true;
        return r;
    }
    const double w = std::asin(std::sin(shrink) / worst) / kTwoPi;
    r.box.z = {std::cos(th2), std::cos(th1)};
    r.box.turns = {r.box.turns.lo + w, r.box.turns.hi - w};
    r.empty = r.box.empty();
    return r;
}

inline ScaledRegion shrink_cell(const DyadicCell& cell, double shrink) { return shrink_box(cell, cell.box(), shrink); }

/// Cuts the cell to |z| <= z_limit (the complement of both polar caps), then
/// shrinks what is left.
inline ScaledRegion clip_and_shrink(const DyadicCell& cell, double z_limit, double shrink) {
    SphericalBox b = cell.box();
    b.z = {std::max(b.z.lo, -z_limit), std::min(b.z.hi, z_limit)};
    ScaledRegion r = shrink_box(cell, b, shrink);
    r.z_limit = z_limit;
    if (b.z.lo >= b.z.hi) r.empty = true;
    return r;
}

/// max(0, (1 - eps1^(1/3) (3 sqrt(pi) + 2 / (sin(delta) sqrt(pi)))) * mu(c)).
inline double scaled_measure_lower_bound(const DyadicCell& cell, const ScaleConstants& k) {
    if (k.epsilon1 == 0) return cell_area(cell.level);
    return std::max(0.0, 1 - shrink_loss_factor(k.epsilon1, k.delta)) * cell_area(cell.level);
}

/// How the delta caps leave the selection: `clip` removes exactly the caps
/// (partial cells survive), `whole_cells` drops every cell meeting a cap.
enum class PolarRemoval { clip, whole_cells };

struct ScaleSummary {
    std::size_t input_cells = 0;
    double input_measure = 0;
    std::size_t polar_removed = 0;    // cells with nothing left after cap removal
    std::size_t polar_clipped = 0;    // cells cut by a cap but kept (clip mode)
    double polar_removed_measure = 0; // measure taken by cap removal
    double polar_cap_measure = 0;     // 2 * cap_area(delta)
    std::size_t empty_regions = 0;
    double region_measure = 0;
    double lower_bound_total = 0;     // per-cell bound, summed over uncut cells
    double target = 0;                // (1 - eps) * input measure
    bool meets_target = false;
};

struct ScaledSet {
    ScaleConstants constants;
    PolarRemoval removal = PolarRemoval::clip;
    std::vector<ScaledRegion> regions;  // one per surviving cell, ordinal order
    ScaleSummary summary;
};

inline ScaledSet scale_set(const CellSet& selection, const ScaleConstants& k,
                           PolarRemoval removal = PolarRemoval::clip) {
    ScaledSet out;
    out.constants = k;
    out.removal = removal;
    ScaleSummary& s = out.summary;
    s.input_cells = selection.size();
    s.input_measure = selection.measure();
    s.polar_cap_measure = k.delta > 0 ? 2 * cap_area(std::min(k.delta, kPi)) : 0.0;
    const double r1 = k.shrink_at(selection.level());
    const double z_limit = k.delta > 0 ? std::cos(k.delta) : 1.0;
    const auto add = [&](ScaledRegion r, bool cut) {
        s.empty_regions += r.empty;
        s.region_measure += r.area();
        if (!cut) s.lower_bound_total += scaled_measure_lower_bound(r.parent, k);
        out.regions.push_back(r);
    };
    if (removal == PolarRemoval::whole_cells) {
        const CellSet kept = remove_polar_caps(selection, k.delta);
        s.polar_removed = selection.size() - kept.size();
        s.polar_removed_measure = static_cast<double>(s.polar_removed) * cell_area(selection.level());
        out.regions.reserve(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) add(shrink_cell(kept.cell(i), r1), false);
    } else {
        out.regions.reserve(selection.size());
        for (std::size_t i = 0; i < selection.size(); ++i) {
            const DyadicCell c = selection.cell(i);
            const Interval z = c.cos_theta();
            const double kept = std::max(0.0, std::min(z.hi, z_limit) - std::max(z.lo, -z_limit));
            const Interval t = c.turns();
            s.polar_removed_measure += kTwoPi * (z.hi - z.lo - kept) * (t.hi - t.lo);
            if (kept <= 0) {
                ++s.polar_removed;
                continue;
            }
            const bool cut = z.hi > z_limit || z.lo < -z_limit;
            s.polar_clipped += cut;
            add(clip_and_shrink(c, z_limit, r1), cut);
        }
    }
    s.target = (1 - k.epsilon) * s.input_measure;
    s.meets_target = s.region_measure >= s.target;
    return out;
}

struct RegionViolation {
    std::size_t a = 0, b = 0;  // indices into the region list; a == b for a self-conflict
    DotRange range;
};

struct OpfCertificate {
    std::size_t regions = 0;
    std::uint64_t pairs_checked = 0;       // region pairs covered, self pairs included
    std::uint64_t ranges_evaluated = 0;    // closed-form dot ranges computed
    std::vector<RegionViolation> violations;
    bool truncated = false;  // stopped at the violation limit

    bool clean() const { return violations.empty(); }
};

namespace detail {

inline void record(OpfCertificate& cert, std::size_t a, std::size_t b, const DotRange& r, std::size_t limit) {
    if (cert.violations.size() >= limit) {
        cert.truncated = true;
        return;
    }
    cert.violations.push_back({a, b, r});
}

}  // namespace detail

/// Every region and region pair whose closed dot range contains 0.
///
/// Regions of one level with one shrink and cap cut are whole-sector rotations of a
/// per-band template, so pairs are checked per (band, band, sector offset)
/// and only offsets that conflict are expanded to region pairs. Mixed inputs
/// fall back to all pairs.
inline OpfCertificate verify_scaled_opf(const std::vector<ScaledRegion>& regions, std::size_t limit = 1000) {
    OpfCertificate cert;
    cert.regions = regions.size();
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (!regions[i].empty) live.push_back(i);
    if (live.empty()) return cert;

    const int level = regions[live[0]].parent.level;
    const double shrink = regions[live[0]].shrink;
    const double z_limit = regions[live[0]].z_limit;
    const bool uniform = std::all_of(live.begin(), live.end(), [&](std::size_t i) {
        return regions[i].parent.level == level && regions[i].shrink == shrink && regions[i].z_limit == z_limit;
    });

    if (!uniform) {
        for (std::size_t x = 0; x < live.size(); ++x)
            for (std::size_t y = x; y < live.size(); ++y) {
                const DotRange r = dot_range_boxes(regions[live[x]].box, regions[live[y]].box);
                ++cert.pairs_checked;
                ++cert.ranges_evaluated;
                if (r.contains_zero()) detail::record(cert, live[x], live[y], r, limit);
            }
        return cert;
    }

    const std::uint32_t n = divisions_at(level);
    // band -> sector -> region index
    std::map<std::uint32_t, std::vector<std::int64_t>> bands;
    for (std::size_t i : live) {
        auto& row = bands[regions[i].parent.band];
        if (row.empty()) row.assign(n, -1);
        row[regions[i].parent.sector] = static_cast<std::int64_t>(i);
    }
    std::vector<std::uint32_t> keys;
    for (const auto& [b, row] : bands) keys.push_back(b);
    cert.pairs_checked = std::uint64_t{live.size()} * (live.size() + 1) / 2;

    for (std::size_t x = 0; x < keys.size(); ++x)
        for (std::size_t y = x; y < keys.size(); ++y) {
            const auto& r1 = bands[keys[x]];
            const auto& r2 = bands[keys[y]];
            const ScaledRegion base = clip_and_shrink(DyadicCell{level, keys[y], 0}, z_limit, shrink);
            for (std::uint32_t d = 0; d < n; ++d) {
                const ScaledRegion moved = clip_and_shrink(DyadicCell{level, keys[x], d}, z_limit, shrink);
                const DotRange range = dot_range_boxes(moved.box, base.box);
                ++cert.ranges_evaluated;
                if (!range.contains_zero()) continue;
                for (std::uint32_t s1 = 0; s1 < n; ++s1) {
                    const std::uint32_t s2 = (s1 + n - d) % n;
                    const std::int64_t a = r1[s1], b = r2[s2];
                    if (a < 0 || b < 0) continue;
                    if (x == y && a > b) continue;  // each unordered pair once
                    detail::record(cert, static_cast<std::size_t>(std::min(a, b)),
                                   static_cast<std::size_t>(std::max(a, b)), range, limit);
                }
                if (cert.truncated) return cert;
            }
        }
    return cert;
}

}  // namespace opf
