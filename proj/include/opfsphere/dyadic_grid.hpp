#pragma once
// Equal-area dyadic decompositions of S^2.
//
// Level k has 2^(k+1) latitude bands, equally spaced in cos(theta), and
// 2^(k+1) meridian sectors; every one of the 4*4^k cells has area pi*4^-k.
// Cells are indexed (band, sector) with band 0 touching the north pole and
// sector 0 starting at phi = 0. Azimuths are stored in turns so that every
// grid boundary is an exact dyadic rational.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sphere_core.hpp"

namespace opf {

inline constexpr int kMaxGridLevel = 14;  // keeps cell ordinals in 32 bits

struct Interval {
    double lo = 0, hi = 0;

    double width() const { return hi - lo; }
    bool empty() const { return hi < lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Closed region { p : cos(theta(p)) in z, phi(p)/(2 pi) in turns }.
struct SphericalBox {
    Interval z;
    Interval turns;

    double area() const { return (turns.hi - turns.lo) * kTwoPi * (z.hi - z.lo); }
    bool empty() const { return z.empty() || turns.empty(); }
};

/// Area-uniform point in a box (uniform in cos(theta) and turns).
inline UnitVector sample_in_box(const SphericalBox& b, Rng& rng) {
    const double z = uniform(rng, b.z.lo, b.z.hi);
    return from_z_turns(z, uniform(rng, b.turns.lo, b.turns.hi));
}

inline std::uint32_t divisions_at(int level) { return std::uint32_t{2} << level; }
inline std::uint64_t cell_count(int level) { return std::uint64_t{4} << (2 * level); }

inline void check_level(int level) {
    if (level < 0 || level > kMaxGridLevel)
        fail(ErrorKind::domain, "grid level must lie in [0, " + std::to_string(kMaxGridLevel) + "]");
}

/// Area of every cell at `level`, in steradians: pi * 4^-level.
inline double cell_area(int level) {
    check_level(level);
    return std::ldexp(kPi, -2 * level);
}

struct DyadicCell {
    int level = 0;
    std::uint32_t band = 0;
    std::uint32_t sector = 0;

    DyadicCell() = default;
    DyadicCell(int level_, std::uint32_t band_, std::uint32_t sector_) : level(level_), band(band_), sector(sector_) {
        check_level(level);
        if (band >= divisions_at(level) || sector >= divisions_at(level))
            fail(ErrorKind::domain, "cell index out of range for level " + std::to_string(level));
    }

    static DyadicCell from_ordinal(int level, std::uint32_t ordinal) {
        check_level(level);
        const std::uint32_t n = divisions_at(level);
        return {level, ordinal / n, ordinal % n};
    }

    /// Band-major index in [0, 4*4^level).
    std::uint32_t ordinal() const { return band * divisions_at(level) + sector; }

    Interval cos_theta() const {
        return {1.0 - std::ldexp(static_cast<double>(band + 1), -level), 1.0 - std::ldexp(static_cast<double>(band), -level)};
    }
    Interval turns() const {
        return {std::ldexp(static_cast<double>(sector), -(level + 1)), std::ldexp(static_cast<double>(sector + 1), -(level + 1))};
    }
    SphericalBox box() const { return {cos_theta(), turns()}; }

    bool touches_north_pole() const { return band == 0; }
    bool touches_south_pole() const { return band + 1 == divisions_at(level); }
    bool northern() const { return cos_theta().lo >= 0; }

    auto operator<=>(const DyadicCell& o) const {
        if (auto c = level <=> o.level; c != 0) return c;
        if (auto c = band <=> o.band; c != 0) return c;
        return sector <=> o.sector;
    }
    bool operator==(const DyadicCell&) const = default;
};

/// cos(theta) interval (closed) and phi interval in radians (half-open).
struct CellBounds {
    Interval cos_theta;
    Interval phi;
};

inline CellBounds cell_bounds(const DyadicCell& c) {
    const Interval t = c.turns();
    return {c.cos_theta(), {t.lo * kTwoPi, t.hi * kTwoPi}};
}

/// Cell containing p. Points on a boundary go to the lower band / sector.
inline DyadicCell locate_point(const UnitVector& p, int level) {
    check_level(level);
    const auto n = static_cast<double>(divisions_at(level));
    const double t = std::ldexp(1.0 - clamp_unit(p.z()), level);
    const double u = std::ldexp(azimuth(p.vec()) / kTwoPi, level + 1);
    const auto index = [n](double x) {
        return static_cast<std::uint32_t>(std::clamp(std::ceil(x) - 1.0, 0.0, n - 1.0));
    };
    return {level, index(t), index(u)};
}

inline std::array<DyadicCell, 4> refine(const DyadicCell& c) {
    const int k = c.level + 1;
    const std::uint32_t b = 2 * c.band, s = 2 * c.sector;
    return {DyadicCell{k, b, s}, DyadicCell{k, b, s + 1}, DyadicCell{k, b + 1, s}, DyadicCell{k, b + 1, s + 1}};
}

inline DyadicCell parent(const DyadicCell& c) {
    if (c.level == 0) fail(ErrorKind::domain, "level-0 cells have no parent");
    return {c.level - 1, c.band / 2, c.sector / 2};
}

inline DyadicCell ancestor(DyadicCell c, int level) {
    if (level > c.level) fail(ErrorKind::domain, "ancestor level is finer than the cell");
    while (c.level > level) c = parent(c);
    return c;
}

/// Image under p -> -p: band mirrored, sector rotated by half a turn.
inline DyadicCell antipodal(const DyadicCell& c) {
    const std::uint32_t n = divisions_at(c.level);
    return {c.level, n - 1 - c.band, (c.sector + n / 2) % n};
}

/// Same-level cells whose closures meet this cell's closure (edges, corners,
/// the azimuth wraparound, and the shared pole of the first and last band).
inline std::vector<DyadicCell> neighbors(const DyadicCell& c) {
    const std::uint32_t n = divisions_at(c.level);
    std::vector<DyadicCell> out;
    for (int db = -1; db <= 1; ++db) {
        const std::int64_t b = static_cast<std::int64_t>(c.band) + db;
        if (b < 0 || b >= n) continue;
        for (int ds = -1; ds <= 1; ++ds) {
            const auto s = static_cast<std::uint32_t>((static_cast<std::int64_t>(c.sector) + ds + n) % n);
            out.emplace_back(c.level, static_cast<std::uint32_t>(b), s);
        }
    }
    if (c.touches_north_pole())
        for (std::uint32_t s = 0; s < n; ++s) out.emplace_back(c.level, 0u, s);
    if (c.touches_south_pole())
        for (std::uint32_t s = 0; s < n; ++s) out.emplace_back(c.level, n - 1, s);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::erase(out, c);
    return out;
}

/// A finite selection of cells at one level, kept sorted by ordinal.
class CellSet {
public:
    explicit CellSet(int level = 0) : level_(level) { check_level(level); }

    CellSet(int level, std::vector<std::uint32_t> ordinals) : level_(level), ordinals_(std::move(ordinals)) {
        check_level(level);
        std::sort(ordinals_.begin(), ordinals_.end());
        ordinals_.erase(std::unique(ordinals_.begin(), ordinals_.end()), ordinals_.end());
        if (!ordinals_.empty() && ordinals_.back() >= cell_count(level))
            fail(ErrorKind::domain, "cell ordinal out of range for level " + std::to_string(level));
    }

    static CellSet all(int level) {
        std::vector<std::uint32_t> v(cell_count(level));
        for (std::uint32_t i = 0; i < v.size(); ++i) v[i] = i;
        return {level, std::move(v)};
    }

    int level() const { return level_; }
    std::size_t size() const { return ordinals_.size(); }
    bool empty() const { return ordinals_.empty(); }
    const std::vector<std::uint32_t>& ordinals() const { return ordinals_; }

    DyadicCell cell(std::size_t i) const { return DyadicCell::from_ordinal(level_, ordinals_[i]); }
    std::vector<DyadicCell> cells() const {
        std::vector<DyadicCell> out;
        out.reserve(size());
        for (auto o : ordinals_) out.push_back(DyadicCell::from_ordinal(level_, o));
        return out;
    }

    bool contains(std::uint32_t ordinal) const { return std::binary_search(ordinals_.begin(), ordinals_.end(), ordinal); }
    bool contains(const DyadicCell& c) const { return c.level == level_ && contains(c.ordinal()); }

    void insert(const DyadicCell& c) {
        if (c.level != level_) fail(ErrorKind::domain, "cell level does not match the set level");
        const auto it = std::lower_bound(ordinals_.begin(), ordinals_.end(), c.ordinal());
        if (it == ordinals_.end() || *it != c.ordinal()) ordinals_.insert(it, c.ordinal());
    }

    double measure() const { return static_cast<double>(size()) * cell_area(level_); }
    /// |S| * 4^-level / 4, exact in binary floating point.
    double fraction() const { return std::ldexp(static_cast<double>(size()), -2 * level_ - 2); }

    /// Every member replaced by its descendants at `level` (>= this level).
    CellSet refined_to(int level) const {
        if (level < level_) fail(ErrorKind::domain, "refinement level is coarser than the set");
        std::vector<DyadicCell> cur = cells();
        for (int k = level_; k < level; ++k) {
            std::vector<DyadicCell> next;
            next.reserve(cur.size() * 4);
            for (const auto& c : cur)
                for (const auto& ch : refine(c)) next.push_back(ch);
            cur = std::move(next);
        }
        std::vector<std::uint32_t> ords;
        ords.reserve(cur.size());
        for (const auto& c : cur) ords.push_back(c.ordinal());
        return {level, std::move(ords)};
    }

    CellSet antipodal_image() const {
        std::vector<std::uint32_t> ords;
        ords.reserve(size());
        for (auto o : ordinals_) ords.push_back(antipodal(DyadicCell::from_ordinal(level_, o)).ordinal());
        return {level_, std::move(ords)};
    }

    bool operator==(const CellSet&) const = default;

private:
    int level_;
    std::vector<std::uint32_t> ordinals_;
};

}  // namespace opf
