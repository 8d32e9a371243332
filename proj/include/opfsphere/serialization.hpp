#pragma once
// JSON and CSV artifacts. Keys keep insertion order and doubles are written
// in shortest round-trip form, so a rerun with the same inputs gives the
// same bytes.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "convexify.hpp"
#include "density_filter.hpp"
#include "scaling.hpp"
#include "search.hpp"

namespace opf {

using Json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinity; null stands for it.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline double number_or_inf(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class F>
auto parse_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrorKind::io, std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace detail

inline Json to_json(const Interval& i) { return Json::array({i.lo, i.hi}); }
inline Json to_json(const UnitVector& u) { return Json::array({u.x(), u.y(), u.z()}); }
inline Json to_json(const DotRange& r) { return Json::array({r.lo, r.hi}); }

// ---- cell sets

inline Json to_json(const CellSet& s) {
    Json cells = Json::array();
    for (const auto& c : s.cells()) cells.push_back(Json::array({c.band, c.sector}));
    return Json{{"level", s.level()}, {"cells", std::move(cells)}};
}

inline CellSet cellset_from_json(const Json& j) {
    return detail::parse_guard("cell set", [&] {
        const int level = j.at("level").get<int>();
        check_level(level);
        std::vector<std::uint32_t> ords;
        for (const auto& c : j.at("cells")) {
            if (!c.is_array() || c.size() != 2) fail(ErrorKind::io, "cell entries must be [band, sector]");
            ords.push_back(DyadicCell{level, c[0].get<std::uint32_t>(), c[1].get<std::uint32_t>()}.ordinal());
        }
        return CellSet(level, std::move(ords));
    });
}

// ---- conflict graph stats

inline Json graph_stats_json(const ConflictGraph& g) {
    const Adjacency adj(g);
    std::vector<std::uint64_t> histogram;
    for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
        const std::size_t d = adj.neighbors(v).size();
        if (histogram.size() <= d) histogram.resize(d + 1, 0);
        ++histogram[d];
    }
    Json h = Json::array();
    for (std::size_t d = 0; d < histogram.size(); ++d)
        if (histogram[d]) h.push_back(Json::array({d, histogram[d]}));
    return Json{{"level", g.level},
                {"margin", g.margin},
                {"cells", g.vertex_count()},
                {"edges", g.edges.size()},
                {"self_conflicts", g.self_conflicts.size()},
                {"degree_histogram", std::move(h)}};
}

// ---- density reports

inline Json to_json(const DensityReport& r) {
    Json cells = Json::array();
    for (const auto& c : r.cells)
        cells.push_back(Json{{"band", c.cell.band},
                             {"sector", c.cell.sector},
                             {"density", c.density.value},
                             {"std_error", c.density.std_error},
                             {"exact", c.density.exact},
                             {"selected", c.selected}});
    return Json{{"oracle", r.oracle},
                {"level", r.level},
                {"epsilon", r.epsilon},
                {"beta", r.beta},
                {"within_beta", r.within_beta},
                {"samples", r.samples},
                {"seed", r.seed},
                {"selected", to_json(r.selected)},
                {"selected_measure_sr", r.selected.measure()},
                {"selected_fraction", r.selected.fraction()},
                {"captured_measure_sr", r.captured_measure},
                {"captured_std_error", r.captured_std_error},
                {"oracle_measure_sr", r.oracle_measure ? Json(*r.oracle_measure) : Json(nullptr)},
                {"captured_exceeds_bound", r.captured_exceeds_bound},
                {"cells", std::move(cells)}};
}

inline std::string density_csv(const DensityReport& r) {
    std::string out = "band,sector,density,stderr\n";
    for (const auto& c : r.cells)
        out += std::to_string(c.cell.band) + "," + std::to_string(c.cell.sector) + "," +
               detail::csv_number(c.density.value) + "," + detail::csv_number(c.density.std_error) + "\n";
    return out;
}

// ---- scaled sets

inline Json to_json(const Feasibility& f) {
    return Json{{"epsilon", f.epsilon},
                {"mu_sr", f.mu},
                {"first", {{"lhs", f.first_lhs}, {"rhs", f.first_rhs}, {"holds", f.first_holds}}},
                {"second", {{"lhs", f.second_lhs}, {"rhs", f.second_rhs}, {"holds", f.second_holds}}}};
}

inline Json to_json(const OpfCertificate& c) {
    Json v = Json::array();
    for (const auto& x : c.violations) v.push_back(Json{{"a", x.a}, {"b", x.b}, {"dot_range", to_json(x.range)}});
    return Json{{"regions", c.regions},
                {"pairs_checked", c.pairs_checked},
                {"ranges_evaluated", c.ranges_evaluated},
                {"truncated", c.truncated},
                {"clean", c.clean()},
                {"violations", std::move(v)}};
}

inline Json to_json(const ScaledSet& s) {
    const auto& k = s.constants;
    const auto& m = s.summary;
    Json regions = Json::array();
    for (const auto& r : s.regions)
        regions.push_back(Json{{"band", r.parent.band},
                               {"sector", r.parent.sector},
                               {"shrink", r.shrink},
                               {"z_limit", r.z_limit},
                               {"empty", r.empty},
                               {"z", r.empty ? Json(nullptr) : to_json(r.box.z)},
                               {"turns", r.empty ? Json(nullptr) : to_json(r.box.turns)}});
    const double frac = 1 / kFourPi;
    return Json{
        {"constants",
         {{"epsilon", k.epsilon}, {"epsilon1", k.epsilon1}, {"N", k.N}, {"delta", k.delta}, {"mu_sr", k.mu}}},
        {"polar_removal", s.removal == PolarRemoval::clip ? "clip" : "whole_cells"},
        {"feasibility", to_json(evaluate_feasibility(k.epsilon, k.mu))},
        {"summary",
         {{"input_cells", m.input_cells},
          {"input_measure_sr", m.input_measure},
          {"input_fraction", m.input_measure * frac},
          {"polar_removed", m.polar_removed},
          {"polar_clipped", m.polar_clipped},
          {"polar_removed_measure_sr", m.polar_removed_measure},
          {"polar_cap_measure_sr", m.polar_cap_measure},
          {"empty_regions", m.empty_regions},
          {"region_measure_sr", m.region_measure},
          {"region_fraction", m.region_measure * frac},
          {"lower_bound_total_sr", m.lower_bound_total},
          {"target_sr", m.target},
          {"meets_target", m.meets_target}}},
        {"regions", std::move(regions)}};
}

// ---- polygons and decompositions

inline Json to_json(const ConvexPolygon& p) {
    Json v = Json::array();
    for (const auto& u : p.vertices()) v.push_back(to_json(u));
    return Json{{"hemisphere_center", to_json(p.hemisphere_center())}, {"area_sr", p.area()}, {"vertices", std::move(v)}};
}

namespace detail {
inline UnitVector unit_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) fail(ErrorKind::io, "unit vectors must be [x, y, z]");
    return UnitVector::from_stored(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}
}  // namespace detail

inline ConvexPolygon polygon_from_json(const Json& j) {
    return detail::parse_guard("polygon", [&] {
        std::vector<UnitVector> v;
        for (const auto& u : j.at("vertices")) v.push_back(detail::unit_from_json(u));
        return ConvexPolygon(std::move(v), detail::unit_from_json(j.at("hemisphere_center")));
    });
}

inline Json to_json(const ConvexDecomposition& d) {
    Json polys = Json::array();
    for (const auto& p : d.polygons) polys.push_back(to_json(p));
    // Summary of the distance matrix: nearest neighbour of each polygon.
    Json nearest = Json::array();
    for (std::size_t i = 0; i < d.polygons.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = i;
        for (std::size_t j = 0; j < d.polygons.size(); ++j) {
            if (j == i) continue;
            const double dist = polygon_distance_below(d.polygons[i], d.polygons[j], best);
            if (dist < best) best = dist, arg = j;
        }
        nearest.push_back(Json{{"polygon", i}, {"nearest", arg}, {"distance", detail::number_or_null(best)}});
    }
    return Json{{"polygons", std::move(polys)},
                {"area_sr", d.area()},
                {"pairwise_min_distance", detail::number_or_null(d.pairwise_min_distance)},
                {"nearest", std::move(nearest)}};
}

inline ConvexDecomposition decomposition_from_json(const Json& j) {
    return detail::parse_guard("decomposition", [&] {
        ConvexDecomposition d;
        for (const auto& p : j.at("polygons")) d.polygons.push_back(polygon_from_json(p));
        d.pairwise_min_distance = detail::number_or_inf(j.at("pairwise_min_distance"));
        return d;
    });
}

inline Json to_json(const ConvexifyReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations)
        v.push_back(Json{{"step", x.step}, {"a", x.a}, {"b", x.b}, {"dot_range", to_json(x.range)}});
    return Json{{"input_cells", r.input_cells},
                {"input_measure_sr", r.input_measure},
                {"input_fraction", r.input_measure / kFourPi},
                {"components", r.components},
                {"merges", r.merges},
                {"polygon_count", r.decomposition.polygons.size()},
                {"output_area_sr", r.output_area()},
                {"output_fraction", r.output_area() / kFourPi},
                {"clean", r.clean()},
                {"violations", std::move(v)},
                {"decomposition", to_json(r.decomposition)}};
}

// ---- search results

inline Json to_json(const SearchResult& r) {
    Json gaps = Json::array();
    for (const auto& g : r.gaps) gaps.push_back(Json{{"label", g.label}, {"bound", g.bound}, {"gap", g.gap}});
    Json v = Json::array();
    for (const auto& x : r.violations) v.push_back(Json::array({x.a, x.b}));
    return Json{{"level", r.selection.level()},
                {"method", r.method},
                {"seed", r.seed},
                {"iterations", r.iterations},
                {"nodes", r.nodes},
                {"optimal", r.optimal},
                {"size", r.selection.size()},
                {"measure_sr", r.measure_sr},
                {"fraction", r.fraction},
                {"double_cap_level_fraction", r.double_cap_level_fraction},
                {"exceeds_best_bound", r.exceeds_best_bound},
                {"feasible", r.feasible()},
                {"violations", std::move(v)},
                {"gaps", std::move(gaps)},
                {"selection", to_json(r.selection)}};
}

/// One leaderboard row per artifact; columns follow the gap list.
inline std::string leaderboard_header() {
    std::string h = "level,method,seed,size,fraction";
    for (const auto& b : kPublishedBounds) h += std::string(",gap_") + b.label;
    return h + ",gap_double_cap\n";
}

inline std::string leaderboard_row(const Json& result) {
    std::string row = std::to_string(result.at("level").get<int>()) + "," + result.at("method").get<std::string>() +
                      "," + std::to_string(result.at("seed").get<std::uint64_t>()) + "," +
                      std::to_string(result.at("size").get<std::uint64_t>()) + "," +
                      detail::csv_number(result.at("fraction").get<double>());
    for (const auto& g : result.at("gaps")) row += "," + detail::csv_number(g.at("gap").get<double>());
    return row + "\n";
}

// ---- files

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + path);
    f << text;
    if (!f) fail(ErrorKind::io, "write failed for " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

inline Json read_json(const std::string& path) {
    const std::string text = read_text(path);
    return detail::parse_guard("JSON document", [&] { return Json::parse(text); });
}

}  // namespace opf
