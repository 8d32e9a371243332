#pragma once
// Subcommands of the opfsphere tool. run_cli is the whole program minus
// main(), so tests can drive it in-process.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opfsphere/opfsphere.hpp"

namespace opf::cli {

enum ExitCode : int {
    ok = 0,
    other = 1,
    usage = 2,
    infeasible = 3,
    resource = 4,
    violation = 5,
};

inline int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::domain: return usage;
        case ErrorKind::infeasible:
        case ErrorKind::hull_infeasible:
        case ErrorKind::out_of_hemisphere:
        case ErrorKind::invalid_selection: return infeasible;
        case ErrorKind::resource_cap: return resource;
        case ErrorKind::corrupt_cache:
        case ErrorKind::io: return other;
    }
    return other;
}

struct Common {
    std::string out;   // primary JSON artifact
    std::string csv;   // optional CSV artifact
    unsigned workers = 1;
    std::string cache_dir;  // falls back to OPFSPHERE_CACHE_DIR
    int max_level = 7;
    double margin = 0;
};

struct GridArgs {
    int level = 0;
};
struct SearchArgs {
    int level = 2;
    std::string method = "local";
    std::string init = "greedy";
    std::uint64_t seed = 0;
    std::uint64_t iters = 1'000'000;
    std::uint64_t node_budget = 10'000'000;
};
struct FilterArgs {
    std::string oracle = "double-cap";
    int level = 5;
    double epsilon = 0.01;
    std::uint64_t samples = 4096;
    std::uint64_t seed = 0;
    bool relax = false;
    double radius = kPi / 4;
    std::vector<double> center{0, 0, 1};
    int sieve_depth = 3;
    std::string selection;
};
struct ScaleArgs {
    std::string selection;
    double epsilon = 0.01;
    std::string polar = "clip";
};
struct ConvexifyArgs {
    std::string selection;
};
struct ReportArgs {
    std::vector<std::string> inputs;
    std::vector<int> sweep;  // [lo, hi] baseline fraction series
};

// ---- helpers

inline std::string format_fraction(double sr) {
    std::ostringstream s;
    s << std::setprecision(10) << sr << " sr (fraction " << sr / kFourPi << ")";
    return s.str();
}

inline std::string cache_dir(const Common& c) {
    if (!c.cache_dir.empty()) return c.cache_dir;
    if (const char* env = std::getenv("OPFSPHERE_CACHE_DIR"); env && *env) return env;
    return {};
}

inline ConflictGraph obtain_graph(const Common& c, int level, std::ostream& log) {
    GraphBuildOptions opt;
    opt.max_level = c.max_level;
    opt.workers = std::max(1u, c.workers);
    const auto build = [&] { return build_conflict_graph(level, c.margin, opt); };
    const std::string dir = cache_dir(c);
    if (dir.empty()) return build();
    if (level > c.max_level) return build();  // reports the cap before touching the cache
    std::filesystem::create_directories(dir);
    std::ostringstream name;
    name << "graph_L" << level << "_m" << std::hexfloat << c.margin << ".bin";
    const std::string path = (std::filesystem::path(dir) / name.str()).string();
    log << "graph cache: " << path << "\n";
    return load_or_build_graph(path, level, c.margin, build);
}

/// Writes the artifact plus a `.meta.json` sidecar holding everything that
/// may differ between identical runs.
inline void write_artifact(const std::string& path, const Json& j, const std::string& command) {
    if (path.empty()) return;
    write_text(path, dump(j));
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream stamp;
    stamp << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    write_text(path + ".meta.json", dump(Json{{"command", command}, {"written_utc", stamp.str()}}));
}

inline std::optional<MembershipOracle> make_oracle(const FilterArgs& a) {
    if (a.oracle == "double-cap") return DoubleCapOracle{a.radius};
    if (a.oracle == "cap") {
        if (a.center.size() != 3) fail(ErrorKind::domain, "--center takes three components");
        return CapOracle{UnitVector(a.center[0], a.center[1], a.center[2]), a.radius};
    }
    if (a.oracle == "sieve") return SieveOracle{a.sieve_depth};
    if (a.oracle == "cellset") {
        if (a.selection.empty()) fail(ErrorKind::domain, "the cellset oracle needs --selection");
        return CellSetOracle{cellset_from_json(read_json(a.selection))};
    }
    return std::nullopt;
}

// ---- commands

inline int cmd_grid(const Common& c, const GridArgs& a, std::ostream& out) {
    check_level(a.level);
    const std::uint64_t n = cell_count(a.level);
    out << "level " << a.level << ": " << n << " cells, " << divisions_at(a.level) << " bands x "
        << divisions_at(a.level) << " sectors\n";
    out << "cell area " << format_fraction(cell_area(a.level)) << "\n";
    out << "total " << format_fraction(static_cast<double>(n) * cell_area(a.level)) << "\n";
    write_artifact(c.out, to_json(CellSet::all(a.level)), "grid");
    return ok;
}

inline int cmd_conflicts(const Common& c, const GridArgs& a, std::ostream& out) {
    const ConflictGraph g = obtain_graph(c, a.level, out);
    const Json stats = graph_stats_json(g);
    out << "level " << g.level << ": " << g.vertex_count() << " cells, " << g.edges.size() << " edges, "
        << g.self_conflicts.size() << " self-conflicts\n";
    out << "degree histogram (degree count):";
    for (const auto& h : stats["degree_histogram"]) out << " " << h[0] << ":" << h[1];
    out << "\n";
    write_artifact(c.out, stats, "conflicts");
    return ok;
}

inline SearchResult run_search(const Common& c, const SearchArgs& a, std::ostream& log) {
    if (a.method == "baseline") {
        check_level(a.level);
        if (a.level > c.max_level)
            fail(ErrorKind::resource_cap, "level " + std::to_string(a.level) + " is above --max-level " +
                                              std::to_string(c.max_level));
        return evaluate(double_cap_cellset(a.level), ConflictTable(a.level, c.margin), "baseline");
    }
    static const std::vector<std::string> known{"greedy", "greedy-random", "local", "exact"};
    if (std::find(known.begin(), known.end(), a.method) == known.end())
        fail(ErrorKind::domain, "unknown search method '" + a.method + "'");
    if (a.method == "exact" && cell_count(a.level) > 64)
        fail(ErrorKind::resource_cap, "exact search is limited to 64 cells (level 2)");
    const ConflictGraph g = obtain_graph(c, a.level, log);
    if (a.method == "greedy") return greedy_mis(g, GreedyOrder::min_degree, a.seed);
    if (a.method == "greedy-random") return greedy_mis(g, GreedyOrder::random, a.seed);
    if (a.method == "exact") return exact_mis(g, a.node_budget);
    CellSet init;
    if (a.init == "baseline") init = double_cap_cellset(a.level);
    else if (a.init == "greedy") init = greedy_mis(g).selection;
    else if (a.init == "empty") init = CellSet(a.level);
    else init = cellset_from_json(read_json(a.init));
    return local_search(g, init, a.iters, a.seed);
}

inline int cmd_search(const Common& c, const SearchArgs& a, std::ostream& out) {
    const SearchResult r = run_search(c, a, out);
    out << r.method << " level " << r.selection.level() << ": " << r.selection.size() << " cells, "
        << format_fraction(r.measure_sr) << "\n";
    if (r.method == "exact") out << "optimal: " << (r.optimal ? "yes" : "no (node budget reached)") << "\n";
    for (const auto& g : r.gaps) out << "  gap to " << g.label << ": " << g.gap << "\n";
    const Json j = to_json(r);
    write_artifact(c.out, j, "search");
    if (!c.csv.empty()) write_text(c.csv, leaderboard_header() + leaderboard_row(j));
    if (r.exceeds_best_bound && r.feasible()) {
        out << "FINDING: feasible selection with fraction " << std::setprecision(17) << r.fraction
            << " exceeds the best published upper bound 0.297742\n";
        return violation;
    }
    if (!r.feasible()) {
        out << "certification found " << r.violations.size() << " conflicting pairs\n";
        return violation;
    }
    return ok;
}

inline int cmd_filter(const Common& c, const FilterArgs& a, std::ostream& out) {
    const auto oracle = make_oracle(a);
    if (!oracle) fail(ErrorKind::domain, "unknown oracle '" + a.oracle + "'");
    const DensityReport r = select_dense_cells(*oracle, a.level, a.epsilon, a.samples, a.seed,
                                               a.relax ? EpsilonPolicy::relaxed : EpsilonPolicy::strict);
    out << r.oracle << " level " << r.level << " epsilon " << r.epsilon << ": " << r.selected.size()
        << " cells selected, " << format_fraction(r.selected.measure()) << "\n";
    out << "captured " << format_fraction(r.captured_measure);
    if (r.oracle_measure)
        out << " of " << format_fraction(*r.oracle_measure) << ", above (1 - eps) mu(M): "
            << (r.captured_exceeds_bound ? "yes" : "no");
    out << "\n";
    write_artifact(c.out, to_json(r), "filter");
    if (!c.csv.empty()) write_text(c.csv, density_csv(r));
    return ok;
}

inline int cmd_scale(const Common& c, const ScaleArgs& a, std::ostream& out) {
    if (a.polar != "clip" && a.polar != "whole-cells") fail(ErrorKind::domain, "--polar is clip or whole-cells");
    const CellSet sel = cellset_from_json(read_json(a.selection));
    const ConstantsChoice choice = choose_constants(a.epsilon, sel.measure());
    const auto& f = choice.feasibility;
    out << "feasibility: first " << f.first_lhs << " vs " << f.first_rhs << (f.first_holds ? " holds" : " fails")
        << "; second " << f.second_lhs << " vs " << f.second_rhs << (f.second_holds ? " holds" : " fails") << "\n";
    if (!choice.constants) {
        out << "epsilon " << a.epsilon << " is infeasible for mu(M) = " << format_fraction(sel.measure());
        if (choice.suggested_epsilon) out << "; largest feasible epsilon found: " << *choice.suggested_epsilon;
        out << "\n";
        write_artifact(c.out, Json{{"feasibility", to_json(f)},
                                   {"suggested_epsilon", choice.suggested_epsilon ? Json(*choice.suggested_epsilon)
                                                                                  : Json(nullptr)}},
                       "scale");
        return infeasible;
    }
    const ScaledSet s =
        scale_set(sel, *choice.constants, a.polar == "clip" ? PolarRemoval::clip : PolarRemoval::whole_cells);
    const OpfCertificate cert = verify_scaled_opf(s.regions);
    const auto& m = s.summary;
    out << "input " << format_fraction(m.input_measure) << "\n";
    out << "scaled " << format_fraction(m.region_measure) << ", target (1 - eps) mu(M) "
        << format_fraction(m.target) << ": " << (m.meets_target ? "met" : "missed") << "\n";
    out << "polar caps: " << m.polar_removed << " cells dropped, " << m.polar_clipped << " clipped; "
        << m.empty_regions << " empty regions\n";
    out << "certification: " << cert.violations.size() << " violations over " << cert.pairs_checked << " pairs\n";
    Json j = to_json(s);
    j["certificate"] = to_json(cert);
    write_artifact(c.out, j, "scale");
    return cert.clean() ? ok : violation;
}

inline int cmd_convexify(const Common& c, const ConvexifyArgs& a, std::ostream& out) {
    const CellSet sel = cellset_from_json(read_json(a.selection));
    const ConvexifyReport r = conv(sel);
    out << r.input_cells << " cells in " << r.components << " components -> "
        << r.decomposition.polygons.size() << " polygons after " << r.merges << " merges\n";
    out << "measure before " << format_fraction(r.input_measure) << "\n";
    out << "measure after  " << format_fraction(r.output_area()) << "\n";
    out << "certification: " << r.violations.size() << " violations\n";
    write_artifact(c.out, to_json(r), "convexify");
    return r.clean() ? ok : violation;
}

inline int cmd_report(const Common& c, const ReportArgs& a, std::ostream& out) {
    if (a.inputs.empty() && a.sweep.empty()) fail(ErrorKind::domain, "report needs --input artifacts or --sweep");
    std::vector<Json> results;
    for (const auto& p : a.inputs) {
        Json j = read_json(p);
        if (!j.contains("fraction") || !j.contains("method"))
            fail(ErrorKind::io, p + " is not a search result");
        results.push_back(std::move(j));
    }
    // Highest fraction first; ties keep input order.
    std::stable_sort(results.begin(), results.end(), [](const Json& x, const Json& y) {
        return x["fraction"].get<double>() > y["fraction"].get<double>();
    });
    Json board = Json::array();
    std::string csv = leaderboard_header();
    for (const auto& r : results) {
        board.push_back(Json{{"level", r["level"]},
                             {"method", r["method"]},
                             {"seed", r["seed"]},
                             {"size", r["size"]},
                             {"fraction", r["fraction"]},
                             {"feasible", r["feasible"]}});
        csv += leaderboard_row(r);
        out << r["method"].get<std::string>() << " level " << r["level"] << ": " << r["fraction"] << "\n";
    }
    Json series = Json::array();
    if (!a.sweep.empty()) {
        if (a.sweep.size() != 2 || a.sweep[0] > a.sweep[1]) fail(ErrorKind::domain, "--sweep takes LO HI");
        csv += "\nlevel,double_cap_fraction\n";
        for (int k = a.sweep[0]; k <= a.sweep[1]; ++k) {
            const double f = double_cap_cellset(k).fraction();
            series.push_back(Json::array({k, f}));
            std::ostringstream row;
            row << k << "," << std::setprecision(17) << f << "\n";
            csv += row.str();
            out << "double cap level " << k << ": " << f << "\n";
        }
    }
    write_artifact(c.out, Json{{"leaderboard", std::move(board)}, {"double_cap_series", std::move(series)},
                               {"limit", double_cap_fraction()}},
                   "report");
    if (!c.csv.empty()) write_text(c.csv, csv);
    return ok;
}

// ---- parser

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Orthogonal-pair-free sets on the sphere: grids, conflicts, search, filters, scaling, hulls"};
    app.set_config("--config", "", "Config file (key = value, [subcommand] sections); flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Common c;
    app.add_option("--workers", c.workers, "Worker threads for graph builds")->capture_default_str();

    const auto add_common = [&](CLI::App* s, bool graph) {
        s->add_option("-o,--out", c.out, "Primary JSON artifact (a .meta.json sidecar is written next to it)");
        if (graph) {
            s->add_option("--cache", c.cache_dir, "Graph cache directory (default: $OPFSPHERE_CACHE_DIR)");
            s->add_option("--max-level", c.max_level, "Refuse graph levels above this")->capture_default_str();
            s->add_option("--margin", c.margin, "Conflict margin on dot ranges")->capture_default_str();
        }
        s->allow_config_extras(CLI::config_extras_mode::error);
    };

    GridArgs grid;
    auto* g = app.add_subcommand("grid", "Cell counts and areas at one level");
    g->add_option("-l,--level", grid.level)->required();
    add_common(g, false);

    GridArgs conf;
    auto* cf = app.add_subcommand("conflicts", "Build or load the conflict graph and print its statistics");
    cf->add_option("-l,--level", conf.level)->required();
    add_common(cf, true);

    SearchArgs search;
    auto* se = app.add_subcommand("search", "Conflict-free selection search");
    se->add_option("-l,--level", search.level)->required();
    se->add_option("-m,--method", search.method, "baseline | greedy | greedy-random | local | exact")
        ->capture_default_str();
    se->add_option("--init", search.init, "local search start: greedy | baseline | empty | PATH")->capture_default_str();
    se->add_option("--seed", search.seed)->capture_default_str();
    se->add_option("--iters", search.iters)->capture_default_str();
    se->add_option("--node-budget", search.node_budget)->capture_default_str();
    se->add_option("--csv", c.csv, "Leaderboard row");
    add_common(se, true);

    FilterArgs filter;
    auto* fi = app.add_subcommand("filter", "Select cells of density at least 1 - epsilon");
    fi->add_option("--oracle", filter.oracle, "double-cap | cap | sieve | cellset")->capture_default_str();
    fi->add_option("-l,--level", filter.level)->capture_default_str();
    fi->add_option("-e,--epsilon", filter.epsilon)->capture_default_str();
    fi->add_option("--samples", filter.samples, "Monte Carlo samples per cell when no closed form exists")
        ->capture_default_str();
    fi->add_option("--seed", filter.seed)->capture_default_str();
    fi->add_flag("--relax-epsilon", filter.relax, "Allow epsilon in [1/64, 1)");
    fi->add_option("--radius", filter.radius, "Cap radius (radians)")->capture_default_str();
    fi->add_option("--center", filter.center, "Cap center x y z")->expected(3);
    fi->add_option("--sieve-depth", filter.sieve_depth)->capture_default_str();
    fi->add_option("--selection", filter.selection, "CellSet JSON for the cellset oracle");
    fi->add_option("--csv", c.csv, "band,sector,density,stderr rows");
    add_common(fi, false);

    ScaleArgs scale;
    auto* sc = app.add_subcommand("scale", "Shrink a selection away from its cell boundaries and re-certify");
    sc->add_option("-s,--selection", scale.selection, "CellSet JSON")->required();
    sc->add_option("-e,--epsilon", scale.epsilon)->capture_default_str();
    sc->add_option("--polar", scale.polar, "clip | whole-cells")->capture_default_str();
    add_common(sc, false);

    ConvexifyArgs cvx;
    auto* cv = app.add_subcommand("convexify", "Hull the components, merge touching hulls, certify");
    cv->add_option("-s,--selection", cvx.selection, "CellSet JSON")->required();
    add_common(cv, false);

    ReportArgs report;
    auto* re = app.add_subcommand("report", "Leaderboard of search artifacts and plot-ready series");
    re->add_option("-i,--input", report.inputs, "Search result JSON files");
    re->add_option("--sweep", report.sweep, "Double-cap fraction series for levels LO HI")->expected(2);
    re->add_option("--csv", c.csv, "Leaderboard and series as CSV");
    add_common(re, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return usage;
    }

    try {
        if (*g) return cmd_grid(c, grid, out);
        if (*cf) return cmd_conflicts(c, conf, out);
        if (*se) return cmd_search(c, search, out);
        if (*fi) return cmd_filter(c, filter, out);
        if (*sc) return cmd_scale(c, scale, out);
        if (*cv) return cmd_convexify(c, cvx, out);
        if (*re) return cmd_report(c, report, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return other;
    }
    return usage;
}

}  // namespace opf::cli
