#pragma once
// Maximum conflict-free cell selections at one level. Cells have equal area,
// so this is maximum independent set on the conflict graph with
// self-conflicting cells excluded.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "conflict_graph.hpp"
#include "dyadic_grid.hpp"

namespace opf {

struct PublishedBound {
    const char* label;
    double value;
};

/// Upper bounds on the largest orthogonal-pair-free fraction of the sphere,
/// oldest first.
inline constexpr std::array<PublishedBound, 5> kPublishedBounds{{
    {"1/3", 1.0 / 3.0},
    {"0.313", 0.313},
    {"0.308", 0.308},
    {"0.30153", 0.30153},
    {"0.297742", 0.297742},
}};

/// 1 - 1/sqrt(2): normalized measure of the two open pi/4 polar caps.
inline double double_cap_fraction() { return 1 - 1 / std::sqrt(2.0); }

/// Cells whose closed z interval lies strictly inside one of the pi/4 caps
/// (z > cos(pi/4) or z < -cos(pi/4)).
inline CellSet double_cap_cellset(int level) {
    check_level(level);
    const std::uint32_t n = divisions_at(level);
    const double c = std::cos(kPi / 4);
    std::vector<std::uint32_t> out;
    for (std::uint32_t b = 0; b < n; ++b) {
        const Interval z = DyadicCell{level, b, 0}.cos_theta();
        if (!(z.lo > c || z.hi < -c)) continue;
        for (std::uint32_t s = 0; s < n; ++s) out.push_back(b * n + s);
    }
    return {level, std::move(out)};
}

struct BoundGap {
    std::string label;
    double bound = 0;
    double gap = 0;  // bound - fraction
};

struct SearchResult {
    CellSet selection;
    double measure_sr = 0;
    double fraction = 0;
    std::string method;
    std::uint64_t iterations = 0;
    std::uint64_t nodes = 0;
    std::uint64_t seed = 0;
    bool optimal = false;  // exact search finished within budget
    std::vector<Violation> violations;
    std::vector<BoundGap> gaps;  // published bounds, then the double-cap fraction
    double double_cap_level_fraction = 0;
    bool exceeds_best_bound = false;  // fraction > 0.297742; never expected

    bool feasible() const { return violations.empty(); }
};

/// Self-conflicting members and edges inside the selection, by adjacency.
inline std::vector<Violation> graph_violations(const ConflictGraph& g, const CellSet& sel, std::size_t limit = 1000) {
    if (sel.level() != g.level) fail(ErrorKind::invalid_selection, "selection and graph are at different levels");
    std::vector<char> in(g.vertex_count(), 0);
    for (auto o : sel.ordinals()) in[o] = 1;
    std::vector<Violation> out;
    for (auto v : g.self_conflicts)
        if (in[v] && out.size() < limit) out.push_back({v, v});
    for (const auto& [a, b] : g.edges) {
        if (out.size() >= limit) break;
        if (in[a] && in[b]) out.push_back({a, b});
    }
    return out;
}

namespace detail {
inline SearchResult scored(const CellSet& selection, std::vector<Violation> violations, std::string method) {
    SearchResult r;
    r.selection = selection;
    r.method = std::move(method);
    r.measure_sr = selection.measure();
    r.fraction = selection.fraction();
    r.violations = std::move(violations);
    for (const auto& b : kPublishedBounds) r.gaps.push_back({b.label, b.value, b.value - r.fraction});
    r.double_cap_level_fraction = double_cap_cellset(selection.level()).fraction();
    r.gaps.push_back({"double_cap", double_cap_fraction(), double_cap_fraction() - r.fraction});
    r.exceeds_best_bound = r.fraction > kPublishedBounds.back().value;
    return r;
}
}  // namespace detail

/// Feasibility, fraction and the gaps to every published bound.
inline SearchResult evaluate(const CellSet& selection, const ConflictGraph& g, std::string method = "evaluate") {
    return detail::scored(selection, graph_violations(g, selection), std::move(method));
}

/// Same, checked against the (band, band, offset) table instead of a graph.
/// Quadratic in the selection size but needs no edge list.
inline SearchResult evaluate(const CellSet& selection, const ConflictTable& t, std::string method = "evaluate") {
    if (selection.level() != t.level()) fail(ErrorKind::invalid_selection, "selection and table are at different levels");
    return detail::scored(selection, find_violations(t, selection.ordinals()), std::move(method));
}

enum class GreedyOrder { min_degree, random };

/// Maximal conflict-free selection. min_degree repeatedly takes the vertex of
/// least remaining degree (ties by ordinal); random scans a seeded shuffle.
inline SearchResult greedy_mis(const ConflictGraph& g, GreedyOrder order = GreedyOrder::min_degree,
                               std::uint64_t seed = 0) {
    const Adjacency adj(g);
    const std::uint32_t n = g.vertex_count();
    std::vector<char> alive(n, 1);
    for (auto v : g.self_conflicts) alive[v] = 0;
    std::vector<std::uint32_t> chosen;
    std::uint64_t steps = 0;

    if (order == GreedyOrder::min_degree) {
        std::vector<std::uint64_t> deg(n, 0);
        std::set<std::pair<std::uint64_t, std::uint32_t>> queue;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (!alive[v]) continue;
            for (auto u : adj.neighbors(v)) deg[v] += alive[u];
            queue.emplace(deg[v], v);
        }
        const auto drop = [&](std::uint32_t v) {
            alive[v] = 0;
            queue.erase({deg[v], v});
            for (auto u : adj.neighbors(v)) {
                if (!alive[u]) continue;
                queue.erase({deg[u], u});
                queue.emplace(--deg[u], u);
            }
        };
        while (!queue.empty()) {
            const std::uint32_t v = queue.begin()->second;
            ++steps;
            chosen.push_back(v);
            std::vector<std::uint32_t> gone{v};
            for (auto u : adj.neighbors(v))
                if (alive[u]) gone.push_back(u);
            for (auto u : gone)
                if (alive[u]) drop(u);
        }
    } else {
        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        Rng rng(seed);
        // Fisher-Yates with uniform01 so the order is the same on every platform.
        for (std::uint32_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[static_cast<std::uint32_t>(uniform01(rng) * i)]);
        for (auto v : perm) {
            ++steps;
            if (!alive[v]) continue;
            chosen.push_back(v);
            alive[v] = 0;
            for (auto u : adj.neighbors(v)) alive[u] = 0;
        }
    }
    SearchResult r = evaluate(CellSet(g.level, std::move(chosen)), g,
                              order == GreedyOrder::min_degree ? "greedy_min_degree" : "greedy_random");
    r.iterations = steps;
    r.seed = seed;
    return r;
}

/// (1,2)-swap hill climbing: take a selected cell x out when two compatible
/// cells whose only selected neighbour is x can go in, then refill with any
/// free cells. Stops at a local optimum or after `iters` examined cells.
inline SearchResult local_search(const ConflictGraph& g, const CellSet& init, std::uint64_t iters, std::uint64_t seed) {
    const auto bad = graph_violations(g, init, 20);
    if (!bad.empty()) {
        std::string msg = "initial selection is not conflict-free:";
        for (const auto& v : bad) msg += " (" + std::to_string(v.a) + "," + std::to_string(v.b) + ")";
        fail(ErrorKind::invalid_selection, msg);
    }
    const Adjacency adj(g);
    const std::uint32_t n = g.vertex_count();
    std::vector<char> in(n, 0);
    std::vector<std::uint32_t> tight(n, 0);  // selected neighbours
    for (auto o : init.ordinals()) in[o] = 1;
    for (auto o : init.ordinals())
        for (auto u : adj.neighbors(o)) ++tight[u];

    const auto insert = [&](std::uint32_t v) {
        in[v] = 1;
        for (auto u : adj.neighbors(v)) ++tight[u];
    };
    const auto remove = [&](std::uint32_t v) {
        in[v] = 0;
        for (auto u : adj.neighbors(v)) --tight[u];
    };
    const auto free_cell = [&](std::uint32_t v) { return !in[v] && !adj.self[v] && tight[v] == 0; };
    const auto fill = [&](std::uint32_t from) {
        for (auto u : adj.neighbors(from))
            if (free_cell(u)) insert(u);
    };
    // Start maximal, lowest ordinal first.
    for (std::uint32_t v = 0; v < n; ++v)
        if (free_cell(v)) insert(v);

    Rng rng(seed);
    std::uint64_t examined = 0;
    bool improved = true;
    while (improved && examined < iters) {
        improved = false;
        std::vector<std::uint32_t> sel;
        for (std::uint32_t v = 0; v < n; ++v)
            if (in[v]) sel.push_back(v);
        for (std::uint32_t i = static_cast<std::uint32_t>(sel.size()); i > 1; --i)
            std::swap(sel[i - 1], sel[static_cast<std::uint32_t>(uniform01(rng) * i)]);
        for (auto x : sel) {
            if (examined >= iters) break;
            if (!in[x]) continue;
            ++examined;
            std::vector<std::uint32_t> cand;
            for (auto u : adj.neighbors(x))
                if (!in[u] && !adj.self[u] && tight[u] == 1) cand.push_back(u);
            bool done = false;
            for (std::size_t a = 0; a < cand.size() && !done; ++a)
                for (std::size_t b = a + 1; b < cand.size() && !done; ++b) {
                    const auto nb = adj.neighbors(cand[a]);
                    if (std::binary_search(nb.begin(), nb.end(), cand[b])) continue;
                    remove(x);
                    insert(cand[a]);
                    insert(cand[b]);
                    fill(x);
                    done = true;
                }
            improved = improved || done;
        }
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < n; ++v)
        if (in[v]) out.push_back(v);
    SearchResult r = evaluate(CellSet(g.level, std::move(out)), g, "local_search");
    r.iterations = examined;
    r.seed = seed;
    return r;
}

namespace detail {

// Branch and bound for maximum independent set on at most 64 vertices.
// Candidates are covered greedily by cliques of the conflict graph; an
// independent set takes at most one vertex per clique, which bounds the
// branch.
class BitMis {
public:
    BitMis(std::vector<std::uint64_t> adj, std::uint64_t budget) : adj_(std::move(adj)), budget_(budget) {}

    std::uint64_t run(std::uint64_t candidates, std::uint64_t warm) {
        best_ = warm;
        expand(0, 0, candidates);
        return best_;
    }
    std::uint64_t nodes() const { return nodes_; }
    bool exhausted() const { return exhausted_; }

private:
    void expand(std::uint64_t current, int size, std::uint64_t cand) {
        if (nodes_ >= budget_) {
            exhausted_ = true;
            return;
        }
        ++nodes_;
        // Clique cover: order[i] gets bound[i] = cliques used so far.
        std::array<int, 64> order{}, bound{};
        int count = 0, cliques = 0;
        std::uint64_t rest = cand;
        while (rest) {
            ++cliques;
            std::uint64_t grow = rest;
            while (grow) {
                const int v = std::countr_zero(grow);
                grow &= adj_[static_cast<std::size_t>(v)];
                rest &= ~(std::uint64_t{1} << v);
                order[static_cast<std::size_t>(count)] = v;
                bound[static_cast<std::size_t>(count)] = cliques;
                ++count;
            }
        }
        for (int i = count - 1; i >= 0; --i) {
            if (size + bound[static_cast<std::size_t>(i)] <= std::popcount(best_)) return;
            const int v = order[static_cast<std::size_t>(i)];
            const std::uint64_t bit = std::uint64_t{1} << v;
            const std::uint64_t next = cand & ~adj_[static_cast<std::size_t>(v)] & ~bit;
            if (next == 0) {
                if (size + 1 > std::popcount(best_)) best_ = current | bit;
            } else {
                expand(current | bit, size + 1, next);
                if (exhausted_) return;
            }
            cand &= ~bit;
        }
    }

    std::vector<std::uint64_t> adj_;
    std::uint64_t budget_;
    std::uint64_t best_ = 0;
    std::uint64_t nodes_ = 0;
    bool exhausted_ = false;
};

}  // namespace detail

/// Maximum conflict-free selection by branch and bound, warm-started with
/// min-degree greedy. `optimal` is false when the node budget ran out.
inline SearchResult exact_mis(const ConflictGraph& g, std::uint64_t node_budget = 10'000'000,
                              std::uint32_t max_cells = 64) {
    const std::uint32_t n = g.vertex_count();
    if (n > max_cells || n > 64)
        fail(ErrorKind::resource_cap, "exact search is limited to " + std::to_string(std::min(max_cells, 64u)) +
                                          " cells; level " + std::to_string(g.level) + " has " + std::to_string(n));
    std::vector<std::uint64_t> adj(n, 0);
    for (const auto& [a, b] : g.edges) {
        adj[a] |= std::uint64_t{1} << b;
        adj[b] |= std::uint64_t{1} << a;
    }
    std::uint64_t cand = 0;
    for (std::uint32_t v = 0; v < n; ++v) cand |= std::uint64_t{1} << v;
    for (auto v : g.self_conflicts) cand &= ~(std::uint64_t{1} << v);
    std::uint64_t warm = 0;
    const SearchResult greedy = greedy_mis(g);
    for (auto o : greedy.selection.ordinals()) warm |= std::uint64_t{1} << o;

    detail::BitMis solver(adj, node_budget);
    const std::uint64_t best = cand ? solver.run(cand, warm) : 0;
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < n; ++v)
        if (best >> v & 1) out.push_back(v);
    SearchResult r = evaluate(CellSet(g.level, std::move(out)), g, "exact");
    r.nodes = solver.nodes();
    r.optimal = !solver.exhausted();
    return r;
}

}  // namespace opf
