// Walks the double cap through every stage: select, certify, search, filter,
// scale, convexify. Usage: demo_double_cap_pipeline [level]   (default 4)

#include <cstdio>
#include <cstdlib>

#include "opfsphere/opfsphere.hpp"

using namespace opf;

int main(int argc, char** argv) {
    const int level = argc > 1 ? std::atoi(argv[1]) : 4;
    try {
        const CellSet cap = double_cap_cellset(level);
        std::printf("level %d: %zu of %llu cells, fraction %.6f (limit %.6f)\n", level, cap.size(),
                    static_cast<unsigned long long>(cell_count(level)), cap.fraction(), double_cap_fraction());

        const ConflictGraph g = build_conflict_graph(level);
        const SearchResult base = evaluate(cap, g, "baseline");
        std::printf("conflict graph: %zu edges, %zu self-conflicts; double cap violations: %zu\n", g.edges.size(),
                    g.self_conflicts.size(), base.violations.size());

        const SearchResult local = local_search(g, greedy_mis(g).selection, 1'000'000, 1);
        std::printf("greedy + local search: fraction %.6f, gap to 0.297742: %.6f\n", local.fraction,
                    local.gaps[4].gap);

        // Filtering the cap itself at a finer level keeps the cells that lie inside it.
        const DensityReport dense = select_dense_cells(DoubleCapOracle{}, level + 1, 0.01, 0, 0);
        std::printf("filter at level %d, eps 0.01: %zu cells, captured %.6f of mu(M) %.6f sr\n", level + 1,
                    dense.selected.size(), dense.captured_measure, *dense.oracle_measure);

        const ConstantsChoice choice = choose_constants(0.02, cap.measure());
        if (!choice.constants) {
            std::printf("epsilon 0.02 infeasible; try %.4f\n", choice.suggested_epsilon.value_or(0));
            return 3;
        }
        const ScaledSet scaled = scale_set(cap, *choice.constants);
        const OpfCertificate cert = verify_scaled_opf(scaled.regions);
        std::printf("scaled: %.6f of %.6f sr (target %.6f), %zu violations\n", scaled.summary.region_measure,
                    scaled.summary.input_measure, scaled.summary.target, cert.violations.size());

        const ConvexifyReport hulls = conv(cap);
        std::printf("convexified: %zu polygons, area %.6f sr >= %.6f sr, min distance %.6f rad, %zu violations\n",
                    hulls.decomposition.polygons.size(), hulls.output_area(), hulls.input_measure,
                    hulls.decomposition.pairwise_min_distance, hulls.violations.size());
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
