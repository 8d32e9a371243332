#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cli_commands.hpp"

namespace fs = std::filesystem;
using namespace opf;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "opfsphere");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("opfsphere_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string save_cells(const std::string& name, const CellSet& s) const {
        write_text(path(name), dump(to_json(s)));
        return path(name);
    }
    fs::path dir_;
};

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_F(Cli, Grid) {
    auto r = run({"grid", "--level", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "64 cells"));
    EXPECT_TRUE(contains(r.out, "0.1963495408 sr (fraction 0.015625)"));
    EXPECT_EQ(run({"grid", "-l", "0"}).code, 0);
    EXPECT_TRUE(contains(run({"grid", "-l", "0"}).out, "4 cells"));
    EXPECT_EQ(run({"grid", "-l", "-1"}).code, cli::usage);
    EXPECT_EQ(run({"grid"}).code, cli::usage);
    EXPECT_EQ(run({}).code, cli::usage);

    r = run({"grid", "-l", "1", "-o", path("g.json")});
    EXPECT_EQ(cellset_from_json(read_json(path("g.json"))).size(), 16u);
    EXPECT_TRUE(fs::exists(path("g.json.meta.json")));
}

TEST_F(Cli, Conflicts) {
    auto r = run({"conflicts", "-l", "0"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "4 self-conflicts"));

    // Level 8 is refused until the cap is raised.
    r = run({"conflicts", "-l", "8"});
    EXPECT_EQ(r.code, cli::resource);
    EXPECT_TRUE(contains(r.err, "maximum 7"));
}

TEST_F(Cli, ConflictCacheRoundTrip) {
    const std::string cache = path("cache");
    auto first = run({"conflicts", "-l", "3", "--cache", cache, "-o", path("a.json")});
    ASSERT_EQ(first.code, 0);
    ASSERT_EQ(std::distance(fs::directory_iterator(cache), fs::directory_iterator{}), 1);
    auto second = run({"conflicts", "-l", "3", "--cache", cache, "-o", path("b.json")});
    ASSERT_EQ(second.code, 0);
    EXPECT_EQ(read_text(path("a.json")), read_text(path("b.json")));

    // Environment variable as the default directory.
    const std::string env_cache = path("env_cache");
    ::setenv("OPFSPHERE_CACHE_DIR", env_cache.c_str(), 1);
    auto third = run({"conflicts", "-l", "2"});
    ::unsetenv("OPFSPHERE_CACHE_DIR");
    EXPECT_EQ(third.code, 0);
    EXPECT_TRUE(fs::exists(env_cache));
    EXPECT_FALSE(fs::is_empty(env_cache));

    // A corrupt cache file is reported, not silently rebuilt.
    const auto entry = *fs::directory_iterator(cache);
    write_text(entry.path().string(), "garbage");
    EXPECT_EQ(run({"conflicts", "-l", "3", "--cache", cache}).code, cli::other);
}

TEST_F(Cli, Search) {
    auto r = run({"search", "-l", "6", "-m", "baseline", "-o", path("b6.json"), "--csv", path("b6.csv")});
    EXPECT_EQ(r.code, 0);
    const Json j = read_json(path("b6.json"));
    EXPECT_DOUBLE_EQ(j["fraction"].get<double>(), 0.28125);
    EXPECT_TRUE(j["feasible"].get<bool>());
    EXPECT_TRUE(contains(read_text(path("b6.csv")), "6,baseline,0,4608,0.28125,"));

    r = run({"search", "-l", "1", "-m", "exact", "-o", path("e1.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(read_json(path("e1.json"))["optimal"].get<bool>());

    EXPECT_EQ(run({"search", "-l", "1", "-m", "bogus"}).code, cli::usage);
    EXPECT_EQ(run({"search", "-l", "3", "-m", "exact"}).code, cli::resource);

    r = run({"search", "-l", "4", "-m", "local", "--init", "baseline", "--seed", "7", "-o", path("l4.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_GE(read_json(path("l4.json"))["size"].get<int>(), 256);
}

TEST_F(Cli, SearchRejectsInfeasibleInit) {
    const std::string init = save_cells("all.json", CellSet::all(2));
    EXPECT_EQ(run({"search", "-l", "2", "-m", "local", "--init", init}).code, cli::infeasible);
}

TEST_F(Cli, Filter) {
    auto r = run({"filter", "--oracle", "double-cap", "-l", "5", "-e", "0.05", "--relax-epsilon", "-o", path("f.json"),
                  "--csv", path("f.csv")});
    EXPECT_EQ(r.code, 0);
    const Json j = read_json(path("f.json"));
    EXPECT_GE(j["captured_measure_sr"].get<double>(), 0.95 * j["oracle_measure_sr"].get<double>());
    EXPECT_TRUE(j["captured_exceeds_bound"].get<bool>());
    EXPECT_TRUE(contains(read_text(path("f.csv")), "band,sector,density,stderr"));

    EXPECT_EQ(run({"filter", "-e", "0.5"}).code, cli::usage);
    EXPECT_EQ(run({"filter", "-e", "0.05"}).code, cli::usage);
    EXPECT_EQ(run({"filter", "--oracle", "nope"}).code, cli::usage);

    // A cell-set oracle selects itself.
    const CellSet s(3, {3, 40, 41, 200});
    const std::string sel = save_cells("s.json", s);
    r = run({"filter", "--oracle", "cellset", "--selection", sel, "-l", "3", "-e", "0.01", "-o", path("c.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(cellset_from_json(read_json(path("c.json"))["selected"]).ordinals(), s.ordinals());
}

TEST_F(Cli, Scale) {
    const std::string sel = save_cells("dc5.json", double_cap_cellset(5));
    auto r = run({"scale", "-s", sel, "-e", "0.02", "-o", path("s.json")});
    EXPECT_EQ(r.code, 0) << r.err;
    const Json j = read_json(path("s.json"));
    EXPECT_TRUE(j["certificate"]["clean"].get<bool>());
    EXPECT_TRUE(j["summary"]["meets_target"].get<bool>());

    r = run({"scale", "-s", sel, "-e", "0.5"});
    EXPECT_EQ(r.code, cli::infeasible);
    EXPECT_TRUE(contains(r.out, "largest feasible epsilon found"));

    EXPECT_EQ(run({"scale", "-s", path("missing.json")}).code, cli::other);
    EXPECT_EQ(run({"scale", "-s", sel, "--polar", "sideways"}).code, cli::usage);
}

TEST_F(Cli, Convexify) {
    auto r = run({"convexify", "-s", save_cells("dc4.json", double_cap_cellset(4)), "-o", path("c.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(read_json(path("c.json"))["polygon_count"], 2);

    r = run({"convexify", "-s", save_cells("empty.json", CellSet(3)), "-o", path("e.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(read_json(path("e.json"))["polygon_count"], 0);

    // An L of cells whose hull swallows part of a separate cell.
    std::vector<std::uint32_t> cells;
    const std::uint32_t n = divisions_at(4);
    for (std::uint32_t s = 0; s < 6; ++s) cells.push_back(1 * n + s);
    for (std::uint32_t b = 2; b < 8; ++b) cells.push_back(b * n);
    cells.push_back(3 * n + 3);
    r = run({"convexify", "-s", save_cells("touch.json", CellSet(4, cells)), "-o", path("t.json")});
    EXPECT_EQ(r.code, 0);
    const Json t = read_json(path("t.json"));
    EXPECT_EQ(t["components"], 2);
    EXPECT_EQ(t["merges"], 1);
    EXPECT_EQ(t["polygon_count"], 1);
    EXPECT_TRUE(contains(r.out, "after 1 merges"));

    // The whole sphere fits in no hemisphere.
    EXPECT_EQ(run({"convexify", "-s", save_cells("all.json", CellSet::all(1))}).code, cli::infeasible);
}

TEST_F(Cli, Report) {
    ASSERT_EQ(run({"search", "-l", "2", "-m", "greedy", "-o", path("a.json")}).code, 0);
    ASSERT_EQ(run({"search", "-l", "5", "-m", "baseline", "-o", path("b.json")}).code, 0);
    auto r = run({"report", "-i", path("a.json"), "-i", path("b.json"), "--sweep", "2", "6", "-o", path("r.json"),
                  "--csv", path("r.csv")});
    EXPECT_EQ(r.code, 0);
    const Json j = read_json(path("r.json"));
    ASSERT_EQ(j["leaderboard"].size(), 2u);
    EXPECT_EQ(j["leaderboard"][0]["method"], "baseline");  // 0.28125 before 0.25
    double prev = 0;
    for (const auto& p : j["double_cap_series"]) {
        EXPECT_GE(p[1].get<double>(), prev);
        EXPECT_LT(p[1].get<double>(), 1 - 1 / std::sqrt(2.0));
        prev = p[1].get<double>();
    }
    EXPECT_TRUE(contains(read_text(path("r.csv")), "level,double_cap_fraction"));

    EXPECT_EQ(run({"report"}).code, cli::usage);
    EXPECT_EQ(run({"report", "-i", path("nope.json")}).code, cli::other);
}

TEST_F(Cli, ConfigFile) {
    write_text(path("a.ini"), "[grid]\nlevel = 3\n");
    auto r = run({"--config", path("a.ini"), "grid"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "256 cells"));
    // Flags win over the file.
    r = run({"--config", path("a.ini"), "grid", "-l", "1"});
    EXPECT_TRUE(contains(r.out, "16 cells"));

    write_text(path("b.ini"), "[grid]\nlevel = 3\ncolour = 1\n");
    EXPECT_EQ(run({"--config", path("b.ini"), "grid"}).code, cli::usage);
    write_text(path("c.ini"), "colour = 1\n");
    EXPECT_EQ(run({"--config", path("c.ini"), "grid", "-l", "1"}).code, cli::usage);
}

TEST_F(Cli, ArtifactsAreByteIdenticalAcrossRuns) {
    const std::string sel = save_cells("dc3.json", double_cap_cellset(3));
    const std::vector<std::vector<std::string>> cmds{
        {"grid", "-l", "2"},
        {"conflicts", "-l", "3"},
        {"search", "-l", "3", "-m", "local", "--seed", "11"},
        {"search", "-l", "3", "-m", "greedy-random", "--seed", "11"},
        {"filter", "--oracle", "cap", "--center", "0.3", "0.2", "0.9", "--radius", "0.5", "-l", "4", "-e", "0.01",
         "--seed", "5"},
        {"scale", "-s", sel, "-e", "0.02"},
        {"convexify", "-s", sel},
    };
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            auto args = cmds[i];
            const std::string out = path("art" + std::to_string(i) + "_" + std::to_string(rep) + ".json");
            args.insert(args.end(), {"-o", out});
            ASSERT_EQ(run(args).code, 0) << i;
            bytes[rep] = read_text(out);
        }
        EXPECT_EQ(bytes[0], bytes[1]) << cmds[i][0];
        EXPECT_FALSE(bytes[0].empty());
    }
}
