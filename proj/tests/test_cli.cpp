#include "cli_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <json.hpp>

using namespace testing;

namespace {

struct Workspace
{
    TempDir dir{"cli"};

    std::string path(const std::string& name) const { return (dir / name).string(); }

    CliRun run(const std::string& cmd, const std::string& config, const std::string& out,
               const std::vector<std::string>& extra = {}) const
    {
        std::vector<std::string> args{cmd, "--config", path(config), "--out", path(out)};
        args.insert(args.end(), extra.begin(), extra.end());
        return run_fleet(args);
    }
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("every command is reproducible byte for byte")
{
    Workspace w;
    write_file(w.dir / "truck.json", kTinyTruckConfig);
    write_file(w.dir / "wind.json", kTinyWindConfig);

    for (const std::string run : {"a", "b"}) {
        REQUIRE(w.run("simulate", "truck.json", "truck_" + run).code == 0);
        const std::string data = w.path("truck_" + run + "/data.csv");
        for (const std::string cmd : {"fit", "predict", "benchmark", "analyze", "select-h"}) {
            const CliRun r = w.run(cmd, "truck.json", "truck_" + run, {"--data", data});
            INFO(cmd << ": " << r.err);
            REQUIRE(r.code == 0);
        }
        REQUIRE(w.run("simulate", "wind.json", "wind_" + run).code == 0);
        const std::string wdata = w.path("wind_" + run + "/data.csv");
        for (const std::string cmd : {"fit", "predict", "decide"}) {
            const CliRun r = w.run(cmd, "wind.json", "wind_" + run, {"--data", wdata});
            INFO(cmd << ": " << r.err);
            REQUIRE(r.code == 0);
        }
    }
    for (const std::string f : {"data.csv", "truth.csv", "draws.csv", "diagnostics.json", "predictive.csv",
                                "scores.json", "benchmark.csv", "benchmark.json", "correlation.csv", "reduction.csv",
                                "select_h.csv", "select_h.json"}) {
        INFO(f);
        const std::string a = read_file(w.dir / ("truck_a/" + f));
        CHECK_FALSE(a.empty());
        CHECK(a == read_file(w.dir / ("truck_b/" + f)));
    }
    for (const std::string f : {"data.csv", "draws.csv", "predictive.csv", "decision.json", "vopi_hist.csv"}) {
        INFO(f);
        const std::string a = read_file(w.dir / ("wind_a/" + f));
        CHECK_FALSE(a.empty());
        CHECK(a == read_file(w.dir / ("wind_b/" + f)));
    }

    // the reference truck fleet has 437 observations plus a header
    CHECK(count_lines(read_file(w.dir / "truck_a/data.csv")) == 438);
    CHECK(read_file(w.dir / "truck_a/benchmark.csv").starts_with("method,k,l,score\n"));
    const auto decision = nlohmann::json::parse(read_file(w.dir / "wind_a/decision.json"));
    CHECK(decision.contains("vopi"));
    CHECK(decision["levels"].size() == 3);
}

TEST_CASE("seed override changes the run")
{
    Workspace w;
    write_file(w.dir / "truck.json", kTinyTruckConfig);
    REQUIRE(w.run("simulate", "truck.json", "a").code == 0);
    REQUIRE(w.run("simulate", "truck.json", "b", {"--seed", "77"}).code == 0);
    REQUIRE(w.run("simulate", "truck.json", "c", {"--seed", "77"}).code == 0);
    CHECK(read_file(w.dir / "a/data.csv") != read_file(w.dir / "b/data.csv"));
    CHECK(read_file(w.dir / "b/data.csv") == read_file(w.dir / "c/data.csv"));
}

TEST_CASE("configuration errors exit with code 2")
{
    Workspace w;
    write_file(w.dir / "bad_family.json", R"({"scenario": {"family": "submarine"}})");
    const CliRun r = w.run("simulate", "bad_family.json", "out");
    CHECK(r.code == 2);
    CHECK(r.err.find("scenario.family") != std::string::npos);

    write_file(w.dir / "bad_type.json", R"({"scenario": {"family": "truck_hazard"}, "chains": {"n_chains": "four"}})");
    write_file(w.dir / "ok.json", kTinyTruckConfig);
    REQUIRE(w.run("simulate", "ok.json", "d").code == 0);
    const CliRun t = w.run("fit", "bad_type.json", "d", {"--data", w.path("d/data.csv")});
    CHECK(t.code == 2);
    CHECK(t.err.find("chains.n_chains") != std::string::npos);

    write_file(w.dir / "broken.json", "{ not json");
    CHECK(w.run("simulate", "broken.json", "out").code == 2);
    CHECK(run_fleet({"fly", "--config", "x", "--out", "y"}).code == 2);
    CHECK(run_fleet({"fit", "--out", "y"}).code == 2);
}

TEST_CASE("data errors exit with code 1")
{
    Workspace w;
    write_file(w.dir / "truck.json", kTinyTruckConfig);
    write_file(w.dir / "corrupt.csv", "x,y,k,l\n0.1,0.2,1,1\n0.3,abc,1,1\n");
    const CliRun r = w.run("fit", "truck.json", "out", {"--data", w.path("corrupt.csv")});
    CHECK(r.code == 1);
    CHECK(r.err.find("row 3") != std::string::npos);

    REQUIRE(w.run("simulate", "truck.json", "sim").code == 0);
    const CliRun m = w.run("predict", "truck.json", "empty", {"--data", w.path("sim/data.csv")});
    CHECK(m.code == 1);
    CHECK(m.err.find("draws.csv") != std::string::npos);

    CHECK(w.run("fit", "truck.json", "out", {"--data", w.path("nowhere.csv")}).code == 1);
}

TEST_CASE("point-mass wind prior gives zero value of information")
{
    Workspace w;
    std::string cfg = kTinyWindConfig;
    cfg.replace(cfg.find(R"({"kind": "beta", "a": 4, "b": 2})"), std::string(R"({"kind": "beta", "a": 4, "b": 2})").size(),
                R"({"kind": "point", "value": 0.55})");
    write_file(w.dir / "wind.json", cfg);
    REQUIRE(w.run("simulate", "wind.json", "o").code == 0);
    const std::string data = w.path("o/data.csv");
    REQUIRE(w.run("fit", "wind.json", "o", {"--data", data}).code == 0);
    const CliRun r = w.run("decide", "wind.json", "o", {"--data", data});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(read_file(w.dir / "o/decision.json"));
    CHECK(j["vopi"]["value"].get<double>() == 0.0);
}
