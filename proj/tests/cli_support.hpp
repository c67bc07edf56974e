#pragma once

#include "fleet/cli.hpp"
#include "support.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace testing {

struct CliRun
{
    int code = 0;
    std::string out;
    std::string err;
};

inline CliRun run_fleet(std::vector<std::string> args)
{
    args.insert(args.begin(), "fleet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    CliRun r;
    r.code = fleet::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Small but complete configurations for both families.
inline const char* kTinyTruckConfig = R"({
  "scenario": {"family": "truck_hazard", "name": "truck_reference", "seed": 3},
  "model": {"H": 3},
  "chains": {"n_chains": 2, "burn_in": 100, "n_samples": 100, "seed": 5},
  "split": {"fraction": 0.7, "seed": 2},
  "predict": {"grid_points": 11, "trials": 5, "seed": 4},
  "benchmark": {"trials": 5, "seed": 6},
  "select_h": {"candidates": [2, 3], "folds": 2, "seed": 1}
})";

inline const char* kTinyWindConfig = R"({
  "scenario": {"family": "wind_power", "name": "wind_reference", "seed": 3},
  "chains": {"n_chains": 2, "burn_in": 100, "n_samples": 100, "seed": 5},
  "split": {"fraction": 0.7, "mode": "ordered", "seed": 2},
  "predict": {"grid_points": 11, "trials": 5, "seed": 4},
  "decision": {"n_outer": 200, "n_inner": 20, "seed": 9, "wind": {"kind": "beta", "a": 4, "b": 2}}
})";

} // namespace testing
