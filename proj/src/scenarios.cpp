#include "fleet/dataset.hpp"

#include <array>
#include <span>

namespace fleet {

namespace {

constexpr std::array<std::size_t, 8> kAlternatorSizes{180, 108, 70, 49, 15, 7, 7, 1};
constexpr std::array<std::size_t, 6> kTurbochargerSizes{112, 60, 32, 28, 25, 30};

// Population the per-task Gompertz effects are drawn from.
constexpr double kIntercept = 0.0, kInterceptSd = 0.4;
constexpr double kSlope = 1.3, kSlopeSd = 0.25;

void add_truck_group(SyntheticScenario& s, int l, std::span<const std::size_t> sizes, Rng& rng)
{
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        TruckTaskTruth t;
        t.task = {static_cast<int>(i) + 1, l};
        t.n = sizes[i];
        t.alpha1 = kIntercept + kInterceptSd * z(rng);
        t.alpha2 = kSlope + kSlopeSd * z(rng);
        s.truck_tasks.push_back(t);
    }
}

} // namespace

SyntheticScenario truck_reference_scenario(std::uint64_t seed)
{
    SyntheticScenario s;
    s.family = ScenarioFamily::kTruckHazard;
    s.x_lo = -1.7;
    s.x_hi = 1.7;
    s.noise_std = 0.15;
    s.seed = seed;
    s.spline_H = 5;
    // Early-life discrepancy plus a late-life bump.
    Eigen::VectorXd beta(5);
    beta << 0.9, -0.3, 0.1, 0.0, 0.4;
    s.beta_by_group[1] = beta;

    Rng rng = make_rng(seed, 0x7472756bULL);
    add_truck_group(s, 1, kAlternatorSizes, rng);
    return s;
}

SyntheticScenario two_component_scenario(std::uint64_t seed)
{
    SyntheticScenario s = truck_reference_scenario(seed);
    Eigen::VectorXd beta(5);
    beta << -0.3, 0.6, 0.0, -0.5, -0.9;
    s.beta_by_group[2] = beta;
    Rng rng = make_rng(seed, 0x74757262ULL);
    add_truck_group(s, 2, kTurbochargerSizes, rng);
    return s;
}

SyntheticScenario spline_selection_scenario(std::uint64_t seed)
{
    SyntheticScenario s = truck_reference_scenario(seed);
    Eigen::VectorXd beta(5);
    beta << 1.2, -1.0, 0.9, -1.1, 1.0;
    s.beta_by_group[1] = beta;
    s.noise_std = 0.1;
    return s;
}

SyntheticScenario wind_reference_scenario(std::uint64_t seed)
{
    SyntheticScenario s;
    s.family = ScenarioFamily::kWindPower;
    s.x_lo = 0.0;
    s.x_hi = 1.0;
    s.noise_std = 0.05;
    s.seed = seed;
    s.cut_in = 0.2;
    s.max_power_by_group = {{1, 1.0}, {2, 0.8}};

    Rng rng = make_rng(seed, 0x77696e64ULL);
    std::normal_distribution<double> z(0.0, 1.0);
    const std::array<std::pair<TaskId, std::size_t>, 5> tasks{{
        {{1, 1}, 400}, {{2, 1}, 150}, {{3, 1}, 500}, {{2, 2}, 80}, {{3, 2}, 200},
    }};
    for (const auto& [task, n] : tasks) {
        WindTaskTruth t;
        t.task = task;
        t.n = n;
        t.q = 0.4 + 0.03 * z(rng);
        t.r = 0.62 + 0.03 * z(rng);
        t.m1 = 2.5 + 0.2 * z(rng);
        s.wind_tasks.push_back(t);
    }
    return s;
}

} // namespace fleet
