#pragma once

#include "fleet/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fleet {

struct Observation
{
    double x = 0.0; // time in service or wind speed
    double y = 0.0; // log-hazard or power
    int k = 1;
    int l = 1;

    TaskId task() const { return {k, l}; }
};

struct NormalizationTransform
{
    double mean_x = 0.0;
    double std_x = 1.0;
    double mean_y = 0.0;
    double std_y = 1.0;

    double normalize_x(double x) const { return (x - mean_x) / std_x; }
    double normalize_y(double y) const { return (y - mean_y) / std_y; }
    double denormalize_x(double z) const { return z * std_x + mean_x; }
    double denormalize_y(double z) const { return z * std_y + mean_y; }
};

struct FleetDataset
{
    std::vector<Observation> observations;
    std::optional<NormalizationTransform> transform;

    std::size_t size() const { return observations.size(); }
    bool empty() const { return observations.empty(); }

    // Distinct tasks in group-major order.
    std::vector<TaskId> tasks() const;
    // Number of tasks K_l per group l.
    std::map<int, int> tasks_per_group() const;
    std::map<TaskId, std::size_t> counts() const;

    FleetDataset subset(TaskId task) const;
    // Copy with every observation relabelled as `task`.
    FleetDataset relabelled(TaskId task) const;

    std::pair<double, double> x_range() const;

    // Throws DataError unless every index is >= 1, values are finite and the
    // k indices of each group form a gap-free range.
    void validate() const;
};

struct CsvSchema
{
    std::string x = "x";
    std::string y = "y";
    std::string k = "k";
    std::string l = "l";
};

FleetDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(const FleetDataset& dataset, const std::filesystem::path& path);

// Z-scores x and y with population (divide-by-n) standard deviations.
std::pair<FleetDataset, NormalizationTransform> zscore_normalize(const FleetDataset& dataset);
FleetDataset apply_transform(const FleetDataset& dataset, const NormalizationTransform& transform);
FleetDataset denormalize(const FleetDataset& dataset);

enum class SplitMode { kRandom, kOrdered };

struct SplitSpec
{
    double fraction = 0.75;
    SplitMode mode = SplitMode::kRandom;
    std::uint64_t seed = 0;
    // Optional per-task-k override of the training fraction.
    std::map<int, double> fraction_by_k;
};

struct SplitResult
{
    FleetDataset train;
    FleetDataset test;
    std::vector<std::string> warnings;
};

// Per-task split: floor(fraction * N_kl) observations of every task go to the
// training set. Random mode shuffles each task with the seed; ordered mode
// keeps the earliest rows. Tasks with fewer than two rows go to training.
SplitResult split_train_test(const FleetDataset& dataset, const SplitSpec& spec);

struct HazardSample
{
    double t = 0.0;
    double hazard = 0.0;
};

struct HazardSeries
{
    std::vector<HazardSample> samples;
    std::vector<std::string> warnings;
};

// Empirical hazard over intervals [i*w, (i+1)*w): failures in the interval
// divided by units surviving at its start, reported at the interval midpoint.
HazardSeries empirical_hazard(std::vector<double> failure_times, std::size_t n_units, double interval);

// Inverse-CDF draws from the Gompertz distribution with hazard gamma*exp(phi*t).
std::vector<double> simulate_failure_times(double gamma, double phi, std::size_t n, std::uint64_t seed);
double gompertz_quantile(double gamma, double phi, double u);
double gompertz_cdf(double gamma, double phi, double t);

enum class ScenarioFamily { kTruckHazard, kWindPower };

struct TruckTaskTruth
{
    TaskId task;
    std::size_t n = 0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
};

struct WindTaskTruth
{
    TaskId task;
    std::size_t n = 0;
    double q = 0.4;
    double r = 0.6;
    double m1 = 2.5;
};

struct SyntheticScenario
{
    ScenarioFamily family = ScenarioFamily::kTruckHazard;
    double x_lo = -1.7;
    double x_hi = 1.7;
    double noise_std = 0.15;
    std::uint64_t seed = 0;

    // Truck hazard family.
    std::vector<TruckTaskTruth> truck_tasks;
    int spline_H = 5;
    std::map<int, Eigen::VectorXd> beta_by_group;

    // Wind power family.
    std::vector<WindTaskTruth> wind_tasks;
    double cut_in = 0.2;
    std::map<int, double> max_power_by_group;

    void validate() const;
};

FleetDataset simulate_fleet(const SyntheticScenario& scenario);

// Noise-free response of the scenario's generating model.
double scenario_mean(const SyntheticScenario& scenario, TaskId task, double x);

// Ground-truth parameters under the canonical model parameter names.
std::vector<std::pair<std::string, double>> scenario_truth(const SyntheticScenario& scenario);

// Bundled reference scenarios.
// Eight alternator-like sub-fleets sized 180,108,70,49,15,7,7,1 with per-task
// Gompertz effects drawn from a population distribution.
SyntheticScenario truck_reference_scenario(std::uint64_t seed);
// The truck scenario plus a second component group of six tasks with its own
// spline discrepancy.
SyntheticScenario two_component_scenario(std::uint64_t seed);
// The truck fleet with all five spline weights clearly active and lower noise,
// used to check the choice of basis size.
SyntheticScenario spline_selection_scenario(std::uint64_t seed);
// Three turbines; normal operation (l=1) on all three and curtailment (l=2) on
// turbines two and three.
SyntheticScenario wind_reference_scenario(std::uint64_t seed);

} // namespace fleet
