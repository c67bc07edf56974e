#pragma once

#include "fleet/dataset.hpp"
#include "fleet/inference.hpp"
#include "fleet/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fleet {

struct PredictiveCurve
{
    TaskId task;                // k = 0 marks a population (new-task) curve
    Eigen::VectorXd x;
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
    Eigen::MatrixXd draws;      // one row per posterior draw, noise included
};

// Mean is the average of the per-draw means; std combines the average noise
// variance with the spread of the means.
PredictiveCurve posterior_predictive(const PosteriorSamples& samples, const FleetModel& model, TaskId task,
                                     std::span<const double> xs, std::uint64_t seed);

// Curve for an unobserved task of group l whose random effects are drawn from
// the population distribution for every posterior draw.
PredictiveCurve population_predict(const PosteriorSamples& samples, const FleetModel& model, int l,
                                   std::span<const double> xs, std::uint64_t seed);

// Maps a test observation's task to the task of the fitted model, e.g. when a
// pooled model was fitted on relabelled data.
using TaskMap = std::function<TaskId(TaskId)>;

struct ScoreReport
{
    std::map<TaskId, double> per_task;
    double total = 0.0;
    std::vector<TaskId> point_task; // task of every scored observation
    std::vector<double> pointwise;  // log predictive density per observation
    std::vector<std::string> warnings;
};

// Log of the posterior-averaged Gaussian density per test observation, summed
// per task and over tasks.
ScoreReport predictive_log_likelihood(const PosteriorSamples& samples, const FleetModel& model,
                                      const FleetDataset& test, const TaskMap& as_task = {});

// Joins reports over disjoint task sets.
ScoreReport merge_scores(const std::vector<ScoreReport>& parts);

struct ScoreSummary
{
    double mean = 0.0;
    double std = 0.0;
};

struct BootstrapReport
{
    std::map<TaskId, ScoreSummary> per_task;
    ScoreSummary total;
    int trials = 0;
};

// Resamples each task's pointwise scores with replacement. With
// resample = false every trial reuses the original points.
BootstrapReport bootstrap_scores(const ScoreReport& scores, int trials, std::uint64_t seed, bool resample = true);

BootstrapReport bootstrap_pll(const PosteriorSamples& samples, const FleetModel& model, const FleetDataset& test,
                              int trials, std::uint64_t seed, bool resample = true, const TaskMap& as_task = {});

} // namespace fleet
