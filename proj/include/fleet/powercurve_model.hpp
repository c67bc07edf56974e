#pragma once

#include "fleet/dataset.hpp"
#include "fleet/model.hpp"

#include <Eigen/Core>

#include <map>
#include <utility>
#include <vector>

namespace fleet {

struct NormalPrior
{
    double mean = 0.0;
    double sd = 1.0;
};

// Hyper-prior constants of the segmented power curve. Normal priors are
// (mean, standard deviation).
struct PowerHyperPriors
{
    NormalPrior mu_p{0.2, 0.5};
    NormalPrior mu_q{0.4, 0.5};
    NormalPrior mu_r{0.6, 0.5};
    double cp_shape = 1.0; // sigma_cp ~ IG(1, 1)
    double cp_scale = 1.0;
    NormalPrior mu_m1{2.5, 0.5};
    double m1_shape = 1.0; // sigma_m1 ~ IG(1, 1)
    double m1_scale = 1.0;
    // Maximum power per operating condition: normal (l=1) and curtailed (l=2).
    std::map<int, NormalPrior> max_power{{1, {1.0, 0.1}}, {2, {0.8, 0.1}}};
    double noise_shape = 3.0;
    double noise_scale = 0.8;
    // Scales used in place of sigma_cp and sigma_m1 when hyper-parameters are pinned.
    double fixed_sigma_cp = 0.5;
    double fixed_sigma_m1 = 0.5;

    NormalPrior max_power_prior(int l) const;
};

struct PowerStructure
{
    std::vector<TaskId> tasks;
    std::vector<int> group_labels; // one maximum power per label
    std::vector<int> group_of_task;
    HyperMode hyper = HyperMode::kSampled;

    static PowerStructure make(std::vector<TaskId> tasks, HyperMode hyper);

    int num_tasks() const { return static_cast<int>(tasks.size()); }
    int num_groups() const { return static_cast<int>(group_labels.size()); }
    int task_index(TaskId task) const;
    int group_index(int l) const;

    ParameterLayout layout() const;
};

struct PowerParams
{
    double p = 0.2;
    Eigen::VectorXd q, r, m1; // per task
    Eigen::VectorXd Pm;       // per group
    double mu_p = 0.2, mu_q = 0.4, mu_r = 0.6;
    double sigma_cp = 0.5;
    double mu_m1 = 2.5, sigma_m1 = 0.5;
    double sigma = 0.05;
};

PowerParams unpack(const PowerStructure& s, const Eigen::VectorXd& theta, const PowerHyperPriors& hyper = {});
Eigen::VectorXd pack(const PowerStructure& s, const PowerParams& params);

// Segmented curve: 0 below the cut-in p, slope m1 up to q, slope
// m2 = (Pm - m1 (q - p)) / (r - q) up to the rated speed r, Pm beyond.
double segmented_power(double p, double q, double r, double m1, double pm, double x);

double power_mean(const PowerStructure& s, const PowerParams& params, TaskId task, double x);
double log_prior(const PowerStructure& s, const PowerParams& params, const PowerHyperPriors& hyper);
double log_likelihood(const PowerStructure& s, const PowerParams& params, const FleetDataset& data);

class PowerCurveModel final : public FleetModel
{
public:
    PowerCurveModel(const FleetDataset& train, HyperMode hyper, PowerHyperPriors priors = {});

    ModelFamily family() const override { return ModelFamily::kWindPower; }
    const ParameterLayout& layout() const override { return layout_; }
    const std::vector<TaskId>& tasks() const override { return structure_.tasks; }

    double log_prior(const Eigen::VectorXd& theta) const override;
    double log_likelihood(const Eigen::VectorXd& theta) const override;
    Eigen::VectorXd initial_point() const override;
    std::optional<std::string> infeasible_parameter(const Eigen::VectorXd& theta) const override;

    double mean(const Eigen::VectorXd& theta, TaskId task, double x) const override;
    double noise_sd(const Eigen::VectorXd& theta, TaskId task) const override;
    Eigen::VectorXd population_mean(const Eigen::VectorXd& theta, int l, std::span<const double> xs,
                                    Rng& rng) const override;
    double population_noise_sd(const Eigen::VectorXd& theta, int l) const override;

    const PowerStructure& structure() const { return structure_; }
    const PowerHyperPriors& priors() const { return priors_; }

private:
    PowerStructure structure_;
    PowerHyperPriors priors_;
    ParameterLayout layout_;
    std::vector<Eigen::VectorXd> x_, y_;
    std::size_t n_obs_ = 0;
};

} // namespace fleet
