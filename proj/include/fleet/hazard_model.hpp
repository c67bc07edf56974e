#pragma once

#include "fleet/dataset.hpp"
#include "fleet/model.hpp"
#include "fleet/splines.hpp"

#include <Eigen/Core>

#include <vector>

namespace fleet {

// Hyper-prior constants of the log-hazard model. Second arguments of the
// Normal priors are standard deviations.
struct HazardHyperPriors
{
    Eigen::Vector2d m_alpha{0.0, 1.5}; // prior mean of (intercept, slope)
    Eigen::Vector2d s_alpha{2.0, 0.5};
    double a = 1.0; // sigma_alpha ~ IG(a, b)
    double b = 1.0;
    double noise_shape = 3.0; // sigma ~ IG(3, 0.8)
    double noise_scale = 0.8;
    double shrinkage_v = 1e-3; // sigma_h^2 ~ IG(v, v)
};

enum class BetaTying {
    kPerGroup, // one spline weight vector per component group l
    kGlobal,   // a single weight vector shared by every task
};

// Index bookkeeping of one hazard model instance: which tasks carry random
// effects, how spline weights are tied and whether hyper-parameters are free.
struct HazardStructure
{
    std::vector<TaskId> tasks;
    std::vector<int> group_labels; // l of each spline-weight group; 0 means "all groups"
    std::vector<int> beta_group;   // spline-weight group of each task
    int H = 5;
    HyperMode hyper = HyperMode::kSampled;

    static HazardStructure make(std::vector<TaskId> tasks, int H, BetaTying tying, HyperMode hyper);

    int num_tasks() const { return static_cast<int>(tasks.size()); }
    int num_groups() const { return static_cast<int>(group_labels.size()); }
    int task_index(TaskId task) const;  // throws std::out_of_range
    int group_index(int l) const;       // spline-weight group serving label l

    ParameterLayout layout() const;
    std::size_t parameter_count() const { return layout().size(); }
};

// Full latent state. Columns of alpha follow structure.tasks; columns of
// beta and sigma_h follow structure.group_labels.
struct HazardParams
{
    Eigen::Matrix2Xd alpha;
    Eigen::MatrixXd beta;
    Eigen::MatrixXd sigma_h;
    Eigen::Vector2d mu_alpha{0.0, 1.5};
    Eigen::Vector2d sigma_alpha{2.0, 0.5};
    double sigma = 0.2;
};

HazardParams unpack(const HazardStructure& s, const Eigen::VectorXd& theta, const HazardHyperPriors& hyper = {});
Eigen::VectorXd pack(const HazardStructure& s, const HazardParams& params);

double log_prior(const HazardStructure& s, const HazardParams& params, const HazardHyperPriors& hyper);
double log_likelihood(const HazardStructure& s, const HazardParams& params, const FleetDataset& data,
                      const SplineBasis<double>& basis);
double predict_mean(const HazardStructure& s, const HazardParams& params, const SplineBasis<double>& basis,
                    TaskId task, double x);

// The single-task layouts obtained by removing the task plate: each task gets
// its own spline weights, shrinkage scales and noise, with hyper-parameters
// pinned at their prior values.
std::vector<HazardStructure> independent_variant(const HazardStructure& s);

class HazardModel final : public FleetModel
{
public:
    HazardModel(const FleetDataset& train, SplineBasis<double> basis, BetaTying tying, HyperMode hyper,
                HazardHyperPriors priors = {});

    ModelFamily family() const override { return ModelFamily::kTruckHazard; }
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

    const HazardStructure& structure() const { return structure_; }
    const SplineBasis<double>& basis() const { return basis_; }
    const HazardHyperPriors& priors() const { return priors_; }

private:
    struct TaskData
    {
        Eigen::VectorXd x;
        Eigen::VectorXd y;
        Eigen::MatrixXd psi;
    };

    HazardStructure structure_;
    SplineBasis<double> basis_;
    HazardHyperPriors priors_;
    ParameterLayout layout_;
    std::vector<TaskData> data_;
    std::size_t n_obs_ = 0;
    Eigen::Index beta_offset_ = 0;
    Eigen::Index hyper_offset_ = 0;
    Eigen::Index sigma_index_ = 0;
};

// Basis over the x-range of a dataset.
SplineBasis<double> basis_for(const FleetDataset& data, int H);

} // namespace fleet
