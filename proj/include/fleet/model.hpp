#pragma once

#include "fleet/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fleet {

// Names and constraint flags of a flat parameter vector.
struct ParameterLayout
{
    std::vector<std::string> names;
    std::vector<bool> positive;

    std::size_t size() const { return names.size(); }
    std::optional<std::size_t> index_of(const std::string& name) const;
    std::size_t add(std::string name, bool is_positive = false);
};

enum class ModelFamily { kTruckHazard, kWindPower };

// Whether the population hyper-parameters are inferred (multitask learning)
// or pinned, which makes every task conditionally independent.
enum class HyperMode { kSampled, kFixed };

// A regression model with its training data bound, seen through a flat
// parameter vector. Both model families implement this so that inference,
// prediction and the benchmarks stay family-agnostic.
class FleetModel
{
public:
    virtual ~FleetModel() = default;

    virtual ModelFamily family() const = 0;
    virtual const ParameterLayout& layout() const = 0;
    virtual const std::vector<TaskId>& tasks() const = 0;
    bool has_task(TaskId task) const;

    virtual double log_prior(const Eigen::VectorXd& theta) const = 0;
    // Log-likelihood of the bound training data.
    virtual double log_likelihood(const Eigen::VectorXd& theta) const = 0;
    double log_posterior(const Eigen::VectorXd& theta) const;

    // A feasible starting point built from the training data.
    virtual Eigen::VectorXd initial_point() const = 0;
    // Name of the first parameter that makes theta infeasible, if any.
    virtual std::optional<std::string> infeasible_parameter(const Eigen::VectorXd& theta) const = 0;

    virtual double mean(const Eigen::VectorXd& theta, TaskId task, double x) const = 0;
    virtual double noise_sd(const Eigen::VectorXd& theta, TaskId task) const = 0;

    // Draws the random effects of a new, unobserved task of group l from the
    // generating distributions encoded in theta and evaluates its mean at xs.
    virtual Eigen::VectorXd population_mean(const Eigen::VectorXd& theta, int l, std::span<const double> xs,
                                            Rng& rng) const = 0;
    // Noise scale that applies to a new task of group l.
    virtual double population_noise_sd(const Eigen::VectorXd& theta, int l) const = 0;
};

} // namespace fleet
