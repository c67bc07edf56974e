#pragma once

#include "fleet/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fleet {

struct ChainConfig
{
    int n_chains = 4;
    int burn_in = 1000;
    int n_samples = 2000;
    std::uint64_t seed = 0;
    double adapt_target = 0.44; // componentwise acceptance rate
    // Starting point shared by all chains (before jitter). When unset the
    // model's own initial point is used.
    std::optional<Eigen::VectorXd> init;

    void validate() const; // throws std::invalid_argument
};

// Raised when the log posterior is -inf at the starting point.
class InfeasibleInit : public std::runtime_error
{
public:
    InfeasibleInit(std::string parameter, const std::string& what)
        : std::runtime_error(what), parameter_(std::move(parameter))
    {}
    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

// Everything the sampler needs to know about a distribution.
struct SamplerTarget
{
    std::vector<std::string> names;
    std::vector<bool> positive; // sampled on the log scale
    LogDensity log_density;
    Eigen::VectorXd initial_point;
    // Optional: names the parameter responsible for an infeasible state.
    std::function<std::optional<std::string>(const Eigen::VectorXd&)> explain;

    static SamplerTarget from_model(const FleetModel& model);
};

struct PosteriorSamples
{
    std::vector<std::string> names;
    std::vector<Eigen::MatrixXd> chains;      // n_samples x dims each
    std::vector<Eigen::VectorXd> log_density; // per retained draw
    std::vector<Eigen::VectorXd> acceptance;  // post burn-in rate per dimension
    std::vector<double> block_acceptance;     // joint move, NaN when not used

    int n_chains() const { return static_cast<int>(chains.size()); }
    Eigen::Index dims() const { return static_cast<Eigen::Index>(names.size()); }
    Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().rows(); }
    Eigen::Index total_draws() const { return draws_per_chain() * n_chains(); }

    std::optional<Eigen::Index> index_of(const std::string& name) const;
    // All chains stacked in chain order.
    Eigen::MatrixXd pooled() const;
    Eigen::VectorXd column(const std::string& name) const; // pooled; throws if absent
    Eigen::VectorXd pooled_log_density() const;
    Eigen::VectorXd mean_acceptance() const;
};

PosteriorSamples run_mcmc(const SamplerTarget& target, const ChainConfig& config);
PosteriorSamples run_mcmc(const FleetModel& model, const ChainConfig& config);
// Bare density over R^dims; positive marks components restricted to (0, inf).
PosteriorSamples run_mcmc(const LogDensity& log_posterior, int dims, const ChainConfig& config,
                          std::vector<bool> positive = {});

struct ParameterDiagnostics
{
    std::string name;
    std::optional<double> rhat; // unset with a single chain or too few draws
    bool divergent = false;     // between-chain spread with no within-chain spread
    double ess = 0.0;
    bool degenerate = false;    // no variation at all
    double acceptance = 0.0;
};

struct Diagnostics
{
    std::vector<ParameterDiagnostics> parameters;

    bool rhat_available() const;
    double max_rhat() const; // 1 when unavailable
    double min_ess() const;
};

// Split-chain R-hat and multi-chain effective sample size with Geyer's
// initial positive sequence truncation.
Diagnostics diagnostics(const PosteriorSamples& samples);

double split_rhat(const std::vector<Eigen::VectorXd>& chains);
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

} // namespace fleet
