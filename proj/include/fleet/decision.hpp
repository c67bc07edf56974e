#pragma once

#include "fleet/inference.hpp"
#include "fleet/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fleet {

struct UtilityLevel
{
    std::string name;
    double threshold = 0.0; // committed power P_L
    double payout = 0.0;    // earned when the delivered power reaches P_L
    double penalty = 0.0;   // incurred otherwise
};

struct UtilityTable
{
    std::vector<UtilityLevel> levels;

    // L0 (0, 0, 0), L1 (0.5, 0.3, -0.3), L2 (0.75, 0.75, -1.0).
    static UtilityTable defaults();
    void validate() const; // throws std::invalid_argument
    std::size_t index_of(const std::string& name) const;
    double utility(std::size_t level, double power) const;
};

// Distribution of the normalised wind speed.
struct WindPrior
{
    enum class Kind { kBeta, kPoint, kDiscrete };

    Kind kind = Kind::kBeta;
    double a = 4.0, b = 2.0;      // Beta shapes
    double point = 0.0;           // point mass location
    std::vector<double> values;   // discrete support
    std::vector<double> weights;  // discrete probabilities

    static WindPrior beta(double a, double b);
    static WindPrior point_mass(double x);
    static WindPrior discrete(std::vector<double> values, std::vector<double> weights);

    void validate() const;
    double sample(Rng& rng) const;
};

// Draws a delivered power given the wind speed.
using PowerSampler = std::function<double(double wind, Rng& rng)>;

struct UtilityEstimate
{
    double value = 0.0;
    double se = 0.0; // Monte Carlo standard error
};

UtilityEstimate expected_utility(const PowerSampler& sampler, const WindPrior& wind, const std::string& level,
                                 const UtilityTable& table, int n_mc, std::uint64_t seed);

// Index of the largest utility; ties resolve to the lowest index, which is
// the lowest threshold in a valid table.
std::size_t optimal_action(std::span<const double> utilities);

struct MeasurementOutcome
{
    double wind = 0.0;
    std::size_t level = 0; // best action once the wind is known
    double utility = 0.0;  // its expected utility at this wind
};

struct VopiResult
{
    double vopi = 0.0;
    double vopi_se = 0.0;
    double preposterior = 0.0;
    double preposterior_se = 0.0;
    double prior_optimal = 0.0;
    double prior_optimal_se = 0.0;
    std::size_t prior_level = 0;
    std::vector<UtilityEstimate> prior_utilities; // per level
    std::vector<MeasurementOutcome> outcomes;      // per outer draw
};

// Value of perfect wind information. Outer draws are hypothetical exact wind
// measurements; for each, n_inner power draws estimate every level's utility
// and the best level is chosen. Outer draws that share a wind value are
// decided together, so a point-mass prior yields exactly zero. The prior
// decision is scored on the same draws.
VopiResult vopi(const PowerSampler& sampler, const WindPrior& wind, const UtilityTable& table, int n_outer,
                int n_inner, std::uint64_t seed);

// Power predictive of a new turbine of group l: a random posterior draw, a
// fresh task from the population distribution, then noise.
PowerSampler population_sampler(const PosteriorSamples& samples, const FleetModel& model, int l);

} // namespace fleet
