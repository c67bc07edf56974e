#pragma once

#include "fleet/inference.hpp"

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace fleet {

struct CorrelationMatrix
{
    std::vector<std::string> labels;
    Eigen::MatrixXd corr;       // NaN where undefined
    std::vector<bool> defined;  // false for zero-variance parameters

    bool is_defined(Eigen::Index i, Eigen::Index j) const
    {
        return defined[static_cast<std::size_t>(i)] && defined[static_cast<std::size_t>(j)];
    }
};

// Pearson correlation over the pooled draws of every parameter whose name
// fully matches the regular expression `selector`, in sample order.
CorrelationMatrix posterior_corr(const PosteriorSamples& samples, const std::string& selector);

struct ReductionRow
{
    std::string name;
    double sd_stl = 0.0;
    double sd_mtl = 0.0;
    double reduction = 0.0; // percent
};

struct ReductionReport
{
    std::vector<ReductionRow> rows;
    std::map<std::string, double> average_by_effect; // keyed by name prefix, e.g. "alpha2"
    std::vector<std::string> missing;                // names without a unique counterpart
};

// Percentage reduction 100 (1 - sd_MTL / sd_STL) of the posterior standard
// deviation for every MTL parameter matching `selector`. The STL value is
// looked up across the per-task sample sets.
ReductionReport variance_reduction(const std::vector<const PosteriorSamples*>& stl, const PosteriorSamples& mtl,
                                   const std::string& selector);

// Name up to the first '[', the effect type used for averaging.
std::string effect_of(const std::string& name);

} // namespace fleet
