#pragma once

#include "fleet/dataset.hpp"
#include "fleet/hazard_model.hpp"
#include "fleet/inference.hpp"
#include "fleet/powercurve_model.hpp"
#include "fleet/prediction.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fleet {

// Which model to build and how, shared by every strategy of a comparison.
struct FamilyOptions
{
    ModelFamily family = ModelFamily::kTruckHazard;
    int H = 5;
    BetaTying tying = BetaTying::kPerGroup;
    // Spline support; widened to cover the training inputs of each fit.
    std::optional<std::pair<double, double>> basis_range;
    HazardHyperPriors hazard;
    PowerHyperPriors power;
};

std::unique_ptr<FleetModel> make_model(const FleetDataset& train, const FamilyOptions& options, HyperMode hyper);

struct Fit
{
    std::unique_ptr<FleetModel> model;
    PosteriorSamples samples;
};

// Multitask learning: one hierarchical model over every task.
Fit fit_mtl(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains);

// Single-task learning: an independent model per task with pinned
// hyper-parameters. Chain seeds depend on the task only.
std::map<TaskId, Fit> fit_stl(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains,
                              std::vector<std::string>* warnings = nullptr);

// The task every pooled fit is relabelled to.
inline constexpr TaskId kPooledTask{1, 1};

// Complete pooling: all observations treated as one task.
Fit fit_cp(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains);

// Correlation alignment of 2-D points: whitens the source with
// (cov_s + eps I)^(-1/2), recolours with (cov_t + eps I)^(1/2) and moves the
// source mean onto the target mean. Rows are points.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 2> coral_transform(const Eigen::Matrix<Scalar, Eigen::Dynamic, 2>& source,
                                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 2>& target,
                                                         Scalar eps = Scalar(1e-6))
{
    using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
    using Row2 = Eigen::Matrix<Scalar, 1, 2>;
    if (target.rows() < 2) throw std::invalid_argument("CORAL target needs at least two points");
    if (!(eps > Scalar(0))) throw std::invalid_argument("CORAL regulariser must be positive");
    if (source.rows() == 0) return source;

    auto stats = [](const Eigen::Matrix<Scalar, Eigen::Dynamic, 2>& m) {
        const Row2 mu = m.colwise().mean();
        const auto centered = m.rowwise() - mu;
        Mat2 cov = Mat2::Zero();
        if (m.rows() > 1) cov = centered.transpose() * centered / Scalar(m.rows() - 1);
        return std::pair<Row2, Mat2>{mu, cov};
    };
    const auto [mu_s, cov_s] = stats(source);
    const auto [mu_t, cov_t] = stats(target);
    const Mat2 cs = cov_s + eps * Mat2::Identity();
    const Mat2 ct = cov_t + eps * Mat2::Identity();

    Eigen::SelfAdjointEigenSolver<Mat2> es(cs), et(ct);
    if (es.info() != Eigen::Success || et.info() != Eigen::Success || es.eigenvalues().minCoeff() <= Scalar(0) ||
        et.eigenvalues().minCoeff() <= Scalar(0)) {
        throw std::runtime_error("CORAL covariance is singular after regularisation");
    }
    const Mat2 a = es.operatorInverseSqrt() * et.operatorSqrt();
    return ((source.rowwise() - mu_s) * a).rowwise() + mu_t;
}

// CORAL joint-domain baseline for one target task: every other task's (x, y)
// pairs are aligned to the target's training pairs, pooled with them and fitted
// as a single task.
Fit fit_crl(const FleetDataset& train, TaskId target, const FamilyOptions& options, const ChainConfig& chains);

struct MethodScores
{
    std::string method;
    BootstrapReport scores;
};

struct ComparisonResult
{
    std::vector<MethodScores> methods; // CP, CRL, STL, MTL
    std::vector<std::string> warnings;

    const MethodScores& at(const std::string& method) const;
};

struct CompareOptions
{
    int trials = 100;
    std::uint64_t bootstrap_seed = 0;
    bool include_crl = true;
};

// Fits all strategies on the same training set and scores them on the same
// test set with the same bootstrap resamples.
ComparisonResult compare(const FleetDataset& train, const FleetDataset& test, const FamilyOptions& options,
                         const ChainConfig& chains, const CompareOptions& compare_options = {});

} // namespace fleet
