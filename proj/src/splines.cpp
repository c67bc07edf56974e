#include "fleet/splines.hpp"
#include "fleet/dataset.hpp"
#include "fleet/densities.hpp"
#include "fleet/hazard_model.hpp"
#include "fleet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fleet {

SelectionResult select_H(const FleetDataset& dataset, std::span<const int> candidates, int folds,
                         std::uint64_t seed, const ChainConfig& chains)
{
    if (candidates.empty()) throw std::invalid_argument("select_H needs at least one candidate");
    if (folds < 2) throw std::invalid_argument("select_H needs at least two folds");
    if (dataset.empty()) throw std::invalid_argument("select_H needs data");

    // Most data-rich task; the first one in task order on ties.
    TaskId richest{};
    std::size_t most = 0;
    for (const auto& [task, n] : dataset.counts()) {
        if (n > most) {
            most = n;
            richest = task;
        }
    }
    const FleetDataset data = dataset.subset(richest);
    const auto n = static_cast<int>(data.size());
    if (folds > n) {
        throw std::invalid_argument("select_H: " + std::to_string(folds) + " folds exceed the " + std::to_string(n) +
                                    " observations of task (" + to_string(richest) + ")");
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % folds;

    const auto [lo, hi] = data.x_range();
    SelectionResult out;
    for (int H : candidates) {
        const SplineBasis<double> basis = make_basis(lo, hi, H);
        Eigen::VectorXd bic(folds);
        for (int f = 0; f < folds; ++f) {
            FleetDataset train, held;
            for (int i = 0; i < n; ++i) {
                (fold_of[static_cast<std::size_t>(i)] == f ? held : train)
                    .observations.push_back(data.observations[static_cast<std::size_t>(i)]);
            }
            HazardModel model(train, basis, BetaTying::kPerGroup, HyperMode::kFixed);
            ChainConfig cfg = chains;
            cfg.seed = chains.seed + 1000003ULL * static_cast<std::uint64_t>(f);
            const PosteriorSamples samples = run_mcmc(model, cfg);

            Eigen::Index best = 0;
            const Eigen::VectorXd lp = samples.pooled_log_density();
            lp.maxCoeff(&best);
            const Eigen::VectorXd theta = samples.pooled().row(best).transpose();

            double loglik = 0.0;
            for (const auto& o : held.observations) {
                loglik += normal_logpdf(o.y, model.mean(theta, o.task(), o.x), model.noise_sd(theta, o.task()));
            }
            // Intercept, slope, H spline weights and the noise scale.
            const double d = H + 3.0;
            bic(f) = d * std::log(double(held.size())) - 2.0 * loglik;
        }
        SelectionRow row;
        row.H = H;
        row.mean_bic = bic.mean();
        row.std_bic = std::sqrt((bic.array() - row.mean_bic).square().sum() / double(folds - 1));
        out.table.push_back(row);
    }
    auto best = std::min_element(out.table.begin(), out.table.end(), [](const SelectionRow& a, const SelectionRow& b) {
        return a.mean_bic < b.mean_bic || (a.mean_bic == b.mean_bic && a.H < b.H);
    });
    out.best_H = best->H;
    return out;
}

} // namespace fleet
