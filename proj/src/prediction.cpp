#include "fleet/prediction.hpp"
#include "fleet/densities.hpp"

#include <cmath>

namespace fleet {

namespace {

PredictiveCurve summarize(TaskId task, std::span<const double> xs, const Eigen::MatrixXd& means,
                          const Eigen::VectorXd& noise, Rng& rng)
{
    PredictiveCurve out;
    out.task = task;
    out.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    const double s = double(means.rows());
    out.mean = means.colwise().mean().transpose();
    const Eigen::RowVectorXd centered_sq = (means.rowwise() - out.mean.transpose()).array().square().colwise().sum();
    const double noise_var = noise.array().square().mean();
    out.std = (centered_sq.transpose().array() / s + noise_var).sqrt();

    std::normal_distribution<double> z(0.0, 1.0);
    out.draws = means;
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) out.draws(i, j) += noise(i) * z(rng);
    }
    return out;
}

void require_draws(const PosteriorSamples& samples)
{
    if (samples.total_draws() == 0) throw std::invalid_argument("posterior sample set is empty");
}

} // namespace

PredictiveCurve posterior_predictive(const PosteriorSamples& samples, const FleetModel& model, TaskId task,
                                     std::span<const double> xs, std::uint64_t seed)
{
    require_draws(samples);
    if (!model.has_task(task)) throw std::out_of_range("task (" + to_string(task) + ") not in model");
    const Eigen::MatrixXd theta = samples.pooled();
    Eigen::MatrixXd means(theta.rows(), static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd noise(theta.rows());
    for (Eigen::Index s = 0; s < theta.rows(); ++s) {
        const Eigen::VectorXd row = theta.row(s).transpose();
        for (std::size_t j = 0; j < xs.size(); ++j) means(s, static_cast<Eigen::Index>(j)) = model.mean(row, task, xs[j]);
        noise(s) = model.noise_sd(row, task);
    }
    Rng rng = make_rng(seed, 1);
    return summarize(task, xs, means, noise, rng);
}

PredictiveCurve population_predict(const PosteriorSamples& samples, const FleetModel& model, int l,
                                   std::span<const double> xs, std::uint64_t seed)
{
    require_draws(samples);
    const Eigen::MatrixXd theta = samples.pooled();
    Eigen::MatrixXd means(theta.rows(), static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd noise(theta.rows());
    Rng effects = make_rng(seed, 2);
    for (Eigen::Index s = 0; s < theta.rows(); ++s) {
        const Eigen::VectorXd row = theta.row(s).transpose();
        means.row(s) = model.population_mean(row, l, xs, effects).transpose();
        noise(s) = model.population_noise_sd(row, l);
    }
    Rng rng = make_rng(seed, 1);
    return summarize(TaskId{0, l}, xs, means, noise, rng);
}

ScoreReport predictive_log_likelihood(const PosteriorSamples& samples, const FleetModel& model,
                                      const FleetDataset& test, const TaskMap& as_task)
{
    require_draws(samples);
    ScoreReport out;
    if (test.empty()) {
        out.warnings.push_back("empty test set; score is 0");
        return out;
    }
    const Eigen::MatrixXd theta = samples.pooled();
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(static_cast<std::size_t>(theta.rows()));
    for (Eigen::Index s = 0; s < theta.rows(); ++s) rows.emplace_back(theta.row(s).transpose());

    Eigen::VectorXd logp(theta.rows());
    for (const auto& o : test.observations) {
        const TaskId task = as_task ? as_task(o.task()) : o.task();
        if (!model.has_task(task)) throw std::out_of_range("test task (" + to_string(o.task()) + ") not in model");
        for (std::size_t s = 0; s < rows.size(); ++s) {
            logp(static_cast<Eigen::Index>(s)) = normal_logpdf(o.y, model.mean(rows[s], task, o.x), model.noise_sd(rows[s], task));
        }
        const double score = log_mean_exp(logp);
        out.point_task.push_back(o.task());
        out.pointwise.push_back(score);
        out.per_task[o.task()] += score;
        out.total += score;
    }
    return out;
}

ScoreReport merge_scores(const std::vector<ScoreReport>& parts)
{
    ScoreReport out;
    for (const auto& p : parts) {
        for (const auto& [task, score] : p.per_task) {
            if (out.per_task.count(task)) throw std::invalid_argument("task (" + to_string(task) + ") scored twice");
            out.per_task[task] = score;
        }
        out.total += p.total;
        out.point_task.insert(out.point_task.end(), p.point_task.begin(), p.point_task.end());
        out.pointwise.insert(out.pointwise.end(), p.pointwise.begin(), p.pointwise.end());
        out.warnings.insert(out.warnings.end(), p.warnings.begin(), p.warnings.end());
    }
    return out;
}

BootstrapReport bootstrap_scores(const ScoreReport& scores, int trials, std::uint64_t seed, bool resample)
{
    if (trials < 1) throw std::invalid_argument("bootstrap needs at least one trial");
    std::map<TaskId, std::vector<double>> by_task;
    for (std::size_t i = 0; i < scores.pointwise.size(); ++i) by_task[scores.point_task[i]].push_back(scores.pointwise[i]);

    std::map<TaskId, Eigen::VectorXd> trial_scores;
    for (const auto& [task, _] : by_task) trial_scores[task] = Eigen::VectorXd::Zero(trials);
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(trials);
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
        for (const auto& [task, points] : by_task) {
            double sum = 0.0;
            if (resample) {
                std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
                for (std::size_t i = 0; i < points.size(); ++i) sum += points[pick(rng)];
            } else {
                for (double v : points) sum += v;
            }
            trial_scores[task](t) = sum;
            totals(t) += sum;
        }
    }

    auto summary = [](const Eigen::VectorXd& v) {
        ScoreSummary s;
        s.mean = v.mean();
        s.std = v.size() > 1 ? std::sqrt((v.array() - s.mean).square().sum() / double(v.size() - 1)) : 0.0;
        return s;
    };
    BootstrapReport out;
    out.trials = trials;
    for (const auto& [task, v] : trial_scores) out.per_task[task] = summary(v);
    out.total = summary(totals);
    return out;
}

BootstrapReport bootstrap_pll(const PosteriorSamples& samples, const FleetModel& model, const FleetDataset& test,
                              int trials, std::uint64_t seed, bool resample, const TaskMap& as_task)
{
    return bootstrap_scores(predictive_log_likelihood(samples, model, test, as_task), trials, seed, resample);
}

} // namespace fleet
