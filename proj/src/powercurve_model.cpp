#include "fleet/powercurve_model.hpp"
#include "fleet/densities.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fleet {

NormalPrior PowerHyperPriors::max_power_prior(int l) const
{
    auto it = max_power.find(l);
    if (it != max_power.end()) return it->second;
    return max_power.begin()->second;
}

PowerStructure PowerStructure::make(std::vector<TaskId> tasks, HyperMode hyper)
{
    if (tasks.empty()) throw std::invalid_argument("power model needs at least one task");
    std::sort(tasks.begin(), tasks.end());
    tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());
    PowerStructure s;
    s.tasks = std::move(tasks);
    s.hyper = hyper;
    std::set<int> labels;
    for (const auto& t : s.tasks) labels.insert(t.l);
    s.group_labels.assign(labels.begin(), labels.end());
    for (const auto& t : s.tasks) s.group_of_task.push_back(s.group_index(t.l));
    return s;
}

int PowerStructure::task_index(TaskId task) const
{
    auto it = std::lower_bound(tasks.begin(), tasks.end(), task);
    if (it == tasks.end() || !(*it == task)) throw std::out_of_range("task (" + to_string(task) + ") not in model");
    return static_cast<int>(it - tasks.begin());
}

int PowerStructure::group_index(int l) const
{
    auto it = std::lower_bound(group_labels.begin(), group_labels.end(), l);
    if (it == group_labels.end() || *it != l) throw std::out_of_range("group l=" + std::to_string(l) + " not in model");
    return static_cast<int>(it - group_labels.begin());
}

ParameterLayout PowerStructure::layout() const
{
    ParameterLayout out;
    out.add("p");
    for (const auto& t : tasks) out.add("q[" + to_string(t) + "]");
    for (const auto& t : tasks) out.add("r[" + to_string(t) + "]");
    for (const auto& t : tasks) out.add("m1[" + to_string(t) + "]");
    for (int l : group_labels) out.add("Pm[" + std::to_string(l) + "]");
    if (hyper == HyperMode::kSampled) {
        out.add("mu_q");
        out.add("mu_r");
        out.add("mu_p");
        out.add("sigma_cp", true);
        out.add("mu_m1");
        out.add("sigma_m1", true);
    }
    out.add("sigma", true);
    return out;
}

PowerParams unpack(const PowerStructure& s, const Eigen::VectorXd& theta, const PowerHyperPriors& hyper)
{
    const Eigen::Index K = s.num_tasks(), G = s.num_groups();
    const Eigen::Index expected = 1 + 3 * K + G + (s.hyper == HyperMode::kSampled ? 6 : 0) + 1;
    if (theta.size() != expected) {
        throw std::invalid_argument("power parameter vector has " + std::to_string(theta.size()) +
                                    " entries, layout needs " + std::to_string(expected));
    }
    PowerParams p;
    p.p = theta(0);
    p.q = theta.segment(1, K);
    p.r = theta.segment(1 + K, K);
    p.m1 = theta.segment(1 + 2 * K, K);
    p.Pm = theta.segment(1 + 3 * K, G);
    Eigen::Index at = 1 + 3 * K + G;
    if (s.hyper == HyperMode::kSampled) {
        p.mu_q = theta(at);
        p.mu_r = theta(at + 1);
        p.mu_p = theta(at + 2);
        p.sigma_cp = theta(at + 3);
        p.mu_m1 = theta(at + 4);
        p.sigma_m1 = theta(at + 5);
        at += 6;
    } else {
        p.mu_p = hyper.mu_p.mean;
        p.mu_q = hyper.mu_q.mean;
        p.mu_r = hyper.mu_r.mean;
        p.sigma_cp = hyper.fixed_sigma_cp;
        p.mu_m1 = hyper.mu_m1.mean;
        p.sigma_m1 = hyper.fixed_sigma_m1;
    }
    p.sigma = theta(at);
    return p;
}

Eigen::VectorXd pack(const PowerStructure& s, const PowerParams& p)
{
    const Eigen::Index K = s.num_tasks(), G = s.num_groups();
    if (p.q.size() != K || p.r.size() != K || p.m1.size() != K || p.Pm.size() != G) {
        throw std::invalid_argument("power parameters do not match the model structure");
    }
    const bool sampled = s.hyper == HyperMode::kSampled;
    Eigen::VectorXd theta(1 + 3 * K + G + (sampled ? 6 : 0) + 1);
    theta(0) = p.p;
    theta.segment(1, K) = p.q;
    theta.segment(1 + K, K) = p.r;
    theta.segment(1 + 2 * K, K) = p.m1;
    theta.segment(1 + 3 * K, G) = p.Pm;
    Eigen::Index at = 1 + 3 * K + G;
    if (sampled) {
        theta.segment(at, 6) << p.mu_q, p.mu_r, p.mu_p, p.sigma_cp, p.mu_m1, p.sigma_m1;
        at += 6;
    }
    theta(at) = p.sigma;
    return theta;
}

double segmented_power(double p, double q, double r, double m1, double pm, double x)
{
    if (x < p) return 0.0;
    const double rise = m1 * (q - p);
    if (x < q) return m1 * (x - p);
    if (x < r) return (pm - rise) / (r - q) * (x - q) + rise;
    return pm;
}

double power_mean(const PowerStructure& s, const PowerParams& params, TaskId task, double x)
{
    const int t = s.task_index(task);
    const double q = params.q(t), r = params.r(t);
    if (!(params.p < q && q < r)) {
        throw std::domain_error("change points of task (" + to_string(task) + ") violate p < q < r");
    }
    return segmented_power(params.p, q, r, params.m1(t), params.Pm(s.group_of_task[static_cast<std::size_t>(t)]), x);
}

double log_prior(const PowerStructure& s, const PowerParams& p, const PowerHyperPriors& hyper)
{
    if (p.q.size() != s.num_tasks() || p.r.size() != s.num_tasks() || p.m1.size() != s.num_tasks() ||
        p.Pm.size() != s.num_groups()) {
        throw std::invalid_argument("power parameters do not match the model structure");
    }
    if (!(p.sigma_cp > 0.0) || !(p.sigma_m1 > 0.0) || !(p.sigma > 0.0)) return kNegInf;
    for (int t = 0; t < s.num_tasks(); ++t) {
        if (!(p.p < p.q(t) && p.q(t) < p.r(t))) return kNegInf;
    }

    double lp = normal_logpdf(p.p, p.mu_p, p.sigma_cp);
    for (int t = 0; t < s.num_tasks(); ++t) {
        lp += normal_logpdf(p.q(t), p.mu_q, p.sigma_cp);
        lp += normal_logpdf(p.r(t), p.mu_r, p.sigma_cp);
        lp += normal_logpdf(p.m1(t), p.mu_m1, p.sigma_m1);
    }
    for (int g = 0; g < s.num_groups(); ++g) {
        const auto prior = hyper.max_power_prior(s.group_labels[static_cast<std::size_t>(g)]);
        lp += normal_logpdf(p.Pm(g), prior.mean, prior.sd);
    }
    if (s.hyper == HyperMode::kSampled) {
        lp += normal_logpdf(p.mu_p, hyper.mu_p.mean, hyper.mu_p.sd);
        lp += normal_logpdf(p.mu_q, hyper.mu_q.mean, hyper.mu_q.sd);
        lp += normal_logpdf(p.mu_r, hyper.mu_r.mean, hyper.mu_r.sd);
        lp += inv_gamma_logpdf(p.sigma_cp, hyper.cp_shape, hyper.cp_scale);
        lp += normal_logpdf(p.mu_m1, hyper.mu_m1.mean, hyper.mu_m1.sd);
        lp += inv_gamma_logpdf(p.sigma_m1, hyper.m1_shape, hyper.m1_scale);
    }
    lp += inv_gamma_logpdf(p.sigma, hyper.noise_shape, hyper.noise_scale);
    return lp;
}

double log_likelihood(const PowerStructure& s, const PowerParams& params, const FleetDataset& data)
{
    double ll = 0.0;
    for (const auto& o : data.observations) {
        ll += normal_logpdf(o.y, power_mean(s, params, o.task(), o.x), params.sigma);
    }
    return ll;
}

PowerCurveModel::PowerCurveModel(const FleetDataset& train, HyperMode hyper, PowerHyperPriors priors)
    : structure_(PowerStructure::make(train.tasks(), hyper)), priors_(std::move(priors)), layout_(structure_.layout())
{
    std::vector<std::vector<double>> xs(structure_.tasks.size()), ys(structure_.tasks.size());
    for (const auto& o : train.observations) {
        const auto t = static_cast<std::size_t>(structure_.task_index(o.task()));
        xs[t].push_back(o.x);
        ys[t].push_back(o.y);
    }
    for (std::size_t t = 0; t < xs.size(); ++t) {
        x_.emplace_back(Eigen::Map<const Eigen::VectorXd>(xs[t].data(), static_cast<Eigen::Index>(xs[t].size())));
        y_.emplace_back(Eigen::Map<const Eigen::VectorXd>(ys[t].data(), static_cast<Eigen::Index>(ys[t].size())));
        n_obs_ += xs[t].size();
    }
}

double PowerCurveModel::log_prior(const Eigen::VectorXd& theta) const
{
    return fleet::log_prior(structure_, unpack(structure_, theta, priors_), priors_);
}

double PowerCurveModel::log_likelihood(const Eigen::VectorXd& theta) const
{
    const Eigen::Index K = structure_.num_tasks();
    const double p = theta(0);
    const double sigma = theta(theta.size() - 1);
    if (!(sigma > 0.0)) return kNegInf;
    double ss = 0.0;
    for (Eigen::Index t = 0; t < K; ++t) {
        const double q = theta(1 + t), r = theta(1 + K + t), m1 = theta(1 + 2 * K + t);
        if (!(p < q && q < r)) return kNegInf;
        const double pm = theta(1 + 3 * K + structure_.group_of_task[static_cast<std::size_t>(t)]);
        const auto& x = x_[static_cast<std::size_t>(t)];
        const auto& y = y_[static_cast<std::size_t>(t)];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double e = y(i) - segmented_power(p, q, r, m1, pm, x(i));
            ss += e * e;
        }
    }
    const double n = double(n_obs_);
    return -0.5 * ss / (sigma * sigma) - n * std::log(sigma) - n * kHalfLog2Pi;
}

Eigen::VectorXd PowerCurveModel::initial_point() const
{
    const Eigen::Index K = structure_.num_tasks(), G = structure_.num_groups();
    PowerParams p;
    p.p = priors_.mu_p.mean;
    p.q = Eigen::VectorXd::Constant(K, priors_.mu_q.mean);
    p.r = Eigen::VectorXd::Constant(K, priors_.mu_r.mean);
    p.m1 = Eigen::VectorXd::Constant(K, priors_.mu_m1.mean);
    p.Pm.resize(G);
    // Start each maximum power at the mean response beyond the prior rated speed.
    for (Eigen::Index g = 0; g < G; ++g) {
        double sum = 0.0;
        std::size_t n = 0;
        for (Eigen::Index t = 0; t < K; ++t) {
            if (structure_.group_of_task[static_cast<std::size_t>(t)] != g) continue;
            const auto& x = x_[static_cast<std::size_t>(t)];
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (x(i) > priors_.mu_r.mean) {
                    sum += y_[static_cast<std::size_t>(t)](i);
                    ++n;
                }
            }
        }
        p.Pm(g) = n > 0 ? sum / double(n) : priors_.max_power_prior(structure_.group_labels[static_cast<std::size_t>(g)]).mean;
    }
    p.mu_p = priors_.mu_p.mean;
    p.mu_q = priors_.mu_q.mean;
    p.mu_r = priors_.mu_r.mean;
    p.sigma_cp = priors_.fixed_sigma_cp;
    p.mu_m1 = priors_.mu_m1.mean;
    p.sigma_m1 = priors_.fixed_sigma_m1;
    p.sigma = 0.2;
    return pack(structure_, p);
}

std::optional<std::string> PowerCurveModel::infeasible_parameter(const Eigen::VectorXd& theta) const
{
    if (theta.size() != static_cast<Eigen::Index>(layout_.size())) return std::string("<dimension>");
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        const double v = theta(static_cast<Eigen::Index>(i));
        if (!std::isfinite(v) || (layout_.positive[i] && !(v > 0.0))) return layout_.names[i];
    }
    const Eigen::Index K = structure_.num_tasks();
    for (Eigen::Index t = 0; t < K; ++t) {
        if (!(theta(0) < theta(1 + t))) return layout_.names[static_cast<std::size_t>(1 + t)];
        if (!(theta(1 + t) < theta(1 + K + t))) return layout_.names[static_cast<std::size_t>(1 + K + t)];
    }
    return std::nullopt;
}

double PowerCurveModel::mean(const Eigen::VectorXd& theta, TaskId task, double x) const
{
    const Eigen::Index K = structure_.num_tasks();
    const int t = structure_.task_index(task);
    const double q = theta(1 + t), r = theta(1 + K + t);
    if (!(theta(0) < q && q < r)) throw std::domain_error("change points violate p < q < r");
    return segmented_power(theta(0), q, r, theta(1 + 2 * K + t),
                           theta(1 + 3 * K + structure_.group_of_task[static_cast<std::size_t>(t)]), x);
}

double PowerCurveModel::noise_sd(const Eigen::VectorXd& theta, TaskId task) const
{
    structure_.task_index(task);
    return theta(theta.size() - 1);
}

Eigen::VectorXd PowerCurveModel::population_mean(const Eigen::VectorXd& theta, int l, std::span<const double> xs,
                                                 Rng& rng) const
{
    const PowerParams p = unpack(structure_, theta, priors_);
    const double pm = p.Pm(structure_.group_index(l));
    std::normal_distribution<double> z(0.0, 1.0);
    constexpr int kMaxAttempts = 100; // all rejected means an acceptance rate below 1%
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double q = p.mu_q + p.sigma_cp * z(rng);
        const double r = p.mu_r + p.sigma_cp * z(rng);
        const double m1 = p.mu_m1 + p.sigma_m1 * z(rng);
        if (!(p.p < q && q < r)) continue;
        Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = segmented_power(p.p, q, r, m1, pm, xs[i]);
        return out;
    }
    throw std::runtime_error("population change points rejected in over 99% of draws; hyper-parameters are degenerate");
}

double PowerCurveModel::population_noise_sd(const Eigen::VectorXd& theta, int) const
{
    return theta(theta.size() - 1);
}

} // namespace fleet
