#include "fleet/hazard_model.hpp"
#include "fleet/densities.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fleet {

std::optional<std::size_t> ParameterLayout::index_of(const std::string& name) const
{
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

std::size_t ParameterLayout::add(std::string name, bool is_positive)
{
    names.push_back(std::move(name));
    positive.push_back(is_positive);
    return names.size() - 1;
}

bool FleetModel::has_task(TaskId task) const
{
    const auto& t = tasks();
    return std::find(t.begin(), t.end(), task) != t.end();
}

double FleetModel::log_posterior(const Eigen::VectorXd& theta) const
{
    const double lp = log_prior(theta);
    if (!std::isfinite(lp)) return lp;
    return lp + log_likelihood(theta);
}

HazardStructure HazardStructure::make(std::vector<TaskId> tasks, int H, BetaTying tying, HyperMode hyper)
{
    if (tasks.empty()) throw std::invalid_argument("hazard model needs at least one task");
    if (H < 1) throw std::invalid_argument("hazard model needs H >= 1");
    std::sort(tasks.begin(), tasks.end());
    tasks.erase(std::unique(tasks.begin(), tasks.end()), tasks.end());

    HazardStructure s;
    s.tasks = std::move(tasks);
    s.H = H;
    s.hyper = hyper;
    if (tying == BetaTying::kGlobal) {
        s.group_labels = {0};
        s.beta_group.assign(s.tasks.size(), 0);
    } else {
        std::set<int> labels;
        for (const auto& t : s.tasks) labels.insert(t.l);
        s.group_labels.assign(labels.begin(), labels.end());
        for (const auto& t : s.tasks) {
            s.beta_group.push_back(static_cast<int>(
                std::lower_bound(s.group_labels.begin(), s.group_labels.end(), t.l) - s.group_labels.begin()));
        }
    }
    return s;
}

int HazardStructure::task_index(TaskId task) const
{
    auto it = std::lower_bound(tasks.begin(), tasks.end(), task);
    if (it == tasks.end() || !(*it == task)) throw std::out_of_range("task (" + to_string(task) + ") not in model");
    return static_cast<int>(it - tasks.begin());
}

int HazardStructure::group_index(int l) const
{
    if (group_labels.size() == 1 && group_labels[0] == 0) return 0;
    auto it = std::lower_bound(group_labels.begin(), group_labels.end(), l);
    if (it == group_labels.end() || *it != l) throw std::out_of_range("group l=" + std::to_string(l) + " not in model");
    return static_cast<int>(it - group_labels.begin());
}

ParameterLayout HazardStructure::layout() const
{
    ParameterLayout out;
    for (const auto& t : tasks) out.add("alpha1[" + to_string(t) + "]");
    for (const auto& t : tasks) out.add("alpha2[" + to_string(t) + "]");
    for (int g = 0; g < num_groups(); ++g) {
        for (int h = 0; h < H; ++h) {
            out.add("beta[" + std::to_string(h + 1) + "," + std::to_string(group_labels[g]) + "]");
        }
    }
    for (int g = 0; g < num_groups(); ++g) {
        for (int h = 0; h < H; ++h) {
            out.add("sigma_h[" + std::to_string(h + 1) + "," + std::to_string(group_labels[g]) + "]", true);
        }
    }
    if (hyper == HyperMode::kSampled) {
        out.add("mu_alpha[1]");
        out.add("mu_alpha[2]");
        out.add("sigma_alpha[1]", true);
        out.add("sigma_alpha[2]", true);
    }
    out.add("sigma", true);
    return out;
}

HazardParams unpack(const HazardStructure& s, const Eigen::VectorXd& theta, const HazardHyperPriors& hyper)
{
    const auto expected = static_cast<Eigen::Index>(s.parameter_count());
    if (theta.size() != expected) {
        throw std::invalid_argument("hazard parameter vector has " + std::to_string(theta.size()) +
                                    " entries, layout needs " + std::to_string(expected));
    }
    const Eigen::Index K = s.num_tasks(), G = s.num_groups(), H = s.H;
    HazardParams p;
    p.alpha.resize(2, K);
    p.alpha.row(0) = theta.segment(0, K).transpose();
    p.alpha.row(1) = theta.segment(K, K).transpose();
    Eigen::Index at = 2 * K;
    p.beta = Eigen::Map<const Eigen::MatrixXd>(theta.data() + at, H, G);
    at += H * G;
    p.sigma_h = Eigen::Map<const Eigen::MatrixXd>(theta.data() + at, H, G);
    at += H * G;
    if (s.hyper == HyperMode::kSampled) {
        p.mu_alpha = theta.segment<2>(at);
        p.sigma_alpha = theta.segment<2>(at + 2);
        at += 4;
    } else {
        p.mu_alpha = hyper.m_alpha;
        p.sigma_alpha = hyper.s_alpha;
    }
    p.sigma = theta(at);
    return p;
}

Eigen::VectorXd pack(const HazardStructure& s, const HazardParams& p)
{
    const Eigen::Index K = s.num_tasks(), G = s.num_groups(), H = s.H;
    if (p.alpha.cols() != K || p.beta.rows() != H || p.beta.cols() != G || p.sigma_h.rows() != H ||
        p.sigma_h.cols() != G) {
        throw std::invalid_argument("hazard parameters do not match the model structure");
    }
    Eigen::VectorXd theta(static_cast<Eigen::Index>(s.parameter_count()));
    theta.segment(0, K) = p.alpha.row(0).transpose();
    theta.segment(K, K) = p.alpha.row(1).transpose();
    Eigen::Index at = 2 * K;
    theta.segment(at, H * G) = p.beta.reshaped();
    at += H * G;
    theta.segment(at, H * G) = p.sigma_h.reshaped();
    at += H * G;
    if (s.hyper == HyperMode::kSampled) {
        theta.segment<2>(at) = p.mu_alpha;
        theta.segment<2>(at + 2) = p.sigma_alpha;
        at += 4;
    }
    theta(at) = p.sigma;
    return theta;
}

double log_prior(const HazardStructure& s, const HazardParams& p, const HazardHyperPriors& hyper)
{
    if (p.alpha.cols() != s.num_tasks() || p.beta.rows() != s.H || p.beta.cols() != s.num_groups() ||
        p.sigma_h.rows() != s.H || p.sigma_h.cols() != s.num_groups()) {
        throw std::invalid_argument("hazard parameters do not match the model structure");
    }
    if (!(p.sigma > 0.0) || !(p.sigma_alpha.minCoeff() > 0.0) || !(p.sigma_h.minCoeff() > 0.0)) return kNegInf;

    double lp = 0.0;
    for (Eigen::Index t = 0; t < p.alpha.cols(); ++t) {
        for (int j = 0; j < 2; ++j) lp += normal_logpdf(p.alpha(j, t), p.mu_alpha(j), p.sigma_alpha(j));
    }
    if (s.hyper == HyperMode::kSampled) {
        for (int j = 0; j < 2; ++j) {
            lp += normal_logpdf(p.mu_alpha(j), hyper.m_alpha(j), hyper.s_alpha(j));
            lp += inv_gamma_logpdf(p.sigma_alpha(j), hyper.a, hyper.b);
        }
    }
    const double v = hyper.shrinkage_v;
    for (Eigen::Index g = 0; g < p.beta.cols(); ++g) {
        for (Eigen::Index h = 0; h < p.beta.rows(); ++h) {
            const double sh = p.sigma_h(h, g);
            lp += normal_logpdf(p.beta(h, g), 0.0, sh);
            // IG(v, v) on the variance, expressed as a density of the scale.
            lp += inv_gamma_logpdf(sh * sh, v, v) + std::log(2.0 * sh);
        }
    }
    lp += inv_gamma_logpdf(p.sigma, hyper.noise_shape, hyper.noise_scale);
    return lp;
}

double predict_mean(const HazardStructure& s, const HazardParams& p, const SplineBasis<double>& basis, TaskId task,
                    double x)
{
    const int t = s.task_index(task);
    return p.alpha(0, t) + p.alpha(1, t) * x + eval_basis(basis, x).dot(p.beta.col(s.beta_group[t]));
}

double log_likelihood(const HazardStructure& s, const HazardParams& p, const FleetDataset& data,
                      const SplineBasis<double>& basis)
{
    if (basis.size() != s.H) throw std::invalid_argument("basis size differs from model H");
    double ll = 0.0;
    for (const auto& o : data.observations) {
        ll += normal_logpdf(o.y, predict_mean(s, p, basis, o.task(), o.x), p.sigma);
    }
    return ll;
}

std::vector<HazardStructure> independent_variant(const HazardStructure& s)
{
    std::vector<HazardStructure> out;
    for (const auto& t : s.tasks) out.push_back(HazardStructure::make({t}, s.H, BetaTying::kPerGroup, HyperMode::kFixed));
    return out;
}

SplineBasis<double> basis_for(const FleetDataset& data, int H)
{
    auto [lo, hi] = data.x_range();
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    return make_basis(lo, hi, H);
}

HazardModel::HazardModel(const FleetDataset& train, SplineBasis<double> basis, BetaTying tying, HyperMode hyper,
                         HazardHyperPriors priors)
    : structure_(HazardStructure::make(train.tasks(), basis.size(), tying, hyper)),
      basis_(basis),
      priors_(std::move(priors)),
      layout_(structure_.layout())
{
    data_.resize(structure_.tasks.size());
    std::vector<std::vector<double>> xs(data_.size()), ys(data_.size());
    for (const auto& o : train.observations) {
        const auto t = static_cast<std::size_t>(structure_.task_index(o.task()));
        xs[t].push_back(o.x);
        ys[t].push_back(o.y);
    }
    for (std::size_t t = 0; t < data_.size(); ++t) {
        data_[t].x = Eigen::Map<const Eigen::VectorXd>(xs[t].data(), static_cast<Eigen::Index>(xs[t].size()));
        data_[t].y = Eigen::Map<const Eigen::VectorXd>(ys[t].data(), static_cast<Eigen::Index>(ys[t].size()));
        data_[t].psi = design_matrix(basis_, data_[t].x);
        n_obs_ += xs[t].size();
    }
    const Eigen::Index K = structure_.num_tasks(), G = structure_.num_groups(), H = structure_.H;
    beta_offset_ = 2 * K;
    hyper_offset_ = beta_offset_ + 2 * H * G;
    sigma_index_ = static_cast<Eigen::Index>(layout_.size()) - 1;
}

double HazardModel::log_prior(const Eigen::VectorXd& theta) const
{
    return fleet::log_prior(structure_, unpack(structure_, theta, priors_), priors_);
}

double HazardModel::log_likelihood(const Eigen::VectorXd& theta) const
{
    const double sigma = theta(sigma_index_);
    if (!(sigma > 0.0)) return kNegInf;
    const Eigen::Index K = structure_.num_tasks(), H = structure_.H;
    double ss = 0.0;
    for (Eigen::Index t = 0; t < K; ++t) {
        const auto& d = data_[static_cast<std::size_t>(t)];
        if (d.x.size() == 0) continue;
        const auto beta = theta.segment(beta_offset_ + H * structure_.beta_group[static_cast<std::size_t>(t)], H);
        ss += (d.y.array() - (d.psi * beta).array() - theta(t) - theta(K + t) * d.x.array()).square().sum();
    }
    const double n = double(n_obs_);
    return -0.5 * ss / (sigma * sigma) - n * std::log(sigma) - n * kHalfLog2Pi;
}

Eigen::VectorXd HazardModel::initial_point() const
{
    const Eigen::Index K = structure_.num_tasks();
    HazardParams p;
    p.alpha.resize(2, K);
    std::vector<bool> fitted(static_cast<std::size_t>(K), false);
    double ss = 0.0;
    std::size_t n_resid = 0;
    for (Eigen::Index t = 0; t < K; ++t) {
        const auto& d = data_[static_cast<std::size_t>(t)];
        p.alpha.col(t) = priors_.m_alpha;
        if (d.x.size() >= 3) {
            const double mx = d.x.mean(), my = d.y.mean();
            const double sxx = (d.x.array() - mx).square().sum();
            if (sxx > 1e-12) {
                const double slope = ((d.x.array() - mx) * (d.y.array() - my)).sum() / sxx;
                p.alpha.col(t) << my - slope * mx, slope;
                fitted[static_cast<std::size_t>(t)] = true;
                ss += (d.y.array() - p.alpha(0, t) - slope * d.x.array()).square().sum();
                n_resid += static_cast<std::size_t>(d.x.size());
            }
        }
    }
    p.beta = Eigen::MatrixXd::Zero(structure_.H, structure_.num_groups());
    p.sigma_h = Eigen::MatrixXd::Ones(structure_.H, structure_.num_groups());
    p.mu_alpha = priors_.m_alpha;
    p.sigma_alpha = priors_.s_alpha;
    if (structure_.hyper == HyperMode::kSampled) {
        const Eigen::Index n_fit = std::count(fitted.begin(), fitted.end(), true);
        if (n_fit >= 2) {
            Eigen::Matrix2Xd a(2, n_fit);
            for (Eigen::Index t = 0, j = 0; t < K; ++t) {
                if (fitted[static_cast<std::size_t>(t)]) a.col(j++) = p.alpha.col(t);
            }
            p.mu_alpha = a.rowwise().mean();
            const Eigen::Vector2d sd =
                ((a.colwise() - p.mu_alpha).array().square().rowwise().sum() / double(n_fit - 1)).sqrt();
            p.sigma_alpha = sd.cwiseMax(0.1).cwiseMin(2.0);
        } else {
            p.sigma_alpha.setConstant(0.5);
        }
    }
    p.sigma = n_resid > 2 ? std::clamp(std::sqrt(ss / double(n_resid)), 0.05, 2.0) : 0.2;
    return pack(structure_, p);
}

std::optional<std::string> HazardModel::infeasible_parameter(const Eigen::VectorXd& theta) const
{
    if (theta.size() != static_cast<Eigen::Index>(layout_.size())) return std::string("<dimension>");
    for (std::size_t i = 0; i < layout_.size(); ++i) {
        const double v = theta(static_cast<Eigen::Index>(i));
        if (!std::isfinite(v) || (layout_.positive[i] && !(v > 0.0))) return layout_.names[i];
    }
    return std::nullopt;
}

double HazardModel::mean(const Eigen::VectorXd& theta, TaskId task, double x) const
{
    const Eigen::Index K = structure_.num_tasks(), H = structure_.H;
    const int t = structure_.task_index(task);
    const auto beta = theta.segment(beta_offset_ + H * structure_.beta_group[static_cast<std::size_t>(t)], H);
    Eigen::VectorXd b(H);
    eval_basis_into(basis_, x, b);
    return theta(t) + theta(K + t) * x + b.dot(beta);
}

double HazardModel::noise_sd(const Eigen::VectorXd& theta, TaskId task) const
{
    structure_.task_index(task);
    return theta(sigma_index_);
}

Eigen::VectorXd HazardModel::population_mean(const Eigen::VectorXd& theta, int l, std::span<const double> xs,
                                             Rng& rng) const
{
    const Eigen::Index H = structure_.H;
    const int g = structure_.group_index(l);
    const HazardParams p = unpack(structure_, theta, priors_);
    std::normal_distribution<double> z(0.0, 1.0);
    const double a1 = p.mu_alpha(0) + p.sigma_alpha(0) * z(rng);
    const double a2 = p.mu_alpha(1) + p.sigma_alpha(1) * z(rng);
    Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd b(H);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        eval_basis_into(basis_, xs[i], b);
        out(static_cast<Eigen::Index>(i)) = a1 + a2 * xs[i] + b.dot(p.beta.col(g));
    }
    return out;
}

double HazardModel::population_noise_sd(const Eigen::VectorXd& theta, int) const
{
    return theta(sigma_index_);
}

} // namespace fleet
