#include "fleet/inference.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace fleet {

void ChainConfig::validate() const
{
    if (n_chains < 1) throw std::invalid_argument("n_chains must be at least 1");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
    if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    if (!(adapt_target > 0.0 && adapt_target < 1.0)) throw std::invalid_argument("adapt_target must lie in (0, 1)");
}

SamplerTarget SamplerTarget::from_model(const FleetModel& model)
{
    SamplerTarget t;
    t.names = model.layout().names;
    t.positive = model.layout().positive;
    t.log_density = [&model](const Eigen::VectorXd& theta) { return model.log_posterior(theta); };
    t.initial_point = model.initial_point();
    t.explain = [&model](const Eigen::VectorXd& theta) { return model.infeasible_parameter(theta); };
    return t;
}

std::optional<Eigen::Index> PosteriorSamples::index_of(const std::string& name) const
{
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
}

Eigen::MatrixXd PosteriorSamples::pooled() const
{
    Eigen::MatrixXd out(total_draws(), dims());
    Eigen::Index row = 0;
    for (const auto& c : chains) {
        out.middleRows(row, c.rows()) = c;
        row += c.rows();
    }
    return out;
}

Eigen::VectorXd PosteriorSamples::column(const std::string& name) const
{
    const auto j = index_of(name);
    if (!j) throw std::out_of_range("no parameter named " + name);
    Eigen::VectorXd out(total_draws());
    Eigen::Index row = 0;
    for (const auto& c : chains) {
        out.segment(row, c.rows()) = c.col(*j);
        row += c.rows();
    }
    return out;
}

Eigen::VectorXd PosteriorSamples::pooled_log_density() const
{
    Eigen::VectorXd out(total_draws());
    Eigen::Index row = 0;
    for (const auto& lp : log_density) {
        out.segment(row, lp.size()) = lp;
        row += lp.size();
    }
    return out;
}

Eigen::VectorXd PosteriorSamples::mean_acceptance() const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dims());
    for (const auto& a : acceptance) out += a;
    if (!acceptance.empty()) out /= double(acceptance.size());
    return out;
}

namespace {

std::string describe(const std::vector<std::string>& names, const Eigen::VectorXd& theta)
{
    std::ostringstream os;
    os.precision(17);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (i) os << ", ";
        os << names[static_cast<std::size_t>(i)] << "=" << theta(i);
    }
    return os.str();
}

// One chain of componentwise random-walk Metropolis on the unconstrained scale.
void run_chain(const SamplerTarget& target, const ChainConfig& config, const Eigen::VectorXd& start, int chain,
               PosteriorSamples& out)
{
    const Eigen::Index d = start.size();
    Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(chain));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    auto density = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& theta) {
        double lp = target.log_density(theta);
        if (std::isnan(lp)) {
            throw std::runtime_error("log posterior is NaN at " + describe(target.names, theta));
        }
        if (lp == -std::numeric_limits<double>::infinity()) return lp;
        for (Eigen::Index i = 0; i < d; ++i) {
            if (target.positive[static_cast<std::size_t>(i)]) lp += z(i); // Jacobian of exp
        }
        return lp;
    };

    // Jitter the start by 1% per chain, keeping the unjittered point if the
    // perturbed one leaves the support.
    Eigen::VectorXd theta = start;
    {
        Eigen::VectorXd jittered = start;
        for (Eigen::Index i = 0; i < d; ++i) jittered(i) *= 1.0 + 0.01 * normal(rng);
        if (std::isfinite(target.log_density(jittered))) theta = jittered;
    }
    Eigen::VectorXd z = theta;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (target.positive[static_cast<std::size_t>(i)]) z(i) = std::log(theta(i));
    }
    double lp = density(z, theta);

    Eigen::VectorXd log_step = Eigen::VectorXd::Constant(d, std::log(0.1));
    Eigen::VectorXd accepted = Eigen::VectorXd::Zero(d);

    // Joint move with a proposal covariance learnt from the second half of
    // burn-in; it follows ridges that single-coordinate steps cross slowly.
    const int learn_from = config.burn_in / 2;
    const bool use_block = d > 1 && config.burn_in >= 200;
    const int block_moves = static_cast<int>(std::max<Eigen::Index>(1, d / 4));
    Eigen::VectorXd z_mean = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd z_scatter = Eigen::MatrixXd::Zero(d, d);
    int n_seen = 0;
    double log_block_scale = std::log(2.38 * 2.38 / double(d));
    Eigen::MatrixXd block_chol;
    double block_accepted = 0.0;
    auto refresh_block = [&]() {
        Eigen::MatrixXd cov = z_scatter / double(std::max(n_seen - 1, 1));
        cov.diagonal().array() += 1e-10 + 1e-6 * cov.diagonal().array();
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) block_chol = llt.matrixL();
    };
    Eigen::MatrixXd draws(config.n_samples, d);
    Eigen::VectorXd draw_lp(config.n_samples);

    const int total = config.burn_in + config.n_samples;
    for (int t = 0; t < total; ++t) {
        const bool adapting = t < config.burn_in;
        const double gain = adapting ? std::pow(t + 1.0, -0.6) : 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double old_z = z(i), old_theta = theta(i);
            z(i) = old_z + std::exp(log_step(i)) * normal(rng);
            theta(i) = target.positive[static_cast<std::size_t>(i)] ? std::exp(z(i)) : z(i);
            const double proposal = density(z, theta);
            const bool accept = std::log(uniform(rng)) < proposal - lp;
            if (accept) {
                lp = proposal;
            } else {
                z(i) = old_z;
                theta(i) = old_theta;
            }
            if (adapting) {
                log_step(i) += gain * ((accept ? 1.0 : 0.0) - config.adapt_target);
            } else if (accept) {
                accepted(i) += 1.0;
            }
        }
        if (use_block) {
            if (adapting && t >= learn_from) {
                ++n_seen;
                const Eigen::VectorXd delta = z - z_mean;
                z_mean += delta / double(n_seen);
                z_scatter += delta * (z - z_mean).transpose();
                if (n_seen >= 100 && (n_seen % 50 == 0 || t + 1 == config.burn_in)) refresh_block();
            }
            for (int rep = 0; rep < block_moves && block_chol.size() > 0; ++rep) {
                Eigen::VectorXd step(d);
                for (Eigen::Index i = 0; i < d; ++i) step(i) = normal(rng);
                const Eigen::VectorXd z_new = z + std::exp(0.5 * log_block_scale) * (block_chol * step);
                Eigen::VectorXd theta_new = z_new;
                for (Eigen::Index i = 0; i < d; ++i) {
                    if (target.positive[static_cast<std::size_t>(i)]) theta_new(i) = std::exp(z_new(i));
                }
                const double proposal = density(z_new, theta_new);
                const bool accept = std::log(uniform(rng)) < proposal - lp;
                if (accept) {
                    z = z_new;
                    theta = theta_new;
                    lp = proposal;
                }
                if (adapting) {
                    log_block_scale += gain * ((accept ? 1.0 : 0.0) - 0.234);
                } else if (accept) {
                    block_accepted += 1.0 / block_moves;
                }
            }
        }
        if (!adapting) {
            draws.row(t - config.burn_in) = theta.transpose();
            draw_lp(t - config.burn_in) = lp;
        }
    }
    out.chains[static_cast<std::size_t>(chain)] = std::move(draws);
    out.log_density[static_cast<std::size_t>(chain)] = std::move(draw_lp);
    out.acceptance[static_cast<std::size_t>(chain)] = accepted / double(config.n_samples);
    out.block_acceptance[static_cast<std::size_t>(chain)] =
        block_chol.size() > 0 ? block_accepted / double(config.n_samples) : std::nan("");
}

} // namespace

PosteriorSamples run_mcmc(const SamplerTarget& target, const ChainConfig& config)
{
    config.validate();
    const Eigen::VectorXd start = config.init ? *config.init : target.initial_point;
    const auto d = static_cast<std::size_t>(start.size());
    if (d == 0 || target.names.size() != d || target.positive.size() != d) {
        throw std::invalid_argument("sampler target dimensions are inconsistent");
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (target.positive[i] && !(start(static_cast<Eigen::Index>(i)) > 0.0)) {
            throw InfeasibleInit(target.names[i], "initial value of " + target.names[i] + " must be positive");
        }
    }
    const double lp0 = target.log_density(start);
    if (!(lp0 > -std::numeric_limits<double>::infinity())) {
        std::string name = "<unknown>";
        if (target.explain) {
            if (auto n = target.explain(start)) name = *n;
        }
        throw InfeasibleInit(name, "log posterior is not finite at the initial point (check " + name +
                                       "); supply a feasible initialization");
    }

    PosteriorSamples out;
    out.names = target.names;
    out.chains.resize(static_cast<std::size_t>(config.n_chains));
    out.log_density.resize(out.chains.size());
    out.acceptance.resize(out.chains.size());
    out.block_acceptance.resize(out.chains.size());
    for (int c = 0; c < config.n_chains; ++c) run_chain(target, config, start, c, out);
    return out;
}

PosteriorSamples run_mcmc(const FleetModel& model, const ChainConfig& config)
{
    return run_mcmc(SamplerTarget::from_model(model), config);
}

PosteriorSamples run_mcmc(const LogDensity& log_posterior, int dims, const ChainConfig& config,
                          std::vector<bool> positive)
{
    if (dims < 1) throw std::invalid_argument("dims must be at least 1");
    SamplerTarget t;
    t.positive = positive.empty() ? std::vector<bool>(static_cast<std::size_t>(dims), false) : std::move(positive);
    if (t.positive.size() != static_cast<std::size_t>(dims)) throw std::invalid_argument("positive flags do not match dims");
    for (int i = 0; i < dims; ++i) t.names.push_back("theta[" + std::to_string(i + 1) + "]");
    t.log_density = log_posterior;
    t.initial_point = Eigen::VectorXd::Zero(dims);
    for (int i = 0; i < dims; ++i) {
        if (t.positive[static_cast<std::size_t>(i)]) t.initial_point(i) = 1.0;
    }
    return run_mcmc(t, config);
}

namespace {

double variance(const Eigen::VectorXd& v)
{
    if (v.size() < 2) return 0.0;
    return (v.array() - v.mean()).square().sum() / double(v.size() - 1);
}

// Autocovariance at lag t with divide-by-n normalization.
double autocov(const Eigen::VectorXd& v, double mean, Eigen::Index t)
{
    const Eigen::Index n = v.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i + t < n; ++i) s += (v(i) - mean) * (v(i + t) - mean);
    return s / double(n);
}

} // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains)
{
    if (chains.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Index n = chains.front().size();
    for (const auto& c : chains) {
        if (c.size() != n) throw std::invalid_argument("chains differ in length");
    }
    if (n < 4) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::Index half = n / 2;
    std::vector<Eigen::VectorXd> parts;
    for (const auto& c : chains) {
        parts.push_back(c.head(half));
        parts.push_back(c.segment(n - half, half));
    }
    const double m = double(parts.size());
    Eigen::VectorXd means(parts.size());
    double w = 0.0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        means(static_cast<Eigen::Index>(j)) = parts[j].mean();
        w += variance(parts[j]);
    }
    w /= m;
    const double b = double(half) * variance(means);
    if (w <= 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (double(half) - 1.0) / double(half) * w + b / double(half);
    return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains)
{
    if (chains.empty()) return 0.0;
    const Eigen::Index n = chains.front().size();
    const double m = double(chains.size());
    const double total = m * double(n);
    if (n < 2) return total;

    Eigen::VectorXd means(chains.size()), vars(chains.size());
    for (std::size_t j = 0; j < chains.size(); ++j) {
        means(static_cast<Eigen::Index>(j)) = chains[j].mean();
        vars(static_cast<Eigen::Index>(j)) = variance(chains[j]);
    }
    const double w = vars.mean();
    const double b_over_n = chains.size() > 1 ? variance(means) : 0.0;
    const double var_plus = (double(n) - 1.0) / double(n) * w + b_over_n;
    if (!(var_plus > 0.0)) return 0.0;

    auto rho = [&](Eigen::Index t) {
        double acov = 0.0;
        for (std::size_t j = 0; j < chains.size(); ++j) acov += autocov(chains[j], means(static_cast<Eigen::Index>(j)), t);
        acov /= m;
        return 1.0 - (w - acov) / var_plus;
    };

    // Geyer: sum consecutive pairs while positive, enforcing monotonicity.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t + 1 < n; t += 2) {
        double pair = rho(t) + rho(t + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(total)); // Stan's lower bound keeps ESS finite
    return std::min(total / tau, total);
}

Diagnostics diagnostics(const PosteriorSamples& samples)
{
    Diagnostics out;
    const Eigen::VectorXd acc = samples.mean_acceptance();
    for (Eigen::Index j = 0; j < samples.dims(); ++j) {
        ParameterDiagnostics p;
        p.name = samples.names[static_cast<std::size_t>(j)];
        p.acceptance = acc(j);
        std::vector<Eigen::VectorXd> cols;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& c : samples.chains) {
            cols.emplace_back(c.col(j));
            lo = std::min(lo, c.col(j).minCoeff());
            hi = std::max(hi, c.col(j).maxCoeff());
        }
        p.degenerate = !(hi > lo);
        const double r = split_rhat(cols);
        if (!std::isnan(r)) {
            p.rhat = r;
            p.divergent = std::isinf(r);
        }
        p.ess = p.degenerate ? 0.0 : effective_sample_size(cols);
        out.parameters.push_back(std::move(p));
    }
    return out;
}

bool Diagnostics::rhat_available() const
{
    return !parameters.empty() && parameters.front().rhat.has_value();
}

double Diagnostics::max_rhat() const
{
    double m = 1.0;
    for (const auto& p : parameters) {
        if (p.rhat) m = std::max(m, *p.rhat);
    }
    return m;
}

double Diagnostics::min_ess() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : parameters) m = std::min(m, p.ess);
    return m;
}

} // namespace fleet
