#include "fleet/decision.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numeric>

namespace fleet {

UtilityTable UtilityTable::defaults()
{
    return UtilityTable{{{"L0", 0.0, 0.0, 0.0}, {"L1", 0.5, 0.3, -0.3}, {"L2", 0.75, 0.75, -1.0}}};
}

void UtilityTable::validate() const
{
    if (levels.empty()) throw std::invalid_argument("utility table has no levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& lv = levels[i];
        if (!std::isfinite(lv.threshold) || !std::isfinite(lv.payout) || !std::isfinite(lv.penalty)) {
            throw std::invalid_argument("level " + lv.name + " has a non-finite entry");
        }
        if (lv.payout < 0.0) throw std::invalid_argument("level " + lv.name + " has a negative payout");
        if (lv.penalty > 0.0) throw std::invalid_argument("level " + lv.name + " has a positive penalty");
        if (i > 0 && lv.threshold < levels[i - 1].threshold) {
            throw std::invalid_argument("level thresholds must be non-decreasing");
        }
    }
    if (levels.front().payout != 0.0 || levels.front().penalty != 0.0) {
        throw std::invalid_argument("the first level must have zero payout and zero penalty");
    }
}

std::size_t UtilityTable::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i].name == name) return i;
    }
    throw std::invalid_argument("level " + name + " is not in the utility table");
}

double UtilityTable::utility(std::size_t level, double power) const
{
    const auto& lv = levels.at(level);
    return power >= lv.threshold ? lv.payout : lv.penalty;
}

WindPrior WindPrior::beta(double a, double b)
{
    WindPrior w;
    w.kind = Kind::kBeta;
    w.a = a;
    w.b = b;
    return w;
}

WindPrior WindPrior::point_mass(double x)
{
    WindPrior w;
    w.kind = Kind::kPoint;
    w.point = x;
    return w;
}

WindPrior WindPrior::discrete(std::vector<double> values, std::vector<double> weights)
{
    WindPrior w;
    w.kind = Kind::kDiscrete;
    w.values = std::move(values);
    w.weights = std::move(weights);
    return w;
}

void WindPrior::validate() const
{
    switch (kind) {
    case Kind::kBeta:
        if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("Beta wind prior needs positive shapes");
        break;
    case Kind::kPoint:
        if (!std::isfinite(point)) throw std::invalid_argument("point-mass wind prior must be finite");
        break;
    case Kind::kDiscrete:
        if (values.empty() || values.size() != weights.size()) {
            throw std::invalid_argument("discrete wind prior needs one weight per value");
        }
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("discrete wind weights must be non-negative");
        }
        if (!(std::accumulate(weights.begin(), weights.end(), 0.0) > 0.0)) {
            throw std::invalid_argument("discrete wind weights sum to zero");
        }
        break;
    }
}

double WindPrior::sample(Rng& rng) const
{
    switch (kind) {
    case Kind::kBeta: {
        std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
        const double x = ga(rng);
        return x / (x + gb(rng));
    }
    case Kind::kPoint:
        return point;
    case Kind::kDiscrete: {
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        return values[pick(rng)];
    }
    }
    return point;
}

namespace {

UtilityEstimate estimate(const Eigen::VectorXd& v)
{
    UtilityEstimate e;
    e.value = v.mean();
    if (v.size() > 1) {
        e.se = std::sqrt((v.array() - e.value).square().sum() / double(v.size() - 1) / double(v.size()));
    }
    return e;
}

} // namespace

UtilityEstimate expected_utility(const PowerSampler& sampler, const WindPrior& wind, const std::string& level,
                                 const UtilityTable& table, int n_mc, std::uint64_t seed)
{
    if (n_mc < 1) throw std::invalid_argument("n_mc must be at least 1");
    wind.validate();
    const std::size_t idx = table.index_of(level);
    Rng rng = make_rng(seed, 0);
    Eigen::VectorXd u(n_mc);
    for (int i = 0; i < n_mc; ++i) {
        const double w = wind.sample(rng);
        u(i) = table.utility(idx, sampler(w, rng));
    }
    return estimate(u);
}

std::size_t optimal_action(std::span<const double> utilities)
{
    if (utilities.empty()) throw std::invalid_argument("no utilities to choose from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < utilities.size(); ++i) {
        if (utilities[i] > utilities[best]) best = i;
    }
    return best;
}

VopiResult vopi(const PowerSampler& sampler, const WindPrior& wind, const UtilityTable& table, int n_outer,
                int n_inner, std::uint64_t seed)
{
    if (n_outer < 1 || n_inner < 1) throw std::invalid_argument("n_outer and n_inner must be at least 1");
    wind.validate();
    table.validate();
    const auto n_levels = static_cast<Eigen::Index>(table.levels.size());

    // u(i, L): mean utility of level L over the inner draws of measurement i.
    Eigen::MatrixXd u(n_outer, n_levels);
    Eigen::VectorXd winds(n_outer);
    Rng outer = make_rng(seed, 0);
    for (int i = 0; i < n_outer; ++i) winds(i) = wind.sample(outer);
    for (int i = 0; i < n_outer; ++i) {
        Rng inner = make_rng(seed, 1 + static_cast<std::uint64_t>(i));
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n_levels);
        for (int j = 0; j < n_inner; ++j) {
            const double y = sampler(winds(i), inner);
            for (Eigen::Index L = 0; L < n_levels; ++L) acc(L) += table.utility(static_cast<std::size_t>(L), y);
        }
        u.row(i) = acc / double(n_inner);
    }

    VopiResult out;
    std::vector<double> prior_means(static_cast<std::size_t>(n_levels));
    for (Eigen::Index L = 0; L < n_levels; ++L) {
        out.prior_utilities.push_back(estimate(u.col(L)));
        prior_means[static_cast<std::size_t>(L)] = out.prior_utilities.back().value;
    }
    out.prior_level = optimal_action(prior_means);
    out.prior_optimal = out.prior_utilities[out.prior_level].value;
    out.prior_optimal_se = out.prior_utilities[out.prior_level].se;

    // Decide once per distinct wind value, pooling the inner draws that share it.
    std::map<double, std::vector<int>> groups;
    for (int i = 0; i < n_outer; ++i) groups[winds(i)].push_back(i);
    std::vector<std::size_t> chosen(static_cast<std::size_t>(n_outer));
    for (const auto& [w, members] : groups) {
        std::vector<double> means(static_cast<std::size_t>(n_levels), 0.0);
        for (Eigen::Index L = 0; L < n_levels; ++L) {
            double s = 0.0;
            for (int i : members) s += u(i, L);
            means[static_cast<std::size_t>(L)] = s / double(members.size());
        }
        const std::size_t best = optimal_action(means);
        for (int i : members) chosen[static_cast<std::size_t>(i)] = best;
    }

    Eigen::VectorXd best_u(n_outer), gain(n_outer);
    for (int i = 0; i < n_outer; ++i) {
        const auto L = static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(i)]);
        best_u(i) = u(i, L);
        gain(i) = u(i, L) - u(i, static_cast<Eigen::Index>(out.prior_level));
        out.outcomes.push_back({winds(i), chosen[static_cast<std::size_t>(i)], best_u(i)});
    }
    const UtilityEstimate pre = estimate(best_u), g = estimate(gain);
    out.preposterior = pre.value;
    out.preposterior_se = pre.se;
    out.vopi = g.value;
    out.vopi_se = g.se;
    return out;
}

PowerSampler population_sampler(const PosteriorSamples& samples, const FleetModel& model, int l)
{
    if (samples.total_draws() == 0) throw std::invalid_argument("posterior sample set is empty");
    auto draws = std::make_shared<const Eigen::MatrixXd>(samples.pooled());
    return [draws, &model, l](double wind, Rng& rng) {
        std::uniform_int_distribution<Eigen::Index> pick(0, draws->rows() - 1);
        const Eigen::VectorXd theta = draws->row(pick(rng)).transpose();
        const double x[1] = {wind};
        const double mean = model.population_mean(theta, l, x, rng)(0);
        std::normal_distribution<double> z(0.0, 1.0);
        return mean + model.population_noise_sd(theta, l) * z(rng);
    };
}

} // namespace fleet
