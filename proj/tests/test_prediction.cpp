#include "fleet/dataset.hpp"
#include "fleet/densities.hpp"
#include "fleet/hazard_model.hpp"
#include "fleet/prediction.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace fleet;

namespace {

FleetDataset two_tasks()
{
    FleetDataset d;
    for (int k = 1; k <= 2; ++k) {
        for (int i = 0; i < 10; ++i) d.observations.push_back({0.1 * i, 0.2 * i + k, k, 1});
    }
    return d;
}

struct Setup
{
    FleetDataset data = two_tasks();
    HazardModel model{data, make_basis(0.0, 1.0, 1), BetaTying::kPerGroup, HyperMode::kSampled};

    Eigen::VectorXd state(double a1, double a2, double sigma, double sigma_alpha = 0.5) const
    {
        HazardParams p;
        p.alpha = Eigen::Matrix2Xd(2, 2);
        p.alpha << a1, a1 + 1.0, a2, a2;
        p.beta = Eigen::MatrixXd::Zero(1, 1);
        p.sigma_h = Eigen::MatrixXd::Ones(1, 1);
        p.mu_alpha << a1, a2;
        p.sigma_alpha.setConstant(sigma_alpha);
        p.sigma = sigma;
        return pack(model.structure(), p);
    }
};

PosteriorSamples from_rows(const FleetModel& m, const std::vector<Eigen::VectorXd>& rows, int chains = 1)
{
    PosteriorSamples s;
    s.names = m.layout().names;
    const auto per = static_cast<Eigen::Index>(rows.size()) / chains;
    for (int c = 0; c < chains; ++c) {
        Eigen::MatrixXd block(per, static_cast<Eigen::Index>(s.names.size()));
        for (Eigen::Index i = 0; i < per; ++i) block.row(i) = rows[static_cast<std::size_t>(c * per + i)].transpose();
        s.chains.push_back(block);
        s.log_density.push_back(Eigen::VectorXd::Zero(per));
        s.acceptance.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.names.size())));
    }
    return s;
}

} // namespace

TEST_CASE("degenerate posterior gives the noise scale")
{
    Setup u;
    const auto s = from_rows(u.model, std::vector<Eigen::VectorXd>(50, u.state(0.3, 1.2, 0.25)));
    const std::vector<double> xs{0.0, 0.5, 1.0};
    const PredictiveCurve c = posterior_predictive(s, u.model, {1, 1}, xs, 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(c.mean(j) == doctest::Approx(0.3 + 1.2 * xs[static_cast<std::size_t>(j)]));
        CHECK(c.std(j) == doctest::Approx(0.25));
    }
    CHECK(c.draws.rows() == 50);
    CHECK_THROWS(posterior_predictive(s, u.model, {3, 1}, xs, 3));
}

TEST_CASE("mixture moments")
{
    Setup u;
    const auto s = from_rows(u.model, {u.state(0.0, 1.0, 0.1), u.state(1.0, 1.0, 0.3)});
    const std::vector<double> xs{0.5};
    const PredictiveCurve c = posterior_predictive(s, u.model, {1, 1}, xs, 3);
    CHECK(c.mean(0) == doctest::Approx(1.0));
    CHECK(c.std(0) == doctest::Approx(std::sqrt((0.01 + 0.09) / 2.0 + 0.25)));
}

TEST_CASE("summaries agree with brute-force two-stage draws")
{
    Setup u;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < 4000; ++i) rows.push_back(u.state(0.5 + 0.3 * z(rng), 1.0 + 0.2 * z(rng), 0.2 + 0.05 * std::abs(z(rng))));
    const auto s = from_rows(u.model, rows, 4);
    const std::vector<double> xs{0.1, 0.7};
    const PredictiveCurve c = posterior_predictive(s, u.model, {2, 1}, xs, 9);
    const auto n = double(c.draws.rows());
    for (int j = 0; j < 2; ++j) {
        const Eigen::VectorXd col = c.draws.col(j);
        const double m = col.mean();
        const double sd = std::sqrt((col.array() - m).square().sum() / (n - 1.0));
        CHECK(std::abs(m - c.mean(j)) <= 3.0 * c.std(j) / std::sqrt(n));
        // standard error of a sample standard deviation is about sd / sqrt(2n)
        CHECK(std::abs(sd - c.std(j)) <= 3.0 * c.std(j) / std::sqrt(2.0 * n));
    }
    // deterministic for a seed
    CHECK(posterior_predictive(s, u.model, {2, 1}, xs, 9).draws == c.draws);
}

TEST_CASE("pointwise scores")
{
    Setup u;
    const Eigen::VectorXd a = u.state(0.3, 1.0, 0.4), b = u.state(-0.2, 0.8, 0.7);
    FleetDataset test;
    test.observations.push_back({0.5, 1.1, 1, 1});
    test.observations.push_back({0.2, 1.9, 2, 1});

    const auto one = predictive_log_likelihood(from_rows(u.model, {a}), u.model, test);
    CHECK(one.pointwise[0] == doctest::Approx(normal_logpdf(1.1, 0.8, 0.4)));
    CHECK(one.pointwise[1] == doctest::Approx(normal_logpdf(1.9, 1.5, 0.4)));
    CHECK(one.total == doctest::Approx(one.pointwise[0] + one.pointwise[1]));
    CHECK(one.per_task.at({1, 1}) == doctest::Approx(one.pointwise[0]));

    const auto ab = predictive_log_likelihood(from_rows(u.model, {a, b, b}), u.model, test);
    const auto ba = predictive_log_likelihood(from_rows(u.model, {b, a, b}), u.model, test);
    CHECK(ab.total == doctest::Approx(ba.total).epsilon(1e-14));
    const double p0 = (std::exp(normal_logpdf(1.1, 0.8, 0.4)) + 2.0 * std::exp(normal_logpdf(1.1, 0.2, 0.7))) / 3.0;
    CHECK(ab.pointwise[0] == doctest::Approx(std::log(p0)));

    // densities far below 1e-300 stay finite
    FleetDataset far;
    far.observations.push_back({0.5, 30.0, 1, 1});
    const auto f = predictive_log_likelihood(from_rows(u.model, {a, b}), u.model, far);
    CHECK(std::isfinite(f.total));
    CHECK(f.total < -690.0);

    const auto empty = predictive_log_likelihood(from_rows(u.model, {a}), u.model, FleetDataset{});
    CHECK(empty.total == 0.0);
    CHECK(empty.warnings.size() == 1);

    FleetDataset unknown;
    unknown.observations.push_back({0.5, 1.0, 7, 1});
    CHECK_THROWS(predictive_log_likelihood(from_rows(u.model, {a}), u.model, unknown));
    // task map redirects to a fitted task
    const auto mapped = predictive_log_likelihood(from_rows(u.model, {a}), u.model, unknown,
                                                  [](TaskId) { return TaskId{1, 1}; });
    CHECK(mapped.per_task.count({7, 1}) == 1);
}

TEST_CASE("bootstrap")
{
    ScoreReport r;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(-1.0, 0.5);
    for (int i = 0; i < 200; ++i) {
        const TaskId t{1 + i % 3, 1};
        r.point_task.push_back(t);
        r.pointwise.push_back(z(rng));
        r.per_task[t] += r.pointwise.back();
        r.total += r.pointwise.back();
    }
    const auto fixed = bootstrap_scores(r, 20, 5, false);
    CHECK(fixed.total.mean == doctest::Approx(r.total));
    CHECK(fixed.total.std == 0.0);
    for (const auto& [t, v] : r.per_task) CHECK(fixed.per_task.at(t).mean == doctest::Approx(v));

    const auto a = bootstrap_scores(r, 200, 5);
    const auto b = bootstrap_scores(r, 200, 5);
    CHECK(a.total.mean == b.total.mean);
    CHECK(a.total.std == b.total.std);
    CHECK(a.total.std > 0.0);
    CHECK(std::abs(a.total.mean - r.total) <= 2.0 * a.total.std);
    CHECK_THROWS(bootstrap_scores(r, 0, 5));
}

TEST_CASE("population predictions")
{
    Setup u;
    const std::vector<double> xs{0.0, 0.5, 1.0};
    // no task-to-task spread: a new task behaves like the population mean
    const auto tight = from_rows(u.model, std::vector<Eigen::VectorXd>(100, u.state(0.4, 1.1, 0.2, 1e-9)));
    const PredictiveCurve c = population_predict(tight, u.model, 1, xs, 4);
    CHECK(c.task.k == 0);
    for (int j = 0; j < 3; ++j) {
        CHECK(c.mean(j) == doctest::Approx(0.4 + 1.1 * xs[static_cast<std::size_t>(j)]).epsilon(1e-6));
        CHECK(c.std(j) == doctest::Approx(0.2).epsilon(1e-6));
    }
    // with spread the new task is at least as uncertain as a fitted one
    const auto wide = from_rows(u.model, std::vector<Eigen::VectorXd>(500, u.state(0.4, 1.1, 0.2, 0.6)));
    const PredictiveCurve pop = population_predict(wide, u.model, 1, xs, 4);
    const PredictiveCurve task = posterior_predictive(wide, u.model, {1, 1}, xs, 4);
    for (int j = 0; j < 3; ++j) CHECK(pop.std(j) >= task.std(j));
}

TEST_CASE("predictive intervals cover held-out data")
{
    FleetDataset train, test;
    Rng rng = make_rng(21, 0);
    std::normal_distribution<double> z(0.0, 0.3);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        double x = ux(rng);
        train.observations.push_back({x, 0.5 + 1.5 * x + z(rng), 1, 1});
        x = ux(rng);
        test.observations.push_back({x, 0.5 + 1.5 * x + z(rng), 1, 1});
    }
    HazardModel m(train, make_basis(0.0, 1.0, 3), BetaTying::kPerGroup, HyperMode::kFixed);
    const auto s = run_mcmc(m, testing::quick_chains(2, 2, 400, 400));
    std::vector<double> xs;
    for (const auto& o : test.observations) xs.push_back(o.x);
    const PredictiveCurve c = posterior_predictive(s, m, {1, 1}, xs, 1);
    int inside = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto j = static_cast<Eigen::Index>(i);
        inside += std::abs(test.observations[i].y - c.mean(j)) <= 3.0 * c.std(j);
    }
    MESSAGE("coverage " << inside / 2000.0);
    CHECK(inside >= 1980);
}
