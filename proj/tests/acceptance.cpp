// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "cli_support.hpp"
#include "fleet/analysis.hpp"
#include "fleet/benchmarks.hpp"
#include "fleet/dataset.hpp"
#include "fleet/decision.hpp"
#include "fleet/densities.hpp"
#include "fleet/prediction.hpp"
#include "fleet/splines.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace fleet;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double sd(const Eigen::VectorXd& v)
{
    return std::sqrt((v.array() - v.mean()).square().sum() / double(v.size() - 1));
}

std::pair<double, double> interval95(const Eigen::VectorXd& v)
{
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const auto n = s.size();
    return {s[static_cast<std::size_t>(0.025 * double(n))], s[static_cast<std::size_t>(0.975 * double(n)) - 1]};
}

// ---------------------------------------------------------------- 1
// Uniform cubic B-spline written out piece by piece on [t_h, t_h+4].
double piecewise_bspline(double t0, double delta, double x)
{
    const double s = (x - t0) / delta;
    if (s < 0.0 || s >= 4.0) return 0.0;
    const int seg = static_cast<int>(s);
    const double u = s - seg;
    switch (seg) {
    case 0: return u * u * u / 6.0;
    case 1: return (1.0 + 3.0 * u + 3.0 * u * u - 3.0 * u * u * u) / 6.0;
    case 2: return (4.0 - 6.0 * u * u + 3.0 * u * u * u) / 6.0;
    default: return (1.0 - 3.0 * u + 3.0 * u * u - u * u * u) / 6.0;
    }
}

Outcome spline_oracle()
{
    std::mt19937_64 rng(1);
    double worst = 0.0, unity = 0.0;
    for (int H : {1, 2, 5, 8}) {
        const double lo = -1.7, hi = 1.7;
        const auto b = make_basis(lo, hi, H);
        const double delta = (hi - lo) / (H + 1);
        std::uniform_real_distribution<double> ux(lo - 2.0 * delta, hi + 2.0 * delta);
        for (int i = 0; i < 10000; ++i) {
            const double x = ux(rng);
            const Eigen::VectorXd v = eval_basis(b, x);
            for (int h = 0; h < H; ++h) {
                worst = std::max(worst, std::abs(v(h) - piecewise_bspline(lo + (h - 1) * delta, delta, x)));
            }
        }
        if (H >= 3) {
            const auto [a, c] = b.interior();
            std::uniform_real_distribution<double> ui(a, c);
            for (int i = 0; i < 10000; ++i) unity = std::max(unity, std::abs(eval_basis(b, ui(rng)).sum() - 1.0));
        }
    }
    return {worst <= 1e-12 && unity <= 1e-12, fmt("max |basis - oracle| %.2e, max |sum - 1| %.2e", worst, unity)};
}

// ---------------------------------------------------------------- 2
Outcome conjugate_oracle()
{
    Rng rng = make_rng(99, 0);
    std::normal_distribution<double> gen(1.0, 1.0);
    std::vector<double> y(20);
    for (double& v : y) v = gen(rng);
    const double prior_sd = 2.0, sigma = 1.0;
    double sum = 0.0;
    for (double v : y) sum += v;
    const double post_var = 1.0 / (1.0 / (prior_sd * prior_sd) + double(y.size()) / (sigma * sigma));
    const double post_mean = post_var * sum / (sigma * sigma);

    const LogDensity lp = [&](const Eigen::VectorXd& t) {
        double l = normal_logpdf(t(0), 0.0, prior_sd);
        for (double v : y) l += normal_logpdf(v, t(0), sigma);
        return l;
    };
    ChainConfig c;
    c.seed = 1;
    const PosteriorSamples s = run_mcmc(lp, 1, c);
    const Eigen::VectorXd col = s.column("theta[1]");
    const double m = col.mean(), v = sd(col) * sd(col);
    const double rhat = diagnostics(s).max_rhat();
    const double em = std::abs(m / post_mean - 1.0), ev = std::abs(v / post_var - 1.0);
    return {em <= 0.02 && ev <= 0.02 && rhat < 1.05,
            fmt("%lld draws; mean error %.2f%%, variance error %.2f%%, R-hat %.4f", static_cast<long long>(col.size()),
                100 * em, 100 * ev, rhat)};
}

// ---------------------------------------------------------------- 3
Outcome truck_recovery()
{
    int inside = 0, total = 0;
    double worst_rhat = 1.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SyntheticScenario sc = truck_reference_scenario(seed);
        const FleetDataset data = simulate_fleet(sc);
        ChainConfig c;
        c.seed = seed;
        const Fit fit = fit_mtl(data, FamilyOptions{}, c);
        worst_rhat = std::max(worst_rhat, diagnostics(fit.samples).max_rhat());
        for (const auto& [name, value] : scenario_truth(sc)) {
            if (!(name.starts_with("alpha1[") || name.starts_with("alpha2[") || name == "sigma")) continue;
            const auto [lo, hi] = interval95(fit.samples.column(name));
            inside += lo <= value && value <= hi;
            ++total;
        }
    }
    const double rate = double(inside) / total;
    return {rate >= 0.9, fmt("%d/%d = %.1f%% inside 95%% intervals (worst R-hat %.3f)", inside, total, 100 * rate,
                             worst_rhat)};
}

// Shared truck split for criteria 4 and 5.
struct TruckSplit
{
    SplitResult split;
    ChainConfig chains;

    TruckSplit()
    {
        const FleetDataset data = simulate_fleet(truck_reference_scenario(1));
        SplitSpec sp;
        sp.fraction = 0.75;
        sp.seed = 1;
        split = split_train_test(data, sp);
        chains.seed = 1;
    }
};

// ---------------------------------------------------------------- 4
Outcome truck_transfer(const TruckSplit& t)
{
    CompareOptions co;
    co.bootstrap_seed = 1;
    const ComparisonResult r = compare(t.split.train, t.split.test, FamilyOptions{}, t.chains, co);
    const double cp = r.at("CP").scores.total.mean, stl = r.at("STL").scores.total.mean,
                 mtl = r.at("MTL").scores.total.mean, crl = r.at("CRL").scores.total.mean;
    return {mtl > stl && cp < stl && cp < mtl,
            fmt("CP %.2f, CRL %.2f, STL %.2f, MTL %.2f", cp, crl, stl, mtl)};
}

// ---------------------------------------------------------------- 5
Outcome truck_reduction(const TruckSplit& t)
{
    const FleetDataset& train = t.split.train;
    auto counts = train.counts();
    std::vector<std::pair<std::size_t, TaskId>> by_size;
    for (const auto& [task, n] : counts) by_size.push_back({n, task});
    std::sort(by_size.begin(), by_size.end());
    std::string selector, names;
    for (std::size_t i = 0; i < 4 && i < by_size.size(); ++i) {
        const TaskId task = by_size[i].second;
        const std::string id = std::to_string(task.k) + "," + std::to_string(task.l);
        selector += (selector.empty() ? "" : "|") + std::string(R"(alpha[12]\[)") + id + R"(\])";
        names += (names.empty() ? "" : " ") + ("(" + id + ")");
    }
    const auto stl = fit_stl(train, FamilyOptions{}, t.chains);
    const Fit mtl = fit_mtl(train, FamilyOptions{}, t.chains);
    std::vector<const PosteriorSamples*> sets;
    for (const auto& [task, f] : stl) sets.push_back(&f.samples);
    const ReductionReport rep = variance_reduction(sets, mtl.samples, selector);
    double sum = 0.0;
    for (const auto& row : rep.rows) sum += row.reduction;
    const double avg = rep.rows.empty() ? 0.0 : sum / double(rep.rows.size());
    return {rep.rows.size() == 8 && avg > 30.0,
            fmt("tasks %s: average reduction %.1f%% (intercepts %.1f%%, slopes %.1f%%)", names.c_str(), avg,
                rep.average_by_effect.count("alpha1") ? rep.average_by_effect.at("alpha1") : NAN,
                rep.average_by_effect.count("alpha2") ? rep.average_by_effect.at("alpha2") : NAN)};
}

// ---------------------------------------------------------------- 6
Outcome two_level_grouping()
{
    const FleetDataset data = simulate_fleet(two_component_scenario(1));
    SplitSpec sp;
    sp.seed = 1;
    const SplitResult split = split_train_test(data, sp);
    FamilyOptions o;
    o.basis_range = std::pair{-1.7, 1.7};
    ChainConfig c;
    c.seed = 1;
    const Fit grouped = fit_mtl(split.train, o, c);
    o.tying = BetaTying::kGlobal;
    const Fit tied = fit_mtl(split.train, o, c);
    const double g = predictive_log_likelihood(grouped.samples, *grouped.model, split.test).total;
    const double f = predictive_log_likelihood(tied.samples, *tied.model, split.test).total;
    return {g > f, fmt("group-tied %.2f vs fully-tied %.2f", g, f)};
}

// Shared wind split for criteria 7 and 8.
struct WindSplit
{
    SyntheticScenario scenario = wind_reference_scenario(1);
    SplitResult split;
    FamilyOptions options;
    ChainConfig chains;

    WindSplit()
    {
        SplitSpec sp;
        sp.seed = 1;
        sp.mode = SplitMode::kOrdered;
        sp.fraction = 0.66;
        sp.fraction_by_k = {{1, 0.9}};
        split = split_train_test(simulate_fleet(scenario), sp);
        options.family = ModelFamily::kWindPower;
        chains.seed = 1;
    }
};

// ---------------------------------------------------------------- 7
Outcome wind_recovery(const WindSplit& w)
{
    const Fit fit = fit_mtl(w.split.train, w.options, w.chains);
    const PosteriorSamples& s = fit.samples;
    const double p = s.column("p").mean();
    bool ok = std::abs(p - w.scenario.cut_in) <= 0.05;
    std::string detail = fmt("p %.4f (truth %.2f)", p, w.scenario.cut_in);
    for (const auto& [l, truth] : w.scenario.max_power_by_group) {
        const double pm = s.column("Pm[" + std::to_string(l) + "]").mean();
        ok = ok && std::abs(pm - truth) <= 0.05;
        detail += fmt(", Pm[%d] %.4f (truth %.2f)", l, pm, truth);
    }
    const Eigen::MatrixXd draws = s.pooled();
    const Eigen::Index ip = *s.index_of("p");
    long violations = 0;
    for (const auto& task : fit.model->tasks()) {
        const Eigen::Index iq = *s.index_of("q[" + to_string(task) + "]"), ir = *s.index_of("r[" + to_string(task) + "]");
        for (Eigen::Index i = 0; i < draws.rows(); ++i) {
            violations += !(draws(i, ip) < draws(i, iq) && draws(i, iq) < draws(i, ir));
        }
    }
    detail += fmt(", ordering violations %ld of %lld draws", violations, static_cast<long long>(draws.rows()));
    return {ok && violations == 0, detail};
}

// ---------------------------------------------------------------- 8
Outcome max_power_pooling(const WindSplit& w)
{
    const Fit mtl = fit_mtl(w.split.train, w.options, w.chains);
    const auto stl = fit_stl(w.split.train, w.options, w.chains);
    std::optional<TaskId> sparsest;
    std::size_t fewest = 0;
    for (const auto& [task, n] : w.split.train.counts()) {
        if (task.l == 2 && (!sparsest || n < fewest)) {
            sparsest = task;
            fewest = n;
        }
    }
    if (!sparsest) return {false, "no curtailed task in the training data"};
    const double s_mtl = sd(mtl.samples.column("Pm[2]"));
    const double s_stl = sd(stl.at(*sparsest).samples.column("Pm[2]"));
    return {s_mtl < s_stl, fmt("sd Pm[2]: MTL %.4f vs STL task (%s, %zu points) %.4f", s_mtl,
                               to_string(*sparsest).c_str(), fewest, s_stl)};
}

// ---------------------------------------------------------------- 9
Outcome coral_check()
{
    using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;
    auto cloud = [](int n, std::uint64_t seed, double sx, double sy, double rho, double mx, double my) {
        Rng rng = make_rng(seed, 0);
        std::normal_distribution<double> z(0.0, 1.0);
        Points p(n, 2);
        for (int i = 0; i < n; ++i) {
            const double a = z(rng), b = z(rng);
            p.row(i) << mx + sx * a, my + sy * (rho * a + std::sqrt(1.0 - rho * rho) * b);
        }
        return p;
    };
    auto cov = [](const Points& p) {
        const Points c = p.rowwise() - p.colwise().mean();
        return Eigen::Matrix2d(c.transpose() * c / double(p.rows() - 1));
    };
    const double eps = 1e-6;
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const Points s = cloud(400, 1, 0.5, 3.0, -0.4, 1.0, 2.0);
    const Points t = cloud(150, 2, 2.0, 0.7, 0.8, -4.0, 5.0);
    const Points out = coral_transform<double>(s, t, eps);

    // Linear part of the map, recovered from the transformed points.
    const Points sc = s.rowwise() - s.colwise().mean();
    const Points oc = out.rowwise() - out.colwise().mean();
    const Eigen::Matrix2d A = sc.colPivHouseholderQr().solve(Eigen::MatrixXd(oc));
    const Eigen::Matrix2d mapped = A.transpose() * (cov(s) + eps * I) * A;
    const double err = (mapped - (cov(t) + eps * I)).cwiseAbs().maxCoeff();
    const double raw = (cov(out) - cov(t)).cwiseAbs().maxCoeff();

    const Points same = coral_transform<double>(s, s, eps);
    const double ident = (same - s).cwiseAbs().maxCoeff();
    return {err <= 1e-8 && ident <= 1e-5,
            fmt("|A'(Cs+eps I)A - (Ct+eps I)| %.2e, sample cov gap %.2e, identity gap %.2e", err, raw, ident)};
}

// ---------------------------------------------------------------- 10
Outcome model_selection()
{
    int hits = 0;
    std::string picks;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const FleetDataset data = simulate_fleet(spline_selection_scenario(seed));
        ChainConfig c;
        c.seed = seed;
        c.n_chains = 2;
        c.burn_in = 500;
        c.n_samples = 1000;
        const std::vector<int> candidates{2, 3, 4, 5, 6, 7, 8};
        const SelectionResult r = select_H(data, candidates, 20, seed, c);
        hits += r.best_H == 5;
        picks += (picks.empty() ? "" : " ") + std::to_string(r.best_H);
    }
    return {hits >= 8, fmt("H = 5 on %d/10 seeds (chosen: %s)", hits, picks.c_str())};
}

// ---------------------------------------------------------------- 11
Outcome decision_toy()
{
    constexpr double kLow = 0.3, kHigh = 0.95, kNoise = 0.1;
    const PowerSampler sampler = [](double wind, Rng& rng) {
        std::normal_distribution<double> z(0.0, kNoise);
        return wind + z(rng);
    };
    const WindPrior wind = WindPrior::discrete({kLow, kHigh}, {0.5, 0.5});
    const UtilityTable table = UtilityTable::defaults();
    auto exact_u = [&](std::size_t L, double w) {
        const auto& lv = table.levels[L];
        const double p = 0.5 * std::erfc((lv.threshold - w) / (kNoise * std::numbers::sqrt2));
        return lv.payout * p + lv.penalty * (1.0 - p);
    };
    std::vector<double> prior(table.levels.size(), 0.0);
    double prepost = 0.0;
    for (double w : {kLow, kHigh}) {
        double best = -1e300;
        for (std::size_t L = 0; L < prior.size(); ++L) {
            prior[L] += 0.5 * exact_u(L, w);
            best = std::max(best, exact_u(L, w));
        }
        prepost += 0.5 * best;
    }
    const double exact_prior = prior[optimal_action(prior)];

    constexpr int n = 100000;
    bool ok = true;
    double worst_z = 0.0;
    for (std::size_t L = 0; L < prior.size(); ++L) {
        const UtilityEstimate e = expected_utility(sampler, wind, table.levels[L].name, table, n, 1);
        const double z = e.se > 0.0 ? std::abs(e.value - prior[L]) / e.se : std::abs(e.value - prior[L]) * 1e12;
        worst_z = std::max(worst_z, z);
        ok = ok && z <= 3.0;
    }
    const VopiResult r = vopi(sampler, wind, table, n, 20, 1);
    const double z_vopi = std::abs(r.vopi - (prepost - exact_prior)) / r.vopi_se;
    ok = ok && z_vopi <= 3.0 && r.preposterior >= r.prior_optimal - 3.0 * r.vopi_se;

    const VopiResult point = vopi(sampler, WindPrior::point_mass(0.6), table, 2000, 20, 1);
    ok = ok && point.vopi == 0.0;
    return {ok, fmt("VoPI %.4f +- %.4f (exact %.4f, %.2f SE); worst utility error %.2f SE; point-mass VoPI %g",
                    r.vopi, r.vopi_se, prepost - exact_prior, z_vopi, worst_z, point.vopi)};
}

// ---------------------------------------------------------------- 12
Outcome cli_determinism()
{
    testing::TempDir dir("acceptance");
    testing::write_file(dir / "truck.json", testing::kTinyTruckConfig);
    testing::write_file(dir / "wind.json", testing::kTinyWindConfig);
    auto run = [&](const std::string& cmd, const std::string& cfg, const std::string& out, bool data) {
        std::vector<std::string> args{cmd, "--config", (dir / cfg).string(), "--out", (dir / out).string()};
        if (data) {
            args.push_back("--data");
            args.push_back((dir / out / "data.csv").string());
        }
        return testing::run_fleet(args).code == 0;
    };
    bool ok = true;
    for (const std::string r : {"a", "b"}) {
        ok = ok && run("simulate", "truck.json", "truck_" + r, false);
        for (const std::string cmd : {"fit", "predict", "benchmark", "analyze", "select-h"}) {
            ok = ok && run(cmd, "truck.json", "truck_" + r, true);
        }
        ok = ok && run("simulate", "wind.json", "wind_" + r, false);
        for (const std::string cmd : {"fit", "predict", "decide"}) ok = ok && run(cmd, "wind.json", "wind_" + r, true);
    }
    if (!ok) return {false, "a CLI command failed"};
    int compared = 0;
    std::string differing;
    for (const std::string fam : {"truck", "wind"}) {
        for (const auto& entry : std::filesystem::directory_iterator(dir / (fam + "_a"))) {
            const auto name = entry.path().filename().string();
            ++compared;
            if (testing::read_file(entry.path()) != testing::read_file(dir / (fam + "_b") / name)) {
                differing += " " + fam + "/" + name;
            }
        }
    }
    return {differing.empty() && compared >= 17,
            fmt("%d output files compared%s%s", compared, differing.empty() ? ", all identical" : "; differ:",
                differing.c_str())};
}

} // namespace

int main()
{
    using Clock = std::chrono::steady_clock;
    int failures = 0;
    auto check = [&](int id, const char* title, double limit_s, const std::function<Outcome()>& f) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (limit_s > 0.0 && secs > limit_s) {
            o.pass = false;
            o.detail += fmt("; exceeded the %.0f s budget", limit_s);
        }
        failures += !o.pass;
        std::printf("%s %2d %s [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", id, title, secs, o.detail.c_str());
        std::fflush(stdout);
    };

    check(1, "spline oracle", 1.0, spline_oracle);
    check(2, "conjugate oracle", 10.0, conjugate_oracle);
    check(3, "truck parameter recovery", 300.0, truck_recovery);
    const TruckSplit truck;
    check(4, "truck transfer direction", 0.0, [&] { return truck_transfer(truck); });
    check(5, "truck variance reduction", 0.0, [&] { return truck_reduction(truck); });
    check(6, "two-level grouping", 0.0, two_level_grouping);
    const WindSplit wind;
    check(7, "wind parameter recovery", 300.0, [&] { return wind_recovery(wind); });
    check(8, "max-power pooling", 0.0, [&] { return max_power_pooling(wind); });
    check(9, "CORAL", 0.0, coral_check);
    check(10, "model selection", 600.0, model_selection);
    check(11, "decision analysis", 0.0, decision_toy);
    check(12, "CLI determinism", 0.0, cli_determinism);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
