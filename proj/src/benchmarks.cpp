#include "fleet/benchmarks.hpp"

#include <algorithm>

namespace fleet {

namespace {

std::uint64_t task_seed(std::uint64_t seed, TaskId task)
{
    return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(task.k) +
                   0xC2B2AE3D27D4EB4FULL * static_cast<std::uint64_t>(task.l));
}

ChainConfig with_seed(ChainConfig chains, std::uint64_t seed)
{
    chains.seed = seed;
    return chains;
}

Fit run(std::unique_ptr<FleetModel> model, const ChainConfig& chains)
{
    Fit f;
    f.samples = run_mcmc(*model, chains);
    f.model = std::move(model);
    return f;
}

FleetDataset only_tasks_of(const FleetDataset& data, const FleetModel& model, std::vector<std::string>& warnings,
                           const std::string& method)
{
    FleetDataset out;
    out.transform = data.transform;
    for (const auto& o : data.observations) {
        if (model.has_task(o.task())) {
            out.observations.push_back(o);
        }
    }
    if (out.size() != data.size()) warnings.push_back(method + ": test observations of untrained tasks skipped");
    return out;
}

} // namespace

std::unique_ptr<FleetModel> make_model(const FleetDataset& train, const FamilyOptions& options, HyperMode hyper)
{
    if (train.empty()) throw DataError("cannot fit a model to an empty training set");
    if (options.family == ModelFamily::kWindPower) {
        return std::make_unique<PowerCurveModel>(train, hyper, options.power);
    }
    auto [lo, hi] = train.x_range();
    if (options.basis_range) {
        lo = std::min(lo, options.basis_range->first);
        hi = std::max(hi, options.basis_range->second);
    }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    return std::make_unique<HazardModel>(train, make_basis(lo, hi, options.H), options.tying, hyper, options.hazard);
}

Fit fit_mtl(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains)
{
    return run(make_model(train, options, HyperMode::kSampled), chains);
}

std::map<TaskId, Fit> fit_stl(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains,
                              std::vector<std::string>* warnings)
{
    std::map<TaskId, Fit> out;
    for (const auto& task : train.tasks()) {
        FleetDataset sub = train.subset(task);
        if (sub.empty()) {
            if (warnings) warnings->push_back("STL: task (" + to_string(task) + ") has no training data; skipped");
            continue;
        }
        out.emplace(task, run(make_model(sub, options, HyperMode::kFixed), with_seed(chains, task_seed(chains.seed, task))));
    }
    return out;
}

Fit fit_cp(const FleetDataset& train, const FamilyOptions& options, const ChainConfig& chains)
{
    return run(make_model(train.relabelled(kPooledTask), options, HyperMode::kFixed),
               with_seed(chains, task_seed(chains.seed, kPooledTask)));
}

Fit fit_crl(const FleetDataset& train, TaskId target, const FamilyOptions& options, const ChainConfig& chains)
{
    using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;
    auto points_of = [](const FleetDataset& d) {
        Points m(static_cast<Eigen::Index>(d.size()), 2);
        for (std::size_t i = 0; i < d.size(); ++i) {
            m.row(static_cast<Eigen::Index>(i)) << d.observations[i].x, d.observations[i].y;
        }
        return m;
    };
    const FleetDataset own = train.subset(target);
    if (own.size() < 2) {
        throw DataError("CRL target task (" + to_string(target) + ") needs at least two training points");
    }
    const Points target_points = points_of(own);

    FleetDataset pooled;
    pooled.transform = train.transform;
    for (const auto& o : own.observations) pooled.observations.push_back({o.x, o.y, kPooledTask.k, kPooledTask.l});
    for (const auto& task : train.tasks()) {
        if (task == target) continue;
        const Points moved = coral_transform<double>(points_of(train.subset(task)), target_points);
        for (Eigen::Index i = 0; i < moved.rows(); ++i) {
            pooled.observations.push_back({moved(i, 0), moved(i, 1), kPooledTask.k, kPooledTask.l});
        }
    }
    return run(make_model(pooled, options, HyperMode::kFixed), with_seed(chains, task_seed(chains.seed, target)));
}

const MethodScores& ComparisonResult::at(const std::string& method) const
{
    for (const auto& m : methods) {
        if (m.method == method) return m;
    }
    throw std::out_of_range("no scores for method " + method);
}

ComparisonResult compare(const FleetDataset& train, const FleetDataset& test, const FamilyOptions& options,
                         const ChainConfig& chains, const CompareOptions& compare_options)
{
    ComparisonResult out;
    FamilyOptions opts = options;
    if (!opts.basis_range && !test.empty()) {
        const auto [a, b] = train.x_range();
        const auto [c, d] = test.x_range();
        opts.basis_range = std::pair{std::min(a, c), std::max(b, d)};
    }
    auto boot = [&](const ScoreReport& r) {
        out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
        return bootstrap_scores(r, compare_options.trials, compare_options.bootstrap_seed);
    };
    const auto to_pooled = [](TaskId) { return kPooledTask; };

    {
        Fit cp = fit_cp(train, opts, chains);
        out.methods.push_back({"CP", boot(predictive_log_likelihood(cp.samples, *cp.model, test, to_pooled))});
    }
    if (compare_options.include_crl) {
        std::vector<ScoreReport> parts;
        for (const auto& task : test.tasks()) {
            if (train.subset(task).size() < 2) {
                out.warnings.push_back("CRL: task (" + to_string(task) + ") has fewer than two training points; not scored");
                continue;
            }
            Fit crl = fit_crl(train, task, opts, chains);
            parts.push_back(predictive_log_likelihood(crl.samples, *crl.model, test.subset(task), to_pooled));
        }
        out.methods.push_back({"CRL", boot(merge_scores(parts))});
    }
    {
        auto stl = fit_stl(train, opts, chains, &out.warnings);
        std::vector<ScoreReport> parts;
        for (const auto& task : test.tasks()) {
            auto it = stl.find(task);
            if (it == stl.end()) {
                out.warnings.push_back("STL: task (" + to_string(task) + ") has no fit; not scored");
                continue;
            }
            parts.push_back(predictive_log_likelihood(it->second.samples, *it->second.model, test.subset(task)));
        }
        out.methods.push_back({"STL", boot(merge_scores(parts))});
    }
    {
        Fit mtl = fit_mtl(train, opts, chains);
        const FleetDataset scored = only_tasks_of(test, *mtl.model, out.warnings, "MTL");
        out.methods.push_back({"MTL", boot(predictive_log_likelihood(mtl.samples, *mtl.model, scored))});
    }
    return out;
}

} // namespace fleet
