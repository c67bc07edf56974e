#include "fleet/cli.hpp"

#include "fleet/analysis.hpp"
#include "fleet/benchmarks.hpp"
#include "fleet/dataset.hpp"
#include "fleet/decision.hpp"
#include "fleet/inference.hpp"
#include "fleet/io.hpp"
#include "fleet/prediction.hpp"
#include "fleet/splines.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

namespace fleet {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Read-only view of one config object that knows its dotted path.
class Section
{
public:
    Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {}

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return node_ && node_->is_object() && node_->contains(key); }

    Section child(const std::string& key) const
    {
        if (!has(key)) return {nullptr, key_path(key)};
        const json& c = node_->at(key);
        if (!c.is_object()) throw ConfigError(key_path(key), "expected an object");
        return {&c, key_path(key)};
    }

    const json& raw(const std::string& key) const { return node_->at(key); }

    template <typename T>
    T get(const std::string& key, T fallback) const
    {
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key) const
    {
        if (!has(key)) throw ConfigError(key_path(key), "required key is missing");
        return convert<T>(key);
    }

private:
    template <typename T>
    T convert(const std::string& key) const
    {
        const json& v = node_->at(key);
        try {
            if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
                if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
                const auto i = v.get<std::int64_t>();
                if (std::is_same_v<T, std::uint64_t> && i < 0) throw ConfigError(key_path(key), "must be non-negative");
                return static_cast<T>(i);
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
                return v.get<double>();
            } else {
                return v.get<T>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(key_path(key), std::string("wrong type: ") + e.what());
        }
    }

    const json* node_;
    std::string path_;
};

struct Context
{
    json config;
    std::optional<std::uint64_t> seed_override;
    std::optional<fs::path> data;
    fs::path out;
    std::ostream* log = nullptr;

    Section root() const { return {&config, ""}; }
    Section section(const std::string& name) const { return root().child(name); }

    std::uint64_t seed(const Section& s, const std::string& key, std::uint64_t fallback = 0) const
    {
        if (seed_override) return *seed_override;
        return s.get<std::uint64_t>(key, fallback);
    }
};

ModelFamily parse_family(const std::string& name, const std::string& key)
{
    if (name == "truck_hazard") return ModelFamily::kTruckHazard;
    if (name == "wind_power") return ModelFamily::kWindPower;
    throw ConfigError(key, "unknown family '" + name + "' (expected truck_hazard or wind_power)");
}

SyntheticScenario scenario_from(const Context& ctx)
{
    const Section s = ctx.section("scenario");
    if (!ctx.config.contains("scenario")) throw ConfigError("scenario", "required section is missing");
    const std::string family = s.get<std::string>("family", "truck_hazard");
    const ModelFamily f = parse_family(family, s.key_path("family"));
    const std::uint64_t seed = ctx.seed(s, "seed");
    std::string name = s.get<std::string>("name", f == ModelFamily::kWindPower ? "wind_reference" : "truck_reference");

    SyntheticScenario sc;
    if (name == "truck_reference" && f == ModelFamily::kTruckHazard) {
        sc = truck_reference_scenario(seed);
    } else if (name == "two_component" && f == ModelFamily::kTruckHazard) {
        sc = two_component_scenario(seed);
    } else if (name == "spline_selection" && f == ModelFamily::kTruckHazard) {
        sc = spline_selection_scenario(seed);
    } else if (name == "wind_reference" && f == ModelFamily::kWindPower) {
        sc = wind_reference_scenario(seed);
    } else {
        throw ConfigError(s.key_path("name"), "unknown scenario '" + name + "' for family " + family);
    }
    if (s.has("noise_std")) sc.noise_std = s.get<double>("noise_std", sc.noise_std);
    try {
        sc.validate();
    } catch (const std::exception& e) {
        throw ConfigError("scenario", e.what());
    }
    return sc;
}

FamilyOptions family_options(const Context& ctx)
{
    const Section m = ctx.section("model");
    FamilyOptions o;
    std::string fallback = "truck_hazard";
    if (ctx.config.contains("scenario") && ctx.config["scenario"].is_object()) {
        fallback = ctx.section("scenario").get<std::string>("family", fallback);
    }
    o.family = parse_family(m.get<std::string>("family", fallback), m.key_path("family"));
    o.H = m.get<int>("H", 5);
    if (o.H < 1) throw ConfigError(m.key_path("H"), "must be at least 1");
    const std::string tying = m.get<std::string>("tying", "per_group");
    if (tying == "per_group") {
        o.tying = BetaTying::kPerGroup;
    } else if (tying == "global") {
        o.tying = BetaTying::kGlobal;
    } else {
        throw ConfigError(m.key_path("tying"), "expected per_group or global");
    }
    return o;
}

ChainConfig chain_config(const Context& ctx)
{
    const Section c = ctx.section("chains");
    ChainConfig cfg;
    cfg.n_chains = c.get<int>("n_chains", cfg.n_chains);
    cfg.burn_in = c.get<int>("burn_in", cfg.burn_in);
    cfg.n_samples = c.get<int>("n_samples", cfg.n_samples);
    cfg.adapt_target = c.get<double>("adapt_target", cfg.adapt_target);
    cfg.seed = ctx.seed(c, "seed");
    if (cfg.n_chains < 1) throw ConfigError(c.key_path("n_chains"), "must be at least 1");
    if (cfg.burn_in < 0) throw ConfigError(c.key_path("burn_in"), "must be non-negative");
    if (cfg.n_samples < 1) throw ConfigError(c.key_path("n_samples"), "must be at least 1");
    if (!(cfg.adapt_target > 0.0 && cfg.adapt_target < 1.0)) {
        throw ConfigError(c.key_path("adapt_target"), "must lie in (0, 1)");
    }
    return cfg;
}

SplitSpec split_spec(const Context& ctx)
{
    const Section s = ctx.section("split");
    SplitSpec spec;
    spec.fraction = s.get<double>("fraction", spec.fraction);
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) throw ConfigError(s.key_path("fraction"), "must lie in (0, 1)");
    const std::string mode = s.get<std::string>("mode", "random");
    if (mode == "random") {
        spec.mode = SplitMode::kRandom;
    } else if (mode == "ordered") {
        spec.mode = SplitMode::kOrdered;
    } else {
        throw ConfigError(s.key_path("mode"), "expected random or ordered");
    }
    spec.seed = ctx.seed(s, "seed");
    if (s.has("fraction_by_k")) {
        const json& m = s.raw("fraction_by_k");
        if (!m.is_object()) throw ConfigError(s.key_path("fraction_by_k"), "expected an object keyed by k");
        for (const auto& [k, v] : m.items()) {
            const std::string key = s.key_path("fraction_by_k") + "." + k;
            int kk = 0;
            try {
                kk = std::stoi(k);
            } catch (const std::exception&) {
                throw ConfigError(key, "task index must be an integer");
            }
            if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
                throw ConfigError(key, "must be a number in (0, 1)");
            }
            spec.fraction_by_k[kk] = v.get<double>();
        }
    }
    return spec;
}

UtilityTable utility_table(const Section& d)
{
    if (!d.has("levels")) return UtilityTable::defaults();
    const json& levels = d.raw("levels");
    if (!levels.is_array()) throw ConfigError(d.key_path("levels"), "expected an array");
    UtilityTable t;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const Section lv(&levels[i], d.key_path("levels") + "[" + std::to_string(i) + "]");
        t.levels.push_back({lv.get<std::string>("name", "L" + std::to_string(i)), lv.require<double>("threshold"),
                            lv.require<double>("payout"), lv.require<double>("penalty")});
    }
    try {
        t.validate();
    } catch (const std::exception& e) {
        throw ConfigError(d.key_path("levels"), e.what());
    }
    return t;
}

WindPrior wind_prior(const Section& d)
{
    const Section w = d.child("wind");
    const std::string kind = w.get<std::string>("kind", "beta");
    WindPrior p;
    if (kind == "beta") {
        p = WindPrior::beta(w.get<double>("a", 4.0), w.get<double>("b", 2.0));
    } else if (kind == "point") {
        p = WindPrior::point_mass(w.require<double>("value"));
    } else if (kind == "discrete") {
        p = WindPrior::discrete(w.require<std::vector<double>>("values"), w.require<std::vector<double>>("weights"));
    } else {
        throw ConfigError(w.key_path("kind"), "expected beta, point or discrete");
    }
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw ConfigError(w.key_path("kind"), e.what());
    }
    return p;
}

FleetDataset load_data(const Context& ctx)
{
    if (!ctx.data) throw DataError("--data is required for this command");
    if (!fs::exists(*ctx.data)) throw DataError("data file not found: " + ctx.data->string());
    FleetDataset d = load_csv(*ctx.data);
    d.validate();
    if (ctx.section("model").get<bool>("normalize", false)) d = zscore_normalize(d).first;
    return d;
}

SplitResult split_data(const Context& ctx, const FleetDataset& data)
{
    SplitResult s = split_train_test(data, split_spec(ctx));
    for (const auto& w : s.warnings) *ctx.log << "warning: " << w << "\n";
    if (s.train.empty()) throw DataError("training split is empty");
    return s;
}

fs::path require_artifact(const Context& ctx, const std::string& name)
{
    const fs::path p = ctx.out / name;
    if (!fs::exists(p)) throw DataError("missing artifact " + p.string() + " (run `fleet fit` first)");
    return p;
}

// Draws read back from disk, checked against the model they belong to.
PosteriorSamples load_draws(const Context& ctx, const FleetModel& model)
{
    PosteriorSamples s = read_draws_csv(require_artifact(ctx, "draws.csv"));
    if (s.names != model.layout().names) {
        throw DataError("draws.csv does not match the configured model (parameter names differ)");
    }
    return s;
}

std::string task_key(TaskId t) { return to_string(t); }

std::string write_csv_rows(const std::string& header, const std::vector<std::vector<std::string>>& rows)
{
    std::string s = header + "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
        s += "\n";
    }
    return s;
}

int cmd_simulate(const Context& ctx)
{
    const SyntheticScenario sc = scenario_from(ctx);
    const FleetDataset data = simulate_fleet(sc);
    write_csv(data, ctx.out / "data.csv");
    std::string truth = "name,value\n";
    for (const auto& [name, value] : scenario_truth(sc)) truth += "\"" + name + "\"," + format_double(value) + "\n";
    write_text(ctx.out / "truth.csv", truth);
    *ctx.log << "wrote " << data.size() << " observations to " << (ctx.out / "data.csv").string() << "\n";
    return kExitOk;
}

int cmd_fit(const Context& ctx)
{
    const FamilyOptions opts = family_options(ctx);
    const ChainConfig chains = chain_config(ctx);
    const FleetDataset data = load_data(ctx);
    const SplitResult split = split_data(ctx, data);
    if (chains.burn_in == 0) *ctx.log << "warning: burn_in = 0; step sizes are not adapted\n";

    auto model = make_model(split.train, opts, HyperMode::kSampled);
    const PosteriorSamples samples = run_mcmc(*model, chains);
    const Diagnostics diag = diagnostics(samples);
    write_draws_csv(samples, ctx.out / "draws.csv");
    write_diagnostics_json(diag, ctx.out / "diagnostics.json");
    for (const auto& p : diag.parameters) {
        if (p.rhat && *p.rhat > 1.05) *ctx.log << "warning: R-hat of " << p.name << " is " << *p.rhat << "\n";
    }
    return kExitOk;
}

int cmd_predict(const Context& ctx)
{
    const FamilyOptions opts = family_options(ctx);
    const FleetDataset data = load_data(ctx);
    const SplitResult split = split_data(ctx, data);
    FamilyOptions fit_opts = opts;
    auto model = make_model(split.train, fit_opts, HyperMode::kSampled);
    const PosteriorSamples samples = load_draws(ctx, *model);

    const Section p = ctx.section("predict");
    const int points = p.get<int>("grid_points", 101);
    if (points < 2) throw ConfigError(p.key_path("grid_points"), "must be at least 2");
    const std::uint64_t seed = ctx.seed(p, "seed");
    const int trials = p.get<int>("trials", 100);
    if (trials < 1) throw ConfigError(p.key_path("trials"), "must be at least 1");

    const auto [lo, hi] = data.x_range();
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);

    std::vector<std::vector<std::string>> rows;
    auto emit = [&](const PredictiveCurve& c) {
        for (Eigen::Index i = 0; i < c.x.size(); ++i) {
            rows.push_back({std::to_string(c.task.k), std::to_string(c.task.l), format_double(c.x(i)),
                            format_double(c.mean(i)), format_double(c.std(i)), format_double(c.mean(i) - 3 * c.std(i)),
                            format_double(c.mean(i) + 3 * c.std(i))});
        }
    };
    for (const auto& task : model->tasks()) emit(posterior_predictive(samples, *model, task, grid, seed));
    if (p.get<bool>("population", true)) {
        for (const auto& [l, _] : split.train.tasks_per_group()) emit(population_predict(samples, *model, l, grid, seed));
    }
    write_text(ctx.out / "predictive.csv", write_csv_rows("k,l,x,mean,std,lo3,hi3", rows));

    FleetDataset test;
    for (const auto& o : split.test.observations) {
        if (model->has_task(o.task())) test.observations.push_back(o);
    }
    const ScoreReport scores = predictive_log_likelihood(samples, *model, test);
    const BootstrapReport boot = bootstrap_scores(scores, trials, seed);
    ordered_json j;
    ordered_json per = ordered_json::object();
    for (const auto& [task, v] : scores.per_task) {
        const auto& b = boot.per_task.at(task);
        per[task_key(task)] = {{"score", v}, {"bootstrap_mean", b.mean}, {"bootstrap_std", b.std}};
    }
    j["per_task"] = per;
    j["total"] = scores.total;
    j["bootstrap_total"] = {{"mean", boot.total.mean}, {"std", boot.total.std}, {"trials", trials}};
    j["warnings"] = scores.warnings;
    write_text(ctx.out / "scores.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_benchmark(const Context& ctx)
{
    const FamilyOptions opts = family_options(ctx);
    const ChainConfig chains = chain_config(ctx);
    const FleetDataset data = load_data(ctx);
    const SplitResult split = split_data(ctx, data);
    const Section b = ctx.section("benchmark");
    CompareOptions co;
    co.trials = b.get<int>("trials", co.trials);
    if (co.trials < 1) throw ConfigError(b.key_path("trials"), "must be at least 1");
    co.bootstrap_seed = ctx.seed(b, "seed");
    co.include_crl = b.get<bool>("crl", true);

    const ComparisonResult r = compare(split.train, split.test, opts, chains, co);
    std::vector<std::vector<std::string>> rows;
    ordered_json totals = ordered_json::object();
    for (const auto& m : r.methods) {
        for (const auto& [task, s] : m.scores.per_task) {
            rows.push_back({m.method, std::to_string(task.k), std::to_string(task.l), format_double(s.mean)});
        }
        totals[m.method] = {{"total", m.scores.total.mean}, {"std", m.scores.total.std}};
    }
    write_text(ctx.out / "benchmark.csv", write_csv_rows("method,k,l,score", rows));
    ordered_json j;
    j["totals"] = totals;
    j["trials"] = co.trials;
    j["warnings"] = r.warnings;
    write_text(ctx.out / "benchmark.json", j.dump(2) + "\n");
    for (const auto& w : r.warnings) *ctx.log << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_analyze(const Context& ctx)
{
    const FamilyOptions opts = family_options(ctx);
    const ChainConfig chains = chain_config(ctx);
    const FleetDataset data = load_data(ctx);
    const SplitResult split = split_data(ctx, data);
    auto model = make_model(split.train, opts, HyperMode::kSampled);
    const PosteriorSamples mtl = load_draws(ctx, *model);

    const Section a = ctx.section("analyze");
    const bool wind = opts.family == ModelFamily::kWindPower;
    const std::string corr_sel = a.get<std::string>("selector", wind ? R"(m1\[.*\])" : R"(alpha2\[.*\])");
    const std::string red_sel = a.get<std::string>("reduction_selector", wind ? R"((q|r|m1|Pm)\[.*\])" : R"(alpha[12]\[.*\])");

    CorrelationMatrix cm;
    try {
        cm = posterior_corr(mtl, corr_sel);
    } catch (const std::regex_error& e) {
        throw ConfigError(a.key_path("selector"), e.what());
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        for (std::size_t j = 0; j < cm.labels.size(); ++j) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            rows.push_back({"\"" + cm.labels[i] + "\"", "\"" + cm.labels[j] + "\"",
                            cm.is_defined(ii, jj) ? format_double(cm.corr(ii, jj)) : "NA"});
        }
    }
    write_text(ctx.out / "correlation.csv", write_csv_rows("param_i,param_j,corr", rows));

    std::vector<std::string> warnings;
    const auto stl = fit_stl(split.train, opts, chains, &warnings);
    std::vector<const PosteriorSamples*> stl_sets;
    for (const auto& [task, fit] : stl) stl_sets.push_back(&fit.samples);
    ReductionReport rep;
    try {
        rep = variance_reduction(stl_sets, mtl, red_sel);
    } catch (const std::regex_error& e) {
        throw ConfigError(a.key_path("reduction_selector"), e.what());
    }
    std::vector<std::vector<std::string>> red;
    for (const auto& r : rep.rows) {
        red.push_back({"parameter", "\"" + r.name + "\"", format_double(r.sd_stl), format_double(r.sd_mtl),
                       format_double(r.reduction)});
    }
    for (const auto& [effect, avg] : rep.average_by_effect) red.push_back({"average", effect, "NA", "NA", format_double(avg)});
    for (const auto& m : rep.missing) red.push_back({"missing", "\"" + m + "\"", "NA", "NA", "NA"});
    write_text(ctx.out / "reduction.csv", write_csv_rows("kind,name,sd_stl,sd_mtl,reduction_pct", red));
    for (const auto& w : warnings) *ctx.log << "warning: " << w << "\n";
    return kExitOk;
}

int cmd_decide(const Context& ctx)
{
    const FamilyOptions opts = family_options(ctx);
    const FleetDataset data = load_data(ctx);
    const SplitResult split = split_data(ctx, data);
    auto model = make_model(split.train, opts, HyperMode::kSampled);
    const PosteriorSamples samples = load_draws(ctx, *model);

    const Section d = ctx.section("decision");
    const UtilityTable table = utility_table(d);
    const WindPrior wind = wind_prior(d);
    const int n_outer = d.get<int>("n_outer", 2000);
    const int n_inner = d.get<int>("n_inner", 200);
    if (n_outer < 1) throw ConfigError(d.key_path("n_outer"), "must be at least 1");
    if (n_inner < 1) throw ConfigError(d.key_path("n_inner"), "must be at least 1");
    const int group = d.get<int>("group", 1);
    if (!split.train.tasks_per_group().count(group)) throw ConfigError(d.key_path("group"), "no training task in this group");
    const std::uint64_t seed = ctx.seed(d, "seed");

    const PowerSampler sampler = population_sampler(samples, *model, group);
    const VopiResult v = vopi(sampler, wind, table, n_outer, n_inner, seed);

    ordered_json levels = ordered_json::array();
    for (std::size_t i = 0; i < table.levels.size(); ++i) {
        const auto& lv = table.levels[i];
        levels.push_back({{"name", lv.name},
                          {"threshold", lv.threshold},
                          {"payout", lv.payout},
                          {"penalty", lv.penalty},
                          {"expected_utility", v.prior_utilities[i].value},
                          {"se", v.prior_utilities[i].se}});
    }
    ordered_json j;
    j["levels"] = levels;
    j["optimal_level"] = table.levels[v.prior_level].name;
    j["prior_optimal_utility"] = {{"value", v.prior_optimal}, {"se", v.prior_optimal_se}};
    j["preposterior_utility"] = {{"value", v.preposterior}, {"se", v.preposterior_se}};
    j["vopi"] = {{"value", v.vopi}, {"se", v.vopi_se}};
    j["n_outer"] = n_outer;
    j["n_inner"] = n_inner;
    write_text(ctx.out / "decision.json", j.dump(2) + "\n");

    // Histogram of the per-measurement optimal utilities.
    const int bins = d.get<int>("histogram_bins", 20);
    if (bins < 1) throw ConfigError(d.key_path("histogram_bins"), "must be at least 1");
    double lo = v.outcomes.front().utility, hi = lo;
    for (const auto& o : v.outcomes) {
        lo = std::min(lo, o.utility);
        hi = std::max(hi, o.utility);
    }
    if (!(hi > lo)) hi = lo + 1e-9;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (const auto& o : v.outcomes) {
        auto b = static_cast<int>((o.utility - lo) / (hi - lo) * bins);
        ++counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
    }
    std::vector<std::vector<std::string>> rows;
    for (int b = 0; b < bins; ++b) {
        rows.push_back({format_double(lo + (hi - lo) * b / bins), format_double(lo + (hi - lo) * (b + 1) / bins),
                        std::to_string(counts[static_cast<std::size_t>(b)])});
    }
    write_text(ctx.out / "vopi_hist.csv", write_csv_rows("utility_lo,utility_hi,count", rows));
    return kExitOk;
}

int cmd_select_h(const Context& ctx)
{
    const ChainConfig chains = chain_config(ctx);
    const FleetDataset data = load_data(ctx);
    const Section s = ctx.section("select_h");
    const auto candidates = s.get<std::vector<int>>("candidates", {2, 3, 4, 5, 6, 7, 8});
    if (candidates.empty()) throw ConfigError(s.key_path("candidates"), "needs at least one value");
    for (int h : candidates) {
        if (h < 1) throw ConfigError(s.key_path("candidates"), "every H must be at least 1");
    }
    const int folds = s.get<int>("folds", 20);
    if (folds < 2) throw ConfigError(s.key_path("folds"), "must be at least 2");
    const std::uint64_t seed = ctx.seed(s, "seed");

    SelectionResult r;
    try {
        r = select_H(data, candidates, folds, seed, chains);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : r.table) {
        rows.push_back({std::to_string(row.H), format_double(row.mean_bic), format_double(row.std_bic)});
    }
    write_text(ctx.out / "select_h.csv", write_csv_rows("H,mean_bic,std_bic", rows));
    ordered_json j;
    j["best_H"] = r.best_H;
    write_text(ctx.out / "select_h.json", j.dump(2) + "\n");
    *ctx.log << "best H = " << r.best_H << "\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Hierarchical Bayesian multitask learning for engineering fleets"};
    app.require_subcommand(1);
    std::string config_path, data_path, out_dir;
    std::optional<std::uint64_t> seed;

    using Handler = int (*)(const Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"simulate", "generate a synthetic fleet dataset", cmd_simulate},
        {"fit", "fit the multitask model", cmd_fit},
        {"predict", "posterior predictive curves and scores", cmd_predict},
        {"benchmark", "compare CP, CRL, STL and MTL", cmd_benchmark},
        {"analyze", "posterior correlations and variance reduction", cmd_analyze},
        {"decide", "expected utilities and value of perfect information", cmd_decide},
        {"select-h", "choose the spline basis size by cross-validation", cmd_select_h},
    };
    for (const auto& [name, help, _] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--data", data_path, "dataset CSV (x,y,k,l)");
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "overrides every seed in the configuration");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Context ctx;
    ctx.log = &err;
    ctx.seed_override = seed;
    ctx.out = out_dir;
    if (!data_path.empty()) ctx.data = data_path;

    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("--config", "cannot open " + config_path);
        try {
            ctx.config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
        }
        if (!ctx.config.is_object()) throw ConfigError("--config", "top level must be an object");
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw DataError("cannot create output directory " + ctx.out.string() + ": " + ec.message());

        for (const auto& [name, help, handler] : commands) {
            if (app.got_subcommand(name)) return handler(ctx);
        }
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleInit& e) {
        err << "error: infeasible initialization at parameter " << e.parameter() << ": " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

} // namespace fleet
