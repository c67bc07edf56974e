#include "fleet/dataset.hpp"
#include "fleet/splines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace fleet {

std::vector<TaskId> FleetDataset::tasks() const
{
    std::set<TaskId> seen;
    for (const auto& o : observations) seen.insert(o.task());
    return {seen.begin(), seen.end()};
}

std::map<int, int> FleetDataset::tasks_per_group() const
{
    std::map<int, int> out;
    for (const auto& t : tasks()) ++out[t.l];
    return out;
}

std::map<TaskId, std::size_t> FleetDataset::counts() const
{
    std::map<TaskId, std::size_t> out;
    for (const auto& o : observations) ++out[o.task()];
    return out;
}

FleetDataset FleetDataset::subset(TaskId task) const
{
    FleetDataset out;
    out.transform = transform;
    for (const auto& o : observations) {
        if (o.task() == task) out.observations.push_back(o);
    }
    return out;
}

FleetDataset FleetDataset::relabelled(TaskId task) const
{
    FleetDataset out = *this;
    for (auto& o : out.observations) {
        o.k = task.k;
        o.l = task.l;
    }
    return out;
}

std::pair<double, double> FleetDataset::x_range() const
{
    if (observations.empty()) throw DataError("x range of an empty dataset");
    auto [lo, hi] = std::minmax_element(observations.begin(), observations.end(),
                                        [](const auto& a, const auto& b) { return a.x < b.x; });
    return {lo->x, hi->x};
}

void FleetDataset::validate() const
{
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& o = observations[i];
        if (o.k < 1 || o.l < 1) {
            throw DataError("observation " + std::to_string(i) + ": task indices must be >= 1");
        }
        if (!std::isfinite(o.x) || !std::isfinite(o.y)) {
            throw DataError("observation " + std::to_string(i) + ": non-finite value");
        }
    }
    std::map<int, std::set<int>> ks;
    for (const auto& o : observations) ks[o.l].insert(o.k);
    for (const auto& [l, set] : ks) {
        if (*set.rbegin() - *set.begin() + 1 != static_cast<int>(set.size())) {
            throw DataError("task indices of group l=" + std::to_string(l) + " are not contiguous");
        }
    }
}

namespace {

std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> parse_index(const std::string& s)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) return std::nullopt;
    return v;
}

} // namespace

FleetDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw DataError(path.string() + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // BOM
    const auto header = split_fields(trim(line));

    auto column = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t cx = column(schema.x);
    const std::size_t cy = column(schema.y);
    const std::size_t ck = column(schema.k);
    const std::size_t cl = column(schema.l);

    FleetDataset out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        auto fail = [&](const std::string& col, const std::string& what) {
            return DataError(path.string() + ": row " + std::to_string(row) + ", column '" + col + "': " + what);
        };
        if (fields.size() != header.size()) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        Observation o;
        auto x = parse_double(fields[cx]);
        if (!x) throw fail(schema.x, "not a finite number");
        auto y = parse_double(fields[cy]);
        if (!y) throw fail(schema.y, "not a finite number");
        auto k = parse_index(fields[ck]);
        if (!k) throw fail(schema.k, "not a positive integer");
        auto l = parse_index(fields[cl]);
        if (!l) throw fail(schema.l, "not a positive integer");
        o.x = *x;
        o.y = *y;
        o.k = *k;
        o.l = *l;
        out.observations.push_back(o);
    }
    if (out.observations.empty()) throw DataError(path.string() + ": no data rows");
    out.validate();
    return out;
}

void write_csv(const FleetDataset& dataset, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "x,y,k,l\n";
    char buf[64];
    for (const auto& o : dataset.observations) {
        std::snprintf(buf, sizeof buf, "%.17g", o.x);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", o.y);
        out << buf << ',' << o.k << ',' << o.l << '\n';
    }
}

std::pair<FleetDataset, NormalizationTransform> zscore_normalize(const FleetDataset& dataset)
{
    const auto n = dataset.observations.size();
    if (n < 2) throw std::invalid_argument("z-score normalisation needs at least two observations");
    double mx = 0.0, my = 0.0;
    for (const auto& o : dataset.observations) {
        mx += o.x;
        my += o.y;
    }
    mx /= double(n);
    my /= double(n);
    double vx = 0.0, vy = 0.0;
    for (const auto& o : dataset.observations) {
        vx += (o.x - mx) * (o.x - mx);
        vy += (o.y - my) * (o.y - my);
    }
    vx /= double(n);
    vy /= double(n);
    if (!(vx > 0.0)) throw std::invalid_argument("z-score normalisation: x has zero variance");
    if (!(vy > 0.0)) throw std::invalid_argument("z-score normalisation: y has zero variance");
    NormalizationTransform t{mx, std::sqrt(vx), my, std::sqrt(vy)};
    return {apply_transform(dataset, t), t};
}

FleetDataset apply_transform(const FleetDataset& dataset, const NormalizationTransform& t)
{
    FleetDataset out = dataset;
    for (auto& o : out.observations) {
        o.x = t.normalize_x(o.x);
        o.y = t.normalize_y(o.y);
    }
    out.transform = t;
    return out;
}

FleetDataset denormalize(const FleetDataset& dataset)
{
    if (!dataset.transform) throw std::invalid_argument("dataset carries no normalisation transform");
    FleetDataset out = dataset;
    const auto& t = *dataset.transform;
    for (auto& o : out.observations) {
        o.x = t.denormalize_x(o.x);
        o.y = t.denormalize_y(o.y);
    }
    out.transform.reset();
    return out;
}

SplitResult split_train_test(const FleetDataset& dataset, const SplitSpec& spec)
{
    auto check_fraction = [](double f) {
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
    };
    check_fraction(spec.fraction);
    for (const auto& [k, f] : spec.fraction_by_k) check_fraction(f);

    SplitResult out;
    out.train.transform = dataset.transform;
    out.test.transform = dataset.transform;

    std::map<TaskId, std::vector<std::size_t>> rows;
    for (std::size_t i = 0; i < dataset.observations.size(); ++i) {
        rows[dataset.observations[i].task()].push_back(i);
    }

    std::uint64_t stream = 0;
    for (auto& [task, idx] : rows) {
        ++stream;
        if (idx.size() < 2) {
            out.warnings.push_back("task (" + to_string(task) + ") has " + std::to_string(idx.size()) +
                                   " observation(s); all assigned to training");
            for (auto i : idx) out.train.observations.push_back(dataset.observations[i]);
            continue;
        }
        double fraction = spec.fraction;
        if (auto it = spec.fraction_by_k.find(task.k); it != spec.fraction_by_k.end()) fraction = it->second;
        const auto n_train = static_cast<std::size_t>(std::floor(fraction * double(idx.size()) + 1e-9));

        if (spec.mode == SplitMode::kRandom) {
            Rng rng = make_rng(spec.seed, stream);
            std::shuffle(idx.begin(), idx.end(), rng);
            std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
            std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
        }
        for (std::size_t j = 0; j < idx.size(); ++j) {
            auto& target = j < n_train ? out.train : out.test;
            target.observations.push_back(dataset.observations[idx[j]]);
        }
    }
    return out;
}

HazardSeries empirical_hazard(std::vector<double> failure_times, std::size_t n_units, double interval)
{
    if (!(interval > 0.0)) throw std::invalid_argument("hazard interval must be positive");
    if (failure_times.size() > n_units) throw std::invalid_argument("more failures than units");
    for (double t : failure_times) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("failure times must be finite and >= 0");
    }
    std::sort(failure_times.begin(), failure_times.end());

    HazardSeries out;
    std::size_t surviving = n_units;
    std::size_t i = 0;
    while (i < failure_times.size()) {
        const auto cell = static_cast<std::size_t>(std::floor(failure_times[i] / interval));
        std::size_t failed = 0;
        while (i < failure_times.size() && static_cast<std::size_t>(std::floor(failure_times[i] / interval)) == cell) {
            ++failed;
            ++i;
        }
        const double mid = (double(cell) + 0.5) * interval;
        if (surviving == 0) {
            out.warnings.push_back("interval at t=" + std::to_string(mid) + " has no surviving units; skipped");
        } else {
            out.samples.push_back({mid, double(failed) / double(surviving)});
        }
        surviving -= std::min(failed, surviving);
    }
    return out;
}

double gompertz_quantile(double gamma, double phi, double u)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("Gompertz gamma must be positive");
    if (u <= 0.0) return 0.0;
    const double cumulative = -std::log1p(-u); // -ln(1 - U)
    if (std::abs(phi) < 1e-12) return cumulative / gamma;
    const double arg = 1.0 + (phi / gamma) * cumulative;
    if (!(arg > 0.0)) {
        throw std::domain_error("Gompertz inverse CDF: non-positive log argument (defective distribution)");
    }
    return std::log(arg) / phi;
}

double gompertz_cdf(double gamma, double phi, double t)
{
    if (t <= 0.0) return 0.0;
    if (std::abs(phi) < 1e-12) return -std::expm1(-gamma * t);
    return -std::expm1(-(gamma / phi) * std::expm1(phi * t));
}

std::vector<double> simulate_failure_times(double gamma, double phi, std::size_t n, std::uint64_t seed)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("Gompertz gamma must be positive");
    if (n < 1) throw std::invalid_argument("need at least one draw");
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& t : out) t = gompertz_quantile(gamma, phi, unif(rng));
    return out;
}

void SyntheticScenario::validate() const
{
    if (!(noise_std > 0.0)) throw std::invalid_argument("scenario noise_std must be positive");
    if (!(x_lo < x_hi)) throw std::invalid_argument("scenario needs x_lo < x_hi");
    if (family == ScenarioFamily::kTruckHazard) {
        if (truck_tasks.empty()) throw std::invalid_argument("truck scenario has no tasks");
        for (const auto& t : truck_tasks) {
            auto it = beta_by_group.find(t.task.l);
            if (it == beta_by_group.end()) {
                throw std::invalid_argument("no spline weights for group l=" + std::to_string(t.task.l));
            }
            if (it->second.size() != spline_H) throw std::invalid_argument("spline weight count differs from H");
        }
    } else {
        if (wind_tasks.empty()) throw std::invalid_argument("wind scenario has no tasks");
        for (const auto& t : wind_tasks) {
            if (!(cut_in < t.q && t.q < t.r)) {
                throw std::invalid_argument("change points of task (" + to_string(t.task) +
                                            ") violate p < q < r");
            }
            if (!max_power_by_group.contains(t.task.l)) {
                throw std::invalid_argument("no max power for group l=" + std::to_string(t.task.l));
            }
        }
    }
}

double scenario_mean(const SyntheticScenario& s, TaskId task, double x)
{
    if (s.family == ScenarioFamily::kTruckHazard) {
        auto it = std::find_if(s.truck_tasks.begin(), s.truck_tasks.end(),
                               [&](const auto& t) { return t.task == task; });
        if (it == s.truck_tasks.end()) throw std::out_of_range("unknown task " + to_string(task));
        const auto basis = make_basis(s.x_lo, s.x_hi, s.spline_H);
        return it->alpha1 + it->alpha2 * x + eval_basis(basis, x).dot(s.beta_by_group.at(task.l));
    }
    auto it = std::find_if(s.wind_tasks.begin(), s.wind_tasks.end(), [&](const auto& t) { return t.task == task; });
    if (it == s.wind_tasks.end()) throw std::out_of_range("unknown task " + to_string(task));
    const double p = s.cut_in, q = it->q, r = it->r, m1 = it->m1;
    const double pm = s.max_power_by_group.at(task.l);
    if (x < p) return 0.0;
    if (x < q) return m1 * (x - p);
    if (x < r) return (pm - m1 * (q - p)) / (r - q) * (x - q) + m1 * (q - p);
    return pm;
}

FleetDataset simulate_fleet(const SyntheticScenario& scenario)
{
    scenario.validate();
    Rng rng = make_rng(scenario.seed);
    std::uniform_real_distribution<double> unif(scenario.x_lo, scenario.x_hi);
    std::normal_distribution<double> noise(0.0, 1.0);

    FleetDataset out;
    auto emit = [&](TaskId task, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = unif(rng);
            const double y = scenario_mean(scenario, task, x) + scenario.noise_std * noise(rng);
            out.observations.push_back({x, y, task.k, task.l});
        }
    };
    if (scenario.family == ScenarioFamily::kTruckHazard) {
        for (const auto& t : scenario.truck_tasks) emit(t.task, t.n);
    } else {
        for (const auto& t : scenario.wind_tasks) emit(t.task, t.n);
    }
    return out;
}

std::vector<std::pair<std::string, double>> scenario_truth(const SyntheticScenario& s)
{
    std::vector<std::pair<std::string, double>> out;
    auto idx = [](TaskId t) { return "[" + to_string(t) + "]"; };
    if (s.family == ScenarioFamily::kTruckHazard) {
        for (const auto& t : s.truck_tasks) out.emplace_back("alpha1" + idx(t.task), t.alpha1);
        for (const auto& t : s.truck_tasks) out.emplace_back("alpha2" + idx(t.task), t.alpha2);
        for (const auto& [l, beta] : s.beta_by_group) {
            for (Eigen::Index h = 0; h < beta.size(); ++h) {
                out.emplace_back("beta[" + std::to_string(h + 1) + "," + std::to_string(l) + "]", beta(h));
            }
        }
    } else {
        out.emplace_back("p", s.cut_in);
        for (const auto& t : s.wind_tasks) out.emplace_back("q" + idx(t.task), t.q);
        for (const auto& t : s.wind_tasks) out.emplace_back("r" + idx(t.task), t.r);
        for (const auto& t : s.wind_tasks) out.emplace_back("m1" + idx(t.task), t.m1);
        for (const auto& [l, pm] : s.max_power_by_group) out.emplace_back("Pm[" + std::to_string(l) + "]", pm);
    }
    out.emplace_back("sigma", s.noise_std);
    return out;
}

} // namespace fleet
