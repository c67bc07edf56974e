#include "fleet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

namespace fleet {

namespace {

double sample_sd(const Eigen::VectorXd& v)
{
    if (v.size() < 2) return 0.0;
    return std::sqrt((v.array() - v.mean()).square().sum() / double(v.size() - 1));
}

} // namespace

CorrelationMatrix posterior_corr(const PosteriorSamples& samples, const std::string& selector)
{
    const std::regex re(selector);
    std::vector<Eigen::Index> cols;
    CorrelationMatrix out;
    for (std::size_t j = 0; j < samples.names.size(); ++j) {
        if (std::regex_match(samples.names[j], re)) {
            cols.push_back(static_cast<Eigen::Index>(j));
            out.labels.push_back(samples.names[j]);
        }
    }
    if (cols.size() < 2) throw std::invalid_argument("selector '" + selector + "' matches fewer than two parameters");
    if (samples.total_draws() < 3) throw std::invalid_argument("correlation needs at least three draws");

    const Eigen::MatrixXd all = samples.pooled();
    const auto m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd x(all.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) x.col(j) = all.col(cols[static_cast<std::size_t>(j)]);
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = x.transpose() * x;
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();

    out.corr.resize(m, m);
    out.defined.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) out.defined[static_cast<std::size_t>(i)] = sd(i) > 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double c = std::numeric_limits<double>::quiet_NaN();
            if (out.is_defined(i, j)) c = i == j ? 1.0 : std::clamp(cov(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
            out.corr(i, j) = out.corr(j, i) = c;
        }
    }
    return out;
}

std::string effect_of(const std::string& name)
{
    return name.substr(0, name.find('['));
}

ReductionReport variance_reduction(const std::vector<const PosteriorSamples*>& stl, const PosteriorSamples& mtl,
                                   const std::string& selector)
{
    const std::regex re(selector);
    ReductionReport out;
    std::map<std::string, std::pair<double, int>> sums;
    for (const auto& name : mtl.names) {
        if (!std::regex_match(name, re)) continue;
        const PosteriorSamples* match = nullptr;
        int hits = 0;
        for (const auto* s : stl) {
            if (s->index_of(name)) {
                match = s;
                ++hits;
            }
        }
        if (hits != 1) {
            out.missing.push_back(name);
            continue;
        }
        ReductionRow row;
        row.name = name;
        row.sd_stl = sample_sd(match->column(name));
        row.sd_mtl = sample_sd(mtl.column(name));
        if (!(row.sd_stl > 0.0)) {
            out.missing.push_back(name);
            continue;
        }
        row.reduction = 100.0 * (1.0 - row.sd_mtl / row.sd_stl);
        auto& acc = sums[effect_of(name)];
        acc.first += row.reduction;
        acc.second += 1;
        out.rows.push_back(row);
    }
    for (const auto& [effect, acc] : sums) out.average_by_effect[effect] = acc.first / acc.second;
    return out;
}

} // namespace fleet
