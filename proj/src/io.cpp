#include "fleet/io.hpp"
#include "fleet/types.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fleet {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

void write_draws_csv(const PosteriorSamples& samples, const std::filesystem::path& path)
{
    std::string s = "chain,iteration";
    for (const auto& n : samples.names) s += ",\"" + n + "\"";
    s += '\n';
    for (int c = 0; c < samples.n_chains(); ++c) {
        const auto& m = samples.chains[static_cast<std::size_t>(c)];
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            s += std::to_string(c + 1) + "," + std::to_string(i + 1);
            for (Eigen::Index j = 0; j < m.cols(); ++j) s += "," + format_double(m(i, j));
            s += '\n';
        }
    }
    write_text(path, s);
}

namespace {

// Splits a CSV line, honouring double quotes (parameter names contain commas).
std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& field, std::size_t row, std::size_t col, const std::filesystem::path& path)
{
    double v = 0.0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError(path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse '" + field + "'");
    }
    return v;
}

} // namespace

PosteriorSamples read_draws_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open draws file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty draws file");
    auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
        throw DataError(path.string() + ": header must start with chain,iteration");
    }
    PosteriorSamples s;
    s.names.assign(header.begin() + 2, header.end());
    std::map<int, std::vector<std::vector<double>>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_fields(line);
        if (f.size() != header.size()) {
            throw DataError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                            " fields, expected " + std::to_string(header.size()));
        }
        const int chain = static_cast<int>(parse_number(f[0], row, 1, path));
        std::vector<double> v;
        for (std::size_t j = 2; j < f.size(); ++j) v.push_back(parse_number(f[j], row, j + 1, path));
        rows[chain].push_back(std::move(v));
    }
    if (rows.empty()) throw DataError(path.string() + ": no draws");
    const std::size_t n = rows.begin()->second.size();
    for (auto& [chain, r] : rows) {
        if (r.size() != n) throw DataError(path.string() + ": chains have different lengths");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.names.size()));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < s.names.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
        }
        s.chains.push_back(std::move(m));
        s.log_density.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::nan("")));
        s.acceptance.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.names.size())));
    }
    return s;
}

void write_diagnostics_json(const Diagnostics& diag, const std::filesystem::path& path)
{
    using nlohmann::ordered_json;
    ordered_json rhat = ordered_json::object(), ess = ordered_json::object(), acc = ordered_json::object();
    ordered_json flags = ordered_json::object();
    for (const auto& p : diag.parameters) {
        if (p.rhat && std::isfinite(*p.rhat)) {
            rhat[p.name] = *p.rhat;
        } else {
            rhat[p.name] = p.rhat ? "inf" : nullptr;
        }
        ess[p.name] = p.ess;
        acc[p.name] = p.acceptance;
        if (p.divergent || p.degenerate) {
            ordered_json f = ordered_json::array();
            if (p.divergent) f.push_back("divergent");
            if (p.degenerate) f.push_back("degenerate");
            flags[p.name] = f;
        }
    }
    ordered_json j;
    j["rhat_available"] = diag.rhat_available();
    j["max_rhat"] = diag.max_rhat();
    j["rhat"] = rhat;
    j["ess"] = ess;
    j["acceptance"] = acc;
    j["flags"] = flags;
    write_text(path, j.dump(2) + "\n");
}

} // namespace fleet
