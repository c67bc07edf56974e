#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace fleet {

using Rng = std::mt19937_64;

// Identifies one regression task: sub-fleet (or turbine) k inside group l.
// Both indices are 1-based. Ordering is group-major so that tasks of the
// same group are contiguous.
struct TaskId
{
    int k = 1;
    int l = 1;

    friend bool operator==(const TaskId&, const TaskId&) = default;
    friend bool operator<(const TaskId& a, const TaskId& b)
    {
        return std::tie(a.l, a.k) < std::tie(b.l, b.k);
    }
};

inline std::string to_string(TaskId t)
{
    return std::to_string(t.k) + "," + std::to_string(t.l);
}

// Malformed or inconsistent input data (CSV rows, task indices, artifacts).
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key))
    {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// Seeds a generator from a base seed and a stream index so that independent
// streams (chains, trials, folds) never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

} // namespace fleet
