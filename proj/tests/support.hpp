#pragma once

#include "fleet/inference.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("fleet_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fleet::ChainConfig quick_chains(std::uint64_t seed = 1, int chains = 2, int burn_in = 400, int samples = 600)
{
    fleet::ChainConfig c;
    c.seed = seed;
    c.n_chains = chains;
    c.burn_in = burn_in;
    c.n_samples = samples;
    return c;
}

} // namespace testing
