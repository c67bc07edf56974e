#pragma once

#include "fleet/inference.hpp"

#include <filesystem>
#include <string>

namespace fleet {

// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double v);

// One row per (chain, iteration): chain,iteration,<parameter names>.
void write_draws_csv(const PosteriorSamples& samples, const std::filesystem::path& path);
PosteriorSamples read_draws_csv(const std::filesystem::path& path);

// {"rhat": {...}, "ess": {...}, "acceptance": {...}, ...} keyed by name.
void write_diagnostics_json(const Diagnostics& diag, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace fleet
