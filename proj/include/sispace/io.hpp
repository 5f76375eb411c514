#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sispace/types.hpp"

namespace sispace::io {

// Shortest exact decimal form (%.17g): reading the text back recovers the
// same double bit for bit.
std::string format_double(double x);

// Spectrum CSV, header "i,k,re,im", one row per sample, i ascending then k.
// Loading starts from all zeros, so sparse files are valid; rows must stay
// inside the grid (0 <= i < M, |k| <= K). Malformed rows report their line
// number. A row repeated for the same (i, k) overwrites.
void save_spectrum_csv(const FiberedFunction& f,
                       const std::filesystem::path& path);
FiberedFunction load_spectrum_csv(const std::filesystem::path& path,
                                  const GridSpec& grid);

// Periodic CSV, header "t,re,im", t = i/M ascending.
void save_periodic_csv(const PeriodicFunction& F,
                       const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target, so readers
// never observe a half-written file. Creates parent directories.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace sispace::io
