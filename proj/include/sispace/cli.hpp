#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sispace/generators.hpp"
#include "sispace/types.hpp"

namespace sispace::cli {

struct Tolerances {
  double zero_tol = kDefaultZeroTol;
  double rel_tol = kDefaultRelTol;
  // accepted relative round-trip residual for synthesized signals
  double residual_bound = 1e-8;
  // accepted periodization tail bound per generator
  double tail_tol = 1e-6;
};

struct SignalSpec {
  enum class Source { None, Coeffs, Spectrum };
  Source source = Source::None;
  ShiftCoeffs coeffs;        // Source::Coeffs
  std::filesystem::path path;  // Source::Spectrum
};

struct JobConfig {
  GridSpec grid{};
  std::vector<GeneratorSpec> generators;
  std::vector<std::string> names;  // parallel to generators, unique
  SignalSpec signal;
  Tolerances tol;
  int threads = 0;  // 0: not set in the config
  std::filesystem::path base_dir;  // directory relative paths resolve against
};

// Schema validation on top of the JSON parse; messages name the offending
// key or array slot. Unknown keys are errors.
JobConfig parse_config(const nlohmann::json& j,
                       const std::filesystem::path& base_dir);
JobConfig load_config(const std::filesystem::path& file);

// Exit codes: 0 clean, 1 an invariant exceeded its tolerance, 2 bad input.
int cmd_orthogonalize(const JobConfig& cfg,
                      const std::filesystem::path& out_dir);
int cmd_project(const JobConfig& cfg, const std::filesystem::path& out_dir);
int cmd_coeffs(const JobConfig& cfg, const std::filesystem::path& out_dir);
int cmd_check(const JobConfig& cfg, const std::filesystem::path& out_dir);

// Writes a self-contained three-generator config into out_dir, then runs
// the other four commands on it.
int cmd_demo(const std::filesystem::path& out_dir);

std::string demo_config_text();

// Full command line:
//   sispace <orthogonalize|project|coeffs|check|demo>
//           [--config FILE] --out DIR [--threads N]
//           [--zero-tol X] [--rel-tol X]
// Options fall back to SISPACE_THREADS / SISPACE_ZERO_TOL / SISPACE_REL_TOL,
// then to the config file, then to built-in defaults.
int run(int argc, const char* const* argv);

}  // namespace sispace::cli
