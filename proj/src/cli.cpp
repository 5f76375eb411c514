#include "sispace/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sispace/analysis.hpp"
#include "sispace/fibercore.hpp"
#include "sispace/io.hpp"
#include "sispace/orthogonalizer.hpp"
#include "sispace/parallel.hpp"

namespace sispace::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Invariant tolerances the commands gate on. These mirror what the library
// can actually deliver on healthy systems; they are deliberately not
// user-tunable (rel_tol only moves the projection/oracle comparison).
constexpr double kOrthogonalityTol = 1e-10;
constexpr double kReconstructionTol = 1e-12;
constexpr double kIdempotenceTol = 1e-9;
constexpr double kSelfAdjointTol = 1e-10;
constexpr double kContractionTol = 1e-12;
constexpr double kBesselTol = 1e-10;
constexpr double kWeightMonotoneTol = 1e-11;
constexpr double kTwoGenIdentityTol = 1e-11;
constexpr double kIsometryTol = 1e-12;
constexpr double kDirectSumTol = 1e-11;
constexpr double kHermitianTol = 1e-14;

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ =
      std::chrono::steady_clock::now();
};

// ---------- config parsing ----------

void require_object(const json& v, const std::string& where) {
  if (!v.is_object()) throw ConfigError(where + ": must be an object");
}

void reject_unknown_keys(const json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
  }
}

const json& require_key(const json& obj, const char* key,
                        const std::string& where) {
  if (!obj.contains(key))
    throw ConfigError(where + ": missing \"" + std::string(key) + "\"");
  return obj.at(key);
}

long long get_integer(const json& obj, const char* key,
                      const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_number_integer())
    throw ConfigError(where + ": \"" + key + "\" must be an integer");
  return v.get<long long>();
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": must be a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key,
                       const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_string())
    throw ConfigError(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

GeneratorSpec parse_generator(const json& v, const std::string& where) {
  require_object(v, where);
  const std::string kind = get_string(v, "kind", where);
  GeneratorSpec spec;
  if (kind == "bspline") {
    reject_unknown_keys(v, {"kind", "name", "order"}, where);
    spec = GeneratorSpec::bspline(int(get_integer(v, "order", where)));
  } else if (kind == "gaussian") {
    reject_unknown_keys(v, {"kind", "name", "sigma"}, where);
    spec = GeneratorSpec::gaussian(
        get_number(require_key(v, "sigma", where), where + ".sigma"));
  } else if (kind == "bandlimited_random") {
    reject_unknown_keys(v, {"kind", "name", "seed", "support"}, where);
    const long long seed = get_integer(v, "seed", where);
    if (seed < 0) throw ConfigError(where + ": \"seed\" must be >= 0");
    spec = GeneratorSpec::bandlimited_random(
        std::uint64_t(seed),
        get_number(require_key(v, "support", where), where + ".support"));
  } else if (kind == "indicator") {
    reject_unknown_keys(v, {"kind", "name"}, where);
    spec = GeneratorSpec::indicator();
  } else if (kind == "sampled") {
    reject_unknown_keys(v, {"kind", "name", "path"}, where);
    spec = GeneratorSpec::sampled(get_string(v, "path", where));
    if (spec.path.empty()) throw ConfigError(where + ": \"path\" is empty");
  } else {
    throw ConfigError(where + ": unknown kind \"" + kind + "\"");
  }
  if (v.contains("name")) {
    spec.name = get_string(v, "name", where);
    if (!valid_name(spec.name))
      throw ConfigError(where + ": name must be [A-Za-z0-9_-]+, got \"" +
                        spec.name + "\"");
  }
  return spec;
}

TrigPoly parse_trig_poly(const json& v, const std::string& where) {
  require_object(v, where);
  reject_unknown_keys(v, {"terms"}, where);
  const json& terms = require_key(v, "terms", where);
  if (!terms.is_array())
    throw ConfigError(where + ": \"terms\" must be an array");
  TrigPoly p;
  for (size_t t = 0; t < terms.size(); ++t) {
    const std::string slot = where + ".terms[" + std::to_string(t) + "]";
    const json& term = terms[t];
    require_object(term, slot);
    reject_unknown_keys(term, {"k", "re", "im"}, slot);
    const long long k = get_integer(term, "k", slot);
    const double re = get_number(require_key(term, "re", slot), slot + ".re");
    const double im = get_number(require_key(term, "im", slot), slot + ".im");
    if (!p.emplace(int(k), Complex(re, im)).second)
      throw ConfigError(slot + ": duplicate k = " + std::to_string(k));
  }
  return p;
}

double parse_tolerance(const json& obj, const char* key, double fallback,
                       double lo, double hi, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const double v = get_number(obj.at(key), where + "." + key);
  if (!(v >= lo) || !(v < hi))
    throw ConfigError(where + ": \"" + key + "\" must be in [" +
                      io::format_double(lo) + ", " + io::format_double(hi) +
                      "), got " + io::format_double(v));
  return v;
}

}  // namespace

JobConfig parse_config(const json& j, const fs::path& base_dir) {
  require_object(j, "config");
  reject_unknown_keys(j, {"grid", "generators", "signal", "tolerances",
                          "threads"},
                      "config");
  JobConfig cfg;
  cfg.base_dir = base_dir;

  const json& grid = require_key(j, "grid", "config");
  require_object(grid, "grid");
  reject_unknown_keys(grid, {"fibers", "radius"}, "grid");
  cfg.grid = make_grid(int(get_integer(grid, "fibers", "grid")),
                       int(get_integer(grid, "radius", "grid")));

  const json& gens = require_key(j, "generators", "config");
  if (!gens.is_array() || gens.empty())
    throw ConfigError("generators: must be a non-empty array");
  std::set<std::string> seen;
  for (size_t idx = 0; idx < gens.size(); ++idx) {
    const std::string where = "generators[" + std::to_string(idx) + "]";
    GeneratorSpec spec = parse_generator(gens[idx], where);
    std::string name =
        spec.name.empty() ? "g" + std::to_string(idx + 1) : spec.name;
    if (!seen.insert(name).second)
      throw ConfigError(where + ": duplicate name \"" + name + "\"");
    spec.name = name;
    cfg.names.push_back(name);
    cfg.generators.push_back(std::move(spec));
  }

  if (j.contains("signal")) {
    const json& sig = j.at("signal");
    require_object(sig, "signal");
    reject_unknown_keys(sig, {"coeffs", "spectrum"}, "signal");
    const bool has_coeffs = sig.contains("coeffs");
    const bool has_spectrum = sig.contains("spectrum");
    if (has_coeffs == has_spectrum)
      throw ConfigError(
          "signal: needs exactly one of \"coeffs\" or \"spectrum\"");
    if (has_coeffs) {
      const json& coeffs = sig.at("coeffs");
      if (!coeffs.is_array())
        throw ConfigError("signal.coeffs: must be an array");
      if (coeffs.size() != cfg.generators.size())
        throw ConfigError("signal.coeffs: " + std::to_string(coeffs.size()) +
                          " entries for " +
                          std::to_string(cfg.generators.size()) +
                          " generators");
      cfg.signal.source = SignalSpec::Source::Coeffs;
      for (size_t idx = 0; idx < coeffs.size(); ++idx)
        cfg.signal.coeffs.per_generator.push_back(parse_trig_poly(
            coeffs[idx], "signal.coeffs[" + std::to_string(idx) + "]"));
    } else {
      const std::string path = get_string(sig, "spectrum", "signal");
      if (path.empty()) throw ConfigError("signal.spectrum: empty path");
      cfg.signal.source = SignalSpec::Source::Spectrum;
      cfg.signal.path = path;
    }
  }

  if (j.contains("tolerances")) {
    const json& tol = j.at("tolerances");
    require_object(tol, "tolerances");
    reject_unknown_keys(
        tol, {"zero_tol", "rel_tol", "residual_bound", "tail_tol"},
        "tolerances");
    cfg.tol.zero_tol =
        parse_tolerance(tol, "zero_tol", cfg.tol.zero_tol, 0.0, 1.0,
                        "tolerances");
    cfg.tol.rel_tol = parse_tolerance(tol, "rel_tol", cfg.tol.rel_tol,
                                      std::numeric_limits<double>::min(), 1.0,
                                      "tolerances");
    cfg.tol.residual_bound =
        parse_tolerance(tol, "residual_bound", cfg.tol.residual_bound,
                        std::numeric_limits<double>::min(), 1.0, "tolerances");
    cfg.tol.tail_tol =
        parse_tolerance(tol, "tail_tol", cfg.tol.tail_tol,
                        std::numeric_limits<double>::min(), 1.0, "tolerances");
  }

  if (j.contains("threads")) {
    const long long n = get_integer(j, "threads", "config");
    if (n < 1 || n > 256)
      throw ConfigError("threads: must be in [1, 256], got " +
                        std::to_string(n));
    cfg.threads = int(n);
  }
  return cfg;
}

JobConfig load_config(const fs::path& file) {
  const json j = io::load_json_file(file);
  fs::path base = file.parent_path();
  if (base.empty()) base = ".";
  return parse_config(j, base);
}

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

struct BuiltSystem {
  GridSpec grid;
  std::vector<FiberedFunction> g;
  std::vector<std::string> names;
};

BuiltSystem build_system(const JobConfig& cfg) {
  BuiltSystem sys;
  sys.grid = cfg.grid;
  for (size_t j = 0; j < cfg.generators.size(); ++j) {
    GeneratorSpec spec = cfg.generators[j];
    if (spec.kind == GeneratorSpec::Kind::Sampled)
      spec.path = resolve(cfg.base_dir, spec.path).string();
    sys.g.push_back(build_generator(spec, cfg.grid));
    sys.names.push_back(cfg.names[j]);
  }
  return sys;
}

FiberedFunction build_signal(const JobConfig& cfg, const BuiltSystem& sys) {
  switch (cfg.signal.source) {
    case SignalSpec::Source::Coeffs:
      return synthesize(cfg.signal.coeffs, sys.g);
    case SignalSpec::Source::Spectrum:
      return io::load_spectrum_csv(resolve(cfg.base_dir, cfg.signal.path),
                                   cfg.grid);
    case SignalSpec::Source::None:
      break;
  }
  throw ConfigError("signal: required for this command");
}

json grid_json(const GridSpec& grid) {
  return {{"fibers", grid.fibers}, {"radius", grid.radius}};
}

void push_invariant(json& list, const char* name, double measured,
                    double tolerance, bool* all_pass) {
  const bool pass = measured <= tolerance;
  if (!pass) *all_pass = false;
  list.push_back({{"name", name},
                  {"measured", measured},
                  {"tolerance", tolerance},
                  {"pass", pass}});
}

void push_invariant(json& list, const std::string& name, double measured,
                    double tolerance, bool* all_pass) {
  push_invariant(list, name.c_str(), measured, tolerance, all_pass);
}

double gram_scale(const OrthoSystem& sys) {
  double s = 0.0;
  for (double v : sys.weight_scale) s = std::max(s, v);
  return s;
}

// max_i |[g_k, g_l](t_i)| over all pairs k != l
double max_offdiagonal(const OrthoSystem& sys) {
  double worst = 0.0;
  for (size_t k = 0; k < sys.g.size(); ++k)
    for (size_t l = k + 1; l < sys.g.size(); ++l)
      worst = std::max(worst, max_abs(bracket(sys.g[k], sys.g[l])));
  return worst;
}

// max over fibers and k of |phi_k - (g_k + sum_j b_j^(k) g_j)|, skipping
// fibers where some b was zeroed by a mask (the identity cannot hold there).
double reconstruction_error(const std::vector<FiberedFunction>& phi,
                            const OrthoSystem& sys) {
  const GridSpec& grid = phi[0].grid();
  double worst = 0.0;
  for (size_t k = 0; k < phi.size(); ++k) {
    FiberedFunction rebuilt = sys.g[k];
    for (size_t j = 0; j < k; ++j)
      rebuilt = add(rebuilt, pointwise_multiply(sys.b[k][j], sys.g[j]));
    const FiberedFunction diff = subtract(phi[k], rebuilt);
    for (int i = 0; i < grid.fibers; ++i) {
      bool skip = false;
      for (size_t j = 0; j < k && !skip; ++j)
        if (sys.zero_mask[j][i]) skip = true;
      if (skip) continue;
      for (const Complex& v : diff.fiber(i))
        worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

// Deterministic dense spectrum for self-tests; full-band, not in any span.
FiberedFunction random_spectrum(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return double(rng() >> 11) * 0x1.0p-53; };
  FiberedFunction f(grid);
  for (Complex& v : f.raw())
    v = Complex(2.0 * unit() - 1.0, 2.0 * unit() - 1.0);
  return f;
}

// Small fixed coefficient polynomial, valid on any grid the library accepts.
TrigPoly pinned_poly(int j, int fibers) {
  TrigPoly p;
  p[0] += Complex(0.6 + 0.1 * j, 0.15 * j - 0.05);
  if (fibers >= 5) p[(j % 2) + 1] += Complex(0.25, -0.1 - 0.03 * j);
  if (fibers >= 9) p[-3] += Complex(0.07 * (j + 1), 0.02);
  return p;
}

}  // namespace

int cmd_orthogonalize(const JobConfig& cfg, const fs::path& out_dir) {
  Stopwatch sw;
  json timings;
  const BuiltSystem sys = build_system(cfg);
  timings["build_s"] = sw.lap();
  const OrthoSystem os = orthogonalize(sys.g, cfg.tol.zero_tol);
  timings["orthogonalize_s"] = sw.lap();

  for (size_t k = 0; k < os.g.size(); ++k) {
    io::save_periodic_csv(os.weight[k],
                          out_dir / ("Wg_" + sys.names[k] + ".csv"));
    for (size_t j = 0; j < k; ++j)
      io::save_periodic_csv(
          os.b[k][j],
          out_dir / ("b_" + sys.names[k] + "_" + sys.names[j] + ".csv"));
  }

  const double scale = gram_scale(os);
  const double offdiag = max_offdiagonal(os);
  const double recon = reconstruction_error(sys.g, os);
  timings["invariants_s"] = sw.lap();

  bool all_pass = true;
  json invariants = json::array();
  push_invariant(invariants, "orthogonality_offdiag", offdiag,
                 kOrthogonalityTol * scale, &all_pass);
  push_invariant(invariants, "triangular_reconstruction", recon,
                 kReconstructionTol * scale, &all_pass);

  json masked;
  for (size_t k = 0; k < os.g.size(); ++k)
    masked[sys.names[k]] = os.zero_mask[k].fraction();

  json report;
  report["grid"] = grid_json(cfg.grid);
  report["generators"] = sys.names;
  report["gram_scale"] = scale;
  report["invariants"] = invariants;
  report["masked_fraction"] = masked;
  report["all_pass"] = all_pass;
  report["timings"] = timings;
  io::save_json(report, out_dir / "orthogonalize_report.json");
  return all_pass ? 0 : 1;
}

int cmd_project(const JobConfig& cfg, const fs::path& out_dir) {
  Stopwatch sw;
  json timings;
  const BuiltSystem sys = build_system(cfg);
  const FiberedFunction f = build_signal(cfg, sys);
  timings["build_s"] = sw.lap();

  const FiberedFunction P = project(f, sys.g, cfg.tol.zero_tol);
  const FiberedFunction PP = project(P, sys.g, cfg.tol.zero_tol);
  timings["project_s"] = sw.lap();
  const FiberedFunction Q = project_oracle(f, sys.g, cfg.tol.zero_tol);
  timings["oracle_s"] = sw.lap();

  io::save_spectrum_csv(P, out_dir / "projection.csv");

  const double nf = l2_norm(f);
  const auto rel = [nf](double x) { return nf > 0.0 ? x / nf : x; };
  const double oracle_dev = rel(l2_norm(subtract(P, Q)));
  const double idem = rel(l2_norm(subtract(PP, P)));
  const double contraction = rel(std::max(0.0, l2_norm(P) - nf));
  timings["invariants_s"] = sw.lap();

  bool all_pass = true;
  json invariants = json::array();
  push_invariant(invariants, "oracle_agreement", oracle_dev, cfg.tol.rel_tol,
                 &all_pass);
  push_invariant(invariants, "idempotence", idem, kIdempotenceTol, &all_pass);
  push_invariant(invariants, "contraction_excess", contraction,
                 kContractionTol, &all_pass);

  json report;
  report["grid"] = grid_json(cfg.grid);
  report["generators"] = sys.names;
  report["signal_norm"] = nf;
  report["projection_norm"] = l2_norm(P);
  report["invariants"] = invariants;
  report["all_pass"] = all_pass;
  report["timings"] = timings;
  io::save_json(report, out_dir / "project_report.json");
  return all_pass ? 0 : 1;
}

int cmd_coeffs(const JobConfig& cfg, const fs::path& out_dir) {
  Stopwatch sw;
  json timings;
  const BuiltSystem sys = build_system(cfg);
  if (sys.g.size() < 2)
    throw ConfigError("coeffs: needs at least two generators");
  const FiberedFunction f = build_signal(cfg, sys);
  timings["build_s"] = sw.lap();

  const CoeffSet C =
      dual_coefficients(f, sys.g, cfg.tol.zero_tol, cfg.tol.rel_tol);
  timings["analysis_s"] = sw.lap();

  for (size_t j = 0; j < sys.g.size(); ++j) {
    io::save_periodic_csv(C.m[j], out_dir / ("m_" + sys.names[j] + ".csv"));
    io::save_periodic_csv(C.weight[j],
                          out_dir / ("Wh_" + sys.names[j] + ".csv"));
  }

  const FiberedFunction recon = reconstruct(C, sys.g);
  const double nf = l2_norm(f);
  const double residual = l2_norm(subtract(f, recon));
  const double rel_residual = nf > 0.0 ? residual / nf : residual;
  const double gap = bessel_gap(f, C);
  timings["invariants_s"] = sw.lap();

  bool all_pass = true;
  json invariants = json::array();
  push_invariant(invariants, "bessel_gap_lower", std::max(0.0, -gap),
                 kBesselTol * nf * nf, &all_pass);
  if (cfg.signal.source == SignalSpec::Source::Coeffs)
    push_invariant(invariants, "round_trip_residual", rel_residual,
                   cfg.tol.residual_bound, &all_pass);

  json masked, minimal;
  json norms = json::array();
  for (size_t j = 0; j < sys.g.size(); ++j) {
    masked[sys.names[j]] = C.zero_mask[j].fraction();
    minimal[sys.names[j]] = bool(C.minimal[j]);
    norms.push_back(C.weighted_norms[j]);
  }

  json report;
  report["grid"] = grid_json(cfg.grid);
  report["generators"] = sys.names;
  report["signal_norm"] = nf;
  report["coefficient_norms"] = norms;
  report["bessel_gap"] = gap;
  report["reconstruction_residual"] = rel_residual;
  report["masked_fraction"] = masked;
  report["minimal"] = minimal;
  report["invariants"] = invariants;
  report["all_pass"] = all_pass;
  report["timings"] = timings;
  io::save_json(report, out_dir / "coeffs_report.json");
  return all_pass ? 0 : 1;
}

int cmd_check(const JobConfig& cfg, const fs::path& out_dir) {
  Stopwatch sw;
  json timings;
  const BuiltSystem sys = build_system(cfg);
  const size_t N = sys.g.size();
  const GridSpec& grid = sys.grid;
  const bool has_signal = cfg.signal.source != SignalSpec::Source::None;
  const FiberedFunction f_test =
      has_signal ? build_signal(cfg, sys) : random_spectrum(grid, 0xF1B35EED);
  timings["build_s"] = sw.lap();

  bool all_pass = true;
  json invariants = json::array();

  const OrthoSystem os = orthogonalize(sys.g, cfg.tol.zero_tol);
  const double scale = gram_scale(os);

  // bracket symmetry on the raw generators
  {
    double worst = 0.0;
    for (size_t k = 0; k < N; ++k)
      for (size_t l = k; l < N; ++l) {
        const PeriodicFunction A = bracket(sys.g[k], sys.g[l]);
        const PeriodicFunction B = bracket(sys.g[l], sys.g[k]);
        for (int i = 0; i < grid.fibers; ++i)
          worst = std::max(worst, std::abs(A[i] - std::conj(B[i])));
      }
    push_invariant(invariants, "hermitian_symmetry", worst,
                   kHermitianTol * scale, &all_pass);
  }

  // norm identity: synthesized single-generator elements vs weighted norms
  {
    double worst = 0.0;
    const TrigPoly T = pinned_poly(1, grid.fibers);
    const PeriodicFunction Tg = trig_poly_on_grid(T, grid);
    for (size_t k = 0; k < N; ++k) {
      ShiftCoeffs one;
      one.per_generator.push_back(T);
      const std::vector<FiberedFunction> single{sys.g[k]};
      const double lhs = l2_norm(synthesize(one, single));
      const double rhs =
          weighted_norm(Tg, bracket(sys.g[k], sys.g[k]));
      const double denom = std::max({lhs, rhs, 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / denom);
    }
    push_invariant(invariants, "norm_isometry", worst, kIsometryTol,
                   &all_pass);
  }

  const double offdiag = max_offdiagonal(os);
  push_invariant(invariants, "orthogonality_offdiag", offdiag,
                 kOrthogonalityTol * scale, &all_pass);
  push_invariant(invariants, "triangular_reconstruction",
                 reconstruction_error(sys.g, os), kReconstructionTol * scale,
                 &all_pass);

  // norm additivity over the orthogonalized directions
  {
    ShiftCoeffs coeffs;
    std::vector<PeriodicFunction> grids;
    for (size_t k = 0; k < N; ++k) {
      coeffs.per_generator.push_back(pinned_poly(int(k), grid.fibers));
      grids.push_back(trig_poly_on_grid(coeffs.per_generator[k], grid));
    }
    const double lhs2 = std::pow(l2_norm(synthesize(coeffs, os.g)), 2);
    double rhs2 = 0.0;
    for (size_t k = 0; k < N; ++k) {
      const double w = weighted_norm(grids[k], os.weight[k]);
      rhs2 += w * w;
    }
    const double denom = std::max({lhs2, rhs2, 1e-300});
    push_invariant(invariants, "direct_sum_additivity",
                   std::abs(lhs2 - rhs2) / denom, kDirectSumTol, &all_pass);
  }
  timings["orthogonality_s"] = sw.lap();

  // projection block, on a dense deterministic test pair
  {
    const FiberedFunction u = random_spectrum(grid, 0x0A5CE47);
    const FiberedFunction Pf = project(f_test, sys.g, cfg.tol.zero_tol);
    const FiberedFunction Pu = project(u, sys.g, cfg.tol.zero_tol);
    const FiberedFunction PPf = project(Pf, sys.g, cfg.tol.zero_tol);
    const FiberedFunction Qf = project_oracle(f_test, sys.g, cfg.tol.zero_tol);
    const double nf = l2_norm(f_test);
    const double nu = l2_norm(u);
    const auto relf = [nf](double x) { return nf > 0.0 ? x / nf : x; };
    push_invariant(invariants, "projection_idempotence",
                   relf(l2_norm(subtract(PPf, Pf))), kIdempotenceTol,
                   &all_pass);
    const double pairing =
        std::abs(inner(Pf, u) - inner(f_test, Pu));
    push_invariant(invariants, "projection_self_adjoint",
                   nf * nu > 0.0 ? pairing / (nf * nu) : pairing,
                   kSelfAdjointTol, &all_pass);
    push_invariant(invariants, "projection_contraction",
                   relf(std::max(0.0, l2_norm(Pf) - nf)), kContractionTol,
                   &all_pass);
    push_invariant(invariants, "projection_oracle_agreement",
                   relf(l2_norm(subtract(Pf, Qf))), cfg.tol.rel_tol,
                   &all_pass);
  }
  timings["projection_s"] = sw.lap();

  if (N >= 2) {
    const CoeffSet C =
        dual_coefficients(f_test, sys.g, cfg.tol.zero_tol, cfg.tol.rel_tol);
    const double nf = l2_norm(f_test);
    const double gap = bessel_gap(f_test, C);
    push_invariant(invariants, "bessel_gap_nonnegative", std::max(0.0, -gap),
                   kBesselTol * nf * nf, &all_pass);

    double monotone = 0.0;
    for (size_t j = 0; j < N; ++j) {
      const PeriodicFunction Wphi = bracket(sys.g[j], sys.g[j]);
      const double sj = std::max(max_real(Wphi), 1e-300);
      for (int i = 0; i < grid.fibers; ++i)
        monotone = std::max(
            monotone, (C.weight[j][i].real() - Wphi[i].real()) / sj);
    }
    push_invariant(invariants, "weight_monotonicity", monotone,
                   kWeightMonotoneTol, &all_pass);

    if (cfg.signal.source == SignalSpec::Source::Coeffs) {
      const FiberedFunction recon = reconstruct(C, sys.g);
      const double res = l2_norm(subtract(f_test, recon));
      push_invariant(invariants, "round_trip_residual",
                     nf > 0.0 ? res / nf : res, cfg.tol.residual_bound,
                     &all_pass);
    }

    if (N == 2) {
      double worst = 0.0;
      for (int j = 0; j < 2; ++j) {
        const int o = 1 - j;
        const PeriodicFunction Wj = bracket(sys.g[size_t(j)], sys.g[size_t(j)]);
        const PeriodicFunction Wo = bracket(sys.g[size_t(o)], sys.g[size_t(o)]);
        const PeriodicFunction X = bracket(sys.g[size_t(j)], sys.g[size_t(o)]);
        const double so = max_real(Wo);
        const double sj = std::max(max_real(Wj), 1e-300);
        for (int i = 0; i < grid.fibers; ++i) {
          if (Wo[i].real() <= cfg.tol.zero_tol * so) continue;
          const double expected =
              Wj[i].real() - std::norm(X[i]) / Wo[i].real();
          worst = std::max(
              worst, std::abs(C.weight[size_t(j)][i].real() - expected) / sj);
        }
      }
      push_invariant(invariants, "two_generator_weight_identity", worst,
                     kTwoGenIdentityTol, &all_pass);
    }
  }
  timings["analysis_s"] = sw.lap();

  for (size_t j = 0; j < N; ++j) {
    GeneratorSpec spec = cfg.generators[j];
    if (spec.kind == GeneratorSpec::Kind::Sampled)
      spec.path = resolve(cfg.base_dir, spec.path).string();
    push_invariant(invariants, "tail_bound:" + sys.names[j],
                   periodization_tail_bound(spec, grid), cfg.tol.tail_tol,
                   &all_pass);
  }

  json report;
  report["grid"] = grid_json(cfg.grid);
  report["generators"] = sys.names;
  report["signal"] = has_signal;
  report["invariants"] = invariants;
  report["all_pass"] = all_pass;
  report["timings"] = timings;
  io::save_json(report, out_dir / "check_report.json");
  return all_pass ? 0 : 1;
}

std::string demo_config_text() {
  return R"({
  "grid": {"fibers": 256, "radius": 8},
  "generators": [
    {"kind": "bandlimited_random", "name": "breeze", "seed": 7, "support": 3.5},
    {"kind": "bandlimited_random", "name": "cinder", "seed": 11, "support": 4.0},
    {"kind": "bandlimited_random", "name": "drift", "seed": 13, "support": 4.5}
  ],
  "signal": {
    "coeffs": [
      {"terms": [{"k": 0, "re": 1.0, "im": 0.0}, {"k": 2, "re": -0.25, "im": 0.5}]},
      {"terms": [{"k": -1, "re": 0.6, "im": -0.1}]},
      {"terms": [{"k": 3, "re": 0.2, "im": 0.3}, {"k": -4, "re": 0.05, "im": 0.0}]}
    ]
  },
  "tolerances": {"zero_tol": 1e-12, "rel_tol": 1e-8, "residual_bound": 1e-8, "tail_tol": 1e-6}
}
)";
}

int cmd_demo(const fs::path& out_dir) {
  io::atomic_write_text(out_dir / "demo_config.json", demo_config_text());
  const JobConfig cfg = load_config(out_dir / "demo_config.json");
  int rc = 0;
  rc = std::max(rc, cmd_orthogonalize(cfg, out_dir / "orthogonalize"));
  rc = std::max(rc, cmd_project(cfg, out_dir / "project"));
  rc = std::max(rc, cmd_coeffs(cfg, out_dir / "coeffs"));
  rc = std::max(rc, cmd_check(cfg, out_dir / "check"));
  return rc;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"fiberwise analysis of shift-invariant spaces"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int threads = 0;
  double zero_tol = std::numeric_limits<double>::quiet_NaN();
  double rel_tol = std::numeric_limits<double>::quiet_NaN();

  app.add_option("--config", config_path, "job configuration (JSON)")
      ->envname("SISPACE_CONFIG");
  app.add_option("--out", out_path, "output directory")
      ->required()
      ->envname("SISPACE_OUT");
  app.add_option("--threads", threads, "worker threads (default 1)")
      ->envname("SISPACE_THREADS")
      ->check(CLI::Range(1, 256));
  app.add_option("--zero-tol", zero_tol, "degenerate-fiber threshold")
      ->envname("SISPACE_ZERO_TOL");
  app.add_option("--rel-tol", rel_tol, "relative comparison tolerance")
      ->envname("SISPACE_REL_TOL");

  app.add_subcommand("orthogonalize",
                     "triangular orthogonalization of the generator set");
  app.add_subcommand("project", "project the signal onto the span");
  app.add_subcommand("coeffs", "dual analysis coefficients of the signal");
  app.add_subcommand("check", "run the invariant battery");
  app.add_subcommand("demo", "write a sample config and run everything");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::printf("%s", app.help().c_str());
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  const std::string sub = app.get_subcommands().at(0)->get_name();
  try {
    if (sub == "demo") {
      set_default_thread_count(threads > 0 ? threads : 1);
      return cmd_demo(out_path);
    }
    if (config_path.empty())
      throw ConfigError(sub + ": --config is required");
    JobConfig cfg = load_config(config_path);
    if (!std::isnan(zero_tol)) {
      if (!(zero_tol >= 0.0) || !(zero_tol < 1.0))
        throw ConfigError("--zero-tol: must be in [0, 1)");
      cfg.tol.zero_tol = zero_tol;
    }
    if (!std::isnan(rel_tol)) {
      if (!(rel_tol > 0.0) || !(rel_tol < 1.0))
        throw ConfigError("--rel-tol: must be in (0, 1)");
      cfg.tol.rel_tol = rel_tol;
    }
    const int resolved =
        threads > 0 ? threads : (cfg.threads > 0 ? cfg.threads : 1);
    set_default_thread_count(resolved);
    if (sub == "orthogonalize") return cmd_orthogonalize(cfg, out_path);
    if (sub == "project") return cmd_project(cfg, out_path);
    if (sub == "coeffs") return cmd_coeffs(cfg, out_path);
    if (sub == "check") return cmd_check(cfg, out_path);
    throw ConfigError("unknown subcommand " + sub);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
}

}  // namespace sispace::cli
