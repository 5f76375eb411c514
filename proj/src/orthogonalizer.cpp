#include "sispace/orthogonalizer.hpp"

#include <cmath>
#include <string>

#include "sispace/parallel.hpp"

namespace sispace {

namespace {

const GridSpec& common_grid(const std::vector<FiberedFunction>& generators,
                            const char* where) {
  if (generators.empty())
    throw ConfigError(std::string(where) + ": empty generator set");
  const GridSpec& grid = generators[0].grid();
  for (const auto& g : generators) require_same_grid(grid, g.grid(), where);
  return grid;
}

}  // namespace

GramField gram_field(const std::vector<FiberedFunction>& generators) {
  const GridSpec& grid = common_grid(generators, "gram_field");
  const int N = int(generators.size());
  GramField G;
  G.grid = grid;
  G.count = N;
  G.values.assign(size_t(grid.fibers) * size_t(N) * size_t(N), Complex{});
  parallel_for(grid.fibers, [&](int i) {
    Complex* row = G.values.data() + size_t(i) * size_t(N) * size_t(N);
    for (int l = 0; l < N; ++l) {
      auto fl = generators[size_t(l)].fiber(i);
      for (int j = 0; j < N; ++j) {
        auto fj = generators[size_t(j)].fiber(i);
        Complex acc{};
        for (size_t m = 0; m < fl.size(); ++m) acc += fl[m] * std::conj(fj[m]);
        row[size_t(l) * size_t(N) + size_t(j)] = acc;
      }
    }
  });
  return G;
}

OrthoSystem orthogonalize(const std::vector<FiberedFunction>& generators,
                          double zero_tol) {
  const GridSpec& grid = common_grid(generators, "orthogonalize");
  const int N = int(generators.size());
  const int width = grid.translates();

  OrthoSystem sys;
  sys.g.assign(size_t(N), FiberedFunction(grid));
  sys.b.resize(size_t(N));
  for (int k = 0; k < N; ++k)
    sys.b[size_t(k)].assign(size_t(k), PeriodicFunction(grid));
  sys.weight.assign(size_t(N), PeriodicFunction(grid));
  sys.zero_mask.assign(size_t(N), FiberMask(grid.fibers));
  sys.weight_scale.assign(size_t(N), 0.0);

  // Masking thresholds come from the incoming generators' own weights, so
  // they are fixed before any recursion happens.
  for (int k = 0; k < N; ++k) {
    const PeriodicFunction w = bracket(generators[size_t(k)], generators[size_t(k)]);
    sys.weight_scale[size_t(k)] = max_real(w);
  }

  parallel_for(grid.fibers, [&](int i) {
    for (int k = 0; k < N; ++k) {
      auto phi_k = generators[size_t(k)].fiber(i);
      auto g_k = sys.g[size_t(k)].fiber(i);
      for (int m = 0; m < width; ++m) g_k[size_t(m)] = phi_k[size_t(m)];

      // all b_j^(k) reference the incoming phi_k, not the partial residual
      for (int j = 0; j < k; ++j) {
        auto g_j = sys.g[size_t(j)].fiber(i);
        Complex b{};
        if (!sys.zero_mask[size_t(j)][i]) {
          Complex num{};
          for (int m = 0; m < width; ++m)
            num += phi_k[size_t(m)] * std::conj(g_j[size_t(m)]);
          b = num / sys.weight[size_t(j)][i].real();
        }
        sys.b[size_t(k)][size_t(j)][i] = b;
        for (int m = 0; m < width; ++m) g_k[size_t(m)] -= b * g_j[size_t(m)];
      }

      double energy = 0.0;
      for (int m = 0; m < width; ++m) energy += std::norm(g_k[size_t(m)]);
      sys.weight[size_t(k)][i] = Complex(energy, 0.0);
      if (energy <= zero_tol * sys.weight_scale[size_t(k)])
        sys.zero_mask[size_t(k)].set(i);
    }
  });
  return sys;
}

FiberedFunction residual_generator(
    const std::vector<FiberedFunction>& generators, std::size_t index,
    double zero_tol) {
  const GridSpec& grid = common_grid(generators, "residual_generator");
  (void)grid;
  if (generators.size() < 2)
    throw ConfigError("residual_generator: needs at least two generators");
  if (index >= generators.size())
    throw ConfigError("residual_generator: index " + std::to_string(index) +
                      " out of range for " +
                      std::to_string(generators.size()) + " generators");
  std::vector<FiberedFunction> reordered;
  reordered.reserve(generators.size());
  for (size_t j = 0; j < generators.size(); ++j)
    if (j != index) reordered.push_back(generators[j]);
  reordered.push_back(generators[index]);
  OrthoSystem sys = orthogonalize(reordered, zero_tol);
  return std::move(sys.g.back());
}

std::vector<FiberedFunction> residual_set(
    const std::vector<FiberedFunction>& generators, double zero_tol) {
  std::vector<FiberedFunction> out;
  out.reserve(generators.size());
  for (size_t j = 0; j < generators.size(); ++j)
    out.push_back(residual_generator(generators, j, zero_tol));
  return out;
}

MinimalityReport g_minimality(const std::vector<FiberedFunction>& generators,
                              double rel_tol, double zero_tol) {
  const GridSpec& grid = common_grid(generators, "g_minimality");
  if (generators.size() < 2)
    throw ConfigError("g_minimality: needs at least two generators");
  const int M = grid.fibers;

  MinimalityReport report;
  report.per_generator.reserve(generators.size());
  for (size_t j = 0; j < generators.size(); ++j) {
    const FiberedFunction h = residual_generator(generators, j, zero_tol);
    const PeriodicFunction Wh = bracket(h, h);
    const PeriodicFunction Wphi = bracket(generators[j], generators[j]);

    double mean_h = 0.0, mean_phi = 0.0;
    for (int i = 0; i < M; ++i) {
      mean_h += Wh[i].real();
      mean_phi += Wphi[i].real();
    }
    const double scale = max_real(Wphi);

    MinimalityVerdict v;
    v.rho = mean_phi > 0.0 ? mean_h / mean_phi : 0.0;
    int positive = 0;
    for (int i = 0; i < M; ++i)
      if (Wh[i].real() > rel_tol * scale) ++positive;
    v.positive_fraction = double(positive) / double(M);
    v.minimal = v.rho > rel_tol;
    report.per_generator.push_back(v);
  }
  return report;
}

}  // namespace sispace
