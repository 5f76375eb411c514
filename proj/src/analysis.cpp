#include "sispace/analysis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "sispace/parallel.hpp"

namespace sispace {

namespace {

const GridSpec& common_grid_with(const FiberedFunction& f,
                                 const std::vector<FiberedFunction>& generators,
                                 const char* where) {
  if (generators.empty())
    throw ConfigError(std::string(where) + ": empty generator set");
  const GridSpec& grid = generators[0].grid();
  for (const auto& g : generators) require_same_grid(grid, g.grid(), where);
  require_same_grid(grid, f.grid(), where);
  return grid;
}

}  // namespace

FiberedFunction project(const FiberedFunction& f,
                        const std::vector<FiberedFunction>& generators,
                        double zero_tol) {
  const GridSpec& grid = common_grid_with(f, generators, "project");
  const OrthoSystem sys = orthogonalize(generators, zero_tol);
  FiberedFunction out(grid);
  const int width = grid.translates();
  parallel_for(grid.fibers, [&](int i) {
    auto fi = f.fiber(i);
    auto dst = out.fiber(i);
    for (size_t k = 0; k < sys.g.size(); ++k) {
      if (sys.zero_mask[k][i]) continue;
      auto gk = sys.g[k].fiber(i);
      Complex num{};
      for (int m = 0; m < width; ++m)
        num += fi[size_t(m)] * std::conj(gk[size_t(m)]);
      const Complex c = num / sys.weight[k][i].real();
      for (int m = 0; m < width; ++m) dst[size_t(m)] += c * gk[size_t(m)];
    }
  });
  return out;
}

FiberedFunction project_oracle(const FiberedFunction& f,
                               const std::vector<FiberedFunction>& generators,
                               double zero_tol) {
  const GridSpec& grid = common_grid_with(f, generators, "project_oracle");
  const int N = int(generators.size());
  const int width = grid.translates();
  FiberedFunction out(grid);
  parallel_for(grid.fibers, [&](int i) {
    // Least-squares normal equations for c in  min || f - sum_j c_j phi_j ||
    // on this fiber: A c = beta, A_{l j} = <phi_j, phi_l>, beta_l = <f, phi_l>.
    Eigen::MatrixXcd A(N, N);
    Eigen::VectorXcd beta(N);
    auto fi = f.fiber(i);
    for (int l = 0; l < N; ++l) {
      auto pl = generators[size_t(l)].fiber(i);
      for (int j = 0; j < N; ++j) {
        auto pj = generators[size_t(j)].fiber(i);
        Complex acc{};
        for (int m = 0; m < width; ++m)
          acc += pj[size_t(m)] * std::conj(pl[size_t(m)]);
        A(l, j) = acc;
      }
      Complex acc{};
      for (int m = 0; m < width; ++m)
        acc += fi[size_t(m)] * std::conj(pl[size_t(m)]);
      beta(l) = acc;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = zero_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    Eigen::VectorXcd y = es.eigenvectors().adjoint() * beta;
    for (int l = 0; l < N; ++l)
      y(l) = ev(l) > cutoff ? y(l) / ev(l) : Complex{};
    const Eigen::VectorXcd c = es.eigenvectors() * y;
    auto dst = out.fiber(i);
    for (int j = 0; j < N; ++j) {
      auto pj = generators[size_t(j)].fiber(i);
      for (int m = 0; m < width; ++m) dst[size_t(m)] += c(j) * pj[size_t(m)];
    }
  });
  return out;
}

CoeffSet dual_coefficients(const FiberedFunction& f,
                           const std::vector<FiberedFunction>& generators,
                           double zero_tol, double rel_tol) {
  common_grid_with(f, generators, "dual_coefficients");
  if (generators.size() < 2)
    throw ConfigError("dual_coefficients: needs at least two generators");

  CoeffSet out;
  const size_t N = generators.size();
  out.m.reserve(N);
  out.weight.reserve(N);
  out.weighted_norms.reserve(N);
  out.zero_mask.reserve(N);
  out.minimal.reserve(N);

  for (size_t j = 0; j < N; ++j) {
    const FiberedFunction h = residual_generator(generators, j, zero_tol);
    const PeriodicFunction Wh = bracket(h, h);
    const PeriodicFunction Wphi = bracket(generators[j], generators[j]);
    const double threshold = zero_tol * max_real(Wphi);

    QuotientResult q = periodic_quotient_abs(bracket(f, h), Wh, threshold);
    out.weighted_norms.push_back(weighted_norm(q.value, Wh));
    out.m.push_back(std::move(q.value));
    out.weight.push_back(Wh);
    out.zero_mask.push_back(std::move(q.zeroed));

    // same ratio rule as g_minimality, reusing this run's residual
    double mean_h = 0.0, mean_phi = 0.0;
    for (int i = 0; i < Wh.size(); ++i) {
      mean_h += Wh[i].real();
      mean_phi += Wphi[i].real();
    }
    const double rho = mean_phi > 0.0 ? mean_h / mean_phi : 0.0;
    out.minimal.push_back(rho > rel_tol);
  }
  return out;
}

FiberedFunction reconstruct(const CoeffSet& coeffs,
                            const std::vector<FiberedFunction>& generators) {
  if (generators.empty())
    throw ConfigError("reconstruct: empty generator set");
  if (coeffs.m.size() != generators.size())
    throw ShapeError("reconstruct: " + std::to_string(coeffs.m.size()) +
                     " coefficients for " +
                     std::to_string(generators.size()) + " generators");
  const GridSpec& grid = generators[0].grid();
  FiberedFunction out(grid);
  for (size_t j = 0; j < generators.size(); ++j) {
    require_same_grid(grid, generators[j].grid(), "reconstruct");
    require_same_grid(grid, coeffs.m[j].grid(), "reconstruct");
    out = add(out, pointwise_multiply(coeffs.m[j], generators[j]));
  }
  return out;
}

double bessel_gap(const FiberedFunction& f, const CoeffSet& coeffs) {
  const double nf = l2_norm(f);
  double sum = 0.0;
  for (double w : coeffs.weighted_norms) sum += w * w;
  return nf * nf - sum;
}

FiberedFunction lift(const PeriodicFunction& m, std::size_t index,
                     const std::vector<FiberedFunction>& generators,
                     double zero_tol) {
  if (generators.size() < 2)
    throw ConfigError("lift: needs at least two generators");
  if (index >= generators.size())
    throw ConfigError("lift: index " + std::to_string(index) +
                      " out of range for " +
                      std::to_string(generators.size()) + " generators");
  require_same_grid(m.grid(), generators[index].grid(), "lift");
  const FiberedFunction h = residual_generator(generators, index, zero_tol);
  // phi_j - h_j is the projection of phi_j on the others' span
  const FiberedFunction proj = subtract(generators[index], h);
  return scale(pointwise_multiply(m, proj), Complex(-1.0, 0.0));
}

}  // namespace sispace
