#include "sispace/fibercore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sispace/parallel.hpp"

namespace sispace {

GridSpec make_grid(int fibers, int radius) {
  if (fibers < 2)
    throw ConfigError("grid: fibers must be >= 2, got " + std::to_string(fibers));
  if (radius < 1)
    throw ConfigError("grid: radius must be >= 1, got " + std::to_string(radius));
  return GridSpec{fibers, radius};
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b))
    throw ShapeError(std::string(where) + ": grid mismatch (" +
                     std::to_string(a.fibers) + "," + std::to_string(a.radius) +
                     ") vs (" + std::to_string(b.fibers) + "," +
                     std::to_string(b.radius) + ")");
}

PeriodicFunction bracket(const FiberedFunction& f, const FiberedFunction& g) {
  require_same_grid(f.grid(), g.grid(), "bracket");
  const GridSpec& grid = f.grid();
  PeriodicFunction out(grid);
  parallel_for(grid.fibers, [&](int i) {
    auto fi = f.fiber(i);
    auto gi = g.fiber(i);
    Complex acc{};
    for (size_t m = 0; m < fi.size(); ++m) acc += fi[m] * std::conj(gi[m]);
    out[i] = acc;
  });
  return out;
}

namespace {

// Shared core of the two quotient entry points; threshold is absolute.
QuotientResult quotient_core(const PeriodicFunction& A,
                             const PeriodicFunction& B, double threshold,
                             double neg_floor) {
  require_same_grid(A.grid(), B.grid(), "periodic_quotient");
  const int M = A.size();
  QuotientResult result{PeriodicFunction(A.grid()), FiberMask(M)};
  for (int i = 0; i < M; ++i) {
    const double w = B[i].real();
    if (w < -neg_floor)
      throw DomainError("periodic_quotient: negative weight " +
                        std::to_string(w) + " at fiber " + std::to_string(i));
    if (std::abs(B[i].imag()) > neg_floor)
      throw DomainError("periodic_quotient: weight not real at fiber " +
                        std::to_string(i));
    if (w <= threshold) {
      result.value[i] = Complex{};
      result.zeroed.set(i);
    } else {
      result.value[i] = A[i] / w;
    }
  }
  return result;
}

}  // namespace

QuotientResult periodic_quotient(const PeriodicFunction& A,
                                 const PeriodicFunction& B, double zero_tol) {
  const double scale = max_real(B) > 0.0 ? max_real(B) : max_abs(B);
  return quotient_core(A, B, zero_tol * scale, zero_tol * std::max(scale, 1.0));
}

QuotientResult periodic_quotient_abs(const PeriodicFunction& A,
                                     const PeriodicFunction& B,
                                     double abs_threshold) {
  return quotient_core(A, B, abs_threshold,
                       std::max(abs_threshold, kDefaultZeroTol));
}

FiberedFunction pointwise_multiply(const PeriodicFunction& F,
                                   const FiberedFunction& f) {
  require_same_grid(F.grid(), f.grid(), "pointwise_multiply");
  const GridSpec& grid = f.grid();
  FiberedFunction out(grid);
  parallel_for(grid.fibers, [&](int i) {
    const Complex c = F[i];
    auto src = f.fiber(i);
    auto dst = out.fiber(i);
    for (size_t m = 0; m < src.size(); ++m) dst[m] = c * src[m];
  });
  return out;
}

double l2_norm(const FiberedFunction& f) {
  const GridSpec& grid = f.grid();
  std::vector<double> per_fiber(size_t(grid.fibers));
  parallel_for(grid.fibers, [&](int i) {
    auto fi = f.fiber(i);
    double acc = 0.0;
    for (const Complex& v : fi) acc += std::norm(v);
    per_fiber[size_t(i)] = acc;
  });
  double total = 0.0;
  for (double v : per_fiber) total += v;
  return std::sqrt(total / double(grid.fibers));
}

double weighted_norm(const PeriodicFunction& F, const PeriodicFunction& W) {
  require_same_grid(F.grid(), W.grid(), "weighted_norm");
  const int M = F.size();
  const double floor = kDefaultZeroTol * std::max(max_abs(W), 1.0);
  double total = 0.0;
  for (int i = 0; i < M; ++i) {
    const double w = W[i].real();
    if (w < -floor)
      throw DomainError("weighted_norm: negative weight " + std::to_string(w) +
                        " at fiber " + std::to_string(i));
    if (std::abs(W[i].imag()) > floor)
      throw DomainError("weighted_norm: weight not real at fiber " +
                        std::to_string(i));
    total += std::norm(F[i]) * (w > 0.0 ? w : 0.0);
  }
  return std::sqrt(total / double(M));
}

Complex inner(const FiberedFunction& f, const FiberedFunction& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  const GridSpec& grid = f.grid();
  std::vector<Complex> per_fiber(size_t(grid.fibers));
  parallel_for(grid.fibers, [&](int i) {
    auto fi = f.fiber(i);
    auto gi = g.fiber(i);
    Complex acc{};
    for (size_t m = 0; m < fi.size(); ++m) acc += fi[m] * std::conj(gi[m]);
    per_fiber[size_t(i)] = acc;
  });
  Complex total{};
  for (const Complex& v : per_fiber) total += v;
  return total / double(grid.fibers);
}

FiberedFunction add(const FiberedFunction& a, const FiberedFunction& b) {
  require_same_grid(a.grid(), b.grid(), "add");
  FiberedFunction out(a.grid());
  auto ra = a.raw();
  auto rb = b.raw();
  auto ro = out.raw();
  for (size_t m = 0; m < ra.size(); ++m) ro[m] = ra[m] + rb[m];
  return out;
}

FiberedFunction subtract(const FiberedFunction& a, const FiberedFunction& b) {
  require_same_grid(a.grid(), b.grid(), "subtract");
  FiberedFunction out(a.grid());
  auto ra = a.raw();
  auto rb = b.raw();
  auto ro = out.raw();
  for (size_t m = 0; m < ra.size(); ++m) ro[m] = ra[m] - rb[m];
  return out;
}

FiberedFunction scale(const FiberedFunction& f, Complex c) {
  FiberedFunction out(f.grid());
  auto rf = f.raw();
  auto ro = out.raw();
  for (size_t m = 0; m < rf.size(); ++m) ro[m] = c * rf[m];
  return out;
}

double max_abs(const FiberedFunction& f) {
  double best = 0.0;
  for (const Complex& v : f.raw()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs(const PeriodicFunction& F) {
  double best = 0.0;
  for (const Complex& v : F.values()) best = std::max(best, std::abs(v));
  return best;
}

double max_real(const PeriodicFunction& F) {
  double best = 0.0;
  for (const Complex& v : F.values()) best = std::max(best, v.real());
  return best;
}

}  // namespace sispace
