#pragma once

#include <cstddef>
#include <vector>

#include "sispace/fibercore.hpp"
#include "sispace/types.hpp"

namespace sispace {

// Fiberwise Gram matrix of a generator set: at(i, l, j) = [phi_l, phi_j](t_i).
// Hermitian and positive semidefinite at every fiber.
struct GramField {
  GridSpec grid;
  int count = 0;
  std::vector<Complex> values;  // (i * count + l) * count + j

  Complex at(int i, int l, int j) const {
    return values[(size_t(i) * size_t(count) + size_t(l)) * size_t(count) +
                  size_t(j)];
  }
};

GramField gram_field(const std::vector<FiberedFunction>& generators);

// Triangular orthogonalization of a generator set, fiber by fiber:
//   g_1 = phi_1,   g_k = phi_k - sum_{j<k} b_j^(k) g_j,
//   b_j^(k) = [phi_k, g_j] / [g_j, g_j]   (0 where g_j's weight is masked).
struct OrthoSystem {
  std::vector<FiberedFunction> g;
  // b[k][j] holds b_j^(k) for j < k; inner vectors have length k.
  std::vector<std::vector<PeriodicFunction>> b;
  // weight[k] = bracket(g_k, g_k), kept because every consumer needs it.
  std::vector<PeriodicFunction> weight;
  // zero_mask[k]: fibers where weight[k] fell to or below
  // zero_tol * max_i bracket(phi_k, phi_k), the incoming generator's own
  // scale. On masked fibers g_k carries no usable direction and all
  // divisions by weight[k] give 0.
  std::vector<FiberMask> zero_mask;
  // weight_scale[k] = max_i bracket(phi_k, phi_k)(t_i).
  std::vector<double> weight_scale;
};

OrthoSystem orthogonalize(const std::vector<FiberedFunction>& generators,
                          double zero_tol = kDefaultZeroTol);

// The part of generators[index] orthogonal to the span of all the others:
// the last output of orthogonalize() with that generator moved to the end.
// Requires at least two generators.
FiberedFunction residual_generator(const std::vector<FiberedFunction>& generators,
                                   std::size_t index,
                                   double zero_tol = kDefaultZeroTol);

// Residuals for every index in one call (shared validation, N runs).
std::vector<FiberedFunction> residual_set(
    const std::vector<FiberedFunction>& generators,
    double zero_tol = kDefaultZeroTol);

struct MinimalityVerdict {
  bool minimal = false;
  // mean residual weight over mean generator weight; 0 means the generator
  // is entirely inside the span of the others.
  double rho = 0.0;
  // fraction of fibers where the residual weight clears rel_tol times the
  // generator's own weight maximum
  double positive_fraction = 0.0;
};

struct MinimalityReport {
  std::vector<MinimalityVerdict> per_generator;

  bool all_minimal() const {
    for (const auto& v : per_generator)
      if (!v.minimal) return false;
    return true;
  }
};

// A generator is flagged minimal when removing it loses something: its
// residual against the others keeps rho above rel_tol.
MinimalityReport g_minimality(const std::vector<FiberedFunction>& generators,
                              double rel_tol = kDefaultRelTol,
                              double zero_tol = kDefaultZeroTol);

}  // namespace sispace
