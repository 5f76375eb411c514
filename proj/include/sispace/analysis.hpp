#pragma once

#include <cstddef>
#include <vector>

#include "sispace/fibercore.hpp"
#include "sispace/orthogonalizer.hpp"
#include "sispace/types.hpp"

namespace sispace {

// Orthogonal projection of f onto the shift span of the generators, computed
// through the triangular orthogonalization: P f = sum_k ([f,g_k]/[g_k,g_k]) g_k.
FiberedFunction project(const FiberedFunction& f,
                        const std::vector<FiberedFunction>& generators,
                        double zero_tol = kDefaultZeroTol);

// The same projection by an independent route: per fiber, solve the
// least-squares normal equations through a Hermitian eigendecomposition
// pseudoinverse (eigenvalues at or below zero_tol times the fiber's largest
// are dropped). Exists to cross-check project(); the two must agree
// wherever the fiber Gram matrix is not near-singular.
FiberedFunction project_oracle(const FiberedFunction& f,
                               const std::vector<FiberedFunction>& generators,
                               double zero_tol = kDefaultZeroTol);

// Analysis output: one periodic coefficient per generator,
//   m_j = [f, h_j] / [h_j, h_j],
// where h_j is generators[j]'s residual against all the others.
struct CoeffSet {
  std::vector<PeriodicFunction> m;
  // weight[j] = bracket(h_j, h_j); the norm that pairs with m[j].
  std::vector<PeriodicFunction> weight;
  // weighted_norm(m[j], weight[j]), precomputed in fixed order.
  std::vector<double> weighted_norms;
  // fibers where weight[j] was masked and m[j] set to 0
  std::vector<FiberMask> zero_mask;
  // per-generator minimality verdicts for the same set (diagnostic; a
  // non-minimal generator contributes a zero coefficient a.e.)
  std::vector<bool> minimal;
};

CoeffSet dual_coefficients(const FiberedFunction& f,
                           const std::vector<FiberedFunction>& generators,
                           double zero_tol = kDefaultZeroTol,
                           double rel_tol = kDefaultRelTol);

// sum_j m_j . phi_j. Reconstructs f when f lies in the span and the
// generator system is minimal; in general returns a span element whose
// distance to f is what bessel_gap measures in the orthogonal case.
FiberedFunction reconstruct(const CoeffSet& coeffs,
                            const std::vector<FiberedFunction>& generators);

// ||f||^2 - sum_j ||m_j||^2_{W_j}. Zero when the generators are fiberwise
// orthogonal and f lies in their span, positive for the part of f outside
// the span. NOT a one-sided bound in general: the residual directions h_j
// are not mutually orthogonal, so for strongly overlapping generators with
// adversely phased coefficients the sum can exceed ||f||^2 and the gap goes
// genuinely negative (two unit-weight generators with cross-bracket -1/2
// and f = phi_1 + phi_2 give exactly -||f||^2/2).
double bessel_gap(const FiberedFunction& f, const CoeffSet& coeffs);

// Given a coefficient m for generator index j, returns psi in the span of
// the OTHER generators with  m . phi_j + psi = m . h_j:
// psi = -m . (phi_j - h_j). Witnesses that the analysis coefficient only
// sees the residual direction.
FiberedFunction lift(const PeriodicFunction& m, std::size_t index,
                     const std::vector<FiberedFunction>& generators,
                     double zero_tol = kDefaultZeroTol);

}  // namespace sispace
