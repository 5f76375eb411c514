#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sispace/types.hpp"

namespace sispace {

// Recipe for one generator's spectral samples.
struct GeneratorSpec {
  enum class Kind { BSpline, Gaussian, BandlimitedRandom, Indicator, Sampled };

  Kind kind = Kind::Indicator;
  std::string name;

  int order = 0;           // BSpline: polynomial degree m >= 0
  double sigma = 1.0;      // Gaussian: width > 0
  std::uint64_t seed = 0;  // BandlimitedRandom
  double support = 3.0;    // BandlimitedRandom: spectrum support radius
  std::string path;        // Sampled: spectrum CSV

  static GeneratorSpec bspline(int order, std::string name = "");
  static GeneratorSpec gaussian(double sigma, std::string name = "");
  static GeneratorSpec bandlimited_random(std::uint64_t seed, double support,
                                          std::string name = "");
  static GeneratorSpec indicator(std::string name = "");
  static GeneratorSpec sampled(std::string path, std::string name = "");
};

// Materializes the spectral samples f_hat(t_i + k) for one generator.
//
// Kinds:
//  - BSpline(m): the degree-m cardinal B-spline supported on [0, m+1],
//    f_hat(xi) = (exp(-pi i xi) sin(pi xi) / (pi xi))^(m+1). The raw samples
//    are rescaled per fiber so that the fiber energy equals the exact
//    autocorrelation symbol sum_j a_j e^(2 pi i j t) of the spline (a_j from
//    bspline_autocorrelation); without this the energy lost outside |k| <= K
//    would poison every bracket identity the rest of the library relies on.
//  - Gaussian(sigma): f_hat(xi) = exp(-pi^2 sigma^2 xi^2).
//  - BandlimitedRandom(seed, r): a C-infinity bump supported on [-r, r]
//    times a seeded random trigonometric polynomial; bit-for-bit
//    reproducible from the seed. Requires r <= K so the support is fully
//    representable.
//  - Indicator: 1 on the k = 0 samples, 0 elsewhere (an orthonormal shift
//    system, handy as a reference).
//  - Sampled(path): spectrum CSV on the same grid.
FiberedFunction build_generator(const GeneratorSpec& spec, const GridSpec& grid);

// Upper bound on the relative spectral energy outside the representable
// window |k| <= K: the folded fraction for B-splines, a geometric-series
// tail bound for Gaussians, 0 for the band-limited kinds.
double periodization_tail_bound(const GeneratorSpec& spec, const GridSpec& grid);

// Integer autocorrelation of the degree-m B-spline: a_j for j = 0..m, where
// a_j = B_{2m+1}(m + 1 + j) (values of the degree-(2m+1) spline at integers,
// Cox-de Boor recurrence). a_{-j} = a_j.
std::vector<double> bspline_autocorrelation(int order);

// The exact weight symbol a_0 + 2 sum_{j>=1} a_j cos(2 pi j t) on the grid.
PeriodicFunction bspline_weight(int order, const GridSpec& grid);

// Finitely supported Fourier coefficients of a 1-periodic function:
// k -> gamma_k, evaluated as sum_k gamma_k e^(+2 pi i k t).
using TrigPoly = std::map<int, Complex>;

Complex eval_trig_poly(const TrigPoly& p, double t);
PeriodicFunction trig_poly_on_grid(const TrigPoly& p, const GridSpec& grid);
int trig_poly_degree(const TrigPoly& p);

// One coefficient polynomial per generator.
struct ShiftCoeffs {
  std::vector<TrigPoly> per_generator;
};

// sum_j T_j(t_i) * phi_j(t_i + k): the spectral image of the finite span
// element sum_j sum_k gamma_{j,k} phi_j(. + k). Coefficient degrees must
// stay below M/2 so distinct coefficient polynomials stay distinguishable
// on the grid.
FiberedFunction synthesize(const ShiftCoeffs& coeffs,
                           const std::vector<FiberedFunction>& generators);

}  // namespace sispace
