#pragma once

#include "sispace/types.hpp"

namespace sispace {

// Fiberwise sesquilinear form [f, g](t_i) = sum_k f(t_i+k) * conj(g(t_i+k)),
// k ascending from -K to K. The summation order is part of the contract.
PeriodicFunction bracket(const FiberedFunction& f, const FiberedFunction& g);

struct QuotientResult {
  PeriodicFunction value;
  FiberMask zeroed;
};

// A / B with the 0/0 -> 0 convention. Fibers where Re B(t_i) lies at or
// below zero_tol * max_i Re B are not divided: the quotient is set to 0
// there and the fiber is flagged. B must be real-valued and nonnegative up
// to the same relative slack; anything more negative is a domain error.
QuotientResult periodic_quotient(const PeriodicFunction& A,
                                 const PeriodicFunction& B,
                                 double zero_tol = kDefaultZeroTol);

// Same division rule with a caller-supplied absolute threshold, for when the
// relevant scale is not max B itself (e.g. a residual weight measured
// against the weight of the generator it came from).
QuotientResult periodic_quotient_abs(const PeriodicFunction& A,
                                     const PeriodicFunction& B,
                                     double abs_threshold);

// (F . f)(t_i + k) = F(t_i) * f(t_i + k): multiplication by a function of
// the fiber variable only, the model's image of combining integer shifts.
FiberedFunction pointwise_multiply(const PeriodicFunction& F,
                                   const FiberedFunction& f);

// sqrt( (1/M) sum_i sum_k |f(t_i+k)|^2 ), accumulated per fiber first and
// then across fibers, so l2_norm(f)^2 equals the fiber average of
// bracket(f, f) as the same finite sum.
double l2_norm(const FiberedFunction& f);

// sqrt( (1/M) sum_i |F(t_i)|^2 Re W(t_i) ). W must be real-valued and
// nonnegative up to kDefaultZeroTol relative slack.
double weighted_norm(const PeriodicFunction& F, const PeriodicFunction& W);

// (1/M) sum_i sum_k f(t_i+k) conj(g(t_i+k)), same grouping as l2_norm.
Complex inner(const FiberedFunction& f, const FiberedFunction& g);

FiberedFunction add(const FiberedFunction& a, const FiberedFunction& b);
FiberedFunction subtract(const FiberedFunction& a, const FiberedFunction& b);
FiberedFunction scale(const FiberedFunction& f, Complex c);

double max_abs(const FiberedFunction& f);
double max_abs(const PeriodicFunction& F);
// Largest real part over the fibers; 0 for an empty function.
double max_real(const PeriodicFunction& F);

}  // namespace sispace
