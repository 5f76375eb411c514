#include "sispace/generators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "sispace/fibercore.hpp"
#include "sispace/io.hpp"
#include "sispace/parallel.hpp"

namespace sispace {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxSplineOrder = 10;

double sinc_pi(double x) {
  // sin(pi x) / (pi x), series near 0 to avoid the 0/0.
  const double px = kPi * x;
  if (std::abs(px) < 1e-8) return 1.0 - px * px / 6.0;
  return std::sin(px) / px;
}

Complex pow_int(Complex base, int n) {
  Complex out{1.0, 0.0};
  for (int i = 0; i < n; ++i) out *= base;
  return out;
}

// Spectrum of the degree-m cardinal B-spline on [0, m+1]:
// (exp(-pi i xi) sin(pi xi) / (pi xi))^(m+1).
Complex bspline_hat(int order, double xi) {
  const double s = sinc_pi(xi);
  const double phase = -kPi * xi;
  const Complex base = Complex(std::cos(phase), std::sin(phase)) * s;
  return pow_int(base, order + 1);
}

// Values of the degree-p B-spline at the integers 0..p+1 (Cox-de Boor).
std::vector<double> bspline_integer_values(int p) {
  std::vector<double> v(size_t(p) + 2, 0.0);
  v[0] = 1.0;  // degree 0: indicator of [0,1), right-open at the knots
  std::vector<double> next(v.size(), 0.0);
  for (int q = 1; q <= p; ++q) {
    next.assign(v.size(), 0.0);
    for (int i = 1; i <= q + 1; ++i)
      next[size_t(i)] =
          (double(i) * v[size_t(i)] + double(q + 1 - i) * v[size_t(i) - 1]) /
          double(q);
    v.swap(next);
  }
  return v;
}

double to_unit_double(std::uint64_t bits) {
  return double(bits >> 11) * 0x1.0p-53;
}

// C-infinity bump on (-1, 1), peak value 1 at 0.
double bump(double x) {
  const double u = 1.0 - x * x;
  if (u <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / u);
}

FiberedFunction build_bspline(int order, const GridSpec& grid) {
  if (order < 0 || order > kMaxSplineOrder)
    throw ConfigError("bspline: order must be in [0, " +
                      std::to_string(kMaxSplineOrder) + "], got " +
                      std::to_string(order));
  FiberedFunction f(grid);
  const PeriodicFunction W = bspline_weight(order, grid);
  parallel_for(grid.fibers, [&](int i) {
    const double t = grid.point(i);
    auto row = f.fiber(i);
    double energy = 0.0;
    for (int k = -grid.radius; k <= grid.radius; ++k) {
      const Complex v = bspline_hat(order, t + double(k));
      row[size_t(k + grid.radius)] = v;
      energy += std::norm(v);
    }
    // Fold the truncated translates back in: rescale the fiber so its energy
    // matches the exact autocorrelation symbol. Keeps phases, makes the
    // diagonal bracket identities hold to roundoff at any radius.
    const double factor = std::sqrt(W[i].real() / energy);
    for (auto& v : row) v *= factor;
  });
  return f;
}

FiberedFunction build_gaussian(double sigma, const GridSpec& grid) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("gaussian: sigma must be positive and finite");
  FiberedFunction f(grid);
  const double c = kPi * kPi * sigma * sigma;
  parallel_for(grid.fibers, [&](int i) {
    const double t = grid.point(i);
    auto row = f.fiber(i);
    for (int k = -grid.radius; k <= grid.radius; ++k) {
      const double xi = t + double(k);
      row[size_t(k + grid.radius)] = Complex(std::exp(-c * xi * xi), 0.0);
    }
  });
  return f;
}

FiberedFunction build_bandlimited_random(std::uint64_t seed, double support,
                                         const GridSpec& grid) {
  if (!(support > 0.0) || !std::isfinite(support))
    throw ConfigError("bandlimited_random: support radius must be positive");
  if (support > double(grid.radius))
    throw ConfigError("bandlimited_random: support radius " +
                      std::to_string(support) +
                      " exceeds the grid radius " +
                      std::to_string(grid.radius));
  constexpr int kDegree = 6;
  std::mt19937_64 rng(seed);
  std::vector<Complex> coeff(size_t(kDegree) + 1);
  for (auto& c : coeff) {
    const double re = 2.0 * to_unit_double(rng()) - 1.0;
    const double im = 2.0 * to_unit_double(rng()) - 1.0;
    c = Complex(re, im);
  }
  // DC bias keeps the modulating polynomial away from 0 on most of the
  // support, so fiber Gram matrices stay comfortably full-rank.
  coeff[0] += Complex(2.0, 0.0);

  FiberedFunction f(grid);
  parallel_for(grid.fibers, [&](int i) {
    const double t = grid.point(i);
    auto row = f.fiber(i);
    for (int k = -grid.radius; k <= grid.radius; ++k) {
      const double xi = t + double(k);
      const double w = bump(xi / support);
      if (w == 0.0) {
        row[size_t(k + grid.radius)] = Complex{};
        continue;
      }
      Complex p{};
      for (int j = 0; j <= kDegree; ++j) {
        const double phase = kPi * double(j) * xi / support;
        p += coeff[size_t(j)] * Complex(std::cos(phase), std::sin(phase));
      }
      row[size_t(k + grid.radius)] = w * p;
    }
  });
  return f;
}

FiberedFunction build_indicator(const GridSpec& grid) {
  FiberedFunction f(grid);
  for (int i = 0; i < grid.fibers; ++i) f.at(i, 0) = Complex(1.0, 0.0);
  return f;
}

}  // namespace

GeneratorSpec GeneratorSpec::bspline(int order, std::string name) {
  GeneratorSpec s;
  s.kind = Kind::BSpline;
  s.order = order;
  s.name = std::move(name);
  return s;
}

GeneratorSpec GeneratorSpec::gaussian(double sigma, std::string name) {
  GeneratorSpec s;
  s.kind = Kind::Gaussian;
  s.sigma = sigma;
  s.name = std::move(name);
  return s;
}

GeneratorSpec GeneratorSpec::bandlimited_random(std::uint64_t seed,
                                                double support,
                                                std::string name) {
  GeneratorSpec s;
  s.kind = Kind::BandlimitedRandom;
  s.seed = seed;
  s.support = support;
  s.name = std::move(name);
  return s;
}

GeneratorSpec GeneratorSpec::indicator(std::string name) {
  GeneratorSpec s;
  s.kind = Kind::Indicator;
  s.name = std::move(name);
  return s;
}

GeneratorSpec GeneratorSpec::sampled(std::string path, std::string name) {
  GeneratorSpec s;
  s.kind = Kind::Sampled;
  s.path = std::move(path);
  s.name = std::move(name);
  return s;
}

std::vector<double> bspline_autocorrelation(int order) {
  if (order < 0 || order > kMaxSplineOrder)
    throw ConfigError("bspline_autocorrelation: order out of range");
  // a_j = integral B_m(x) B_m(x - j) dx = B_{2m+1}(m + 1 + j)
  const std::vector<double> v = bspline_integer_values(2 * order + 1);
  std::vector<double> a(size_t(order) + 1);
  for (int j = 0; j <= order; ++j) a[size_t(j)] = v[size_t(order + 1 + j)];
  return a;
}

PeriodicFunction bspline_weight(int order, const GridSpec& grid) {
  const std::vector<double> a = bspline_autocorrelation(order);
  PeriodicFunction W(grid);
  for (int i = 0; i < grid.fibers; ++i) {
    const double t = grid.point(i);
    double w = a[0];
    for (int j = 1; j <= order; ++j)
      w += 2.0 * a[size_t(j)] * std::cos(2.0 * kPi * double(j) * t);
    W[i] = Complex(w, 0.0);
  }
  return W;
}

FiberedFunction build_generator(const GeneratorSpec& spec,
                                const GridSpec& grid) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::BSpline:
      return build_bspline(spec.order, grid);
    case GeneratorSpec::Kind::Gaussian:
      return build_gaussian(spec.sigma, grid);
    case GeneratorSpec::Kind::BandlimitedRandom:
      return build_bandlimited_random(spec.seed, spec.support, grid);
    case GeneratorSpec::Kind::Indicator:
      return build_indicator(grid);
    case GeneratorSpec::Kind::Sampled:
      if (spec.path.empty())
        throw ConfigError("sampled generator: missing path");
      return io::load_spectrum_csv(spec.path, grid);
  }
  throw ConfigError("build_generator: unknown kind");
}

double periodization_tail_bound(const GeneratorSpec& spec,
                                const GridSpec& grid) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::BSpline: {
      if (spec.order < 0 || spec.order > kMaxSplineOrder)
        throw ConfigError("bspline: order out of range");
      // Largest per-fiber energy fraction that folding had to restore.
      const PeriodicFunction W = bspline_weight(spec.order, grid);
      double worst = 0.0;
      for (int i = 0; i < grid.fibers; ++i) {
        const double t = grid.point(i);
        double energy = 0.0;
        for (int k = -grid.radius; k <= grid.radius; ++k)
          energy += std::norm(bspline_hat(spec.order, t + double(k)));
        const double frac = 1.0 - energy / W[i].real();
        if (frac > worst) worst = frac;
      }
      return worst > 0.0 ? worst : 0.0;
    }
    case GeneratorSpec::Kind::Gaussian: {
      if (!(spec.sigma > 0.0)) throw ConfigError("gaussian: bad sigma");
      const double c = 2.0 * kPi * kPi * spec.sigma * spec.sigma;
      const double K = double(grid.radius);
      const double ratio = std::exp(-c * (2.0 * K + 1.0));
      return 2.0 * std::exp(-c * K * K) / (1.0 - ratio);
    }
    case GeneratorSpec::Kind::BandlimitedRandom:
      if (spec.support > double(grid.radius))
        throw ConfigError("bandlimited_random: support exceeds grid radius");
      return 0.0;
    case GeneratorSpec::Kind::Indicator:
    case GeneratorSpec::Kind::Sampled:
      return 0.0;
  }
  throw ConfigError("periodization_tail_bound: unknown kind");
}

Complex eval_trig_poly(const TrigPoly& p, double t) {
  Complex acc{};
  for (const auto& [k, gamma] : p) {
    const double phase = 2.0 * kPi * double(k) * t;
    acc += gamma * Complex(std::cos(phase), std::sin(phase));
  }
  return acc;
}

PeriodicFunction trig_poly_on_grid(const TrigPoly& p, const GridSpec& grid) {
  PeriodicFunction F(grid);
  for (int i = 0; i < grid.fibers; ++i) F[i] = eval_trig_poly(p, grid.point(i));
  return F;
}

int trig_poly_degree(const TrigPoly& p) {
  int deg = 0;
  for (const auto& kv : p) {
    const int k = kv.first < 0 ? -kv.first : kv.first;
    if (k > deg) deg = k;
  }
  return deg;
}

FiberedFunction synthesize(const ShiftCoeffs& coeffs,
                           const std::vector<FiberedFunction>& generators) {
  if (generators.empty())
    throw ConfigError("synthesize: empty generator set");
  if (coeffs.per_generator.size() != generators.size())
    throw ShapeError("synthesize: " +
                     std::to_string(coeffs.per_generator.size()) +
                     " coefficient polynomials for " +
                     std::to_string(generators.size()) + " generators");
  const GridSpec& grid = generators[0].grid();
  for (const auto& g : generators)
    require_same_grid(grid, g.grid(), "synthesize");
  for (const auto& p : coeffs.per_generator) {
    const int deg = trig_poly_degree(p);
    if (2 * deg >= grid.fibers)
      throw ConfigError("synthesize: coefficient degree " +
                        std::to_string(deg) + " needs more than " +
                        std::to_string(grid.fibers) + " fibers");
  }
  FiberedFunction out(grid);
  parallel_for(grid.fibers, [&](int i) {
    const double t = grid.point(i);
    auto dst = out.fiber(i);
    for (size_t j = 0; j < generators.size(); ++j) {
      const Complex Tj = eval_trig_poly(coeffs.per_generator[j], t);
      auto src = generators[j].fiber(i);
      for (size_t m = 0; m < dst.size(); ++m) dst[m] += Tj * src[m];
    }
  });
  return out;
}

}  // namespace sispace
