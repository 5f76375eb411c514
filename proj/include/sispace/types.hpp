#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sispace {

using Complex = std::complex<double>;

// Library-wide default thresholds. zero_tol decides when a fiber weight
// counts as degenerate, rel_tol is the generic relative comparison slack.
inline constexpr double kDefaultZeroTol = 1e-12;
inline constexpr double kDefaultRelTol = 1e-8;

// Thrown for malformed or out-of-range configuration (grid sizes, generator
// parameters, config files). Carries a human-readable, input-anchored message.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when two objects that must share a grid or a length do not.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a value violates a mathematical precondition (e.g. a weight
// that is significantly negative).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown for filesystem-level failures (unreadable file, failed rename).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sampling grid for the fiber picture: fiber points t_i = i/M for
// 0 <= i < M, and integer translates k with |k| <= K per fiber.
struct GridSpec {
  int fibers = 0;   // M
  int radius = 0;   // K

  int translates() const { return 2 * radius + 1; }
  double point(int i) const { return double(i) / double(fibers); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Validates M >= 2, K >= 1.
GridSpec make_grid(int fibers, int radius);

// A function on the fiber points: one complex value per t_i.
class PeriodicFunction {
 public:
  PeriodicFunction() = default;
  explicit PeriodicFunction(const GridSpec& grid)
      : grid_(grid), values_(size_t(grid.fibers)) {}

  static PeriodicFunction constant(const GridSpec& grid, Complex c) {
    PeriodicFunction F(grid);
    for (auto& v : F.values_) v = c;
    return F;
  }

  const GridSpec& grid() const { return grid_; }
  int size() const { return int(values_.size()); }

  Complex& operator[](int i) { return values_[size_t(i)]; }
  const Complex& operator[](int i) const { return values_[size_t(i)]; }

  std::span<Complex> values() { return values_; }
  std::span<const Complex> values() const { return values_; }

 private:
  GridSpec grid_;
  std::vector<Complex> values_;
};

// Spectral samples arranged fiber by fiber: value(i, k) = f_hat(t_i + k).
// Storage is row-major in i with k ascending from -K to K inside a row; all
// reductions in the library walk this layout in index order, which is what
// makes results reproducible across runs and thread counts.
class FiberedFunction {
 public:
  FiberedFunction() = default;
  explicit FiberedFunction(const GridSpec& grid)
      : grid_(grid), values_(size_t(grid.fibers) * size_t(grid.translates())) {}

  const GridSpec& grid() const { return grid_; }
  int fibers() const { return grid_.fibers; }
  int radius() const { return grid_.radius; }

  // k ranges over [-radius, radius].
  Complex& at(int i, int k) { return values_[index(i, k)]; }
  const Complex& at(int i, int k) const { return values_[index(i, k)]; }

  std::span<Complex> fiber(int i) {
    return {values_.data() + size_t(i) * size_t(grid_.translates()),
            size_t(grid_.translates())};
  }
  std::span<const Complex> fiber(int i) const {
    return {values_.data() + size_t(i) * size_t(grid_.translates()),
            size_t(grid_.translates())};
  }

  std::span<Complex> raw() { return values_; }
  std::span<const Complex> raw() const { return values_; }

 private:
  size_t index(int i, int k) const {
    return size_t(i) * size_t(grid_.translates()) + size_t(k + grid_.radius);
  }

  GridSpec grid_;
  std::vector<Complex> values_;
};

// Per-fiber flag set; records where an operation declined to divide.
struct FiberMask {
  std::vector<std::uint8_t> flagged;

  explicit FiberMask(int fibers = 0) : flagged(size_t(fibers), 0) {}

  bool operator[](int i) const { return flagged[size_t(i)] != 0; }
  void set(int i) { flagged[size_t(i)] = 1; }

  int count() const {
    int n = 0;
    for (auto f : flagged) n += (f != 0);
    return n;
  }
  double fraction() const {
    return flagged.empty() ? 0.0 : double(count()) / double(flagged.size());
  }
  bool any() const { return count() > 0; }
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

}  // namespace sispace
