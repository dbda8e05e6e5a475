#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/measure.hpp"
#include "limsuplab/rng.hpp"

namespace limsuplab {

// An expanding interval map. Domain is [0,1) except for the quadratic
// family, which lives on [-1,1].
struct MapSpec {
  enum class Kind { doubling, tent, quadratic, piecewise_linear };

  struct Branch {
    double lo = 0.0, hi = 1.0;      // half-open cell [lo, hi)
    double slope = 2.0, offset = 0.0;  // T(x) = slope*x + offset on the cell
  };

  Kind kind = Kind::doubling;
  double a = 2.0;                // quadratic parameter, T_a(x) = 1 - a x^2
  std::vector<Branch> branches;  // piecewise_linear only

  static MapSpec doubling_map();
  static MapSpec tent_map();
  static MapSpec quadratic_map(double a);
  static MapSpec piecewise(std::vector<Branch> branches);

  void validate() const;  // parameter ranges, branch partition, expansion
  double apply(double x) const;
  double domain_lo() const { return kind == Kind::quadratic ? -1.0 : 0.0; }
  double domain_hi() const { return 1.0; }
};

// Explicit-weight Gibbs data for the binary full shift: either independent
// digit weights or a two-state stochastic matrix. Log-weights are the
// potential; row normalization makes its pressure zero.
struct GibbsSpec {
  bool markov = false;
  std::array<double, 2> weights{0.5, 0.5};          // Bernoulli digit weights
  std::array<std::array<double, 2>, 2> matrix{};    // Markov transitions

  static GibbsSpec bernoulli(double w0, double w1);
  static GibbsSpec markov_chain(const std::array<std::array<double, 2>, 2>& rows);

  void validate() const;               // positive entries, rows sum to one
  std::array<double, 2> stationary() const;  // pi with pi P = pi
  double entropy() const;              // bits per symbol
};

// A binary expansion with O(1) random access: either drawn bit-by-bit from a
// counter-keyed stream or a repeating explicit pattern. Shifting is exact at
// any distance, which is what doubling-map orbits need.
class SymbolicPoint {
 public:
  static SymbolicPoint random(std::uint64_t seed);
  static SymbolicPoint random_weighted(std::uint64_t seed, double p_one);
  static SymbolicPoint periodic(std::vector<int> pattern);

  int bit(std::uint64_t i) const;
  SymbolicPoint shifted(std::uint64_t n) const;
  // first `level` bits as a cube coordinate on the unit interval
  std::int64_t cube_coord(int level) const;
  // the point's value truncated to 53 bits; truncation (never rounding up)
  // keeps cube_of at any level <= 53 in exact agreement with cube_coord
  double value() const;

 private:
  bool seeded_ = false;
  std::uint64_t seed_ = 0;
  double p_one_ = 0.5;
  std::uint64_t offset_ = 0;
  std::vector<int> pattern_;
};

// orbit including the start: x0, T(x0), ..., T^n(x0)
std::vector<Point> orbit(const MapSpec& map, const Point& x0, std::size_t n);
std::vector<Point> orbit(const MapSpec& map, const SymbolicPoint& x0, std::size_t n);

// The invariant measure as a tree of the given depth. Exact for doubling
// with explicit weights, the a = 2 quadratic (arcsine law), and
// Lebesgue-preserving tent / piecewise-linear maps; other quadratic
// parameters fall back to a Birkhoff orbit histogram and set *empirical.
TreeMeasure invariant_measure(const MapSpec& map,
                              const std::optional<GibbsSpec>& gibbs, int depth,
                              bool* empirical = nullptr,
                              std::size_t orbit_len = 1u << 20,
                              std::uint64_t seed = 0xd1cebea7ull);

// Fit of the per-level maximum cube mass to c * 2^(-t n) over the window:
// t1 is the least-squares slope, c1 the tightest constant making the bound
// hold on the window, and holds says the fit explains every level within a
// factor of two.
struct DecayFit {
  double t1 = 0.0;
  double c1 = 0.0;
  bool holds = false;
  std::vector<double> max_mass;  // per level in the window
};

DecayFit measure_decay_check(const TreeMeasure& mu, int level_lo, int level_hi);

// Empirical |<f(T^n x) g(x)> - <f><g>| for cube indicators along one long
// orbit. Doubling orbits are symbolic with digit law read off the tree
// (first-order conditional frequencies, exact for product and two-state
// trees); the other maps iterate in floating point from a seeded start.
std::vector<std::pair<int, double>> correlation_decay(
    const MapSpec& map, const TreeMeasure& mu, const CubeId& f_cube,
    const CubeId& g_cube, int n_max, std::size_t orbit_len,
    std::uint64_t seed = 0xc0441a7eull);

// Finite-horizon check of the two parameter-exclusion inequalities for the
// quadratic family: |T_a^n(0)| >= e^(-gamma n) and the derivative along the
// critical orbit |(T_a^n)'(T_a(0))| >= 1.9^n, the latter in log space.
struct BenedicksCarlesonCheck {
  double a = 0.0;
  double gamma = 0.0;
  int horizon = 0;
  std::vector<double> orbit_abs;    // |T^n(0)| for n = 1..N
  std::vector<double> log2_deriv;   // log2 |(T^n)'(T(0))| for n = 1..N
  bool holds = false;
  int first_failure = -1;
};

BenedicksCarlesonCheck bc_check(double a, double gamma, int N);

}  // namespace limsuplab
