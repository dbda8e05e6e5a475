#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/measure.hpp"

namespace limsuplab {

// Coarse counting of level-n cubes by mass band. Counting is inclusive:
// n_at(r) = #{D at level n : mass(D) >= 2^(-n r)}.
struct BandCount {
  std::int64_t n_plus = 0;   // threshold exponent s + epsilon
  std::int64_t n_minus = 0;  // threshold exponent s - epsilon
  std::int64_t band = 0;     // n_plus - n_minus
};

BandCount band_counts(const TreeMeasure& mu, double s, double epsilon, int n);

// Growth-rate spectrum over a grid: for each (s, epsilon) the estimate is
//   g = max over levels n in [level_lo, level_hi] of log2(band) / n,
// with -inf marking an empty band at every level. The headline g[s] and the
// threshold value use the smallest epsilon at which anything is defined.
struct SpectrumEstimate {
  static constexpr double kNoBand = -std::numeric_limits<double>::infinity();

  std::vector<double> s_grid;
  std::vector<double> epsilon_grid;  // sorted decreasing
  int level_lo = 0;
  int level_hi = 0;

  struct BandRow {
    double s = 0.0;
    double epsilon = 0.0;
    int level = 0;
    BandCount counts;
  };
  std::vector<BandRow> bands;  // s-major, then epsilon, then level

  std::vector<std::vector<double>> g_per_epsilon;  // [epsilon][s]
  std::vector<double> g;                           // [s], finest defined epsilon

  // sup{t in s_grid : g(t, eps) >= t - eps}, NaN when no t qualifies;
  // the sequence is nonincreasing as epsilon shrinks
  std::vector<double> threshold_per_epsilon;
  double threshold = std::numeric_limits<double>::quiet_NaN();
};

SpectrumEstimate g_spectrum(const TreeMeasure& mu, std::vector<double> s_grid,
                            std::vector<double> epsilon_grid, int level_lo,
                            int level_hi);

// the extrapolated size threshold of the estimate (its `threshold` field,
// recomputed from the stored spectra)
double s_of_mu(const SpectrumEstimate& spec);

// Pointwise scaling: least-squares slope of log mass(D_n(x)) against log of
// the cube side over the level window. Undefined when some window level has
// no mass at x.
struct LocalDimension {
  Point point{};
  double slope = 0.0;
  double residual = 0.0;  // rms fit residual, in log2-mass units
  bool defined = false;
};

LocalDimension local_dimension(const TreeMeasure& mu, const Point& x,
                               int level_lo, int level_hi);

// Sampled bounds: draw points from mu, fit each one's window slope, report
// the 5th / 95th percentile spread plus the whole sorted sample.
struct DimBounds {
  double lower = 0.0;
  double upper = 0.0;
  double median = 0.0;
  std::vector<double> slopes;  // sorted
  std::size_t undefined_count = 0;
};

DimBounds dim_bounds_of_measure(const TreeMeasure& mu, std::size_t samples,
                                int level_lo, int level_hi,
                                std::uint64_t seed = 0x51a75eedull);

// A subset of a level (or of the leaves) selected by a mass rule, together
// with its mu-mass. Only stored cubes with positive mass are listed; mass-null
// cubes never contribute to the reported mass or to any covering cost.
struct MassSubset {
  CubeSet cubes;
  double mass = 0.0;
};

// cubes at level n with mass(D) <= 2^(-n t0)
MassSubset small_cube_set(const TreeMeasure& mu, int n, double t0);

// leaf-level cubes whose every ancestor level k in [n_start, depth] has
// ball-proxy mass (the cube plus its adjacent same-level neighbors, a block
// of width 3*2^-k per axis) < (3*2^-k)^t
MassSubset regular_point_set(const TreeMeasure& mu, int n_start, double t,
                             int depth);

// greedy level sequence n_1 = n_min < n_2 < ... with
//   (1/6) 2^(-floor(beta n_k) t0)  >  2^(-eps floor(beta n_{k+1})) / (1 - 2^-eps)
// between consecutive terms; the defining inequality is re-checked on every
// returned pair
std::vector<int> sparse_sequence(double t0, double epsilon, double beta,
                                 std::size_t count, int n_min);

}  // namespace limsuplab
