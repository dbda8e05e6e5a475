#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "limsuplab/measure.hpp"
#include "limsuplab/spectrum.hpp"
#include "limsuplab/rng.hpp"
#include "oracles.hpp"

using namespace limsuplab;

namespace {
const GridOffset g1 = GridOffset::origin(1);

TreeMeasure uniform_tree(int depth) {
  std::vector<std::vector<double>> lv(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n)
    lv[static_cast<std::size_t>(n)]
        .assign(std::size_t{1} << n, std::ldexp(1.0, -n));
  return TreeMeasure::from_dense_levels(g1, lv);
}

TreeMeasure arcsine_tree(int depth) {
  GridOffset g = GridOffset::origin(1);
  g.p[0] = -1.0;
  auto cdf = [](double x) {
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return (std::asin(x) + std::asin(1.0)) / (2.0 * std::asin(1.0));
  };
  return TreeMeasure::from_cdf(g, -1.0, 1.0, cdf, depth);
}

std::vector<double> grid_05(double hi) {
  std::vector<double> s;
  for (int i = 0; static_cast<double>(i) / 20.0 <= hi + 1e-12; ++i)
    s.push_back(static_cast<double>(i) / 20.0);
  return s;
}

std::vector<double> grid_01(double hi) {
  std::vector<double> s;
  for (int i = 0; static_cast<double>(i) / 100.0 <= hi + 1e-12; ++i)
    s.push_back(static_cast<double>(i) / 100.0);
  return s;
}

const double kEntropy03 = 0.3 * std::log2(1.0 / 0.3) + 0.7 * std::log2(1.0 / 0.7);

// members may canonicalize to coarser cubes; count the level cells they cover
std::int64_t leaf_count(const CubeSet& S, int level) {
  std::int64_t total = 0;
  for (const CubeId& q : S.cubes())
    total += std::int64_t{1} << (q.dim * (level - q.level));
  return total;
}

}  // namespace

TEST_CASE("uniform band counts are all-or-nothing") {
  TreeMeasure mu = uniform_tree(12);
  for (int n : {4, 9, 12}) {
    BandCount bc = band_counts(mu, 1.0, 0.05, n);
    CHECK(bc.n_plus == (std::int64_t{1} << n));
    CHECK(bc.n_minus == 0);
    CHECK(bc.band == (std::int64_t{1} << n));
    // at s = 1.05 the lower threshold is exactly the cube mass and counting
    // is inclusive, so the band dies
    BandCount above = band_counts(mu, 1.05, 0.05, n);
    CHECK(above.n_minus == (std::int64_t{1} << n));
    CHECK(above.band == 0);
  }
  CHECK_THROWS_AS(band_counts(mu, 1.0, 0.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(band_counts(mu, 1.0, 0.1, 13), std::invalid_argument);
}

TEST_CASE("uniform spectrum: g(1) = 1 exactly and the threshold trace walks down to 1") {
  TreeMeasure mu = uniform_tree(12);
  SpectrumEstimate est = g_spectrum(mu, grid_05(1.5), {0.2, 0.1, 0.05}, 4, 12);
  // g(1.0) at every epsilon is exactly 1: the band holds all 2^n cubes
  std::size_t i_one = 20;
  REQUIRE(est.s_grid[i_one] == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t ei = 0; ei < 3; ++ei)
    CHECK(est.g_per_epsilon[ei][i_one] == doctest::Approx(1.0).epsilon(1e-12));
  // the sup of {t : g >= t - eps} sits one grid step below 1 + eps: at
  // t = 1 + eps the lower threshold difference rounds to exactly 1 and the
  // inclusive count empties the band
  CHECK(est.threshold_per_epsilon[0] == doctest::Approx(1.15).epsilon(1e-12));
  CHECK(est.threshold_per_epsilon[1] == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(est.threshold_per_epsilon[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.threshold == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s_of_mu(est) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("product tree bands equal the exact binomial enumeration") {
  TreeMeasure mu = oracles::product_tree(0.7, 0.3, 22);
  for (int n : {8, 15, 22}) {
    for (double s : {0.5, 0.8813, 1.0, 1.2}) {
      for (double eps : {0.2, 0.05}) {
        BandCount bc = band_counts(mu, s, eps, n);
        double dn = static_cast<double>(n);
        std::int64_t plus = oracles::binom_count_at_least(
            0.7, 0.3, n, std::exp2(-dn * (s + eps)));
        std::int64_t minus = oracles::binom_count_at_least(
            0.7, 0.3, n, std::exp2(-dn * (s - eps)));
        CHECK(bc.n_plus == plus);
        CHECK(bc.n_minus == minus);
        CHECK(bc.band == plus - minus);
      }
    }
  }
}

TEST_CASE("product tree threshold lands near the entropy dimension") {
  TreeMeasure mu = oracles::product_tree(0.7, 0.3, 22);
  SpectrumEstimate est = g_spectrum(mu, grid_01(1.5), {0.2, 0.1, 0.05}, 8, 22);
  // trace must be defined at every epsilon here and nonincreasing
  for (double v : est.threshold_per_epsilon) CHECK(!std::isnan(v));
  CHECK(est.threshold_per_epsilon[0] >= est.threshold_per_epsilon[1]);
  CHECK(est.threshold_per_epsilon[1] >= est.threshold_per_epsilon[2]);
  CHECK(s_of_mu(est) == doctest::Approx(est.threshold).epsilon(1e-15));
  CHECK(std::abs(est.threshold - kEntropy03) <= 0.05);
}

TEST_CASE("arcsine spectrum: full-measure exponent near 1, edge band near 0") {
  TreeMeasure mu = arcsine_tree(20);
  SpectrumEstimate est = g_spectrum(mu, grid_05(1.5), {0.2, 0.1, 0.05}, 10, 20);
  std::size_t i_one = 20, i_half = 10;
  CHECK(std::abs(est.g_per_epsilon[2][i_one] - 1.0) <= 0.15);
  // at eps = 0.1 the band near 1/2 holds exactly the two endpoint cubes; at
  // eps = 0.05 their exponents 1/2 + O(1/n) have not entered yet
  double edge = est.g_per_epsilon[1][i_half];
  CHECK(edge >= 0.0);
  CHECK(edge <= 0.15);
  CHECK(est.g_per_epsilon[2][i_half] == SpectrumEstimate::kNoBand);
  CHECK(std::abs(est.threshold - 1.0) <= 0.12);
}

TEST_CASE("local dimension: exact on uniform, 1/2 at the arcsine edge, entropy on digits") {
  TreeMeasure mu = uniform_tree(20);
  LocalDimension ld = local_dimension(mu, Point(1.0 / 3.0), 8, 20);
  CHECK(ld.defined);
  CHECK(ld.slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ld.residual <= 1e-9);

  TreeMeasure arc = arcsine_tree(20);
  LocalDimension edge = local_dimension(arc, Point(1.0 - std::ldexp(1.0, -21)), 8, 18);
  CHECK(edge.defined);
  CHECK(std::abs(edge.slope - 0.5) <= 0.05);

  TreeMeasure ber = oracles::product_tree(0.7, 0.3, 20);
  LocalDimension zero = local_dimension(ber, Point(0.0), 4, 20);
  CHECK(zero.defined);
  CHECK(zero.slope == doctest::Approx(std::log2(1.0 / 0.7)).epsilon(1e-9));
  CHECK(zero.residual <= 1e-9);
}

TEST_CASE("local dimension is undefined off the support") {
  TreeMeasure mu = uniform_tree(8);
  CubeSet left = CubeSet::of(1, 8, {CubeId::make(1, 1, {0})});
  TreeMeasure half = mu.restrict_to(left, true);
  LocalDimension ld = local_dimension(half, Point(0.75), 2, 8);
  CHECK(!ld.defined);
}

TEST_CASE("dim bounds: uniform collapses to (1,1)") {
  TreeMeasure mu = uniform_tree(14);
  DimBounds db = dim_bounds_of_measure(mu, 400, 4, 12);
  CHECK(db.undefined_count == 0);
  CHECK(db.lower == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(db.upper == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(db.median == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(db.slopes.size() == 400);
}

TEST_CASE("dim bounds: arcsine concentrates at 1") {
  TreeMeasure mu = arcsine_tree(20);
  DimBounds db = dim_bounds_of_measure(mu, 2000, 12, 20);
  CHECK(db.undefined_count == 0);
  CHECK(std::abs(db.lower - 1.0) <= 0.05);
  CHECK(std::abs(db.upper - 1.0) <= 0.05);
}

TEST_CASE("dim bounds: digit measure matches the law-of-large-numbers oracle") {
  TreeMeasure mu = oracles::product_tree(0.7, 0.3, 22);
  const std::size_t m = 4000;
  DimBounds db = dim_bounds_of_measure(mu, m, 8, 22);
  CHECK(db.undefined_count == 0);
  std::vector<double> ref =
      oracles::binom_slope_samples(0.7, 0.3, 22, 8, 22, m, 0xfeedbeef);
  auto pct = [&](const std::vector<double>& v, double p) {
    return v[static_cast<std::size_t>(p * static_cast<double>(v.size() - 1))];
  };
  CHECK(std::abs(db.lower - pct(ref, 0.05)) <= 0.04);
  CHECK(std::abs(db.upper - pct(ref, 0.95)) <= 0.04);
  CHECK(std::abs(db.median - pct(ref, 0.5)) <= 0.03);
  // the typical sample sits at the entropy dimension even though the
  // percentile spread is wide at any feasible depth
  CHECK(std::abs(db.median - kEntropy03) <= 0.05);
}

TEST_CASE("small cube set: uniform thresholds are sharp and inclusive") {
  TreeMeasure mu = uniform_tree(10);
  MassSubset none = small_cube_set(mu, 10, 1.2);
  CHECK(none.cubes.empty());
  CHECK(none.mass == 0.0);
  MassSubset all = small_cube_set(mu, 10, 0.8);
  CHECK(leaf_count(all.cubes, 10) == 1024);
  CHECK(all.mass == doctest::Approx(1.0).epsilon(1e-12));
  // equality is kept: 2^-10 <= 2^-10
  MassSubset border = small_cube_set(mu, 10, 1.0);
  CHECK(leaf_count(border.cubes, 10) == 1024);
}

TEST_CASE("small cube set mass equals the binomial tail") {
  TreeMeasure mu = oracles::product_tree(0.7, 0.3, 16);
  double t0 = 0.9;
  MassSubset as = small_cube_set(mu, 16, t0);
  double threshold = std::exp2(-16.0 * t0);
  double want = oracles::binom_mass_at_most(0.7, 0.3, 16, threshold);
  CHECK(as.mass == doctest::Approx(want).epsilon(1e-12));
  std::int64_t count = 0;
  for (int j = 0; j <= 16; ++j) {
    double mass = std::pow(0.3, j) * std::pow(0.7, 16 - j);
    if (mass <= threshold) count += oracles::binom_coeff(16, j);
  }
  CHECK(leaf_count(as.cubes, 16) == count);
}

TEST_CASE("regular point set: uniform all-or-nothing") {
  TreeMeasure mu = uniform_tree(10);
  MassSubset full = regular_point_set(mu, 4, 0.5, 10);
  CHECK(leaf_count(full.cubes, 10) == 1024);
  CHECK(full.mass == doctest::Approx(1.0).epsilon(1e-12));
  MassSubset none = regular_point_set(mu, 4, 1.2, 10);
  CHECK(none.cubes.empty());
  CHECK(none.mass == 0.0);
}

TEST_CASE("regular point set: arcsine drops the endpoint neighborhoods") {
  TreeMeasure mu = arcsine_tree(12);
  MassSubset reg = regular_point_set(mu, 8, 0.8, 12);
  CHECK(reg.mass > 0.9);
  CHECK(reg.mass < 1.0);
  // the leaf cubes at the two ends must be excluded
  const LevelNodes& lv = mu.level(12);
  CHECK(!reg.cubes.contains_cube(CubeId::make(1, 12, {0})));
  CHECK(!reg.cubes.contains_cube(
      CubeId::make(1, 12, {static_cast<std::int64_t>(lv.count()) - 1})));
  double direct = 0.0;
  for (const CubeId& q : reg.cubes.cubes()) direct += mu.mass(q);
  CHECK(reg.mass == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("sparse sequence: audit, growth, and the trivial case") {
  std::vector<int> one = sparse_sequence(0.9, 0.1, 1.6, 1, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 7);

  std::vector<int> seq = sparse_sequence(0.9, 0.1, 1.6, 6, 7);
  REQUIRE(seq.size() == 6);
  double pad = std::log2(6.0 / (1.0 - std::exp2(-0.1)));
  for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
    CHECK(seq[k + 1] > seq[k]);
    double a = std::floor(1.6 * seq[k]);
    double b = std::floor(1.6 * seq[k + 1]);
    CHECK(0.1 * b > a * 0.9 + pad);
    // minimality: one level earlier must violate the gap inequality
    double b1 = std::floor(1.6 * (seq[k + 1] - 1));
    CHECK(!(0.1 * b1 > a * 0.9 + pad));
  }
  // the gap ratio approaches t0/eps
  CHECK(seq[5] > 5 * seq[4]);
}
