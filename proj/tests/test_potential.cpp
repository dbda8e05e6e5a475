#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "limsuplab/measure.hpp"
#include "limsuplab/potential.hpp"
#include "limsuplab/rng.hpp"
#include "oracles.hpp"

using namespace limsuplab;

namespace {
const GridOffset g1 = GridOffset::origin(1);
const CubeId unit = CubeId::make(1, 0, {0});

TreeMeasure uniform_tree(int depth) {
  std::vector<std::vector<double>> lv(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n)
    lv[static_cast<std::size_t>(n)]
        .assign(std::size_t{1} << n, std::ldexp(1.0, -n));
  return TreeMeasure::from_dense_levels(g1, lv);
}

AtomicMeasure vdc_atoms(std::size_t n) {
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back(Point(rng::van_der_corput(i)));
  return AtomicMeasure::make(g1, pts, {});
}

TreeMeasure random_tree(rng::Stream rs, int depth) {
  std::vector<std::pair<CubeId, double>> leaves;
  for (std::int64_t k = 0; k < (std::int64_t{1} << depth); ++k)
    leaves.emplace_back(CubeId::make(1, depth, {k}), 0.05 + rs.next_double());
  return TreeMeasure::from_weighted_cubes(g1, unit, leaves).normalized();
}

AtomicMeasure random_atoms(rng::Stream rs, std::size_t n, bool weighted) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(Point(rs.next_double()));
    if (weighted) w.push_back(0.1 + rs.next_double());
  }
  return AtomicMeasure::make(g1, pts, w);
}
}  // namespace

TEST_CASE("potential_at single atom is one kernel term") {
  TreeMeasure u = uniform_tree(8);
  AtomicMeasure one = AtomicMeasure::make(g1, {Point(0.3)}, {1.0});
  PotentialValue v = potential_at(u, one, 0.5, Point(0.1));
  // Q(0.1, 0.3) = [0, 0.5), mass 1/2
  CHECK_FALSE(v.infinite);
  CHECK(v.value == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("potential_at atom exactly at x is infinite") {
  TreeMeasure u = uniform_tree(6);
  AtomicMeasure one = AtomicMeasure::make(g1, {Point(0.3)}, {1.0});
  CHECK(potential_at(u, one, 0.5, Point(0.3)).infinite);
}

TEST_CASE("potential_at of low-discrepancy cloud approaches the closed form") {
  TreeMeasure u = uniform_tree(24);
  AtomicMeasure cloud = vdc_atoms(10000);
  PotentialValue v = potential_at(u, cloud, 0.5, Point(1.0 / 3.0));
  CHECK_FALSE(v.infinite);
  CHECK(std::abs(v.value - oracles::uniform_energy_limit(0.5)) < 0.02);
}

TEST_CASE("potential_at matches the brute-force sum") {
  rng::Stream rs(31, "pot-brute");
  TreeMeasure mu = random_tree(rs.fork("tree"), 6);
  AtomicMeasure nu = random_atoms(rs.fork("atoms"), 100, true);
  for (double theta : {0.2, 0.5, 0.9}) {
    Point x(rs.next_double());
    PotentialValue fast = potential_at(mu, nu, theta, x);
    oracles::BruteValue slow = oracles::brute_potential(mu, nu, theta, x);
    CHECK(fast.infinite == slow.infinite);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-12));
  }
}

TEST_CASE("energy_atomic two-atom hand value") {
  TreeMeasure u = uniform_tree(8);
  AtomicMeasure two = AtomicMeasure::make(g1, {Point(0.1), Point(0.3)}, {0.5, 0.5});
  EnergyParams p;
  p.theta = 0.5;
  EnergyReport rep = energy_atomic(u, two, p);
  CHECK_FALSE(rep.infinite);
  // 2 * (1/4) * (1/2)^{-1/2}
  CHECK(rep.value == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(rep.diagonal_excluded_weight == doctest::Approx(0.5));
}

TEST_CASE("energy_atomic of the dyadic grid cloud") {
  TreeMeasure u = uniform_tree(24);
  AtomicMeasure cloud = vdc_atoms(std::size_t{1} << 14);
  EnergyParams p;
  p.theta = 0.5;
  EnergyReport rep = energy_atomic(u, cloud, p);
  CHECK_FALSE(rep.infinite);
  // exactly the internal part of the discrete geometric sum at depth 14
  CHECK(rep.value ==
        doctest::Approx(oracles::uniform_tree_energy(0.5, 14) -
                        std::pow(2.0, 14 * (0.5 - 1.0)))
            .epsilon(1e-9));
  CHECK(std::abs(rep.value - oracles::uniform_energy_limit(0.5)) < 0.02);
}

TEST_CASE("energy_atomic equals brute force on random instances") {
  rng::Stream rs(77, "energy-brute");
  for (int trial = 0; trial < 8; ++trial) {
    TreeMeasure mu = random_tree(rs.fork("tree", static_cast<std::uint64_t>(trial)), 5);
    AtomicMeasure nu = random_atoms(rs.fork("atoms", static_cast<std::uint64_t>(trial)),
                                    trial % 2 ? 512 : 65, trial % 2 == 0);
    EnergyParams p;
    p.theta = 0.15 + 0.1 * trial;
    EnergyReport fast = energy_atomic(mu, nu, p);
    oracles::BruteValue slow = oracles::brute_energy(mu, nu, p.theta);
    REQUIRE_FALSE(fast.infinite);
    CHECK(fast.value == doctest::Approx(slow.value).epsilon(1e-9));
    double contrib_sum = 0.0;
    for (const auto& [lvl, c] : fast.per_level) contrib_sum += c;
    CHECK(fast.value == doctest::Approx(contrib_sum).epsilon(1e-9));
  }
}

TEST_CASE("energy_atomic flags a mu-null cube with atom pairs") {
  // mu lives on the left half, atoms on the right half
  TreeMeasure mu = TreeMeasure::from_weighted_cubes(
      g1, unit, {{CubeId::make(1, 2, {0}), 0.6}, {CubeId::make(1, 2, {1}), 0.4}});
  AtomicMeasure nu = AtomicMeasure::make(g1, {Point(0.6), Point(0.7)}, {});
  EnergyParams p;
  p.theta = 0.5;
  CHECK(energy_atomic(mu, nu, p).infinite);
}

TEST_CASE("energy_tree uniform matches the discrete geometric series") {
  TreeMeasure u = uniform_tree(24);
  EnergyParams p;
  p.theta = 0.5;
  EnergyReport rep = energy_tree(u, u, p);
  CHECK_FALSE(rep.infinite);
  CHECK(rep.value == doctest::Approx(oracles::uniform_tree_energy(0.5, 24)).epsilon(1e-12));
  CHECK(std::abs(rep.value - oracles::uniform_energy_limit(0.5)) < 1e-3);
  // leaf convention share
  double leaf_share = std::pow(2.0, 24 * (0.5 - 1.0)) / rep.value;
  CHECK(rep.extrapolated_fraction == doctest::Approx(leaf_share).epsilon(1e-9));
  REQUIRE(rep.per_level.size() == 25);
  CHECK(rep.per_level.front().first == 0);
  CHECK(rep.per_level.front().second == doctest::Approx(0.5));
}

TEST_CASE("energy_tree at theta = 1 grows linearly with depth") {
  TreeMeasure a = uniform_tree(10);
  TreeMeasure b = uniform_tree(20);
  EnergyParams p;
  p.theta = 1.0;
  double va = energy_tree(a, a, p).value;
  double vb = energy_tree(b, b, p).value;
  CHECK(va == doctest::Approx(oracles::uniform_tree_energy(1.0, 10)).epsilon(1e-12));
  CHECK(vb - va == doctest::Approx(5.0).epsilon(1e-9));  // half per level
}

TEST_CASE("energy_tree single-loaded-leaf value") {
  // nu concentrated on one leaf of mu
  TreeMeasure mu = uniform_tree(4);
  std::vector<std::pair<CubeId, double>> leaves = {{CubeId::make(1, 4, {3}), 1.0}};
  TreeMeasure nu = TreeMeasure::from_weighted_cubes(g1, unit, leaves);
  EnergyParams p;
  p.theta = 0.5;
  EnergyReport rep = energy_tree(mu, nu, p);
  // all pairs inside the leaf: nu(L)^2 * mu(L)^{-theta}
  CHECK(rep.value == doctest::Approx(1.0 * std::pow(1.0 / 16.0, -0.5)).epsilon(1e-12));
  CHECK(rep.extrapolated_fraction == doctest::Approx(1.0));
}

TEST_CASE("energy_tree respects the bound displays on slices") {
  rng::Stream rs(41, "energy-bounds");
  TreeMeasure mu = random_tree(rs.fork("tree"), 6);
  EnergyParams p;
  p.theta = 0.4;
  for (std::int64_t k = 0; k < 4; ++k) {
    CubeId D = CubeId::make(1, 2, {k});
    TreeMeasure nuD = mu.slice(D);
    double mD = mu.mass(D);
    double v = energy_tree(mu, nuD, p).value;
    CHECK(v >= std::pow(mD, 2.0 - p.theta) - 1e-9);
    CHECK(v <= std::pow(mD, 2.0 - p.theta) / (1.0 - p.theta) + 1e-9);
  }
}

TEST_CASE("energy_truncated cap behaviour") {
  TreeMeasure u = uniform_tree(12);
  EnergyParams p;
  p.theta = 0.5;
  EnergyParams capped = p;
  capped.kernel_cap = 1e300;
  CHECK(energy_truncated(u, u, capped).value ==
        doctest::Approx(energy_tree(u, u, p).value).epsilon(1e-12));

  capped.kernel_cap = 1.0;  // probability measure: every kernel clips to 1
  CHECK(energy_truncated(u, u, capped).value == doctest::Approx(1.0).epsilon(1e-12));

  // cap = 2^{k theta}: levels up to k keep exact kernels, deeper ones clip
  int k = 5;
  capped.kernel_cap = std::pow(2.0, k * p.theta);
  double expect = 0.0;
  for (int n = 0; n < 12; ++n) {
    double kern = std::min(std::pow(2.0, n * p.theta), *capped.kernel_cap);
    expect += kern * std::pow(2.0, -n - 1.0);
  }
  expect += std::min(std::pow(2.0, 12 * p.theta), *capped.kernel_cap) *
            std::pow(2.0, -12.0);
  CHECK(energy_truncated(u, u, capped).value == doctest::Approx(expect).epsilon(1e-12));

  EnergyParams missing;
  CHECK_THROWS(energy_truncated(u, u, missing));
}

TEST_CASE("energy_truncated is monotone in the cap and converges") {
  rng::Stream rs(13, "cap-monotone");
  TreeMeasure mu = random_tree(rs.fork("tree"), 6);
  EnergyParams p;
  p.theta = 0.6;
  double full = energy_tree(mu, mu, p).value;
  double prev = 0.0;
  for (double cap : {1.0, 4.0, 16.0, 256.0, 1e9}) {
    EnergyParams q = p;
    q.kernel_cap = cap;
    double v = energy_truncated(mu, mu, q).value;
    CHECK(v >= prev - 1e-12);
    CHECK(v <= full + 1e-12);
    prev = v;
  }
  CHECK(prev == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("atomic truncation level matches the capped-cube convention") {
  rng::Stream rs(19, "trunc-atoms");
  TreeMeasure mu = random_tree(rs.fork("tree"), 8);
  AtomicMeasure nu = random_atoms(rs.fork("atoms"), 64, false);
  EnergyParams p;
  p.theta = 0.5;
  p.truncation_level = 3;
  EnergyReport rep = energy_atomic(mu, nu, p);
  // oracle: pairs resolved at Q capped to level 3
  double expect = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (i == j) continue;
      CubeId q = common_cube_capped(g1, nu.point(i), nu.point(j), 3);
      expect += nu.weight(i) * nu.weight(j) * std::pow(mu.mass(q), -0.5);
    }
  CHECK(rep.value == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("tail bound edge cases") {
  TreeMeasure u = uniform_tree(10);
  AtomicMeasure nu = vdc_atoms(256);
  // m below the smallest kernel value: every pair is in the tail set
  TailBoundResult r = tail_bound_check(u, nu, 0.5, 0.3, 0.5);
  EnergyParams pe;
  pe.theta = 0.3;
  CHECK(r.lhs == doctest::Approx(energy_atomic(u, nu, pe).value).epsilon(1e-9));
  CHECK(r.holds);
  // m above the largest kernel value: empty tail set
  r = tail_bound_check(u, nu, 0.5, 0.3, 1e12);
  CHECK(r.lhs == 0.0);
  CHECK(r.holds);
}

TEST_CASE("tail bound holds across a parameter grid") {
  rng::Stream rs(23, "tail-grid");
  TreeMeasure u = uniform_tree(12);
  int trials = 0;
  for (int rep = 0; rep < 40; ++rep) {
    AtomicMeasure nu =
        random_atoms(rs.fork("atoms", static_cast<std::uint64_t>(rep)), 48, rep % 2);
    for (double theta : {0.3, 0.5, 0.8}) {
      for (double eta_frac : {0.3, 0.7}) {
        double eta = eta_frac * theta;
        for (double m : {0.7, 2.0, 16.0, 400.0}) {
          TailBoundResult r = tail_bound_check(u, nu, theta, eta, m);
          CHECK(r.holds);
          CHECK(r.lhs ==
                doctest::Approx(oracles::brute_tail_lhs(u, nu, theta, eta, m))
                    .epsilon(1e-9));
          ++trials;
        }
      }
    }
  }
  CHECK(trials == 40 * 3 * 2 * 4);
}

TEST_CASE("frostman reweight of a symmetric cloud stays near uniform") {
  TreeMeasure u = uniform_tree(12);
  AtomicMeasure cloud = vdc_atoms(256);
  AtomicMeasure rw = frostman_reweight(u, cloud, 0.5, unit);
  CHECK(rw.total() == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < rw.size(); ++i) {
    pts.push_back(rw.point(i));
    w.push_back(rw.weight(i));
  }
  TreeMeasure emp = TreeMeasure::from_samples(g1, unit, pts, w, 4);
  CHECK(weak_distance(emp, uniform_tree(4), 4) < 0.02);
}

TEST_CASE("frostman reweight single atom") {
  TreeMeasure u = uniform_tree(8);
  AtomicMeasure one = AtomicMeasure::make(g1, {Point(0.42)}, {3.0});
  AtomicMeasure rw = frostman_reweight(u, one, 0.5, unit);
  REQUIRE(rw.size() == 1);
  CHECK(rw.weight(0) == doctest::Approx(1.0));
}

TEST_CASE("frostman reweight satisfies the per-cube mass bound") {
  rng::Stream rs(59, "frostman-audit");
  for (int trial = 0; trial < 6; ++trial) {
    TreeMeasure mu = random_tree(rs.fork("tree", static_cast<std::uint64_t>(trial)), 6);
    AtomicMeasure nu =
        random_atoms(rs.fork("atoms", static_cast<std::uint64_t>(trial)), 128, trial % 2);
    double theta = 0.3 + 0.1 * trial;
    AtomicMeasure rw = frostman_reweight(mu, nu, theta, unit);

    // independent recomputation of the potentials
    std::vector<double> K(nu.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      double k = 0.0;
      for (std::size_t j = 0; j < nu.size(); ++j) {
        if (j == i) continue;
        k += nu.weight(j) *
             std::pow(oracles::pair_mass(mu, nu.point(i), nu.point(j)), -theta);
      }
      k += nu.weight(i) *
           std::pow(mu.mass(cube_of(g1, nu.point(i), mu.depth())), -theta);
      K[i] = k;
      z += nu.weight(i) / k;
    }
    // library weights agree with the definition
    for (std::size_t i = 0; i < rw.size(); ++i) {
      // rw is sorted the same way as nu (same point order)
      CHECK(rw.weight(i) ==
            doctest::Approx(nu.weight(i) / K[i] / z).epsilon(1e-9));
    }
    // Jensen audit: nu'(A) <= mu(A)^theta / z for every stored cube
    for (int n = 0; n <= mu.depth(); ++n) {
      for (std::int64_t c = 0; c < (std::int64_t{1} << n); ++c) {
        CubeId A = CubeId::make(1, n, {c});
        double lhs = rw.mass_in(A);
        double bound = std::pow(mu.mass(A), theta) / z;
        CHECK(lhs <= bound + 1e-9);
      }
    }
  }
}

TEST_CASE("self potential profile obeys all three displays") {
  rng::Stream rs(67, "displays");
  for (int trial = 0; trial < 200; ++trial) {
    TreeMeasure mu = random_tree(rs.fork("tree", static_cast<std::uint64_t>(trial)), 5);
    for (int t = 1; t <= 9; ++t) {
      double theta = 0.1 * t;
      if (theta >= 1.0) continue;
      for (int lvl = 0; lvl <= 2; ++lvl) {
        for (std::int64_t c = 0; c < (std::int64_t{1} << lvl); ++c) {
          CubeId D = CubeId::make(1, lvl, {c});
          double mD = mu.mass(D);
          if (!(mD > 0.0)) continue;
          PotentialProfile prof = self_potential_profile(mu, D, theta);
          double I = 0.0, inv = 0.0;
          for (std::size_t i = 0; i < prof.u.size(); ++i) {
            double u = prof.u[i];
            CHECK(u >= std::pow(mD, 1.0 - theta) - 1e-9);
            CHECK(u <= std::pow(mD, 1.0 - theta) / (1.0 - theta) + 1e-9);
            I += prof.leaf_mass[i] * u;
            inv += prof.leaf_mass[i] / u;
          }
          CHECK(I >= std::pow(mD, 2.0 - theta) - 1e-9);
          CHECK(I <= std::pow(mD, 2.0 - theta) / (1.0 - theta) + 1e-9);
          CHECK(inv >= (1.0 - theta) * std::pow(mD, theta) - 1e-9);
          CHECK(inv <= std::pow(mD, theta) + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("profile-based energy agrees with the pair recursion") {
  rng::Stream rs(71, "profile-vs-tree");
  TreeMeasure mu = random_tree(rs.fork("tree"), 6);
  EnergyParams p;
  p.theta = 0.45;
  for (std::int64_t k = 0; k < 2; ++k) {
    CubeId D = CubeId::make(1, 1, {k});
    PotentialProfile prof = self_potential_profile(mu, D, p.theta);
    double I = 0.0;
    for (std::size_t i = 0; i < prof.u.size(); ++i)
      I += prof.leaf_mass[i] * prof.u[i];
    CHECK(I == doctest::Approx(energy_tree(mu, mu.slice(D), p).value).epsilon(1e-9));
  }
}
