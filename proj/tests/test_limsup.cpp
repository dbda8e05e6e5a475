#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "limsuplab/limsup.hpp"
#include "limsuplab/rng.hpp"

using namespace limsuplab;

namespace {

CubeId cube1(int level, std::int64_t c) { return CubeId::make(1, level, {c}); }

TreeMeasure uniform_mu(int depth) {
  return invariant_measure(MapSpec::doubling_map(), std::nullopt, depth);
}

LimsupConfig base_cfg(double alpha, double beta, int k0, int K) {
  LimsupConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.k0 = k0;
  cfg.K = K;
  return cfg;
}

// the eight odd/16 centers of block 4, one per level-4 cube
BlockCenters odd16_block(double r) {
  BlockCenters bc;
  bc.k = 4;
  for (int n = 9; n <= 16; ++n) {
    bc.x.push_back(Point((2.0 * (n - 9) + 1.0) / 16.0));
    bc.r.push_back(r);
  }
  return bc;
}

}  // namespace

TEST_CASE("config validation and block arithmetic") {
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 12);
  cfg.validate();
  CHECK(cfg.depth_of(4) == 8);
  CHECK(cfg.depth_of(10) == 21);
  CHECK(cfg.depth_of(12) == 25);
  CHECK(cfg.block_lo(3) == 4);
  CHECK(cfg.block_hi(3) == 8);

  CHECK_THROWS_AS(base_cfg(0.0, 2.1, 4, 12).validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_cfg(2.0, 2.0, 4, 12).validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_cfg(2.0, 2.1, 0, 12).validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_cfg(2.0, 2.1, 6, 5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_cfg(2.0, 2.1, 4, 23).validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_cfg(20.0, 25.0, 1, 3).validate(), std::invalid_argument);
  LimsupConfig bad = base_cfg(2.0, 2.1, 4, 12);
  bad.bound_factor = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  LimsupConfig orb = base_cfg(2.0, 2.1, 4, 12);
  orb.centers = LimsupConfig::Centers::orbit;
  orb.orbit_p_one = 1.0;
  CHECK_THROWS_AS(orb.validate(), std::invalid_argument);
}

TEST_CASE("single ball raster matches interval arithmetic") {
  TreeMeasure mu = uniform_mu(10);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 3, 3);
  BlockCenters bc;
  bc.k = 3;
  bc.x.push_back(Point(0.5));
  bc.r.push_back(0.04);  // n = 5, radius 1/25, level floor(2.1*3) = 6

  auto rasters = build_limsup(mu, cfg, {bc});
  REQUIRE(rasters.size() == 1);
  CHECK(rasters[0].level == 6);
  // (0.46, 0.54) against side-1/64 cubes: coords 29..34
  for (std::int64_t c = 29; c <= 34; ++c)
    CHECK(rasters[0].cover.contains_cube(cube1(6, c)));
  CHECK_FALSE(rasters[0].cover.intersects_cube(cube1(6, 28)));
  CHECK_FALSE(rasters[0].cover.intersects_cube(cube1(6, 35)));
  CHECK(rasters[0].running.cubes() == rasters[0].cover.cubes());
}

TEST_CASE("ball covering the whole base rasterizes to the base cube") {
  TreeMeasure mu = uniform_mu(8);
  LimsupConfig cfg = base_cfg(1.0, 2.1, 1, 1);
  BlockCenters bc;
  bc.k = 1;
  bc.x.push_back(Point(0.5));
  bc.r.push_back(0.5);

  auto rasters = build_limsup(mu, cfg, {bc});
  REQUIRE(rasters.size() == 1);
  REQUIRE(rasters[0].cover.size() == 1);
  CHECK(rasters[0].cover.cubes()[0] == mu.base());
}

TEST_CASE("rasters are outer covers and carry no spurious cubes") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 1.7, 4, 6);
  auto centers = draw_centers(mu, cfg, 7);
  auto rasters = build_limsup(mu, cfg, centers);
  REQUIRE(rasters.size() == centers.size());

  for (std::size_t b = 0; b < rasters.size(); ++b) {
    const BlockCenters& bc = centers[b];
    const CubeSet& cov = rasters[b].cover;
    for (std::size_t j = 0; j < bc.x.size(); ++j) {
      double x = bc.x[j].x[0], r = bc.r[j];
      for (double f : {-0.99, -0.5, 0.0, 0.5, 0.99})
        CHECK(cov.contains_point(mu.grid(), Point(x + f * r)));
    }
    for (const CubeId& q : cov.cubes()) {
      double lo = mu.grid().p[0] + std::ldexp(static_cast<double>(q.c[0]), -q.level);
      double hi = lo + cube_side(q.level);
      bool meets = false;
      for (std::size_t j = 0; j < bc.x.size() && !meets; ++j)
        meets = lo < bc.x[j].x[0] + bc.r[j] && hi > bc.x[j].x[0] - bc.r[j];
      CHECK(meets);
    }
  }
}

TEST_CASE("running intersections are monotone and idempotent") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 1.6, 4, 7);
  auto rasters = build_limsup(mu, cfg, draw_centers(mu, cfg, 5));

  CHECK(rasters[0].running.cubes() == rasters[0].cover.cubes());
  for (std::size_t j = 1; j < rasters.size(); ++j) {
    for (const CubeId& q : rasters[j].running.cubes()) {
      CHECK(rasters[j - 1].running.contains_cube(q));
      CHECK(rasters[j].cover.contains_cube(q));
    }
    CubeSet twice = rasters[j].running.intersect(rasters[j].running);
    CHECK(twice.cubes() == rasters[j].running.cubes());
  }
}

TEST_CASE("seeded draws and energies reproduce bit for bit") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 7);
  auto a = draw_centers(mu, cfg, 99);
  auto b = draw_centers(mu, cfg, 99);
  REQUIRE(a.size() == b.size());
  bool same_seed_equal = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].x.size(); ++j)
      same_seed_equal = same_seed_equal && a[i].x[j].x[0] == b[i].x[j].x[0] &&
                        a[i].r[j] == b[i].r[j];
  CHECK(same_seed_equal);

  auto c = draw_centers(mu, cfg, 100);
  bool other_seed_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].x.size(); ++j)
      other_seed_differs = other_seed_differs || a[i].x[j].x[0] != c[i].x[j].x[0];
  CHECK(other_seed_differs);

  std::vector<double> grid{0.4, 0.6};
  auto e1 = block_energy_experiment(mu, cfg, grid, a);
  auto e2 = block_energy_experiment(mu, cfg, grid, b);
  REQUIRE(e1.rows.size() == e2.rows.size());
  for (std::size_t i = 0; i < e1.rows.size(); ++i) {
    CHECK(e1.rows[i].value == e2.rows[i].value);
    CHECK(e1.rows[i].e2 == e2.rows[i].e2);
  }

  auto r1 = build_limsup(mu, cfg, a);
  auto r2 = build_limsup(mu, cfg, b);
  for (std::size_t i = 0; i < r1.size(); ++i)
    CHECK(r1[i].cover.cubes() == r2[i].cover.cubes());
}

TEST_CASE("block energy of hand-placed centers matches the tree oracle") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 2.0, 4, 4);  // level floor(2*4) = 8

  // centers at odd/16: splits live at levels 0,1,2 and the level-8 diagonal
  auto exp = block_energy_experiment(mu, cfg, {0.5}, {odd16_block(0.1)});
  REQUIRE(exp.rows.size() == 1);
  const BlockEnergy& row = exp.rows[0];
  double e1 = 0.5 + 0.25 * std::exp2(0.5) + 0.125 * 2.0;
  CHECK(row.level == 8);
  CHECK(row.e2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(row.e1 == doctest::Approx(e1).epsilon(1e-12));
  CHECK(row.value == doctest::Approx(e1 + 2.0).epsilon(1e-12));
  CHECK(row.c_k == 1.0);
  CHECK(row.centers_total == 8);
  CHECK(row.centers_dropped == 0);
  CHECK(row.support_in_balls);  // side 1/256 cubes inside radius-0.1 balls
  CHECK(exp.t1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(row.kernel_bound == doctest::Approx(std::exp2(0.5 * 9.0)).epsilon(1e-9));

  // radius below the cube side: cubes poke out of their balls
  auto tight = block_energy_experiment(mu, cfg, {0.5}, {odd16_block(1e-3)});
  CHECK_FALSE(tight.rows[0].support_in_balls);
}

TEST_CASE("centers in mass-null cubes are dropped and carry no weight") {
  // uniform mass on [0, 1/2), stored to depth 8 with no deep backend
  std::vector<std::vector<double>> levels(9);
  levels[0] = {1.0};
  for (int n = 1; n <= 8; ++n) {
    levels[static_cast<std::size_t>(n)].assign(std::size_t{1} << n, 0.0);
    for (std::int64_t c = 0; c < (std::int64_t{1} << (n - 1)); ++c)
      levels[static_cast<std::size_t>(n)][static_cast<std::size_t>(c)] =
          std::exp2(-(n - 1));
  }
  TreeMeasure mu = TreeMeasure::from_dense_levels(GridOffset::origin(1), levels);

  LimsupConfig cfg = base_cfg(1.5, 2.0, 4, 4);
  auto exp = block_energy_experiment(mu, cfg, {0.5}, {odd16_block(0.1)});
  const BlockEnergy& row = exp.rows[0];
  CHECK(row.centers_total == 8);
  CHECK(row.centers_dropped == 4);
  double e2 = 0.25 * std::exp2(3.5);
  CHECK(row.e2 == doctest::Approx(e2).epsilon(1e-12));
  CHECK(row.value ==
        doctest::Approx(0.5 + 0.25 * std::exp2(0.5) + e2).epsilon(1e-12));
}

TEST_CASE("restriction renormalizes and empty restriction blanks the block") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 2.0, 4, 4);

  CubeSet left = CubeSet::of(1, 1, {cube1(1, 0)});
  auto exp = block_energy_experiment(mu, cfg, {0.5}, {odd16_block(0.1)}, &left);
  const BlockEnergy& row = exp.rows[0];
  CHECK(row.c_k == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(row.e2 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(row.value ==
        doctest::Approx(0.5 * std::exp2(0.5) + 0.5 + 4.0).epsilon(1e-12));

  CubeSet nowhere = CubeSet::of(1, 8, {cube1(8, 0)});
  auto blank = block_energy_experiment(mu, cfg, {0.5}, {odd16_block(0.1)}, &nowhere);
  CHECK(blank.rows[0].c_k == 0.0);
  CHECK(blank.rows[0].value == 0.0);
  CHECK(blank.rows[0].centers_total == 8);
}

TEST_CASE("tiny theta drives every block energy to one") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 1.6, 4, 6);
  auto exp = block_energy_experiment(mu, cfg, {1e-9}, draw_centers(mu, cfg, 3));
  for (const BlockEnergy& row : exp.rows)
    CHECK(row.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("uniform closed form bounds the theta=0.45 sup and 0.6 grows") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 12);
  std::vector<double> grid{0.45, 0.6};
  double bound = 2.0 * (0.5 / (1.0 - std::exp2(0.45 - 1.0)) + 1.0);

  for (std::uint64_t seed : {1ull, 2ull}) {
    auto exp = block_energy_experiment(mu, cfg, grid, draw_centers(mu, cfg, seed));
    CHECK(exp.sup_energy(0.45) <= bound);
    CHECK(exp.bounded(0.45, cfg.bound_factor));

    std::vector<double> s = exp.series(0.6);
    REQUIRE(s.size() == 9);  // blocks 4..12
    double growth = std::pow(s[8] / s[4], 0.25);  // k = 8 .. 12
    CHECK(growth >= 1.1);
    CHECK_FALSE(exp.bounded(0.6, cfg.bound_factor));
  }
}

TEST_CASE("dimension threshold splits at one half for the uniform measure") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 12);
  std::vector<double> grid{0.3, 0.4, 0.5, 0.6, 0.7};
  auto est = dimension_threshold(mu, cfg, grid, {11, 22, 33});

  CHECK(est.theta_star == 0.5);
  CHECK(est.udim == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(est.dim_lower == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(est.dim_upper == 0.5);
  REQUIRE(est.bounded_votes.size() == 5);
  CHECK(est.bounded_votes[0] == 3);
  CHECK(est.bounded_votes[1] == 3);
  CHECK(est.bounded_votes[2] == 3);
  CHECK(est.bounded_votes[3] == 0);
  CHECK(est.bounded_votes[4] == 0);
}

TEST_CASE("doubling orbits reuse the symbolic expansion verbatim") {
  TreeMeasure mu = invariant_measure(MapSpec::doubling_map(),
                                     GibbsSpec::bernoulli(0.5, 0.5), 12);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 8);
  cfg.centers = LimsupConfig::Centers::orbit;
  auto centers = draw_centers(mu, cfg, 42);

  SymbolicPoint sp = SymbolicPoint::random_weighted(42, 0.5);
  for (const BlockCenters& bc : centers) {
    std::int64_t n = cfg.block_lo(bc.k);
    for (std::size_t j = 0; j < bc.x.size(); ++j) {
      ++n;
      CHECK(bc.x[j].x[0] == sp.shifted(static_cast<std::uint64_t>(n)).value());
    }
  }

  auto exp = block_energy_experiment(mu, cfg, {0.5}, centers);
  CHECK(exp.bounded(0.5, cfg.bound_factor));
  CHECK(exp.sup_energy(0.5) < 10.0);
}

TEST_CASE("quadratic orbits walk the map from a sampled start") {
  TreeMeasure mu = invariant_measure(MapSpec::quadratic_map(2.0), std::nullopt, 14);
  LimsupConfig cfg = base_cfg(2.0, 2.1, 4, 7);
  cfg.centers = LimsupConfig::Centers::orbit;
  cfg.map = MapSpec::quadratic_map(2.0);
  auto centers = draw_centers(mu, cfg, 9);

  rng::Stream rs(9, "orbit-start");
  auto track = orbit(cfg.map, mu.sample(rs), 128);
  for (const BlockCenters& bc : centers) {
    std::int64_t n = cfg.block_lo(bc.k);
    for (std::size_t j = 0; j < bc.x.size(); ++j) {
      ++n;
      CHECK(bc.x[j].x[0] == track[static_cast<std::size_t>(n)].x[0]);
    }
  }

  auto exp = block_energy_experiment(mu, cfg, {0.5}, centers);
  for (const BlockEnergy& row : exp.rows) {
    CHECK(std::isfinite(row.value));
    CHECK(row.value > 0.0);
    CHECK(row.centers_dropped == 0);
  }
}

TEST_CASE("intersecting a construction with itself returns it unchanged") {
  TreeMeasure mu = uniform_mu(12);
  LimsupConfig cfg = base_cfg(1.5, 1.6, 4, 8);
  auto rep = intersection_experiment(mu, {cfg, cfg}, {101, 101}, 0.3, 3);

  auto centers = draw_centers(mu, cfg, 101);
  auto rasters = build_limsup(mu, cfg, centers);
  CubeSet v = rasters.front().cover;
  for (std::size_t j = 1; j < rasters.size(); ++j) v = v.unite(rasters[j].cover);

  CHECK_FALSE(rep.empty);
  CHECK(rep.intersection.cubes() == v.cubes());
}

TEST_CASE("independent intersections keep membership and scaling in range") {
  TreeMeasure mu = uniform_mu(13);
  LimsupConfig cfg = base_cfg(1.5, 1.6, 4, 8);
  auto rep = intersection_experiment(mu, {cfg, cfg}, {101, 202}, 0.3, 3);

  CHECK_FALSE(rep.empty);
  CHECK(rep.membership.min_ratio >= 0.1);
  CHECK(rep.membership.passes);
  REQUIRE(rep.family_counts.size() == 5);
  for (const auto& [lvl, count] : rep.family_counts) {
    CHECK(lvl >= 6);
    CHECK(count > 0);
  }
  CHECK(rep.scaling_dim >= 0.5);
  CHECK(rep.scaling_dim <= 0.85);

  CHECK_THROWS_AS(intersection_experiment(mu, {cfg}, {1}, 0.3, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(intersection_experiment(mu, {cfg, cfg}, {1}, 0.3, 3),
                  std::invalid_argument);
}

TEST_CASE("series and verdicts reject malformed queries") {
  EnergyExperiment empty;
  empty.thetas = {0.5};
  CHECK_THROWS_AS(empty.bounded(0.5, 2.0), std::logic_error);

  TreeMeasure mu = uniform_mu(10);
  LimsupConfig cfg = base_cfg(1.5, 1.6, 4, 5);
  auto exp = block_energy_experiment(mu, cfg, {0.5}, draw_centers(mu, cfg, 1));
  CHECK_THROWS_AS(exp.series(0.7), std::invalid_argument);
  CHECK_THROWS_AS(block_energy_experiment(mu, cfg, {}, draw_centers(mu, cfg, 1)),
                  std::invalid_argument);
}

TEST_CASE("wide radii guarantee cube-inside-ball support") {
  TreeMeasure mu = uniform_mu(13);
  LimsupConfig cfg = base_cfg(1.0, 3.0, 4, 4);  // side 2^-12 vs radii >= 1/16
  auto exp = block_energy_experiment(mu, cfg, {0.5}, draw_centers(mu, cfg, 17));
  REQUIRE(exp.rows.size() == 1);
  CHECK(exp.rows[0].support_in_balls);
  CHECK(exp.rows[0].centers_dropped == 0);
}
