#include "limsuplab/limsup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "limsuplab/parallel.hpp"
#include "limsuplab/potential.hpp"
#include "limsuplab/rng.hpp"
#include "limsuplab/spectrum.hpp"

namespace limsuplab {

int LimsupConfig::depth_of(int k) const {
  return static_cast<int>(std::floor(beta * k));
}

std::int64_t LimsupConfig::block_lo(int k) const {
  return std::int64_t{1} << (k - 1);
}

std::int64_t LimsupConfig::block_hi(int k) const { return std::int64_t{1} << k; }

void LimsupConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("limsup: alpha must be positive");
  if (!(beta > alpha))
    throw std::invalid_argument("limsup: beta must exceed alpha");
  if (k0 < 1 || K < k0) throw std::invalid_argument("limsup: need 1 <= k0 <= K");
  if (K > 22) throw std::invalid_argument("limsup: block range too large");
  if (depth_of(K) > GridOffset{}.max_level)
    throw std::invalid_argument("limsup: depth overflow, beta*K beyond max level");
  if (!(bound_factor >= 1.0))
    throw std::invalid_argument("limsup: bound_factor must be >= 1");
  if (centers == Centers::orbit && map.kind == MapSpec::Kind::doubling &&
      !(orbit_p_one > 0.0 && orbit_p_one < 1.0))
    throw std::invalid_argument("limsup: orbit_p_one must lie in (0,1)");
}

std::vector<BlockCenters> draw_centers(const TreeMeasure& mu,
                                       const LimsupConfig& cfg,
                                       std::uint64_t seed) {
  cfg.validate();
  if (!mu.valid()) throw std::invalid_argument("draw_centers: empty measure");
  if (mu.dim() != 1)
    throw std::invalid_argument("draw_centers: one-dimensional measures only");

  std::vector<BlockCenters> out;
  out.reserve(static_cast<std::size_t>(cfg.K - cfg.k0 + 1));

  std::vector<Point> track;  // orbit mode, float maps: track[n] = T^n x0
  std::optional<SymbolicPoint> sym;
  if (cfg.centers == LimsupConfig::Centers::orbit) {
    if (cfg.map.kind == MapSpec::Kind::doubling) {
      sym = SymbolicPoint::random_weighted(seed, cfg.orbit_p_one);
    } else {
      rng::Stream rs(seed, "orbit-start");
      Point x0 = mu.sample(rs);
      track = orbit(cfg.map, x0, static_cast<std::size_t>(cfg.block_hi(cfg.K)));
    }
  }

  for (int k = cfg.k0; k <= cfg.K; ++k) {
    BlockCenters bc;
    bc.k = k;
    for (std::int64_t n = cfg.block_lo(k) + 1; n <= cfg.block_hi(k); ++n) {
      Point x;
      if (cfg.centers == LimsupConfig::Centers::random) {
        rng::Stream rs(seed, "block-center", static_cast<std::uint64_t>(k),
                       static_cast<std::uint64_t>(n));
        x = mu.sample(rs);
      } else if (sym) {
        x = Point(sym->shifted(static_cast<std::uint64_t>(n)).value());
      } else {
        x = track[static_cast<std::size_t>(n)];
      }
      bc.x.push_back(x);
      bc.r.push_back(std::pow(static_cast<double>(n), -cfg.alpha));
    }
    out.push_back(std::move(bc));
  }
  return out;
}

namespace {

// Level-m cubes meeting the open interval (x-r, x+r) on the offset grid.
// No clipping to the base: the raster is an outer cover of the true ball.
void raster_ball(const GridOffset& grid, double x, double r, int m,
                 std::vector<CubeId>& out) {
  double scale = std::ldexp(1.0, m);
  double t = (x - r - grid.p[0]) * scale;
  double u = (x + r - grid.p[0]) * scale;
  auto c_min = static_cast<std::int64_t>(std::floor(t));
  auto c_max = static_cast<std::int64_t>(std::ceil(u)) - 1;
  if (c_max - c_min >= (std::int64_t{1} << 24))
    throw std::length_error("raster_ball: cover too large at this depth");
  for (std::int64_t c = c_min; c <= c_max; ++c)
    out.push_back(CubeId::make(1, m, {c}));
}

}  // namespace

std::vector<LimsupRaster> build_limsup(const TreeMeasure& mu,
                                       const LimsupConfig& cfg,
                                       const std::vector<BlockCenters>& centers) {
  cfg.validate();
  if (mu.dim() != 1)
    throw std::invalid_argument("build_limsup: one-dimensional measures only");
  if (cfg.depth_of(cfg.K) > mu.grid().max_level)
    throw std::invalid_argument("build_limsup: depth overflow on this grid");
  std::vector<LimsupRaster> out(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) {
    const BlockCenters& bc = centers[i];
    int m = cfg.depth_of(bc.k);
    std::vector<CubeId> cubes;
    for (std::size_t j = 0; j < bc.x.size(); ++j)
      raster_ball(mu.grid(), bc.x[j].x[0], bc.r[j], m, cubes);
    out[i].k = bc.k;
    out[i].level = m;
    out[i].cover = CubeSet::of(1, m, std::move(cubes));
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].running = i == 0 ? out[i].cover : out[i - 1].running.intersect(out[i].cover);
  return out;
}

std::vector<double> EnergyExperiment::series(double theta) const {
  std::size_t ti = thetas.size();
  for (std::size_t i = 0; i < thetas.size(); ++i)
    if (thetas[i] == theta) ti = i;
  if (ti == thetas.size())
    throw std::invalid_argument("energy series: theta not on the grid");
  std::vector<double> s;
  for (std::size_t i = ti; i < rows.size(); i += thetas.size())
    s.push_back(rows[i].value);
  return s;
}

double EnergyExperiment::sup_energy(double theta) const {
  double sup = 0.0;
  for (double v : series(theta)) sup = std::max(sup, v);
  return sup;
}

bool EnergyExperiment::bounded(double theta, double factor) const {
  if (rows.empty()) throw std::logic_error("energy experiment is empty");
  int k_lo = rows.front().k, k_hi = rows.back().k;
  int mid = (k_lo + k_hi) / 2;
  std::vector<double> s = series(theta);
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double& slot = k_lo + static_cast<int>(i) <= mid ? early : late;
    slot = std::max(slot, s[i]);
  }
  return late <= factor * early;
}

EnergyExperiment block_energy_experiment(const TreeMeasure& mu,
                                         const LimsupConfig& cfg,
                                         const std::vector<double>& theta_grid,
                                         const std::vector<BlockCenters>& centers,
                                         const CubeSet* restriction) {
  cfg.validate();
  if (theta_grid.empty())
    throw std::invalid_argument("block energies: empty theta grid");
  if (!mu.valid() || mu.dim() != 1)
    throw std::invalid_argument("block energies: need a 1-d measure");
  if (cfg.depth_of(cfg.K) > mu.grid().max_level)
    throw std::invalid_argument("block energies: depth overflow on this grid");

  EnergyExperiment exp;
  exp.thetas = theta_grid;
  int fit_lo = std::max(mu.top_level() + 1, (mu.top_level() + mu.depth()) / 2);
  exp.t1 = measure_decay_check(mu, fit_lo, mu.depth()).t1;

  std::size_t T = theta_grid.size();
  exp.rows.resize(centers.size() * T);
  parallel_for(centers.size(), [&](std::size_t bi) {
    const BlockCenters& bc = centers[bi];
    int m = cfg.depth_of(bc.k);

    std::map<CubeId, double> counts;
    std::size_t dropped = 0;
    bool inside = true;
    for (std::size_t j = 0; j < bc.x.size(); ++j) {
      CubeId D = cube_of(mu.grid(), bc.x[j], m);
      if (!(mu.mass(D) > 0.0)) {
        ++dropped;  // centers in mass-null cubes carry no block weight
        continue;
      }
      counts[D] += 1.0;
      double lo = mu.grid().p[0] + std::ldexp(static_cast<double>(D.c[0]), -m);
      if (lo < bc.x[j].x[0] - bc.r[j] ||
          lo + std::ldexp(1.0, -m) > bc.x[j].x[0] + bc.r[j])
        inside = false;
    }
    std::size_t kept = bc.x.size() - dropped;

    auto blank_rows = [&] {
      for (std::size_t ti = 0; ti < T; ++ti) {
        BlockEnergy& row = exp.rows[bi * T + ti];
        row.k = bc.k;
        row.level = m;
        row.theta = theta_grid[ti];
        row.c_k = 0.0;
        row.centers_total = bc.x.size();
        row.centers_dropped = dropped;
      }
    };
    if (kept == 0) {
      blank_rows();
      return;
    }

    std::vector<std::pair<CubeId, double>> leaves;
    leaves.reserve(counts.size());
    for (const auto& [q, c] : counts)
      leaves.emplace_back(q, c / static_cast<double>(kept));
    TreeMeasure nu = TreeMeasure::from_weighted_cubes(mu.grid(), mu.base(), leaves);

    double c_k = 1.0;
    if (restriction) {
      TreeMeasure cut = nu.restrict_to(*restriction, false);
      if (!cut.valid() || !(cut.total() > 0.0)) {
        blank_rows();
        return;
      }
      c_k = 1.0 / cut.total();
      nu = cut.normalized();
    }

    for (std::size_t ti = 0; ti < T; ++ti) {
      EnergyParams params;
      params.theta = theta_grid[ti];
      params.truncation_level = m;
      EnergyReport rep = energy_tree(mu, nu, params);
      double e2 = 0.0;
      for (const auto& [lvl, v] : rep.per_level)
        if (lvl == m) e2 = v;
      BlockEnergy& row = exp.rows[bi * T + ti];
      row.k = bc.k;
      row.level = m;
      row.theta = theta_grid[ti];
      row.value = rep.value;
      row.e1 = rep.value - e2;
      row.e2 = e2;
      row.c_k = c_k;
      row.kernel_bound = std::exp2(params.theta * (1.0 + exp.t1 * m));
      row.centers_total = bc.x.size();
      row.centers_dropped = dropped;
      row.support_in_balls = inside;
    }
  });
  return exp;
}

DimensionEstimate dimension_threshold(const TreeMeasure& mu,
                                      const LimsupConfig& cfg,
                                      const std::vector<double>& theta_grid,
                                      const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  if (theta_grid.empty() || seeds.empty())
    throw std::invalid_argument("dimension threshold: empty grid or seed list");

  DimensionEstimate est;
  est.theta_grid = theta_grid;
  est.bounded_votes.assign(theta_grid.size(), 0);
  for (std::uint64_t seed : seeds) {
    auto centers = draw_centers(mu, cfg, seed);
    EnergyExperiment exp = block_energy_experiment(mu, cfg, theta_grid, centers);
    for (std::size_t ti = 0; ti < theta_grid.size(); ++ti)
      if (exp.bounded(theta_grid[ti], cfg.bound_factor))
        ++est.bounded_votes[ti];
  }

  est.theta_star = 0.0;
  for (std::size_t ti = 0; ti < theta_grid.size(); ++ti)
    if (2 * static_cast<std::size_t>(est.bounded_votes[ti]) > seeds.size())
      est.theta_star = std::max(est.theta_star, theta_grid[ti]);

  int lo = std::max(mu.top_level() + 1, (mu.top_level() + mu.depth()) / 2);
  est.udim = dim_bounds_of_measure(mu, 800, lo, mu.depth()).upper;
  est.dim_lower = est.theta_star * est.udim;
  est.dim_upper = 1.0 / cfg.alpha;
  return est;
}

IntersectionReport intersection_experiment(const TreeMeasure& mu,
                                           const std::vector<LimsupConfig>& configs,
                                           const std::vector<std::uint64_t>& seeds,
                                           double eta, int L) {
  if (configs.size() < 2)
    throw std::invalid_argument("intersection: need at least two constructions");
  if (seeds.size() != configs.size())
    throw std::invalid_argument("intersection: one seed per construction");

  std::vector<LimsupRaster> first;  // per-block covers of the first set
  std::vector<CubeSet> unions;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto centers = draw_centers(mu, configs[i], seeds[i]);
    auto rasters = build_limsup(mu, configs[i], centers);
    CubeSet v = rasters.front().cover;
    for (std::size_t j = 1; j < rasters.size(); ++j) v = v.unite(rasters[j].cover);
    unions.push_back(std::move(v));
    if (i == 0) first = std::move(rasters);
  }

  IntersectionReport rep;
  rep.intersection = unions[0];
  for (std::size_t i = 1; i < unions.size(); ++i)
    rep.intersection = rep.intersection.intersect(unions[i]);
  rep.empty = rep.intersection.empty();

  if (!rep.empty) {
    rep.membership = class_membership(mu, rep.intersection, eta, L);
  } else {
    rep.membership.eta = eta;
    rep.membership.check_level = L;
  }

  std::vector<std::pair<int, CubeSet>> family;
  std::size_t usable = 0;
  for (const LimsupRaster& blk : first) {
    CubeSet w = blk.cover;
    for (std::size_t i = 1; i < unions.size(); ++i) w = w.intersect(unions[i]);
    if (!w.empty()) ++usable;
    rep.family_counts.emplace_back(blk.level, w.size());
    family.emplace_back(blk.level, std::move(w));
  }
  if (usable >= 3) {
    std::vector<double> s_grid;
    for (int i = 1; i <= 20; ++i) s_grid.push_back(0.05 * i);
    rep.scaling_dim = dimension_from_scaling(family, s_grid);
  }
  return rep;
}

}  // namespace limsuplab
