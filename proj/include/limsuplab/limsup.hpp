#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "limsuplab/dynamics.hpp"
#include "limsuplab/measure.hpp"
#include "limsuplab/netmeasure.hpp"

namespace limsuplab {

// Shrinking-ball experiment around a reference measure mu. Ball n has radius
// n^(-alpha); block k groups indices 2^(k-1) < n <= 2^k and rasterizes its
// balls at level floor(beta * k). Centers are either mu-distributed draws or
// an orbit of the chosen map pushed from a mu-distributed start.
struct LimsupConfig {
  double alpha = 2.0;
  double beta = 2.1;
  int k0 = 4;
  int K = 12;

  enum class Centers { random, orbit };
  Centers centers = Centers::random;
  MapSpec map = MapSpec::doubling_map();  // orbit mode only
  double orbit_p_one = 0.5;               // doubling orbits: digit bias

  // Verdict knob: block energies count as bounded when the late-half sup is
  // within bound_factor of the early-half sup.
  double bound_factor = 2.0;

  int depth_of(int k) const;
  // block k covers indices block_lo(k) < n <= block_hi(k)
  std::int64_t block_lo(int k) const;
  std::int64_t block_hi(int k) const;
  void validate() const;  // throws std::invalid_argument
};

// Ball centers and radii for one block, in orbit-index order.
struct BlockCenters {
  int k = 0;
  std::vector<Point> x;
  std::vector<double> r;
};

// One set of centers for all blocks k0..K. Random mode draws each center
// from mu with its own per-index stream; orbit mode walks the map once.
std::vector<BlockCenters> draw_centers(const TreeMeasure& mu,
                                       const LimsupConfig& cfg,
                                       std::uint64_t seed);

// Rasterized block cover U_k plus the running intersection over blocks.
struct LimsupRaster {
  int k = 0;
  int level = 0;
  CubeSet cover;    // U_k: cubes meeting some open ball of block k
  CubeSet running;  // U_{k0} cap ... cap U_k, kept at the finest level involved
};

// Rasterize every block: cover[j] holds U_{k0+j}; running[j] holds the union
// of covers up to that block. No clipping to the base cube, so covers near
// the boundary may stick out; they stay outer covers of the true balls.
std::vector<LimsupRaster> build_limsup(const TreeMeasure& mu,
                                       const LimsupConfig& cfg,
                                       const std::vector<BlockCenters>& centers);

// Block energy row: nu_k spreads weight multiplicity/N over the level-m_k
// cubes holding the block's centers, restricted to the running cover when a
// restriction set is supplied. Energies truncate pair resolution at m_k, so
// value = e1 (pairs separating above m_k) + e2 (level-m_k diagonal term).
struct BlockEnergy {
  int k = 0;
  int level = 0;
  double theta = 0.0;
  double value = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double c_k = 1.0;          // restriction renormalizer (1 when unrestricted)
  double kernel_bound = 0.0; // 2^(theta (1 + t1 m_k)), diagnostic only
  std::size_t centers_total = 0;
  std::size_t centers_dropped = 0;  // centers in mu-null level-m_k cubes
  bool support_in_balls = false;    // every kept cube inside its closed ball
};

// All block energies over a theta grid, with the decay fit used for the
// kernel diagnostic and sup/boundedness helpers.
struct EnergyExperiment {
  double t1 = 0.0;
  std::vector<BlockEnergy> rows;  // k-major, theta-minor
  std::vector<double> thetas;

  std::vector<double> series(double theta) const;  // energies by block
  double sup_energy(double theta) const;
  bool bounded(double theta, double factor) const;
};

EnergyExperiment block_energy_experiment(const TreeMeasure& mu,
                                         const LimsupConfig& cfg,
                                         const std::vector<double>& theta_grid,
                                         const std::vector<BlockCenters>& centers,
                                         const CubeSet* restriction = nullptr);

// Dimension bracket from the energy threshold: theta* is the largest grid
// theta whose block energies stay bounded for a majority of seeds, the lower
// bound is theta* times the sampled upper local dimension of mu, the upper
// bound is 1/alpha from the natural covering.
struct DimensionEstimate {
  double theta_star = 0.0;
  double dim_lower = 0.0;
  double dim_upper = 0.0;
  double udim = 0.0;
  std::vector<int> bounded_votes;  // per grid theta, count of bounded seeds
  std::vector<double> theta_grid;
};

DimensionEstimate dimension_threshold(const TreeMeasure& mu,
                                      const LimsupConfig& cfg,
                                      const std::vector<double>& theta_grid,
                                      const std::vector<std::uint64_t>& seeds);

// Intersect two independent limsup covers: V^i is the union of block covers
// of configuration i, W their intersection. Membership is checked on W; the
// scaling family pairs block resolution m_k with U^1_k intersected against
// the full second cover.
struct IntersectionReport {
  CubeSet intersection;
  bool empty = true;
  MembershipReport membership;
  double scaling_dim = 0.0;
  std::vector<std::pair<int, std::size_t>> family_counts;  // (m_k, |W_k|)
};

IntersectionReport intersection_experiment(const TreeMeasure& mu,
                                           const std::vector<LimsupConfig>& configs,
                                           const std::vector<std::uint64_t>& seeds,
                                           double eta, int L);

}  // namespace limsuplab
