#pragma once

#include <utility>
#include <vector>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/measure.hpp"

namespace limsuplab {

// An optimal dyadic cover together with its cost and the level window the
// optimization ran over.
struct CoverResult {
  double value = 0.0;
  std::vector<CubeId> cover;
  int min_level = 0;
  int max_level = 0;
};

// Exact minimum of sum mu(D_k)^theta over covers of E by dyadic cubes with
// levels in [min_level, max_level]. Ties broken toward the coarser cover.
CoverResult net_measure(const TreeMeasure& mu, const CubeSet& E, double theta,
                        int min_level, int max_level);

// Same dynamic program with geometric cost diam(D)^s and cubes no coarser
// than delta_level; refinement stops at the resolution of E.
CoverResult hausdorff_net_measure(const CubeSet& E, double s, int delta_level);

struct MembershipEntry {
  CubeId cube;
  double mu_mass = 0.0;
  double ratio = 0.0;
};

// Quantitative membership surrogate: per cube D the cost of optimally
// covering E inside D, relative to the cost of covering by D itself.
struct MembershipReport {
  double eta = 0.0;
  int check_level = 0;
  double threshold = 0.1;
  std::vector<MembershipEntry> entries;
  double min_ratio = 0.0;
  bool passes = false;
};

MembershipReport class_membership(const TreeMeasure& mu, const CubeSet& E,
                                  double eta, int L, double threshold = 0.1);

// Critical exponent of the geometric net measure: regress log cost against
// log delta per grid exponent and locate the slope sign change.
double dimension_from_scaling(const std::vector<std::pair<int, CubeSet>>& family,
                              const std::vector<double>& s_grid);

}  // namespace limsuplab
