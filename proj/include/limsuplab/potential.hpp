#pragma once

#include <optional>
#include <vector>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/measure.hpp"

namespace limsuplab {

struct EnergyParams {
  double theta = 0.5;                  // kernel exponent, in (0, 1]
  std::optional<double> eta;           // secondary exponent, 0 < eta < theta
  std::optional<int> truncation_level; // stop pair resolution at this level
  std::optional<double> kernel_cap;    // clip kernel values at this bound

  void validate() const;
};

struct EnergyReport {
  double value = 0.0;
  bool infinite = false;
  double diagonal_excluded_weight = 0.0;
  // share of the value contributed by the within-leaf convention
  double extrapolated_fraction = 0.0;
  std::vector<std::pair<int, double>> per_level;  // ascending level
};

struct PotentialValue {
  double value = 0.0;
  bool infinite = false;
};

// pointwise potential: sum of w_i * mu(Q(x, y_i))^{-theta}; infinite when an
// atom coincides with x or its common cube carries no mu-mass
PotentialValue potential_at(const TreeMeasure& mu, const AtomicMeasure& nu,
                            double theta, const Point& x);

// energy over distinct atom pairs, aggregated at minimal common cubes;
// diagonal weight is excluded and reported
EnergyReport energy_atomic(const TreeMeasure& mu, const AtomicMeasure& nu,
                           const EnergyParams& params);

// exact double integral for tree measures: pairs splitting at an internal
// node use that node's mu-mass, pairs inside one leaf use the leaf mass
EnergyReport energy_tree(const TreeMeasure& mu, const TreeMeasure& nu,
                         const EnergyParams& params);

// energy with the kernel clipped at params.kernel_cap (required); finite by
// construction
EnergyReport energy_truncated(const TreeMeasure& mu, const TreeMeasure& nu,
                              const EnergyParams& params);

struct TailBoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// restriction of the eta-energy to pairs with mu(Q)^{-theta} > m, against the
// bound I * theta/(theta-eta) * m^{eta/theta-1}
TailBoundResult tail_bound_check(const TreeMeasure& mu, const AtomicMeasure& nu,
                                 double theta, double eta, double m);

// atoms of nu inside D reweighted by the reciprocal of their potential
// K(x) = sum_j w_j mu(Q(x, y_j))^{-theta}, the diagonal term resolved at the
// mu leaf level; result normalized to a probability measure
AtomicMeasure frostman_reweight(const TreeMeasure& mu, const AtomicMeasure& nu,
                                double theta, const CubeId& D);

// chain-sum self potentials of mu|_D evaluated on each stored leaf inside D
struct PotentialProfile {
  std::vector<CubeId> leaves;
  std::vector<double> u;       // potential value per leaf
  std::vector<double> leaf_mass;
};
PotentialProfile self_potential_profile(const TreeMeasure& mu, const CubeId& D,
                                        double theta);

namespace detail {
// mass^(-exponent) in the log domain; infinity for mass <= 0
double neg_pow(double mass, double exponent);
}  // namespace detail

}  // namespace limsuplab
