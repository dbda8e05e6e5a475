#include "limsuplab/netmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "limsuplab/parallel.hpp"

namespace limsuplab {

namespace {

// Take-or-split recursion over the cube tree. Nodes that do not meet E cost
// nothing; at max_level the cube must be taken. The cover is emitted into a
// shared vector with rollback when the take branch wins, so extraction is a
// byproduct of the single pass.
struct CoverDP {
  const TreeMeasure* mu = nullptr;  // null: geometric cost diam^s
  double expo = 0.0;
  int min_level = 0;
  int max_level = 0;
  std::vector<CubeId> out;

  double cost_of(const CubeId& q) const {
    if (mu) {
      double m = mu->mass(q);
      return m > 0.0 ? std::pow(m, expo) : 0.0;
    }
    return std::pow(cube_diameter(q), expo);
  }

  // members: E cubes strictly below D; covered: D lies inside a member
  double solve(const CubeId& D, const std::vector<CubeId>& members, bool covered) {
    if (!covered && members.empty()) return 0.0;
    bool may_take = D.level >= min_level;
    if (D.level >= max_level) {
      out.push_back(D);
      return cost_of(D);
    }
    // splitting a fully covered cube never pays when the cost is subadditive
    if (covered && may_take && take_dominates) {
      out.push_back(D);
      return cost_of(D);
    }
    // partition members among the children; a member equal to a child marks
    // the child fully covered (E is an antichain, nothing can lie below it)
    std::map<CubeId, std::pair<std::vector<CubeId>, bool>> parts;
    if (covered) {
      for (unsigned k = 0; k < child_count(D.dim); ++k)
        parts[child(D, k)].second = true;
    } else {
      for (const CubeId& m : members) {
        auto& g = parts[ancestor(m, D.level + 1)];
        if (m.level == D.level + 1)
          g.second = true;
        else
          g.first.push_back(m);
      }
    }
    std::size_t mark = out.size();
    double split = 0.0;
    for (auto& [c, g] : parts) split += solve(c, g.first, g.second);
    if (may_take) {
      double take = cost_of(D);
      if (take <= split) {
        out.resize(mark);
        out.push_back(D);
        return take;
      }
    }
    return split;
  }

  bool take_dominates = false;
  double run(const CubeId& root, const std::vector<CubeId>& members, bool covered) {
    take_dominates = mu ? expo <= 1.0 : expo <= static_cast<double>(root.dim);
    return solve(root, members, covered);
  }
};

// group member cubes by their ancestor at the root level
std::map<CubeId, std::pair<std::vector<CubeId>, bool>> group_at(
    const std::vector<CubeId>& members, int root_level) {
  std::map<CubeId, std::pair<std::vector<CubeId>, bool>> groups;
  for (const CubeId& m : members) {
    CubeId anc = ancestor(m, root_level);
    auto& g = groups[anc];
    if (m.level == root_level)
      g.second = true;
    else
      g.first.push_back(m);
  }
  return groups;
}

CoverResult run_cover_dp(const TreeMeasure* mu, const CubeSet& E, double expo,
                         int min_level, int max_level, const CubeId& base) {
  CoverResult res;
  res.min_level = min_level;
  res.max_level = max_level;
  if (E.empty()) return res;

  int root_level;
  if (base.is_cube()) {
    root_level = base.level;
  } else {
    root_level = min_level;
    for (const CubeId& m : E.cubes()) root_level = std::min(root_level, m.level);
  }

  CoverDP dp;
  dp.mu = mu;
  dp.expo = expo;
  dp.min_level = min_level;
  dp.max_level = max_level;
  double value = 0.0;
  if (base.is_cube()) {
    bool covered = false;
    std::vector<CubeId> members;
    for (const CubeId& m : E.cubes()) {
      if (m == base)
        covered = true;
      else
        members.push_back(m);
    }
    value = dp.run(base, members, covered);
  } else {
    for (auto& [root, g] : group_at(E.cubes(), root_level))
      value += dp.run(root, g.first, g.second);
  }
  res.value = value;
  res.cover = std::move(dp.out);
  std::sort(res.cover.begin(), res.cover.end());
  return res;
}

double regression_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::domain_error("degenerate resolution family");
  return (n * sxy - sx * sy) / den;
}

}  // namespace

CoverResult net_measure(const TreeMeasure& mu, const CubeSet& E, double theta,
                        int min_level, int max_level) {
  if (!mu.valid()) throw std::invalid_argument("net_measure: empty measure");
  if (!(theta > 0.0)) throw std::invalid_argument("net_measure: theta must be positive");
  if (min_level > max_level)
    throw std::invalid_argument("net_measure: min_level above max_level");
  if (max_level > mu.depth())
    throw std::invalid_argument("net_measure: max_level below the stored resolution");
  if (!E.empty() && E.depth() > max_level)
    throw std::invalid_argument("net_measure: E finer than max_level");
  if (E.dim() != mu.dim()) throw std::invalid_argument("net_measure: dimension mismatch");
  if (mu.base().is_cube())
    for (const CubeId& m : E.cubes())
      if (!cube_contains_cube(mu.base(), m))
        throw std::invalid_argument("net_measure: E not contained in the base");
  return run_cover_dp(&mu, E, theta, min_level, max_level, mu.base());
}

CoverResult hausdorff_net_measure(const CubeSet& E, double s, int delta_level) {
  if (!(s >= 0.0)) throw std::invalid_argument("hausdorff_net_measure: negative exponent");
  if (!E.empty() && E.depth() < delta_level)
    throw std::invalid_argument("hausdorff_net_measure: delta finer than E");
  return run_cover_dp(nullptr, E, s, delta_level, std::max(delta_level, E.depth()),
                      CubeId::root(E.dim()));
}

MembershipReport class_membership(const TreeMeasure& mu, const CubeSet& E,
                                  double eta, int L, double threshold) {
  if (!mu.valid()) throw std::invalid_argument("class_membership: empty measure");
  if (!(eta > 0.0)) throw std::invalid_argument("class_membership: eta must be positive");
  if (!E.empty() && L > E.depth())
    throw std::invalid_argument("class_membership: L below the resolution of E");
  if (!E.empty() && E.depth() > mu.depth())
    throw std::invalid_argument("class_membership: E finer than mu");

  MembershipReport rep;
  rep.eta = eta;
  rep.check_level = L;
  rep.threshold = threshold;

  std::vector<CubeId> targets;
  for (int n = mu.top_level(); n <= std::min(L, mu.depth()); ++n) {
    const LevelNodes& lv = mu.level(n);
    std::array<std::int64_t, kMaxDim> c{};
    for (std::size_t i = 0; i < lv.count(); ++i)
      if (lv.mass[i] > 0.0) {
        lv.coord_of(i, c.data());
        targets.push_back(CubeId::make(lv.dim, n, c));
      }
  }

  rep.entries.resize(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) {
    const CubeId& D = targets[i];
    MembershipEntry& e = rep.entries[i];
    e.cube = D;
    e.mu_mass = mu.mass(D);
    CubeSet ED = E.intersect(CubeSet::of(E.dim(), E.depth(), {D}));
    if (ED.empty()) {
      e.ratio = 0.0;
      return;
    }
    double covered = net_measure(mu, ED, eta, D.level, E.depth()).value;
    e.ratio = covered / std::pow(e.mu_mass, eta);
  });

  rep.min_ratio = rep.entries.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const MembershipEntry& e : rep.entries) rep.min_ratio = std::min(rep.min_ratio, e.ratio);
  rep.passes = rep.min_ratio >= threshold;
  return rep;
}

double dimension_from_scaling(const std::vector<std::pair<int, CubeSet>>& family,
                              const std::vector<double>& s_grid) {
  if (family.size() < 3)
    throw std::invalid_argument("dimension_from_scaling: need at least 3 resolutions");
  if (s_grid.size() < 2)
    throw std::invalid_argument("dimension_from_scaling: need an exponent grid");

  std::vector<double> slopes;
  slopes.reserve(s_grid.size());
  for (double s : s_grid) {
    std::vector<double> xs, ys;
    for (const auto& [delta_level, E] : family) {
      double v = hausdorff_net_measure(E, s, delta_level).value;
      if (!(v > 0.0)) continue;
      xs.push_back(-static_cast<double>(delta_level) * std::log(2.0));
      ys.push_back(std::log(v));
    }
    if (xs.size() < 3)
      throw std::domain_error("dimension_from_scaling: too few usable resolutions");
    slopes.push_back(regression_slope(xs, ys));
  }

  if (slopes.front() >= 0.0) return s_grid.front();
  for (std::size_t i = 1; i < slopes.size(); ++i) {
    if (slopes[i] >= 0.0) {
      double m0 = slopes[i - 1], m1 = slopes[i];
      return s_grid[i - 1] + (s_grid[i] - s_grid[i - 1]) * (0.0 - m0) / (m1 - m0);
    }
  }
  return s_grid.back();
}

}  // namespace limsuplab
