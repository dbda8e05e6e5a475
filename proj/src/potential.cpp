#include "limsuplab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace limsuplab {

namespace detail {
double neg_pow(double mass, double exponent) {
  if (!(mass > 0.0)) return std::numeric_limits<double>::infinity();
  return std::exp(-exponent * std::log(mass));
}
}  // namespace detail

void EnergyParams::validate() const {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("energy params: theta must lie in (0, 1]");
  if (eta && (!(*eta > 0.0) || !(*eta < theta)))
    throw std::invalid_argument("energy params: eta must lie in (0, theta)");
  if (kernel_cap && !(*kernel_cap > 0.0))
    throw std::invalid_argument("energy params: kernel cap must be positive");
}

namespace {

double clip(double v, const std::optional<double>& cap) {
  return cap && v > *cap ? *cap : v;
}

struct LevelAccum {
  std::map<int, double> c;
  void add(int level, double v) { c[level] += v; }
  void flush(EnergyReport& rep) {
    rep.value = 0.0;
    for (const auto& [lvl, v] : c) {
      rep.per_level.emplace_back(lvl, v);
      rep.value += v;
    }
  }
};

// Recursion over the atoms' cube tree. Groups with >= 2 atoms descend one
// level at a time; the visitor sees (level, mu mass of the node, off-diagonal
// pair weight born at that node). Pairs still together at stop_level are
// charged there (the capped-cube convention); pairs with no common grid cube
// are charged at one level above the coarsest with the total mu-mass.
struct AtomWalker {
  const TreeMeasure& mu;
  const AtomicMeasure& nu;
  int stop_level;
  std::function<void(int, double, double)> visit;

  void run() {
    const GridOffset& g = nu.grid();
    int top = mu.base().is_cube() ? mu.base().level : g.min_level;
    std::map<CubeId, std::vector<std::size_t>> groups;
    double sumw = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      groups[cube_of(g, nu.point(i), top)].push_back(i);
      sumw += nu.weight(i);
    }
    double sumsq = 0.0;
    for (const auto& [q, idxs] : groups) {
      double gw = 0.0;
      for (std::size_t i : idxs) gw += nu.weight(i);
      sumsq += gw * gw;
    }
    if (sumw * sumw - sumsq > 0.0)
      visit(g.min_level - 1, mu.total(), sumw * sumw - sumsq);
    for (const auto& [q, idxs] : groups) descend(q, idxs);
  }

  void descend(const CubeId& D, const std::vector<std::size_t>& idxs) {
    if (idxs.size() < 2) return;
    const GridOffset& g = nu.grid();
    double sumw = 0.0, diagsq = 0.0;
    for (std::size_t i : idxs) {
      sumw += nu.weight(i);
      diagsq += nu.weight(i) * nu.weight(i);
    }
    if (D.level >= stop_level) {
      double pw = sumw * sumw - diagsq;
      if (pw > 0.0) visit(D.level, mu.mass(D), pw);
      return;
    }
    std::map<CubeId, std::vector<std::size_t>> parts;
    for (std::size_t i : idxs)
      parts[cube_of(g, nu.point(i), D.level + 1)].push_back(i);
    double sumsq = 0.0;
    for (const auto& [q, sub] : parts) {
      double gw = 0.0;
      for (std::size_t i : sub) gw += nu.weight(i);
      sumsq += gw * gw;
    }
    double pw = sumw * sumw - sumsq;
    if (pw > 0.0) visit(D.level, mu.mass(D), pw);
    for (const auto& [q, sub] : parts) descend(q, sub);
  }
};

}  // namespace

PotentialValue potential_at(const TreeMeasure& mu, const AtomicMeasure& nu,
                            double theta, const Point& x) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("potential_at: theta must lie in (0, 1]");
  PotentialValue out;
  const GridOffset& g = nu.grid();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    double w = nu.weight(i);
    if (w <= 0.0) continue;
    CubeId q = common_cube(g, x, nu.point(i));
    if (q.is_empty()) {  // atom exactly at x
      out.infinite = true;
      continue;
    }
    double m = q.is_root() ? mu.total() : mu.mass(q);
    double k = detail::neg_pow(m, theta);
    if (std::isinf(k)) {
      out.infinite = true;
      continue;
    }
    out.value += w * k;
  }
  if (out.infinite) out.value = std::numeric_limits<double>::infinity();
  return out;
}

EnergyReport energy_atomic(const TreeMeasure& mu, const AtomicMeasure& nu,
                           const EnergyParams& params) {
  params.validate();
  EnergyReport rep;
  for (std::size_t i = 0; i < nu.size(); ++i)
    rep.diagonal_excluded_weight += nu.weight(i) * nu.weight(i);
  int stop = nu.grid().max_level;
  if (params.truncation_level) stop = std::min(stop, *params.truncation_level);
  LevelAccum acc;
  AtomWalker walker{mu, nu, stop, {}};
  walker.visit = [&](int level, double mass, double pw) {
    double k = clip(detail::neg_pow(mass, params.theta), params.kernel_cap);
    if (std::isinf(k)) {
      rep.infinite = true;
      return;
    }
    acc.add(level, k * pw);
  };
  walker.run();
  acc.flush(rep);
  if (rep.infinite) rep.value = std::numeric_limits<double>::infinity();
  return rep;
}

EnergyReport energy_tree(const TreeMeasure& mu, const TreeMeasure& nu,
                         const EnergyParams& params) {
  params.validate();
  EnergyReport rep;
  int top = nu.top_level();
  int leaf_level = nu.depth();
  if (!(mu.has_deep() && mu.deep_exact()))
    leaf_level = std::min(leaf_level, mu.depth());
  if (params.truncation_level)
    leaf_level = std::min(leaf_level, *params.truncation_level);
  if (leaf_level < top)
    throw std::invalid_argument("energy_tree: no resolvable levels");

  LevelAccum acc;
  double leaf_contrib = 0.0;
  std::int64_t c[kMaxDim], cc[kMaxDim];
  for (int n = top; n <= leaf_level; ++n) {
    const LevelNodes& ln = nu.level(n);
    const LevelNodes* next = n < leaf_level ? &nu.level(n + 1) : nullptr;
    double level_sum = 0.0;
    for (std::size_t i = 0; i < ln.count(); ++i) {
      double w = ln.mass[i];
      if (w <= 0.0) continue;
      ln.coord_of(i, c);
      double pw;
      if (next) {
        double sumsq = 0.0;
        for (unsigned k = 0; k < child_count(ln.dim); ++k) {
          for (int a = 0; a < ln.dim; ++a) cc[a] = 2 * c[a] + ((k >> a) & 1);
          std::size_t ci = next->find(cc);
          if (ci != LevelNodes::npos) sumsq += next->mass[ci] * next->mass[ci];
        }
        pw = w * w - sumsq;
      } else {
        pw = w * w;  // within-leaf pairs
      }
      if (pw <= 0.0) continue;
      CubeId q = CubeId::make(ln.dim, n, {});
      for (int a = 0; a < ln.dim; ++a) q.c[static_cast<std::size_t>(a)] = c[a];
      double k = clip(detail::neg_pow(mu.mass(q), params.theta), params.kernel_cap);
      if (std::isinf(k)) {
        rep.infinite = true;
        continue;
      }
      level_sum += k * pw;
    }
    acc.add(n, level_sum);
    if (!next) leaf_contrib = level_sum;
  }
  acc.flush(rep);
  if (rep.infinite)
    rep.value = std::numeric_limits<double>::infinity();
  else if (rep.value > 0.0)
    rep.extrapolated_fraction = leaf_contrib / rep.value;
  return rep;
}

EnergyReport energy_truncated(const TreeMeasure& mu, const TreeMeasure& nu,
                              const EnergyParams& params) {
  if (!params.kernel_cap)
    throw std::invalid_argument("energy_truncated: kernel_cap required");
  return energy_tree(mu, nu, params);
}

TailBoundResult tail_bound_check(const TreeMeasure& mu, const AtomicMeasure& nu,
                                 double theta, double eta, double m) {
  if (!(eta > 0.0) || !(eta < theta) || theta > 1.0)
    throw std::invalid_argument("tail bound: need 0 < eta < theta <= 1");
  if (!(m > 0.0)) throw std::invalid_argument("tail bound: m must be positive");
  EnergyParams base;
  base.theta = theta;
  EnergyReport energy = energy_atomic(mu, nu, base);
  if (energy.infinite)
    throw std::domain_error("tail bound: base energy is infinite");
  TailBoundResult res;
  AtomWalker walker{mu, nu, nu.grid().max_level, {}};
  walker.visit = [&](int level, double mass, double pw) {
    (void)level;
    if (detail::neg_pow(mass, theta) > m)
      res.lhs += pw * detail::neg_pow(mass, eta);
  };
  walker.run();
  res.rhs = energy.value * (theta / (theta - eta)) * std::pow(m, eta / theta - 1.0);
  res.holds = res.lhs <= res.rhs + 1e-9;
  return res;
}

AtomicMeasure frostman_reweight(const TreeMeasure& mu, const AtomicMeasure& nu,
                                double theta, const CubeId& D) {
  if (!D.is_cube() && !D.is_root())
    throw std::invalid_argument("frostman reweight: D must be a cube or root");
  const GridOffset& g = nu.grid();
  std::vector<Point> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (D.is_root() || cube_contains(g, D, nu.point(i))) {
      pts.push_back(nu.point(i));
      w.push_back(nu.weight(i));
    }
  }
  if (pts.empty())
    throw std::invalid_argument("frostman reweight: no atoms inside D");
  AtomicMeasure inside = AtomicMeasure::make(g, pts, w);

  int top = D.is_cube()
                ? D.level
                : (mu.base().is_cube() ? mu.base().level : g.min_level);
  std::vector<double> K(inside.size(), 0.0);

  // every atom is charged with the weight of the groups it separates from,
  // at the cube where the separation happens (no telescoping differences,
  // so deep kernels never amplify rounding residue)
  auto charge_split = [&](const std::map<CubeId, std::vector<std::size_t>>& parts,
                          double kern) {
    std::vector<double> gw;
    gw.reserve(parts.size());
    for (const auto& [c, sub] : parts) {
      double s = 0.0;
      for (std::size_t i : sub) s += inside.weight(i);
      gw.push_back(s);
    }
    std::size_t a = 0;
    for (const auto& [c, sub] : parts) {
      double cross = 0.0;
      for (std::size_t b = 0; b < gw.size(); ++b)
        if (b != a) cross += gw[b];
      if (cross > 0.0)
        for (std::size_t i : sub) K[i] += cross * kern;
      ++a;
    }
  };
  std::function<void(const CubeId&, const std::vector<std::size_t>&)> descend =
      [&](const CubeId& q, const std::vector<std::size_t>& idxs) {
        if (idxs.size() < 2) return;
        if (q.level >= g.max_level) {
          double s = 0.0;
          for (std::size_t i : idxs) s += inside.weight(i);
          double kern = detail::neg_pow(mu.mass(q), theta);
          for (std::size_t i : idxs) K[i] += (s - inside.weight(i)) * kern;
          return;
        }
        std::map<CubeId, std::vector<std::size_t>> parts;
        for (std::size_t i : idxs)
          parts[cube_of(g, inside.point(i), q.level + 1)].push_back(i);
        if (parts.size() > 1)
          charge_split(parts, detail::neg_pow(mu.mass(q), theta));
        for (const auto& [c, sub] : parts) descend(c, sub);
      };

  std::map<CubeId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < inside.size(); ++i)
    groups[cube_of(g, inside.point(i), top)].push_back(i);
  if (D.is_root() && groups.size() > 1)
    charge_split(groups, detail::neg_pow(mu.total(), theta));
  for (const auto& [q, idxs] : groups) descend(q, idxs);

  // diagonal term resolved at the mu leaf level
  for (std::size_t i = 0; i < inside.size(); ++i)
    K[i] += inside.weight(i) *
            detail::neg_pow(
                mu.mass(cube_of(g, inside.point(i), mu.depth())), theta);
  std::vector<double> out(inside.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    if (std::isfinite(K[i]) && K[i] > 0.0) {
      out[i] = inside.weight(i) / K[i];
      z += out[i];
    }
  }
  if (z <= 0.0)
    throw std::domain_error("frostman reweight: every atom has infinite potential");
  for (double& v : out) v /= z;
  return inside.reweighted(out);
}

PotentialProfile self_potential_profile(const TreeMeasure& mu, const CubeId& D,
                                        double theta) {
  if (!D.is_cube())
    throw std::invalid_argument("potential profile: D must be a cube");
  double mD = mu.mass(D);
  if (!(mD > 0.0))
    throw std::invalid_argument("potential profile: D carries no mass");
  PotentialProfile prof;
  for (const auto& [leaf, lm] : mu.leaf_nodes()) {
    if (lm <= 0.0 || !cube_contains_cube(D, leaf)) continue;
    double u = 0.0;
    double here = mD;
    for (int n = D.level; n < leaf.level; ++n) {
      double next = mu.mass(ancestor(leaf, n + 1));
      u += (here - next) * detail::neg_pow(here, theta);
      here = next;
    }
    u += lm * detail::neg_pow(lm, theta);
    prof.leaves.push_back(leaf);
    prof.u.push_back(u);
    prof.leaf_mass.push_back(lm);
  }
  return prof;
}

}  // namespace limsuplab
