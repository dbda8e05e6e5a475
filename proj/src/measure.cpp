#include "limsuplab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace limsuplab {

namespace {

int coord_cmp(const std::int64_t* a, const std::int64_t* b, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

}  // namespace

std::size_t LevelNodes::find(const std::int64_t* c) const {
  if (dense) {
    std::int64_t off = c[0] - origin;
    if (off < 0 || off >= static_cast<std::int64_t>(mass.size())) return npos;
    return static_cast<std::size_t>(off);
  }
  std::size_t lo = 0, hi = count();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    int cmp = coord_cmp(&coords[mid * static_cast<std::size_t>(dim)], c, dim);
    if (cmp == 0) return mid;
    if (cmp < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return npos;
}

void LevelNodes::compact_if_contiguous() {
  if (dense || dim != 1 || mass.empty()) return;
  std::int64_t first = coords.front();
  std::int64_t last = coords.back();
  if (last - first + 1 != static_cast<std::int64_t>(mass.size())) return;
  dense = true;
  origin = first;
  coords.clear();
  coords.shrink_to_fit();
}

// ---- construction helpers ----

namespace {

struct LeafAccum {
  int dim;
  std::vector<std::int64_t> coords;
  std::vector<double> mass;

  void add(const std::int64_t* c, double m) {
    for (int i = 0; i < dim; ++i) coords.push_back(c[i]);
    mass.push_back(m);
  }

  LevelNodes finish(int level) {
    std::size_t n = mass.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const int d = dim;
    const auto* cp = coords.data();
    std::sort(idx.begin(), idx.end(), [cp, d](std::size_t a, std::size_t b) {
      return coord_cmp(cp + a * static_cast<std::size_t>(d),
                       cp + b * static_cast<std::size_t>(d), d) < 0;
    });
    LevelNodes out;
    out.dim = d;
    out.level = level;
    out.coords.reserve(coords.size());
    out.mass.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t i = idx[k];
      const std::int64_t* ci = cp + i * static_cast<std::size_t>(d);
      if (!out.mass.empty() &&
          coord_cmp(&out.coords[(out.mass.size() - 1) * static_cast<std::size_t>(d)], ci,
                    d) == 0) {
        out.mass.back() += mass[i];
      } else {
        for (int j = 0; j < d; ++j) out.coords.push_back(ci[j]);
        out.mass.push_back(mass[i]);
      }
    }
    // drop exact zeros so absent == zero holds
    if (!out.mass.empty()) {
      std::size_t w = 0;
      for (std::size_t r = 0; r < out.mass.size(); ++r) {
        if (out.mass[r] == 0.0) continue;
        if (w != r) {
          out.mass[w] = out.mass[r];
          for (int j = 0; j < d; ++j)
            out.coords[w * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
                out.coords[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
        }
        ++w;
      }
      out.mass.resize(w);
      out.coords.resize(w * static_cast<std::size_t>(d));
    }
    out.compact_if_contiguous();
    return out;
  }
};

LevelNodes aggregate_one(const LevelNodes& child) {
  LevelNodes parent;
  parent.dim = child.dim;
  parent.level = child.level - 1;
  const int d = child.dim;
  if (child.dense) {
    // d == 1 contiguous run
    std::int64_t first = child.origin >> 1;
    std::int64_t last = (child.origin + static_cast<std::int64_t>(child.count()) - 1) >> 1;
    parent.dense = true;
    parent.origin = first;
    parent.mass.assign(static_cast<std::size_t>(last - first + 1), 0.0);
    for (std::size_t i = 0; i < child.count(); ++i) {
      std::int64_t c = child.origin + static_cast<std::int64_t>(i);
      parent.mass[static_cast<std::size_t>((c >> 1) - first)] += child.mass[i];
    }
    return parent;
  }
  std::int64_t prev[kMaxDim];
  bool have_prev = false;
  for (std::size_t i = 0; i < child.count(); ++i) {
    std::int64_t pc[kMaxDim];
    for (int j = 0; j < d; ++j)
      pc[j] = child.coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] >> 1;
    if (have_prev && coord_cmp(prev, pc, d) == 0) {
      parent.mass.back() += child.mass[i];
    } else {
      for (int j = 0; j < d; ++j) {
        parent.coords.push_back(pc[j]);
        prev[j] = pc[j];
      }
      parent.mass.push_back(child.mass[i]);
      have_prev = true;
    }
  }
  parent.compact_if_contiguous();
  return parent;
}

}  // namespace

void TreeMeasure::aggregate_from_leaves() {
  // levels_ currently holds just the leaf level; build upward to top_level_
  while (levels_.front().level > top_level_) {
    LevelNodes up = aggregate_one(levels_.front());
    levels_.insert(levels_.begin(), std::move(up));
  }
  total_ = 0.0;
  for (double m : levels_.front().mass) total_ += m;
}

TreeMeasure TreeMeasure::build(const GridOffset& grid, const CubeId& base, int depth,
                               LevelNodes leaf_level) {
  TreeMeasure t;
  t.grid_ = grid;
  t.base_ = base;
  t.depth_ = depth;
  t.top_level_ = base.is_cube() ? base.level : grid.min_level;
  if (base.is_cube()) {
    for (std::size_t i = 0; i < leaf_level.count(); ++i) {
      std::int64_t c[kMaxDim];
      leaf_level.coord_of(i, c);
      CubeId leaf = CubeId::make(grid.dim, depth, {});
      for (int j = 0; j < grid.dim; ++j) leaf.c[static_cast<std::size_t>(j)] = c[j];
      if (!cube_contains_cube(base, leaf))
        throw std::invalid_argument("tree measure: leaf outside base cube");
    }
  }
  t.levels_.push_back(std::move(leaf_level));
  t.aggregate_from_leaves();
  t.check_not_atomic();
  return t;
}

void TreeMeasure::check_not_atomic() const {
  // atom at resolution: one leaf among several dominating the total mass;
  // a single-chain tree is the deliberate point-mass case and is allowed
  const LevelNodes& leaf = levels_.back();
  if (leaf.count() < 2 || total_ <= 0.0) return;
  for (double m : leaf.mass)
    if (m > 0.999 * total_)
      throw std::invalid_argument("tree measure: atom at resolution (one leaf holds >0.999 of mass)");
}

TreeMeasure TreeMeasure::from_samples(const GridOffset& grid, const CubeId& base,
                                      const std::vector<Point>& pts,
                                      const std::vector<double>& weights, int depth,
                                      bool normalize) {
  if (pts.empty()) throw std::invalid_argument("from_samples: no points");
  if (!weights.empty() && weights.size() != pts.size())
    throw std::invalid_argument("from_samples: weight count mismatch");
  if (depth > grid.max_level) throw std::out_of_range("from_samples: depth too deep");
  LeafAccum acc;
  acc.dim = grid.dim;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CubeId q = cube_of(grid, pts[i], depth);
    double w = weights.empty() ? 1.0 : weights[i];
    if (w < 0.0) throw std::invalid_argument("from_samples: negative weight");
    acc.add(q.c.data(), w);
  }
  TreeMeasure t = build(grid, base, depth, acc.finish(depth));
  if (t.total_ <= 0.0) throw std::invalid_argument("from_samples: zero total mass");
  return normalize ? t.normalized() : t;
}

TreeMeasure TreeMeasure::from_density(const GridOffset& grid, const CubeId& base,
                                      const std::function<double(const Point&)>& f,
                                      int depth, int quad_per_axis,
                                      DensityReport* report) {
  if (!base.is_cube()) throw std::invalid_argument("from_density: base must be a cube");
  if (depth < base.level) throw std::invalid_argument("from_density: depth above base");
  const int d = grid.dim;
  const int steps = depth - base.level;
  if (static_cast<double>(steps) * d > 26)
    throw std::invalid_argument("from_density: leaf count too large");
  DensityReport rep;
  LeafAccum acc;
  acc.dim = d;
  std::int64_t leaves_per_axis = std::int64_t{1} << steps;
  std::int64_t total_leaves = 1;
  for (int j = 0; j < d; ++j) total_leaves *= leaves_per_axis;
  double side = cube_side(depth);
  for (std::int64_t li = 0; li < total_leaves; ++li) {
    std::int64_t c[kMaxDim];
    std::int64_t rem = li;
    for (int j = 0; j < d; ++j) {
      c[j] = (base.c[static_cast<std::size_t>(j)] << steps) + (rem % leaves_per_axis);
      rem /= leaves_per_axis;
    }
    // midpoint rule, quad_per_axis points per axis
    double m = 0.0;
    bool fb = false;
    std::int64_t qtot = 1;
    for (int j = 0; j < d; ++j) qtot *= quad_per_axis;
    for (std::int64_t qi = 0; qi < qtot; ++qi) {
      Point x;
      x.dim = d;
      std::int64_t qr = qi;
      for (int j = 0; j < d; ++j) {
        int pos = static_cast<int>(qr % quad_per_axis);
        qr /= quad_per_axis;
        double lo = grid.p[static_cast<std::size_t>(j)] +
                    std::ldexp(static_cast<double>(c[j]), -depth);
        x.x[static_cast<std::size_t>(j)] =
            lo + side * (pos + 0.5) / static_cast<double>(quad_per_axis);
      }
      double v = f(x);
      int tries = 0;
      while (!std::isfinite(v) && tries < 4) {
        // pull the sample toward the leaf midpoint
        ++rep.nonfinite_samples;
        fb = true;
        for (int j = 0; j < d; ++j) {
          double lo = grid.p[static_cast<std::size_t>(j)] +
                      std::ldexp(static_cast<double>(c[j]), -depth);
          double mid = lo + 0.5 * side;
          x.x[static_cast<std::size_t>(j)] =
              mid + (x.x[static_cast<std::size_t>(j)] - mid) / 3.0;
        }
        v = f(x);
        ++tries;
      }
      if (!std::isfinite(v) || v < 0.0) v = 0.0;
      m += v;
    }
    if (fb) ++rep.fallback_nodes;
    double vol = std::pow(side, d);
    acc.add(c, m * vol / static_cast<double>(qtot));
  }
  if (report) *report = rep;
  TreeMeasure t = build(grid, base, depth, acc.finish(depth));
  if (t.total_ <= 0.0) throw std::invalid_argument("from_density: zero total mass");
  return t.normalized();
}

TreeMeasure TreeMeasure::from_cdf(const GridOffset& grid, double a, double b,
                                  const std::function<double(double)>& cdf, int depth) {
  if (grid.dim != 1) throw std::invalid_argument("from_cdf: d=1 only");
  double p0 = grid.p[0];
  double ia = a - p0, ib = b - p0;
  if (!(ia < ib) || ia != std::floor(ia) || ib != std::floor(ib))
    throw std::invalid_argument("from_cdf: endpoints must be integer offsets from P");
  if (depth < 0 || depth > grid.max_level)
    throw std::out_of_range("from_cdf: bad depth");
  LeafAccum acc;
  acc.dim = 1;
  std::int64_t lo_unit = static_cast<std::int64_t>(ia);
  std::int64_t hi_unit = static_cast<std::int64_t>(ib);
  for (std::int64_t u = lo_unit; u < hi_unit; ++u) {
    std::int64_t first = u << depth;
    std::int64_t n = std::int64_t{1} << depth;
    for (std::int64_t j = 0; j < n; ++j) {
      std::int64_t c = first + j;
      double x0 = p0 + std::ldexp(static_cast<double>(c), -depth);
      double x1 = p0 + std::ldexp(static_cast<double>(c + 1), -depth);
      double m = cdf(x1) - cdf(x0);
      if (!(m >= 0.0)) m = 0.0;
      acc.add(&c, m);
    }
  }
  // smallest grid cube [P + j*2^k, P + (j+1)*2^k) covering [a,b), else root
  CubeId base = CubeId::root(1);
  std::int64_t span = hi_unit - lo_unit;
  if ((span & (span - 1)) == 0) {
    int k = 0;
    while ((std::int64_t{1} << k) < span) ++k;
    if (-k >= grid.min_level && (lo_unit % span + span) % span == 0)
      base = CubeId::make(1, -k, {lo_unit >> k});
  }
  TreeMeasure t = build(grid, base, depth, acc.finish(depth));
  if (t.total_ <= 0.0) throw std::invalid_argument("from_cdf: zero total mass");
  double T = t.total_;
  t = t.normalized();
  t.set_deep(
      [grid, a, b, cdf, T, lo_unit, hi_unit](const CubeId& q) -> double {
        if (q.level <= 0) return 0.0;  // deep queries are below depth > 0
        std::int64_t unit = q.c[0] >> q.level;
        if (unit < lo_unit || unit >= hi_unit) return 0.0;
        double x0 = grid.p[0] + std::ldexp(static_cast<double>(q.c[0]), -q.level);
        double x1 = grid.p[0] + std::ldexp(static_cast<double>(q.c[0] + 1), -q.level);
        double m = (cdf(x1) - cdf(x0)) / T;
        return m >= 0.0 ? m : 0.0;
      },
      true);
  return t;
}

TreeMeasure TreeMeasure::from_weighted_cubes(
    const GridOffset& grid, const CubeId& base,
    const std::vector<std::pair<CubeId, double>>& leaves) {
  if (leaves.empty()) throw std::invalid_argument("from_weighted_cubes: empty");
  int level = leaves.front().first.level;
  LeafAccum acc;
  acc.dim = grid.dim;
  for (const auto& [q, m] : leaves) {
    if (!q.is_cube() || q.level != level)
      throw std::invalid_argument("from_weighted_cubes: cubes must share one level");
    if (m < 0.0) throw std::invalid_argument("from_weighted_cubes: negative mass");
    acc.add(q.c.data(), m);
  }
  return build(grid, base, level, acc.finish(level));
}

TreeMeasure TreeMeasure::from_dense_levels(const GridOffset& grid,
                                           std::vector<std::vector<double>> levels) {
  if (grid.dim != 1) throw std::invalid_argument("from_dense_levels: d=1 only");
  if (levels.empty()) throw std::invalid_argument("from_dense_levels: empty");
  TreeMeasure t;
  t.grid_ = grid;
  t.base_ = CubeId::make(1, 0, {0});
  t.top_level_ = 0;
  t.depth_ = static_cast<int>(levels.size()) - 1;
  for (int n = 0; n <= t.depth_; ++n) {
    if (levels[static_cast<std::size_t>(n)].size() != (std::size_t{1} << n))
      throw std::invalid_argument("from_dense_levels: level size mismatch");
    LevelNodes ln;
    ln.dim = 1;
    ln.level = n;
    ln.dense = true;
    ln.origin = 0;
    ln.mass = std::move(levels[static_cast<std::size_t>(n)]);
    t.levels_.push_back(std::move(ln));
  }
  t.total_ = t.levels_.front().mass[0];
  t.check_not_atomic();
  return t;
}

const LevelNodes& TreeMeasure::level(int n) const {
  if (!has_level(n)) throw std::out_of_range("tree level not stored");
  return levels_[static_cast<std::size_t>(n - top_level_)];
}

MassValue TreeMeasure::mass_ex(const CubeId& q) const {
  if (q.is_empty()) return {0.0, false};
  if (q.is_root()) return {total_, false};
  if (q.dim != grid_.dim) throw std::invalid_argument("mass: dim mismatch");
  if (q.level < top_level_) {
    if (base_.is_cube())
      return {cube_contains_cube(q, base_) ? total_ : 0.0, false};
    // root base already aggregates to the coarsest supported level
    throw std::out_of_range("mass: level coarser than the grid supports");
  }
  if (q.level <= depth_) {
    const LevelNodes& ln = levels_[static_cast<std::size_t>(q.level - top_level_)];
    std::size_t i = ln.find(q.c.data());
    return {i == LevelNodes::npos ? 0.0 : ln.mass[i], false};
  }
  // below stored depth
  if (deep_) return {deep_(q), !deep_exact_};
  CubeId anc = ancestor(q, depth_);
  const LevelNodes& ln = levels_.back();
  std::size_t i = ln.find(anc.c.data());
  if (i == LevelNodes::npos) return {0.0, false};
  double scale = std::ldexp(1.0, -grid_.dim * (q.level - depth_));
  return {ln.mass[i] * scale, true};
}

TreeMeasure TreeMeasure::restrict_to(const CubeSet& S, bool renormalize) const {
  for (const CubeId& m : S.cubes())
    if (m.level > depth_)
      throw std::invalid_argument("restrict: set finer than tree depth");
  const LevelNodes& leaf = levels_.back();
  LeafAccum acc;
  acc.dim = grid_.dim;
  for (std::size_t i = 0; i < leaf.count(); ++i) {
    std::int64_t c[kMaxDim];
    leaf.coord_of(i, c);
    CubeId q = CubeId::make(grid_.dim, depth_, {});
    for (int j = 0; j < grid_.dim; ++j) q.c[static_cast<std::size_t>(j)] = c[j];
    if (S.contains_cube(q)) acc.add(c, leaf.mass[i]);
  }
  TreeMeasure t;
  t.grid_ = grid_;
  t.base_ = base_;
  t.depth_ = depth_;
  t.top_level_ = top_level_;
  t.levels_.push_back(acc.finish(depth_));
  t.aggregate_from_leaves();
  if (deep_) {
    auto old = deep_;
    int depth = depth_;
    t.set_deep(
        [S, old, depth](const CubeId& q) -> double {
          return S.contains_cube(ancestor(q, depth)) ? old(q) : 0.0;
        },
        deep_exact_);
  }
  return renormalize ? t.normalized() : t;
}

TreeMeasure TreeMeasure::restrict_out(const CubeSet& S) const {
  for (const CubeId& m : S.cubes())
    if (m.level > depth_)
      throw std::invalid_argument("restrict: set finer than tree depth");
  const LevelNodes& leaf = levels_.back();
  LeafAccum acc;
  acc.dim = grid_.dim;
  for (std::size_t i = 0; i < leaf.count(); ++i) {
    std::int64_t c[kMaxDim];
    leaf.coord_of(i, c);
    CubeId q = CubeId::make(grid_.dim, depth_, {});
    for (int j = 0; j < grid_.dim; ++j) q.c[static_cast<std::size_t>(j)] = c[j];
    if (!S.contains_cube(q)) acc.add(c, leaf.mass[i]);
  }
  TreeMeasure t;
  t.grid_ = grid_;
  t.base_ = base_;
  t.depth_ = depth_;
  t.top_level_ = top_level_;
  t.levels_.push_back(acc.finish(depth_));
  t.aggregate_from_leaves();
  if (deep_) {
    auto old = deep_;
    int depth = depth_;
    t.set_deep(
        [S, old, depth](const CubeId& q) -> double {
          return S.contains_cube(ancestor(q, depth)) ? 0.0 : old(q);
        },
        deep_exact_);
  }
  return t;
}

TreeMeasure TreeMeasure::slice(const CubeId& D) const {
  if (!D.is_cube()) throw std::invalid_argument("slice: need a cube");
  if (D.level < top_level_ || D.level > depth_)
    throw std::invalid_argument("slice: level outside stored range");
  TreeMeasure t;
  t.grid_ = grid_;
  t.base_ = D;
  t.top_level_ = D.level;
  t.depth_ = depth_;
  for (int n = D.level; n <= depth_; ++n) {
    const LevelNodes& src = levels_[static_cast<std::size_t>(n - top_level_)];
    LevelNodes dst;
    dst.dim = grid_.dim;
    dst.level = n;
    int k = n - D.level;
    if (grid_.dim == 1) {
      std::int64_t lo = D.c[0] << k;
      std::int64_t hi = (D.c[0] + 1) << k;
      if (src.dense) {
        std::int64_t from = std::max(lo, src.origin);
        std::int64_t to =
            std::min(hi, src.origin + static_cast<std::int64_t>(src.count()));
        if (from < to) {
          dst.dense = true;
          dst.origin = from;
          dst.mass.assign(src.mass.begin() + (from - src.origin),
                          src.mass.begin() + (to - src.origin));
        }
      } else {
        auto begin = std::lower_bound(src.coords.begin(), src.coords.end(), lo);
        auto end = std::lower_bound(src.coords.begin(), src.coords.end(), hi);
        dst.coords.assign(begin, end);
        dst.mass.assign(src.mass.begin() + (begin - src.coords.begin()),
                        src.mass.begin() + (end - src.coords.begin()));
        dst.compact_if_contiguous();
      }
    } else {
      for (std::size_t i = 0; i < src.count(); ++i) {
        std::int64_t c[kMaxDim];
        src.coord_of(i, c);
        bool inside = true;
        for (int j = 0; j < grid_.dim; ++j)
          if ((c[j] >> k) != D.c[static_cast<std::size_t>(j)]) inside = false;
        if (inside) {
          for (int j = 0; j < grid_.dim; ++j) dst.coords.push_back(c[j]);
          dst.mass.push_back(src.mass[i]);
        }
      }
    }
    t.levels_.push_back(std::move(dst));
  }
  t.total_ = 0.0;
  for (double m : t.levels_.front().mass) t.total_ += m;
  if (deep_) {
    auto old = deep_;
    t.set_deep([old, D](const CubeId& q) -> double {
      return cube_contains_cube(D, q) ? old(q) : 0.0;
    },
               deep_exact_);
  }
  return t;
}

TreeMeasure TreeMeasure::normalized() const {
  if (total_ <= 0.0) throw std::domain_error("normalize: zero total mass");
  TreeMeasure t;
  t.grid_ = grid_;
  t.base_ = base_;
  t.top_level_ = top_level_;
  t.depth_ = depth_;
  LevelNodes leaf = levels_.back();
  double s = 1.0 / total_;
  for (double& m : leaf.mass) m *= s;
  t.levels_.push_back(std::move(leaf));
  t.aggregate_from_leaves();
  if (deep_) {
    auto old = deep_;
    t.set_deep([old, s](const CubeId& q) { return old(q) * s; }, deep_exact_);
  }
  return t;
}

double TreeMeasure::additivity_defect() const {
  double worst = 0.0;
  for (std::size_t li = 0; li + 1 < levels_.size(); ++li) {
    const LevelNodes& up = levels_[li];
    const LevelNodes& dn = levels_[li + 1];
    // sum children into parent slots by a single pass
    std::vector<double> acc(up.count(), 0.0);
    for (std::size_t i = 0; i < dn.count(); ++i) {
      std::int64_t c[kMaxDim];
      dn.coord_of(i, c);
      std::int64_t pc[kMaxDim];
      for (int j = 0; j < up.dim; ++j) pc[j] = c[j] >> 1;
      std::size_t pi = up.find(pc);
      if (pi == LevelNodes::npos) return std::abs(dn.mass[i]) > worst
                                             ? std::abs(dn.mass[i])
                                             : worst;  // orphan child
      acc[pi] += dn.mass[i];
    }
    for (std::size_t i = 0; i < up.count(); ++i)
      worst = std::max(worst, std::abs(acc[i] - up.mass[i]));
  }
  return worst;
}

Point TreeMeasure::sample(rng::Stream& rs) const {
  const LevelNodes& top = levels_.front();
  if (top.count() == 0) throw std::domain_error("sample: empty measure");
  // pick a top node by mass
  double u = rs.next_double() * total_;
  std::size_t pick = 0;
  double run = 0.0;
  for (std::size_t i = 0; i < top.count(); ++i) {
    run += top.mass[i];
    if (u < run || i + 1 == top.count()) {
      pick = i;
      break;
    }
  }
  std::int64_t c[kMaxDim];
  top.coord_of(pick, c);
  CubeId cur = CubeId::make(grid_.dim, top_level_, {});
  for (int j = 0; j < grid_.dim; ++j) cur.c[static_cast<std::size_t>(j)] = c[j];
  for (int n = top_level_; n < depth_; ++n) {
    double m = mass(cur);
    if (m <= 0.0) break;
    double v = rs.next_double() * m;
    double run2 = 0.0;
    CubeId chosen = child(cur, 0);
    for (unsigned ci = 0; ci < child_count(grid_.dim); ++ci) {
      CubeId ch = child(cur, ci);
      double cm = mass(ch);
      run2 += cm;
      chosen = ch;
      if (v < run2) break;
    }
    cur = chosen;
  }
  Point x;
  x.dim = grid_.dim;
  for (int j = 0; j < grid_.dim; ++j) {
    double lo = cube_lo(grid_, cur, j);
    x.x[static_cast<std::size_t>(j)] = lo + rs.next_double() * cube_side(cur.level);
  }
  return x;
}

std::vector<std::pair<CubeId, double>> TreeMeasure::leaf_nodes() const {
  std::vector<std::pair<CubeId, double>> out;
  const LevelNodes& leaf = levels_.back();
  out.reserve(leaf.count());
  for (std::size_t i = 0; i < leaf.count(); ++i) {
    std::int64_t c[kMaxDim];
    leaf.coord_of(i, c);
    CubeId q = CubeId::make(grid_.dim, depth_, {});
    for (int j = 0; j < grid_.dim; ++j) q.c[static_cast<std::size_t>(j)] = c[j];
    out.emplace_back(q, leaf.mass[i]);
  }
  return out;
}

// ---- AtomicMeasure ----

AtomicMeasure AtomicMeasure::make(const GridOffset& grid, std::vector<Point> pts,
                                  std::vector<double> weights) {
  if (pts.empty()) throw std::invalid_argument("atomic measure: no atoms");
  if (weights.empty()) weights.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
  if (weights.size() != pts.size())
    throw std::invalid_argument("atomic measure: weight count mismatch");
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  int d = grid.dim;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (int j = 0; j < d; ++j) {
      if (pts[a][j] != pts[b][j]) return pts[a][j] < pts[b][j];
    }
    return false;
  });
  AtomicMeasure m;
  m.grid_ = grid;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Point& p = pts[idx[k]];
    double w = weights[idx[k]];
    if (w < 0.0) throw std::invalid_argument("atomic measure: negative weight");
    bool same = !m.pts_.empty();
    if (same) {
      for (int j = 0; j < d; ++j)
        if (m.pts_.back()[j] != p[j]) same = false;
    }
    if (same)
      m.w_.back() += w;  // merge coincident atoms
    else {
      m.pts_.push_back(p);
      m.w_.push_back(w);
    }
  }
  m.total_ = 0.0;
  for (double w : m.w_) m.total_ += w;
  if (d == 1) {
    m.prefix_.resize(m.w_.size() + 1, 0.0);
    for (std::size_t i = 0; i < m.w_.size(); ++i)
      m.prefix_[i + 1] = m.prefix_[i] + m.w_[i];
  }
  return m;
}

double AtomicMeasure::mass_in(const CubeId& q) const {
  if (q.is_empty()) return 0.0;
  if (q.is_root()) return total_;
  if (grid_.dim == 1 && !prefix_.empty()) {
    double lo = cube_lo(grid_, q, 0), hi = cube_hi(grid_, q, 0);
    auto cmp = [](const Point& p, double v) { return p.x[0] < v; };
    std::size_t b = static_cast<std::size_t>(
        std::lower_bound(pts_.begin(), pts_.end(), lo, cmp) - pts_.begin());
    std::size_t e = static_cast<std::size_t>(
        std::lower_bound(pts_.begin(), pts_.end(), hi, cmp) - pts_.begin());
    return prefix_[e] - prefix_[b];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pts_.size(); ++i)
    if (cube_contains(grid_, q, pts_[i])) s += w_[i];
  return s;
}

AtomicMeasure AtomicMeasure::reweighted(const std::vector<double>& new_w) const {
  if (new_w.size() != w_.size())
    throw std::invalid_argument("reweighted: weight count mismatch");
  AtomicMeasure m = *this;
  m.w_ = new_w;
  m.total_ = 0.0;
  for (double w : m.w_) m.total_ += w;
  if (!m.prefix_.empty()) {
    for (std::size_t i = 0; i < m.w_.size(); ++i)
      m.prefix_[i + 1] = m.prefix_[i] + m.w_[i];
  }
  return m;
}

// ---- CubeSet ----

CubeSet CubeSet::of(int dim, int depth, std::vector<CubeId> cubes) {
  CubeSet s(dim, depth);
  for (const CubeId& q : cubes) {
    if (!q.is_cube()) throw std::invalid_argument("cube set: members must be cubes");
    if (q.level > depth) throw std::invalid_argument("cube set: member below depth");
  }
  s.cubes_ = std::move(cubes);
  s.normalize();
  return s;
}

CubeSet CubeSet::full(const CubeId& base, int depth) {
  return CubeSet::of(base.dim, depth, {base});
}

void CubeSet::normalize() {
  std::sort(cubes_.begin(), cubes_.end());
  cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
  bool changed = true;
  while (changed) {
    changed = false;
    index_levels();
    // drop members contained in a coarser member
    std::vector<CubeId> kept;
    kept.reserve(cubes_.size());
    for (const CubeId& q : cubes_) {
      bool covered = false;
      for (const auto& [lvl, idxs] : levels_) {
        if (lvl >= q.level) break;
        CubeId anc = ancestor(q, lvl);
        auto it = std::lower_bound(idxs.begin(), idxs.end(), anc,
                                   [this](std::size_t i, const CubeId& v) {
                                     return cubes_[i] < v;
                                   });
        if (it != idxs.end() && cubes_[*it] == anc) {
          covered = true;
          break;
        }
      }
      if (!covered)
        kept.push_back(q);
      else
        changed = true;
    }
    cubes_.swap(kept);
    // coalesce complete sibling groups (duplicates are gone, so a parent with
    // child_count members present has all of them)
    index_levels();
    std::vector<CubeId> merged;
    std::vector<bool> drop(cubes_.size(), false);
    unsigned nsib = child_count(dim_);
    for (auto it = levels_.rbegin(); it != levels_.rend(); ++it) {
      std::map<CubeId, std::vector<std::size_t>> groups;
      for (std::size_t i : it->second) groups[parent(cubes_[i])].push_back(i);
      for (auto& [par, members] : groups) {
        if (members.size() == nsib) {
          for (std::size_t i : members) drop[i] = true;
          merged.push_back(par);
          changed = true;
        }
      }
    }
    if (!merged.empty()) {
      std::vector<CubeId> next;
      for (std::size_t i = 0; i < cubes_.size(); ++i)
        if (!drop[i]) next.push_back(cubes_[i]);
      next.insert(next.end(), merged.begin(), merged.end());
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      cubes_.swap(next);
    }
  }
  index_levels();
}

void CubeSet::index_levels() {
  levels_.clear();
  for (std::size_t i = 0; i < cubes_.size(); ++i)
    levels_[cubes_[i].level].push_back(i);
  // cubes_ is sorted by (level, coords) so per-level index lists are sorted
}

bool CubeSet::contains_cube(const CubeId& q) const {
  if (!q.is_cube()) return false;
  for (const auto& [lvl, idxs] : levels_) {
    if (lvl > q.level) break;
    CubeId anc = ancestor(q, lvl);
    auto it = std::lower_bound(
        idxs.begin(), idxs.end(), anc,
        [this](std::size_t i, const CubeId& v) { return cubes_[i] < v; });
    if (it != idxs.end() && cubes_[*it] == anc) return true;
  }
  return false;
}

// contiguous index range of level-lvl members whose first axis falls inside q
// (lex order makes the first-axis slab contiguous; d>1 still needs a filter)
std::pair<std::size_t, std::size_t> CubeSet::axis0_range(
    const std::vector<std::size_t>& idxs, int lvl, const CubeId& q) const {
  int k = lvl - q.level;
  std::int64_t lo = q.c[0] << k;
  std::int64_t hi = (q.c[0] + 1) << k;
  auto cmp = [this](std::size_t i, std::int64_t v) { return cubes_[i].c[0] < v; };
  std::size_t b = static_cast<std::size_t>(
      std::lower_bound(idxs.begin(), idxs.end(), lo, cmp) - idxs.begin());
  std::size_t e = static_cast<std::size_t>(
      std::lower_bound(idxs.begin(), idxs.end(), hi, cmp) - idxs.begin());
  return {b, e};
}

std::vector<CubeId> CubeSet::members_within(const CubeId& q) const {
  std::vector<CubeId> out;
  if (contains_cube(q)) {
    out.push_back(q);
    return out;
  }
  for (const auto& [lvl, idxs] : levels_) {
    if (lvl < q.level) continue;
    auto [b, e] = axis0_range(idxs, lvl, q);
    for (std::size_t t = b; t < e; ++t) {
      const CubeId& m = cubes_[idxs[t]];
      if (dim_ == 1 || cube_contains_cube(q, m)) out.push_back(m);
    }
  }
  return out;
}

bool CubeSet::intersects_cube(const CubeId& q) const {
  if (contains_cube(q)) return true;
  for (const auto& [lvl, idxs] : levels_) {
    if (lvl < q.level) continue;
    auto [b, e] = axis0_range(idxs, lvl, q);
    if (dim_ == 1) {
      if (b < e) return true;
      continue;
    }
    for (std::size_t t = b; t < e; ++t)
      if (cube_contains_cube(q, cubes_[idxs[t]])) return true;
  }
  return false;
}

bool CubeSet::contains_point(const GridOffset& grid, const Point& x) const {
  for (const auto& [lvl, idxs] : levels_) {
    CubeId q = cube_of(grid, x, lvl);
    auto it = std::lower_bound(
        idxs.begin(), idxs.end(), q,
        [this](std::size_t i, const CubeId& v) { return cubes_[i] < v; });
    if (it != idxs.end() && cubes_[*it] == q) return true;
  }
  return false;
}

CubeSet CubeSet::intersect(const CubeSet& other) const {
  std::vector<CubeId> out;
  for (const CubeId& a : cubes_) {
    if (other.contains_cube(a)) {
      out.push_back(a);
    } else {
      for (const CubeId& b : other.members_within(a)) out.push_back(b);
    }
  }
  return CubeSet::of(dim_, std::max(depth_, other.depth_), std::move(out));
}

CubeSet CubeSet::unite(const CubeSet& other) const {
  std::vector<CubeId> out = cubes_;
  out.insert(out.end(), other.cubes_.begin(), other.cubes_.end());
  return CubeSet::of(dim_, std::max(depth_, other.depth_), std::move(out));
}

// ---- weak distance ----

double weak_distance(const TreeMeasure& a, const TreeMeasure& b, int level) {
  if (!a.has_level(level) || !b.has_level(level))
    throw std::invalid_argument("weak_distance: level not stored in both measures");
  const LevelNodes& la = a.level(level);
  const LevelNodes& lb = b.level(level);
  double s = 0.0;
  std::size_t i = 0, j = 0;
  std::int64_t ca[kMaxDim], cb[kMaxDim];
  while (i < la.count() || j < lb.count()) {
    if (i < la.count()) la.coord_of(i, ca);
    if (j < lb.count()) lb.coord_of(j, cb);
    int cmp;
    if (i >= la.count())
      cmp = 1;
    else if (j >= lb.count())
      cmp = -1;
    else
      cmp = coord_cmp(ca, cb, la.dim);
    if (cmp < 0) {
      s += std::abs(la.mass[i]);
      ++i;
    } else if (cmp > 0) {
      s += std::abs(lb.mass[j]);
      ++j;
    } else {
      s += std::abs(la.mass[i] - lb.mass[j]);
      ++i;
      ++j;
    }
  }
  return 0.5 * s;
}

}  // namespace limsuplab
