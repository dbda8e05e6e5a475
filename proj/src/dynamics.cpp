#include "limsuplab/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace limsuplab {

MapSpec MapSpec::doubling_map() { return MapSpec{}; }

MapSpec MapSpec::tent_map() {
  MapSpec m;
  m.kind = Kind::tent;
  return m;
}

MapSpec MapSpec::quadratic_map(double a) {
  MapSpec m;
  m.kind = Kind::quadratic;
  m.a = a;
  m.validate();
  return m;
}

MapSpec MapSpec::piecewise(std::vector<Branch> branches) {
  MapSpec m;
  m.kind = Kind::piecewise_linear;
  m.branches = std::move(branches);
  m.validate();
  return m;
}

void MapSpec::validate() const {
  if (kind == Kind::quadratic) {
    if (!(a > 0.0) || a > 2.0)
      throw std::invalid_argument("quadratic parameter must lie in (0,2]");
    return;
  }
  if (kind == Kind::piecewise_linear) {
    if (branches.empty())
      throw std::invalid_argument("piecewise map needs at least one branch");
    double edge = 0.0;
    for (const Branch& b : branches) {
      if (std::abs(b.lo - edge) > 1e-12)
        throw std::invalid_argument("branch cells must partition [0,1)");
      if (!(b.hi > b.lo)) throw std::invalid_argument("empty branch cell");
      if (std::abs(b.slope) <= 1.0)
        throw std::invalid_argument("branches must be uniformly expanding");
      edge = b.hi;
    }
    if (std::abs(edge - 1.0) > 1e-12)
      throw std::invalid_argument("branch cells must partition [0,1)");
  }
}

double MapSpec::apply(double x) const {
  switch (kind) {
    case Kind::doubling: {
      double y = 2.0 * x;
      return y >= 1.0 ? y - 1.0 : y;
    }
    case Kind::tent:
      return x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
    case Kind::quadratic:
      return 1.0 - a * x * x;
    case Kind::piecewise_linear: {
      for (const Branch& b : branches)
        if (x >= b.lo && x < b.hi) {
          double y = b.slope * x + b.offset;
          // clamp roundoff at the cell edges back into the domain
          if (y < 0.0) y = 0.0;
          if (y >= 1.0) y = std::nextafter(1.0, 0.0);
          return y;
        }
      throw std::domain_error("point left the branch partition");
    }
  }
  throw std::logic_error("unreachable");
}

GibbsSpec GibbsSpec::bernoulli(double w0, double w1) {
  GibbsSpec g;
  g.markov = false;
  g.weights = {w0, w1};
  g.validate();
  return g;
}

GibbsSpec GibbsSpec::markov_chain(const std::array<std::array<double, 2>, 2>& rows) {
  GibbsSpec g;
  g.markov = true;
  g.matrix = rows;
  g.validate();
  return g;
}

void GibbsSpec::validate() const {
  if (markov) {
    for (const auto& row : matrix) {
      for (double v : row)
        if (!(v > 0.0)) throw std::invalid_argument("transition weights must be positive");
      if (std::abs(row[0] + row[1] - 1.0) > 1e-12)
        throw std::invalid_argument("transition rows must sum to one");
    }
  } else {
    for (double v : weights)
      if (!(v > 0.0)) throw std::invalid_argument("digit weights must be positive");
    if (std::abs(weights[0] + weights[1] - 1.0) > 1e-12)
      throw std::invalid_argument("digit weights must sum to one");
  }
}

std::array<double, 2> GibbsSpec::stationary() const {
  if (!markov) return weights;
  double p01 = matrix[0][1], p10 = matrix[1][0];
  double z = p01 + p10;
  return {p10 / z, p01 / z};
}

double GibbsSpec::entropy() const {
  auto h = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  if (!markov) return h(weights[0]) + h(weights[1]);
  std::array<double, 2> pi = stationary();
  double out = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out += pi[static_cast<std::size_t>(i)] *
             h(matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return out;
}

SymbolicPoint SymbolicPoint::random(std::uint64_t seed) {
  return random_weighted(seed, 0.5);
}

SymbolicPoint SymbolicPoint::random_weighted(std::uint64_t seed, double p_one) {
  if (!(p_one > 0.0) || !(p_one < 1.0))
    throw std::invalid_argument("digit probability must lie in (0,1)");
  SymbolicPoint p;
  p.seeded_ = true;
  p.seed_ = seed;
  p.p_one_ = p_one;
  return p;
}

SymbolicPoint SymbolicPoint::periodic(std::vector<int> pattern) {
  if (pattern.empty()) throw std::invalid_argument("empty bit pattern");
  for (int b : pattern)
    if (b != 0 && b != 1) throw std::invalid_argument("bits must be 0 or 1");
  SymbolicPoint p;
  p.pattern_ = std::move(pattern);
  return p;
}

int SymbolicPoint::bit(std::uint64_t i) const {
  std::uint64_t g = offset_ + i;
  if (seeded_)
    return rng::Stream(seed_, "symbit", g).next_double() < p_one_ ? 1 : 0;
  return pattern_[static_cast<std::size_t>(g % pattern_.size())];
}

SymbolicPoint SymbolicPoint::shifted(std::uint64_t n) const {
  SymbolicPoint p = *this;
  p.offset_ += n;
  return p;
}

std::int64_t SymbolicPoint::cube_coord(int level) const {
  if (level < 0 || level > 52)
    throw std::invalid_argument("cube coordinate needs level in [0,52]");
  std::int64_t c = 0;
  for (int i = 0; i < level; ++i) c = (c << 1) | bit(static_cast<std::uint64_t>(i));
  return c;
}

double SymbolicPoint::value() const {
  std::uint64_t u = 0;
  for (int i = 0; i < 53; ++i)
    u = (u << 1) | static_cast<std::uint64_t>(bit(static_cast<std::uint64_t>(i)));
  return std::ldexp(static_cast<double>(u), -53);
}

std::vector<Point> orbit(const MapSpec& map, const Point& x0, std::size_t n) {
  map.validate();
  if (x0.dim != 1) throw std::invalid_argument("orbit: interval maps are d=1");
  double x = x0.x[0];
  if (x < map.domain_lo() || x > map.domain_hi() ||
      (map.kind != MapSpec::Kind::quadratic && x >= 1.0))
    throw std::domain_error("orbit start outside the domain");
  std::vector<Point> out;
  out.reserve(n + 1);
  out.emplace_back(x);
  for (std::size_t i = 0; i < n; ++i) {
    x = map.apply(x);
    if (x < map.domain_lo() - 1e-9 || x > map.domain_hi() + 1e-9)
      throw std::domain_error("orbit escaped the domain");
    out.emplace_back(x);
  }
  return out;
}

std::vector<Point> orbit(const MapSpec& map, const SymbolicPoint& x0, std::size_t n) {
  if (map.kind != MapSpec::Kind::doubling)
    throw std::invalid_argument("symbolic orbits exist for the doubling map only");
  std::vector<Point> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    out.emplace_back(x0.shifted(i).value());
  return out;
}

namespace {

TreeMeasure uniform_unit_tree(int depth) {
  std::vector<std::vector<double>> lv(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n)
    lv[static_cast<std::size_t>(n)].assign(std::size_t{1} << n,
                                           std::ldexp(1.0, -n));
  TreeMeasure t = TreeMeasure::from_dense_levels(GridOffset::origin(1), std::move(lv));
  t.set_deep([](const CubeId& q) { return std::ldexp(1.0, -q.level); }, true);
  return t;
}

TreeMeasure bernoulli_tree(double w0, double w1, int depth) {
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n) {
    std::vector<double> w1p(static_cast<std::size_t>(n) + 1),
        w0p(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
      w1p[static_cast<std::size_t>(j)] = std::pow(w1, j);
      w0p[static_cast<std::size_t>(j)] = std::pow(w0, j);
    }
    auto& lv = levels[static_cast<std::size_t>(n)];
    lv.resize(std::size_t{1} << n);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << n); ++i) {
      int ones = std::popcount(i);
      lv[i] = w1p[static_cast<std::size_t>(ones)] *
              w0p[static_cast<std::size_t>(n - ones)];
    }
  }
  TreeMeasure t = TreeMeasure::from_dense_levels(GridOffset::origin(1), std::move(levels));
  t.set_deep(
      [w0, w1](const CubeId& q) {
        int ones = std::popcount(static_cast<std::uint64_t>(q.c[0]));
        return std::pow(w1, ones) * std::pow(w0, q.level - ones);
      },
      true);
  return t;
}

TreeMeasure markov_tree(const GibbsSpec& g, int depth) {
  std::array<double, 2> pi = g.stationary();
  auto mat = g.matrix;
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
  levels[0] = {1.0};
  if (depth >= 1) levels[1] = {pi[0], pi[1]};
  for (int n = 2; n <= depth; ++n) {
    const auto& prev = levels[static_cast<std::size_t>(n - 1)];
    auto& cur = levels[static_cast<std::size_t>(n)];
    cur.resize(std::size_t{1} << n);
    for (std::uint64_t c = 0; c < (std::uint64_t{1} << (n - 1)); ++c)
      for (std::uint64_t d = 0; d < 2; ++d)
        cur[(c << 1) | d] = prev[c] * mat[c & 1][d];
  }
  TreeMeasure t = TreeMeasure::from_dense_levels(GridOffset::origin(1), std::move(levels));
  t.set_deep(
      [pi, mat](const CubeId& q) {
        std::uint64_t c = static_cast<std::uint64_t>(q.c[0]);
        int n = q.level;
        double m = pi[(c >> (n - 1)) & 1];
        for (int i = n - 2; i >= 0; --i)
          m *= mat[(c >> (i + 1)) & 1][(c >> i) & 1];
        return m;
      },
      true);
  return t;
}

double arcsine_cdf(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return (std::asin(x) + std::asin(1.0)) / (2.0 * std::asin(1.0));
}

GridOffset shifted_unit_grid() {
  GridOffset g = GridOffset::origin(1);
  g.p[0] = -1.0;
  return g;
}

}  // namespace

TreeMeasure invariant_measure(const MapSpec& map,
                              const std::optional<GibbsSpec>& gibbs, int depth,
                              bool* empirical, std::size_t orbit_len,
                              std::uint64_t seed) {
  map.validate();
  if (empirical) *empirical = false;
  if (depth < 1 || depth > 26)
    throw std::invalid_argument("invariant measure depth must lie in [1,26]");
  if (gibbs && map.kind != MapSpec::Kind::doubling)
    throw std::invalid_argument("explicit weights combine with the doubling map only");

  switch (map.kind) {
    case MapSpec::Kind::doubling: {
      if (!gibbs) return uniform_unit_tree(depth);
      gibbs->validate();
      if (gibbs->markov) return markov_tree(*gibbs, depth);
      return bernoulli_tree(gibbs->weights[0], gibbs->weights[1], depth);
    }
    case MapSpec::Kind::tent:
      return uniform_unit_tree(depth);
    case MapSpec::Kind::piecewise_linear: {
      for (const MapSpec::Branch& b : map.branches) {
        double at_lo = b.slope * b.lo + b.offset;
        double at_hi = b.slope * b.hi + b.offset;
        double img_lo = std::min(at_lo, at_hi), img_hi = std::max(at_lo, at_hi);
        if (std::abs(img_lo) > 1e-9 || std::abs(img_hi - 1.0) > 1e-9)
          throw std::invalid_argument(
              "piecewise invariant measure needs every branch onto [0,1)");
      }
      return uniform_unit_tree(depth);
    }
    case MapSpec::Kind::quadratic: {
      if (map.a == 2.0)
        return TreeMeasure::from_cdf(shifted_unit_grid(), -1.0, 1.0,
                                     arcsine_cdf, depth);
      // no closed form away from a = 2: Birkhoff histogram of one long orbit
      if (empirical) *empirical = true;
      rng::Stream rs(seed, "ulam-start");
      double x = 2.0 * rs.next_double() - 1.0;
      for (int i = 0; i < 1024; ++i) x = map.apply(x);
      std::vector<Point> pts;
      pts.reserve(orbit_len);
      for (std::size_t i = 0; i < orbit_len; ++i) {
        pts.emplace_back(x);
        x = map.apply(x);
      }
      std::vector<double> w(orbit_len, 1.0);
      GridOffset g = shifted_unit_grid();
      return TreeMeasure::from_samples(g, CubeId::make(1, -1, {0}), pts, w,
                                       depth, true);
    }
  }
  throw std::logic_error("unreachable");
}

DecayFit measure_decay_check(const TreeMeasure& mu, int level_lo, int level_hi) {
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (level_lo > level_hi || !mu.has_level(level_lo) || !mu.has_level(level_hi))
    throw std::invalid_argument("bad level window");

  DecayFit out;
  std::vector<double> logm;
  for (int n = level_lo; n <= level_hi; ++n) {
    const LevelNodes& lv = mu.level(n);
    double m = 0.0;
    for (double v : lv.mass) m = std::max(m, v);
    if (!(m > 0.0)) throw std::domain_error("a window level carries no mass");
    out.max_mass.push_back(m);
    logm.push_back(std::log2(m));
  }

  double cnt = static_cast<double>(logm.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < logm.size(); ++i) {
    double x = static_cast<double>(level_lo + static_cast<int>(i));
    sx += x;
    sy += logm[i];
    sxx += x * x;
    sxy += x * logm[i];
  }
  double denom = cnt * sxx - sx * sx;
  if (denom <= 0.0) throw std::invalid_argument("window too short for a fit");
  out.t1 = -(cnt * sxy - sx * sy) / denom;

  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logm.size(); ++i) {
    double r = logm[i] + out.t1 * static_cast<double>(level_lo + static_cast<int>(i));
    hi = std::max(hi, r);
    lo = std::min(lo, r);
  }
  out.c1 = std::exp2(hi);
  out.holds = (hi - lo) <= 1.0;
  return out;
}

std::vector<std::pair<int, double>> correlation_decay(
    const MapSpec& map, const TreeMeasure& mu, const CubeId& f_cube,
    const CubeId& g_cube, int n_max, std::size_t orbit_len,
    std::uint64_t seed) {
  map.validate();
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (!f_cube.is_cube() || !g_cube.is_cube() || f_cube.dim != 1 || g_cube.dim != 1)
    throw std::invalid_argument("observables must be interval cubes");
  if (n_max < 0 || orbit_len == 0) throw std::invalid_argument("empty experiment");

  std::size_t total = orbit_len + static_cast<std::size_t>(n_max);
  std::vector<std::uint8_t> in_f(total), in_g(total);

  if (map.kind == MapSpec::Kind::doubling) {
    // digit law read off the tree: first-order conditional frequencies
    if (mu.depth() < 2)
      throw std::invalid_argument("doubling orbits need a tree of depth >= 2");
    double m0 = mu.mass(CubeId::make(1, 1, {0}));
    double m1 = mu.mass(CubeId::make(1, 1, {1}));
    double p1 = m1 / (m0 + m1);
    double p1_given[2] = {mu.mass(CubeId::make(1, 2, {1})) / m0,
                          mu.mass(CubeId::make(1, 2, {3})) / m1};
    int kf = f_cube.level, kg = g_cube.level;
    if (kf > 52 || kg > 52 || kf < 0 || kg < 0)
      throw std::invalid_argument("observable cube level must lie in [0,52]");
    std::size_t bits_needed = total + static_cast<std::size_t>(std::max(kf, kg));
    std::vector<std::uint8_t> bits(bits_needed);
    rng::Stream rs(seed, "digit-orbit");
    int last = rs.next_double() < p1 ? 1 : 0;
    bits[0] = static_cast<std::uint8_t>(last);
    for (std::size_t i = 1; i < bits_needed; ++i) {
      last = rs.next_double() < p1_given[last] ? 1 : 0;
      bits[i] = static_cast<std::uint8_t>(last);
    }
    auto fill = [&](std::vector<std::uint8_t>& out, const CubeId& q) {
      int k = q.level;
      std::uint64_t coord = 0, mask = (k == 0) ? 0 : ((~std::uint64_t{0}) >> (64 - k));
      for (int i = 0; i < k; ++i)
        coord = (coord << 1) | bits[static_cast<std::size_t>(i)];
      std::uint64_t want = static_cast<std::uint64_t>(q.c[0]);
      for (std::size_t m = 0; m < total; ++m) {
        out[m] = static_cast<std::uint8_t>(k == 0 || coord == want);
        coord = ((coord << 1) | bits[m + static_cast<std::size_t>(k)]) & mask;
      }
    };
    fill(in_f, f_cube);
    fill(in_g, g_cube);
  } else {
    rng::Stream rs(seed, "orbit-start");
    double x = map.kind == MapSpec::Kind::quadratic ? 2.0 * rs.next_double() - 1.0
                                                    : rs.next_double();
    for (int i = 0; i < 1024; ++i) x = map.apply(x);
    for (std::size_t m = 0; m < total; ++m) {
      CubeId qf = cube_of(mu.grid(), Point(x), f_cube.level);
      CubeId qg = cube_of(mu.grid(), Point(x), g_cube.level);
      in_f[m] = static_cast<std::uint8_t>(qf == f_cube);
      in_g[m] = static_cast<std::uint8_t>(qg == g_cube);
      x = map.apply(x);
    }
  }

  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  double inv = 1.0 / static_cast<double>(orbit_len);
  for (int n = 0; n <= n_max; ++n) {
    double fg = 0.0, fs = 0.0, gs = 0.0;
    for (std::size_t m = 0; m < orbit_len; ++m) {
      double fv = in_f[m + static_cast<std::size_t>(n)];
      double gv = in_g[m];
      fg += fv * gv;
      fs += fv;
      gs += gv;
    }
    out.emplace_back(n, std::abs(fg * inv - fs * inv * gs * inv));
  }
  return out;
}

BenedicksCarlesonCheck bc_check(double a, double gamma, int N) {
  if (!(a > 0.0) || a > 2.0)
    throw std::invalid_argument("quadratic parameter must lie in (0,2]");
  if (N < 1 || N > 10000) throw std::invalid_argument("horizon must lie in [1,10000]");
  BenedicksCarlesonCheck out;
  out.a = a;
  out.gamma = gamma;
  out.horizon = N;
  const double log2_19 = std::log2(1.9);
  double x = 0.0;
  double logd = 0.0;
  for (int n = 1; n <= N; ++n) {
    x = 1.0 - a * x * x;
    out.orbit_abs.push_back(std::abs(x));
    logd += std::log2(2.0 * a * std::abs(x));
    out.log2_deriv.push_back(logd);
    bool orbit_ok = std::abs(x) >= std::exp(-gamma * static_cast<double>(n));
    bool deriv_ok = logd >= log2_19 * static_cast<double>(n);
    if (!(orbit_ok && deriv_ok) && out.first_failure < 0) out.first_failure = n;
  }
  out.holds = out.first_failure < 0;
  return out;
}

}  // namespace limsuplab
