#include "limsuplab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "limsuplab/parallel.hpp"

namespace limsuplab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// positive node masses of one level, sorted ascending
std::vector<double> sorted_masses(const TreeMeasure& mu, int n) {
  const LevelNodes& lv = mu.level(n);
  std::vector<double> out;
  out.reserve(lv.count());
  for (double m : lv.mass)
    if (m > 0.0) out.push_back(m);
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t count_at_least(const std::vector<double>& sorted, double threshold) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), threshold);
  return static_cast<std::int64_t>(sorted.end() - it);
}

BandCount bands_from_sorted(const std::vector<double>& sorted, double s,
                            double epsilon, int n) {
  BandCount out;
  double dn = static_cast<double>(n);
  out.n_plus = count_at_least(sorted, std::exp2(-dn * (s + epsilon)));
  out.n_minus = count_at_least(sorted, std::exp2(-dn * (s - epsilon)));
  out.band = out.n_plus - out.n_minus;
  return out;
}

void check_window(const TreeMeasure& mu, int lo, int hi) {
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (lo > hi) throw std::invalid_argument("level window is empty");
  if (lo < 1) throw std::invalid_argument("level window must start at 1 or deeper");
  if (lo < mu.top_level() || hi > mu.depth())
    throw std::invalid_argument("level window leaves the stored range");
}

// sup of the grid points satisfying g(t) >= t - eps, NaN when none does
double sup_of_row(const std::vector<double>& s_grid, const std::vector<double>& g_row,
                  double eps) {
  double best = kNaN;
  for (std::size_t i = 0; i < s_grid.size(); ++i)
    if (g_row[i] >= s_grid[i] - eps) best = s_grid[i];
  return best;
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  double pos = p * static_cast<double>(sorted.size() - 1);
  auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(i);
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

}  // namespace

BandCount band_counts(const TreeMeasure& mu, double s, double epsilon, int n) {
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (!mu.has_level(n)) throw std::invalid_argument("level is not stored");
  return bands_from_sorted(sorted_masses(mu, n), s, epsilon, n);
}

SpectrumEstimate g_spectrum(const TreeMeasure& mu, std::vector<double> s_grid,
                            std::vector<double> epsilon_grid, int level_lo,
                            int level_hi) {
  check_window(mu, level_lo, level_hi);
  if (s_grid.empty()) throw std::invalid_argument("s grid is empty");
  if (epsilon_grid.empty()) throw std::invalid_argument("epsilon grid is empty");
  for (double s : s_grid)
    if (!(s >= 0.0)) throw std::invalid_argument("s grid entries must be >= 0");
  for (double e : epsilon_grid)
    if (!(e > 0.0)) throw std::invalid_argument("epsilon entries must be > 0");
  std::sort(s_grid.begin(), s_grid.end());
  std::sort(epsilon_grid.begin(), epsilon_grid.end(), std::greater<>());

  SpectrumEstimate est;
  est.s_grid = s_grid;
  est.epsilon_grid = epsilon_grid;
  est.level_lo = level_lo;
  est.level_hi = level_hi;

  std::vector<std::vector<double>> per_level;
  per_level.reserve(static_cast<std::size_t>(level_hi - level_lo + 1));
  for (int n = level_lo; n <= level_hi; ++n)
    per_level.push_back(sorted_masses(mu, n));

  est.g_per_epsilon.assign(epsilon_grid.size(),
                           std::vector<double>(s_grid.size(), SpectrumEstimate::kNoBand));
  for (std::size_t si = 0; si < s_grid.size(); ++si) {
    for (std::size_t ei = 0; ei < epsilon_grid.size(); ++ei) {
      double g = SpectrumEstimate::kNoBand;
      for (int n = level_lo; n <= level_hi; ++n) {
        BandCount bc = bands_from_sorted(per_level[static_cast<std::size_t>(n - level_lo)],
                                         s_grid[si], epsilon_grid[ei], n);
        est.bands.push_back({s_grid[si], epsilon_grid[ei], n, bc});
        if (bc.band > 0)
          g = std::max(g, std::log2(static_cast<double>(bc.band)) /
                              static_cast<double>(n));
      }
      est.g_per_epsilon[ei][si] = g;
    }
  }

  // headline g: finest epsilon whose band is nonempty somewhere
  est.g.assign(s_grid.size(), SpectrumEstimate::kNoBand);
  for (std::size_t si = 0; si < s_grid.size(); ++si)
    for (std::size_t ei = epsilon_grid.size(); ei-- > 0;)
      if (est.g_per_epsilon[ei][si] != SpectrumEstimate::kNoBand) {
        est.g[si] = est.g_per_epsilon[ei][si];
        break;
      }

  est.threshold_per_epsilon.assign(epsilon_grid.size(), kNaN);
  for (std::size_t ei = 0; ei < epsilon_grid.size(); ++ei)
    est.threshold_per_epsilon[ei] =
        sup_of_row(s_grid, est.g_per_epsilon[ei], epsilon_grid[ei]);

  // shrinking epsilon can only lower the sup, and once it is undefined it
  // stays undefined; a violation means the counts are inconsistent
  double prev = kNaN;
  for (std::size_t ei = 0; ei < epsilon_grid.size(); ++ei) {
    double v = est.threshold_per_epsilon[ei];
    if (std::isnan(v)) continue;
    if (!std::isnan(prev) && v > prev + 1e-12)
      throw std::logic_error("threshold sequence increased as epsilon shrank");
    if (ei > 0 && std::isnan(est.threshold_per_epsilon[ei - 1]))
      throw std::logic_error("threshold became defined again as epsilon shrank");
    prev = v;
  }

  for (std::size_t ei = 0; ei < epsilon_grid.size(); ++ei)
    if (!std::isnan(est.threshold_per_epsilon[ei]))
      est.threshold = est.threshold_per_epsilon[ei];
  return est;
}

double s_of_mu(const SpectrumEstimate& spec) {
  if (spec.g_per_epsilon.size() != spec.epsilon_grid.size())
    throw std::invalid_argument("estimate is incomplete");
  double value = kNaN;
  for (std::size_t ei = 0; ei < spec.epsilon_grid.size(); ++ei) {
    double v = sup_of_row(spec.s_grid, spec.g_per_epsilon[ei], spec.epsilon_grid[ei]);
    if (!std::isnan(v)) value = v;
  }
  if (std::isnan(value))
    throw std::domain_error("every band is empty, no threshold is defined");
  return value;
}

LocalDimension local_dimension(const TreeMeasure& mu, const Point& x,
                               int level_lo, int level_hi) {
  check_window(mu, level_lo, level_hi);
  if (level_hi - level_lo < 1)
    throw std::invalid_argument("window needs at least two levels");
  LocalDimension out;
  out.point = x;

  std::vector<double> ys;  // log2 mass
  ys.reserve(static_cast<std::size_t>(level_hi - level_lo + 1));
  for (int n = level_lo; n <= level_hi; ++n) {
    double m = mu.mass(cube_of(mu.grid(), x, n));
    if (m <= 0.0) return out;  // undefined
    ys.push_back(std::log2(m));
  }

  // slope against log2 of the cube side, i.e. against -n
  double cnt = static_cast<double>(ys.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double vx = static_cast<double>(level_lo + static_cast<int>(i));
    sx += vx;
    sy += ys[i];
    sxx += vx * vx;
    sxy += vx * ys[i];
  }
  double denom = cnt * sxx - sx * sx;
  double slope_n = (cnt * sxy - sx * sy) / denom;  // d(log2 m)/dn
  out.slope = -slope_n;
  double intercept = (sy - slope_n * sx) / cnt;
  double rss = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double vx = static_cast<double>(level_lo + static_cast<int>(i));
    double r = ys[i] - (intercept + slope_n * vx);
    rss += r * r;
  }
  out.residual = std::sqrt(rss / cnt);
  out.defined = true;
  return out;
}

DimBounds dim_bounds_of_measure(const TreeMeasure& mu, std::size_t samples,
                                int level_lo, int level_hi, std::uint64_t seed) {
  check_window(mu, level_lo, level_hi);
  if (samples == 0) throw std::invalid_argument("need at least one sample");
  std::vector<double> slopes(samples, kNaN);
  parallel_for(samples, [&](std::size_t i) {
    rng::Stream rs(seed, "dim-sample", i);
    Point x = mu.sample(rs);
    LocalDimension ld = local_dimension(mu, x, level_lo, level_hi);
    if (ld.defined) slopes[i] = ld.slope;
  });

  DimBounds out;
  for (double v : slopes) {
    if (std::isnan(v))
      ++out.undefined_count;
    else
      out.slopes.push_back(v);
  }
  if (out.slopes.empty()) throw std::domain_error("no sample produced a slope");
  std::sort(out.slopes.begin(), out.slopes.end());
  out.lower = percentile(out.slopes, 0.05);
  out.upper = percentile(out.slopes, 0.95);
  out.median = percentile(out.slopes, 0.5);
  return out;
}

MassSubset small_cube_set(const TreeMeasure& mu, int n, double t0) {
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (!mu.has_level(n) || n < 1)
    throw std::invalid_argument("level is not stored");
  if (!(t0 > 0.0)) throw std::invalid_argument("t0 must be positive");
  double threshold = std::exp2(-static_cast<double>(n) * t0);
  const LevelNodes& lv = mu.level(n);
  std::vector<CubeId> keep;
  double mass = 0.0;
  std::array<std::int64_t, kMaxDim> c{};
  for (std::size_t i = 0; i < lv.count(); ++i) {
    double m = lv.mass[i];
    if (m <= 0.0 || m > threshold) continue;
    lv.coord_of(i, c.data());
    keep.push_back(CubeId::make(lv.dim, n, c));
    mass += m;
  }
  MassSubset out;
  out.cubes = CubeSet::of(mu.dim(), n, keep);
  out.mass = mass;
  return out;
}

MassSubset regular_point_set(const TreeMeasure& mu, int n_start, double t,
                             int depth) {
  if (!mu.valid()) throw std::invalid_argument("measure is empty");
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  if (n_start > depth) throw std::invalid_argument("n_start must not exceed depth");
  if (n_start < 1 || !mu.has_level(n_start) || !mu.has_level(depth))
    throw std::invalid_argument("levels are not stored");

  // proxy mass around q: the cube plus its adjacent siblings on each axis
  auto proxy = [&](const CubeId& q) {
    double s = 0.0;
    std::array<std::int64_t, kMaxDim> c = q.c;
    int d = q.dim;
    std::array<int, kMaxDim> off{};
    off.fill(-1);
    for (;;) {
      std::array<std::int64_t, kMaxDim> nb = c;
      for (int k = 0; k < d; ++k) nb[static_cast<std::size_t>(k)] += off[static_cast<std::size_t>(k)];
      s += mu.mass(CubeId::make(d, q.level, nb));
      int k = 0;
      while (k < d && off[static_cast<std::size_t>(k)] == 1) {
        off[static_cast<std::size_t>(k)] = -1;
        ++k;
      }
      if (k == d) break;
      ++off[static_cast<std::size_t>(k)];
    }
    return s;
  };

  const LevelNodes& lv = mu.level(depth);
  std::vector<char> ok(lv.count(), 0);
  parallel_for(lv.count(), [&](std::size_t i) {
    if (lv.mass[i] <= 0.0) return;
    std::array<std::int64_t, kMaxDim> c{};
    lv.coord_of(i, c.data());
    CubeId q = CubeId::make(lv.dim, depth, c);
    for (int k = depth; k >= n_start; --k) {
      CubeId a = ancestor(q, k);
      // ball radius taken as the proxy width 3*2^-k
      if (!(proxy(a) < std::pow(3.0 * std::exp2(-static_cast<double>(k)), t)))
        return;
    }
    ok[i] = 1;
  });

  MassSubset out;
  std::vector<CubeId> keep;
  std::array<std::int64_t, kMaxDim> c{};
  for (std::size_t i = 0; i < lv.count(); ++i) {
    if (!ok[i]) continue;
    lv.coord_of(i, c.data());
    keep.push_back(CubeId::make(lv.dim, depth, c));
    out.mass += lv.mass[i];
  }
  out.cubes = CubeSet::of(mu.dim(), depth, keep);
  return out;
}

std::vector<int> sparse_sequence(double t0, double epsilon, double beta,
                                 std::size_t count, int n_min) {
  if (!(t0 > 0.0)) throw std::invalid_argument("t0 must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(beta >= 1.0)) throw std::invalid_argument("beta must be at least 1");
  if (count == 0) throw std::invalid_argument("count must be positive");
  if (n_min < 1) throw std::invalid_argument("n_min must be positive");

  auto floor_beta = [&](std::int64_t n) {
    return static_cast<std::int64_t>(std::floor(beta * static_cast<double>(n)));
  };
  // gap inequality between consecutive terms, in exponent form:
  //   eps * floor(beta n_next) > floor(beta n_k) t0 + log2(6 / (1 - 2^-eps))
  double pad = std::log2(6.0 / (1.0 - std::exp2(-epsilon)));
  auto ok_pair = [&](std::int64_t a, std::int64_t b) {
    return epsilon * static_cast<double>(floor_beta(b)) >
           static_cast<double>(floor_beta(a)) * t0 + pad;
  };

  std::vector<int> out;
  out.reserve(count);
  std::int64_t n = n_min;
  out.push_back(static_cast<int>(n));
  while (out.size() < count) {
    std::int64_t next = n + 1;
    double need = (static_cast<double>(floor_beta(n)) * t0 + pad) / epsilon;
    if (need / beta > static_cast<double>(next))
      next = static_cast<std::int64_t>(need / beta);
    while (!ok_pair(n, next)) ++next;
    if (next > (std::int64_t{1} << 30))
      throw std::overflow_error("sparse sequence level exceeded 2^30");
    // re-check the defining mass inequality on the pair we are about to
    // emit, where neither side underflows
    if (static_cast<double>(floor_beta(n)) * t0 < 900.0 &&
        epsilon * static_cast<double>(floor_beta(next)) < 900.0) {
      double lhs = std::exp2(-static_cast<double>(floor_beta(n)) * t0) / 6.0;
      double rhs = std::exp2(-epsilon * static_cast<double>(floor_beta(next))) /
                   (1.0 - std::exp2(-epsilon));
      if (!(lhs > rhs))
        throw std::logic_error("sparse sequence gap check failed");
    }
    out.push_back(static_cast<int>(next));
    n = next;
  }
  return out;
}

}  // namespace limsuplab
