#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace limsuplab {

inline constexpr int kMaxDim = 3;

// Half-open dyadic cubes on a shifted grid: at level n the cubes have side
// 2^-n and corners P + k*2^-n. Levels may be negative (coarser than unit
// scale), down to grid.min_level. Coordinates are exact int64 grid indices.
enum class CubeKind : std::uint8_t { cube, root, empty };

struct CubeId {
  CubeKind kind = CubeKind::cube;
  std::int8_t dim = 1;
  std::int32_t level = 0;
  std::array<std::int64_t, kMaxDim> c{};

  static CubeId root(int dim) {
    CubeId q;
    q.kind = CubeKind::root;
    q.dim = static_cast<std::int8_t>(dim);
    return q;
  }
  static CubeId empty(int dim) {
    CubeId q;
    q.kind = CubeKind::empty;
    q.dim = static_cast<std::int8_t>(dim);
    return q;
  }
  static CubeId make(int dim, int level, std::array<std::int64_t, kMaxDim> c) {
    CubeId q;
    q.dim = static_cast<std::int8_t>(dim);
    q.level = level;
    q.c = c;
    return q;
  }

  bool is_cube() const { return kind == CubeKind::cube; }
  bool is_root() const { return kind == CubeKind::root; }
  bool is_empty() const { return kind == CubeKind::empty; }

  friend bool operator==(const CubeId& a, const CubeId& b) {
    if (a.kind != b.kind || a.dim != b.dim) return false;
    if (a.kind != CubeKind::cube) return true;
    if (a.level != b.level) return false;
    for (int i = 0; i < a.dim; ++i)
      if (a.c[i] != b.c[i]) return false;
    return true;
  }
  friend bool operator!=(const CubeId& a, const CubeId& b) { return !(a == b); }
  // ordering: by level, then coords (root first, empty last)
  friend bool operator<(const CubeId& a, const CubeId& b) {
    auto rank = [](const CubeId& q) {
      return q.is_root() ? 0 : q.is_empty() ? 2 : 1;
    };
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    if (!a.is_cube()) return false;
    if (a.level != b.level) return a.level < b.level;
    for (int i = 0; i < a.dim; ++i)
      if (a.c[i] != b.c[i]) return a.c[i] < b.c[i];
    return false;
  }
};

struct Point {
  int dim = 1;
  std::array<double, kMaxDim> x{};

  Point() = default;
  explicit Point(double x0) : dim(1) { x[0] = x0; }
  Point(double x0, double x1) : dim(2) {
    x[0] = x0;
    x[1] = x1;
  }
  Point(double x0, double x1, double x2) : dim(3) {
    x[0] = x0;
    x[1] = x1;
    x[2] = x2;
  }
  double operator[](int i) const { return x[static_cast<std::size_t>(i)]; }
};

// Grid offset P plus the level range the grid supports. Cube arithmetic uses
// plain doubles; with the default P=0 the scalings by 2^n are exact for
// |n| <= max_level. A pseudo-random P is available to push a finite point set
// off all grid boundaries.
struct GridOffset {
  int dim = 1;
  std::array<double, kMaxDim> p{};
  int min_level = -16;
  int max_level = 52;

  static GridOffset origin(int dim) {
    GridOffset g;
    g.dim = dim;
    return g;
  }
  // deterministic pseudo-random shift in [0, 2^-8) per axis
  static GridOffset shifted(int dim, std::uint64_t seed);
};

namespace detail {
inline std::int64_t floor_to_i64(double v) {
  double f = std::floor(v);
  if (!(f >= -9.2e18 && f <= 9.2e18))
    throw std::overflow_error("cube coordinate overflow");
  return static_cast<std::int64_t>(f);
}
}  // namespace detail

inline double cube_side(int level) { return std::ldexp(1.0, -level); }

inline double cube_diameter(int dim, int level) {
  return std::sqrt(static_cast<double>(dim)) * cube_side(level);
}

inline double cube_diameter(const CubeId& q) {
  return cube_diameter(q.dim, q.level);
}

// cube of D_n containing x
inline CubeId cube_of(const GridOffset& g, const Point& x, int level) {
  if (x.dim != g.dim) throw std::invalid_argument("cube_of: dim mismatch");
  if (level < g.min_level || level > g.max_level)
    throw std::out_of_range("cube_of: level outside grid range");
  CubeId q;
  q.dim = static_cast<std::int8_t>(g.dim);
  q.level = level;
  for (int i = 0; i < g.dim; ++i)
    q.c[static_cast<std::size_t>(i)] =
        detail::floor_to_i64(std::ldexp(x[i] - g.p[static_cast<std::size_t>(i)], level));
  return q;
}

inline double cube_lo(const GridOffset& g, const CubeId& q, int axis) {
  return g.p[static_cast<std::size_t>(axis)] +
         std::ldexp(static_cast<double>(q.c[static_cast<std::size_t>(axis)]), -q.level);
}
inline double cube_hi(const GridOffset& g, const CubeId& q, int axis) {
  return g.p[static_cast<std::size_t>(axis)] +
         std::ldexp(static_cast<double>(q.c[static_cast<std::size_t>(axis)] + 1), -q.level);
}

inline bool cube_contains(const GridOffset& g, const CubeId& q, const Point& x) {
  if (q.is_root()) return true;
  if (q.is_empty()) return false;
  for (int i = 0; i < q.dim; ++i) {
    std::int64_t ci = detail::floor_to_i64(
        std::ldexp(x[i] - g.p[static_cast<std::size_t>(i)], q.level));
    if (ci != q.c[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

// ancestor at a coarser level (level <= q.level); floor-division by 2^k
inline CubeId ancestor(const CubeId& q, int level) {
  if (!q.is_cube()) return q;
  if (level > q.level) throw std::invalid_argument("ancestor: level finer than cube");
  CubeId a = q;
  a.level = level;
  int k = q.level - level;
  for (int i = 0; i < q.dim; ++i) {
    std::int64_t v = q.c[static_cast<std::size_t>(i)];
    a.c[static_cast<std::size_t>(i)] = v >> k;  // arithmetic shift: floor for negatives
  }
  return a;
}

inline CubeId parent(const CubeId& q) { return ancestor(q, q.level - 1); }

inline bool cube_contains_cube(const CubeId& outer, const CubeId& inner) {
  if (outer.is_root()) return true;
  if (outer.is_empty() || inner.is_empty()) return false;
  if (inner.is_root()) return false;
  if (outer.level > inner.level) return false;
  return ancestor(inner, outer.level) == outer;
}

// child index packs one bit per axis
inline CubeId child(const CubeId& q, unsigned index) {
  CubeId ch = q;
  ch.level = q.level + 1;
  for (int i = 0; i < q.dim; ++i)
    ch.c[static_cast<std::size_t>(i)] =
        2 * q.c[static_cast<std::size_t>(i)] + ((index >> i) & 1u);
  return ch;
}

inline unsigned child_count(int dim) { return 1u << dim; }

inline CubeId neighbor(const CubeId& q, int axis, std::int64_t delta) {
  CubeId n = q;
  n.c[static_cast<std::size_t>(axis)] += delta;
  return n;
}

namespace detail {
inline bool same_cube_at(const GridOffset& g, const Point& x, const Point& y, int level) {
  for (int i = 0; i < g.dim; ++i) {
    double px = g.p[static_cast<std::size_t>(i)];
    if (std::floor(std::ldexp(x[i] - px, level)) !=
        std::floor(std::ldexp(y[i] - px, level)))
      return false;
  }
  return true;
}
}  // namespace detail

// Minimal common cube Q(x,y): the smallest grid cube containing both points.
// Returns empty when x == y, root when no supported cube contains both
// (different signs relative to P, or separation beyond the min_level scale).
// Distinct points closer than 2^-max_level report the max_level cube.
inline CubeId common_cube(const GridOffset& g, const Point& x, const Point& y) {
  if (x.dim != g.dim || y.dim != g.dim)
    throw std::invalid_argument("common_cube: dim mismatch");
  bool equal = true;
  for (int i = 0; i < g.dim; ++i)
    if (x[i] != y[i]) equal = false;
  if (equal) return CubeId::empty(g.dim);
  if (!detail::same_cube_at(g, x, y, g.min_level)) return CubeId::root(g.dim);
  int lo = g.min_level, hi = g.max_level;
  if (detail::same_cube_at(g, x, y, hi)) return cube_of(g, x, hi);
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (detail::same_cube_at(g, x, y, mid))
      lo = mid;
    else
      hi = mid;
  }
  return cube_of(g, x, lo);
}

// Q_m(x,y): common cube truncated at level m; for x == y this is the level-m
// cube containing x.
inline CubeId common_cube_capped(const GridOffset& g, const Point& x, const Point& y,
                                 int m) {
  CubeId q = common_cube(g, x, y);
  if (q.is_empty()) return cube_of(g, x, m);
  if (q.is_root()) return q;  // no common cube at any supported level
  if (q.level > m) return ancestor(q, m);
  return q;
}

// true when some coordinate of x sits exactly on a level-n grid line
inline bool on_boundary(const GridOffset& g, const Point& x, int level) {
  for (int i = 0; i < g.dim; ++i) {
    double v = std::ldexp(x[i] - g.p[static_cast<std::size_t>(i)], level);
    if (v == std::floor(v)) return true;
  }
  return false;
}

std::string cube_to_string(const CubeId& q);
CubeId cube_from_string(const std::string& s);

struct CubeIdHash {
  std::size_t operator()(const CubeId& q) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(q.kind));
    mix(static_cast<std::uint64_t>(q.level));
    for (int i = 0; i < q.dim; ++i)
      mix(static_cast<std::uint64_t>(q.c[static_cast<std::size_t>(i)]));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace limsuplab
