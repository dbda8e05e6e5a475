#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/rng.hpp"

namespace limsuplab {

struct MassValue {
  double value = 0.0;
  bool extrapolated = false;
};

// One level of a tree measure; nodes sorted lexicographically by coordinates.
// A level may switch to a dense layout (d=1, contiguous coordinate run) in
// which case coords is empty and the run starts at origin.
struct LevelNodes {
  int dim = 1;
  int level = 0;
  bool dense = false;
  std::int64_t origin = 0;
  std::vector<std::int64_t> coords;  // count*dim entries when sparse
  std::vector<double> mass;

  std::size_t count() const { return mass.size(); }
  void coord_of(std::size_t i, std::int64_t* out) const {
    if (dense) {
      out[0] = origin + static_cast<std::int64_t>(i);
    } else {
      for (int k = 0; k < dim; ++k)
        out[k] = coords[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)];
    }
  }
  // index of the node with these coordinates, or npos
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(const std::int64_t* c) const;
  void compact_if_contiguous();
};

class CubeSet;

// A mass distribution stored on the dyadic tree: every cube with positive
// mass between top_level and depth has a node, and parents are exact sums of
// their children. Base may be a cube or root (support straddling the grid
// origin). Queries below depth use an optional exact backend (closed-form
// CDF / cylinder products) or flagged uniform-split extrapolation.
class TreeMeasure {
 public:
  using DeepMassFn = std::function<double(const CubeId&)>;

  TreeMeasure() = default;

  static TreeMeasure from_samples(const GridOffset& grid, const CubeId& base,
                                  const std::vector<Point>& pts,
                                  const std::vector<double>& weights, int depth,
                                  bool normalize = true);

  struct DensityReport {
    std::size_t nonfinite_samples = 0;
    std::size_t fallback_nodes = 0;
  };
  static TreeMeasure from_density(const GridOffset& grid, const CubeId& base,
                                  const std::function<double(const Point&)>& f,
                                  int depth, int quad_per_axis = 4,
                                  DensityReport* report = nullptr);

  // d=1, base [a,b) with integer endpoints; leaf masses from exact CDF
  // differences, normalized; keeps the CDF as an exact deep backend.
  static TreeMeasure from_cdf(const GridOffset& grid, double a, double b,
                              const std::function<double(double)>& cdf, int depth);

  // leaves given as (cube, mass) at a common level; internals aggregated
  static TreeMeasure from_weighted_cubes(const GridOffset& grid, const CubeId& base,
                                         const std::vector<std::pair<CubeId, double>>& leaves);

  // dense per-level masses on [0,1) (d=1); levels[n] has 2^n entries
  static TreeMeasure from_dense_levels(const GridOffset& grid,
                                       std::vector<std::vector<double>> levels);

  bool valid() const { return !levels_.empty(); }
  int dim() const { return grid_.dim; }
  const GridOffset& grid() const { return grid_; }
  const CubeId& base() const { return base_; }
  int top_level() const { return top_level_; }
  int depth() const { return depth_; }
  double total() const { return total_; }

  MassValue mass_ex(const CubeId& q) const;
  double mass(const CubeId& q) const { return mass_ex(q).value; }

  bool has_deep() const { return static_cast<bool>(deep_); }
  bool deep_exact() const { return deep_exact_; }
  void set_deep(DeepMassFn fn, bool exact) {
    deep_ = std::move(fn);
    deep_exact_ = exact;
  }

  const LevelNodes& level(int n) const;
  bool has_level(int n) const { return n >= top_level_ && n <= depth_; }

  // restriction: keep only mass inside (resp. outside) the union of S;
  // masses re-aggregated; renormalize rescales to a probability measure
  TreeMeasure restrict_to(const CubeSet& S, bool renormalize = false) const;
  TreeMeasure restrict_out(const CubeSet& S) const;
  // mu restricted to one cube, rebased there (total = mass(D))
  TreeMeasure slice(const CubeId& D) const;

  TreeMeasure normalized() const;  // scale to total 1, parents rebuilt

  // max |mass(D) - sum of children| over internal nodes
  double additivity_defect() const;

  // draw a point: tree descent by mass, uniform inside the final leaf
  Point sample(rng::Stream& rs) const;

  // leaves for serialization: the depth-level nodes
  std::vector<std::pair<CubeId, double>> leaf_nodes() const;

 private:
  friend class TreeBuilder;
  GridOffset grid_;
  CubeId base_ = CubeId::root(1);
  int top_level_ = 0;
  int depth_ = 0;
  double total_ = 0.0;
  std::vector<LevelNodes> levels_;  // index l -> level top_level_+l
  DeepMassFn deep_;
  bool deep_exact_ = false;

  void aggregate_from_leaves();  // rebuild levels above the deepest
  void check_not_atomic() const;
  static TreeMeasure build(const GridOffset& grid, const CubeId& base, int depth,
                           LevelNodes leaf_level);
};

// finitely many weighted points; duplicate coordinates merged at construction
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  static AtomicMeasure make(const GridOffset& grid, std::vector<Point> pts,
                            std::vector<double> weights);

  std::size_t size() const { return pts_.size(); }
  const Point& point(std::size_t i) const { return pts_[i]; }
  double weight(std::size_t i) const { return w_[i]; }
  double total() const { return total_; }
  const GridOffset& grid() const { return grid_; }

  double mass_in(const CubeId& q) const;

  AtomicMeasure reweighted(const std::vector<double>& new_w) const;

 private:
  GridOffset grid_;
  std::vector<Point> pts_;  // sorted lexicographically
  std::vector<double> w_;
  std::vector<double> prefix_;  // d=1: prefix sums for O(log) cube mass
  double total_ = 0.0;
};

// canonical antichain of cubes (no member contains another; full sibling
// groups coalesced into their parent)
class CubeSet {
 public:
  CubeSet() = default;
  CubeSet(int dim, int depth) : dim_(dim), depth_(depth) {}
  static CubeSet of(int dim, int depth, std::vector<CubeId> cubes);
  static CubeSet full(const CubeId& base, int depth);

  bool empty() const { return cubes_.empty(); }
  std::size_t size() const { return cubes_.size(); }
  int dim() const { return dim_; }
  int depth() const { return depth_; }
  const std::vector<CubeId>& cubes() const { return cubes_; }

  bool contains_cube(const CubeId& q) const;    // q inside some member
  bool intersects_cube(const CubeId& q) const;  // shares volume with a member
  bool contains_point(const GridOffset& grid, const Point& x) const;

  CubeSet intersect(const CubeSet& other) const;
  CubeSet unite(const CubeSet& other) const;

  // members lying inside q (q itself if contained in a member)
  std::vector<CubeId> members_within(const CubeId& q) const;

 private:
  int dim_ = 1;
  int depth_ = 0;
  std::vector<CubeId> cubes_;                       // sorted
  std::map<int, std::vector<std::size_t>> levels_;  // level -> indices
  void index_levels();
  void normalize();
  std::pair<std::size_t, std::size_t> axis0_range(const std::vector<std::size_t>& idxs,
                                                  int lvl, const CubeId& q) const;
};

// total-variation distance at one level: half the L1 gap over level-n cubes
double weak_distance(const TreeMeasure& a, const TreeMeasure& b, int level);

}  // namespace limsuplab
