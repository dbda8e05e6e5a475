#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "limsuplab/dyadic.hpp"
#include "limsuplab/dynamics.hpp"
#include "limsuplab/io.hpp"
#include "limsuplab/limsup.hpp"
#include "limsuplab/measure.hpp"
#include "limsuplab/netmeasure.hpp"
#include "limsuplab/potential.hpp"
#include "limsuplab/rng.hpp"
#include "limsuplab/spectrum.hpp"

namespace py = pybind11;
using namespace limsuplab;

namespace {

CubeId make_cube(int dim, int level, const std::vector<std::int64_t>& coords) {
  if (coords.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("coordinate count must equal dim");
  std::array<std::int64_t, kMaxDim> c{};
  for (std::size_t i = 0; i < coords.size(); ++i) c[i] = coords[i];
  return CubeId::make(dim, level, c);
}

std::vector<std::int64_t> cube_coords(const CubeId& q) {
  std::vector<std::int64_t> out;
  for (int i = 0; i < q.dim; ++i) out.push_back(q.c[static_cast<std::size_t>(i)]);
  return out;
}

Point make_point(const std::vector<double>& xs) {
  if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxDim))
    throw std::invalid_argument("point needs 1 to 3 coordinates");
  Point p;
  p.dim = static_cast<int>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p.x[i] = xs[i];
  return p;
}

MapSpec map_from_name(const std::string& name, double a) {
  if (name == "doubling") return MapSpec::doubling_map();
  if (name == "tent") return MapSpec::tent_map();
  if (name == "quadratic") return MapSpec::quadratic_map(a);
  throw std::invalid_argument("unknown map: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "dyadic-cube measures, inhomogeneous energies, and limsup experiments";

  py::class_<CubeId>(m, "CubeId")
      .def_static("make", &make_cube, py::arg("dim"), py::arg("level"),
                  py::arg("coords"))
      .def_static("root", &CubeId::root, py::arg("dim"))
      .def_readonly("dim", &CubeId::dim)
      .def_readonly("level", &CubeId::level)
      .def_property_readonly("coords", &cube_coords)
      .def("__eq__", [](const CubeId& a, const CubeId& b) { return a == b; })
      .def("__lt__", [](const CubeId& a, const CubeId& b) { return a < b; })
      .def("__repr__", [](const CubeId& q) {
        std::string s = "CubeId(level=" + std::to_string(q.level) + ", coords=[";
        for (int i = 0; i < q.dim; ++i)
          s += (i ? "," : "") + std::to_string(q.c[static_cast<std::size_t>(i)]);
        return s + "])";
      });

  py::class_<GridOffset>(m, "GridOffset")
      .def_static("origin", &GridOffset::origin, py::arg("dim"))
      .def_readonly("dim", &GridOffset::dim)
      .def_readwrite("min_level", &GridOffset::min_level)
      .def_readwrite("max_level", &GridOffset::max_level);

  py::class_<Point>(m, "Point")
      .def(py::init(&make_point), py::arg("coords"))
      .def(py::init<double>(), py::arg("x"))
      .def_readonly("dim", &Point::dim)
      .def_property_readonly("coords", [](const Point& p) {
        return std::vector<double>(p.x.begin(), p.x.begin() + p.dim);
      });

  m.def("cube_of", &cube_of, py::arg("grid"), py::arg("point"), py::arg("level"));
  m.def("cube_side", &cube_side, py::arg("level"));

  py::class_<CubeSet>(m, "CubeSet")
      .def_static("of", &CubeSet::of, py::arg("dim"), py::arg("depth"),
                  py::arg("cubes"))
      .def_static("full", &CubeSet::full, py::arg("base"), py::arg("depth"))
      .def("empty", &CubeSet::empty)
      .def("size", &CubeSet::size)
      .def("depth", &CubeSet::depth)
      .def("cubes", &CubeSet::cubes)
      .def("contains_cube", &CubeSet::contains_cube, py::arg("q"))
      .def("intersects_cube", &CubeSet::intersects_cube, py::arg("q"))
      .def("intersect", &CubeSet::intersect, py::arg("other"))
      .def("unite", &CubeSet::unite, py::arg("other"));

  py::class_<TreeMeasure>(m, "TreeMeasure")
      .def_static(
          "from_weighted_cubes",
          [](const GridOffset& g, const CubeId& base,
             const std::vector<std::pair<CubeId, double>>& leaves) {
            return TreeMeasure::from_weighted_cubes(g, base, leaves);
          },
          py::arg("grid"), py::arg("base"), py::arg("leaves"))
      .def("valid", &TreeMeasure::valid)
      .def("depth", &TreeMeasure::depth)
      .def("top_level", &TreeMeasure::top_level)
      .def("total", &TreeMeasure::total)
      .def("base", &TreeMeasure::base)
      .def("grid", &TreeMeasure::grid)
      .def("mass", &TreeMeasure::mass, py::arg("cube"))
      .def("normalized", &TreeMeasure::normalized)
      .def("restrict_to", &TreeMeasure::restrict_to, py::arg("set"),
           py::arg("renormalize") = false)
      .def("leaf_nodes", &TreeMeasure::leaf_nodes)
      .def("sample", [](const TreeMeasure& mu, std::uint64_t seed) {
        rng::Stream rs(seed, "py-sample");
        return mu.sample(rs);
      }, py::arg("seed"));

  py::class_<MapSpec>(m, "MapSpec")
      .def_static("named", &map_from_name, py::arg("name"), py::arg("a") = 2.0)
      .def("apply", &MapSpec::apply, py::arg("x"));

  py::class_<GibbsSpec>(m, "GibbsSpec")
      .def_static("bernoulli", &GibbsSpec::bernoulli, py::arg("w0"), py::arg("w1"))
      .def_static("markov_chain", &GibbsSpec::markov_chain, py::arg("rows"))
      .def("entropy", &GibbsSpec::entropy);

  m.def(
      "invariant_measure",
      [](const MapSpec& map, std::optional<GibbsSpec> gibbs, int depth) {
        bool empirical = false;
        TreeMeasure mu = invariant_measure(map, gibbs, depth, &empirical);
        return py::make_tuple(mu, empirical);
      },
      py::arg("map"), py::arg("gibbs"), py::arg("depth"),
      "returns (measure, empirical_flag)");

  m.def(
      "orbit",
      [](const MapSpec& map, double x0, std::size_t n) {
        std::vector<double> out;
        for (const Point& p : orbit(map, Point(x0), n)) out.push_back(p.x[0]);
        return out;
      },
      py::arg("map"), py::arg("x0"), py::arg("n"));

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("t1", &DecayFit::t1)
      .def_readonly("c1", &DecayFit::c1)
      .def_readonly("holds", &DecayFit::holds);
  m.def("measure_decay_check", &measure_decay_check, py::arg("mu"),
        py::arg("level_lo"), py::arg("level_hi"));

  py::class_<BenedicksCarlesonCheck>(m, "BenedicksCarlesonCheck")
      .def_readonly("a", &BenedicksCarlesonCheck::a)
      .def_readonly("gamma", &BenedicksCarlesonCheck::gamma)
      .def_readonly("holds", &BenedicksCarlesonCheck::holds)
      .def_readonly("first_failure", &BenedicksCarlesonCheck::first_failure)
      .def_readonly("orbit_abs", &BenedicksCarlesonCheck::orbit_abs)
      .def_readonly("log2_deriv", &BenedicksCarlesonCheck::log2_deriv);
  m.def("bc_check", &bc_check, py::arg("a"), py::arg("gamma"), py::arg("n"));

  py::class_<EnergyReport>(m, "EnergyReport")
      .def_readonly("value", &EnergyReport::value)
      .def_readonly("infinite", &EnergyReport::infinite)
      .def_readonly("per_level", &EnergyReport::per_level);
  m.def(
      "energy_tree",
      [](const TreeMeasure& mu, const TreeMeasure& nu, double theta,
         std::optional<int> truncation_level) {
        EnergyParams p;
        p.theta = theta;
        p.truncation_level = truncation_level;
        return energy_tree(mu, nu, p);
      },
      py::arg("mu"), py::arg("nu"), py::arg("theta"),
      py::arg("truncation_level") = std::nullopt);

  py::class_<CoverResult>(m, "CoverResult")
      .def_readonly("value", &CoverResult::value)
      .def_readonly("cover", &CoverResult::cover)
      .def_readonly("min_level", &CoverResult::min_level)
      .def_readonly("max_level", &CoverResult::max_level);
  m.def("net_measure", &net_measure, py::arg("mu"), py::arg("set"),
        py::arg("theta"), py::arg("min_level"), py::arg("max_level"));
  m.def("hausdorff_net_measure", &hausdorff_net_measure, py::arg("set"),
        py::arg("s"), py::arg("delta_level"));

  py::class_<BandCount>(m, "BandCount")
      .def_readonly("n_plus", &BandCount::n_plus)
      .def_readonly("n_minus", &BandCount::n_minus)
      .def_readonly("band", &BandCount::band);
  m.def("band_counts", &band_counts, py::arg("mu"), py::arg("s"),
        py::arg("epsilon"), py::arg("n"));

  py::class_<SpectrumEstimate>(m, "SpectrumEstimate")
      .def_readonly("s_grid", &SpectrumEstimate::s_grid)
      .def_readonly("epsilon_grid", &SpectrumEstimate::epsilon_grid)
      .def_readonly("g", &SpectrumEstimate::g)
      .def_readonly("g_per_epsilon", &SpectrumEstimate::g_per_epsilon)
      .def_readonly("threshold", &SpectrumEstimate::threshold)
      .def_readonly("threshold_per_epsilon",
                    &SpectrumEstimate::threshold_per_epsilon);
  m.def("g_spectrum", &g_spectrum, py::arg("mu"), py::arg("s_grid"),
        py::arg("epsilon_grid"), py::arg("level_lo"), py::arg("level_hi"));
  m.def("s_of_mu", &s_of_mu, py::arg("spectrum"));

  py::class_<LocalDimension>(m, "LocalDimension")
      .def_readonly("slope", &LocalDimension::slope)
      .def_readonly("residual", &LocalDimension::residual)
      .def_readonly("defined", &LocalDimension::defined);
  m.def("local_dimension", &local_dimension, py::arg("mu"), py::arg("x"),
        py::arg("level_lo"), py::arg("level_hi"));

  py::class_<DimBounds>(m, "DimBounds")
      .def_readonly("lower", &DimBounds::lower)
      .def_readonly("upper", &DimBounds::upper)
      .def_readonly("median", &DimBounds::median)
      .def_readonly("undefined_count", &DimBounds::undefined_count);
  m.def("dim_bounds_of_measure", &dim_bounds_of_measure, py::arg("mu"),
        py::arg("samples"), py::arg("level_lo"), py::arg("level_hi"),
        py::arg("seed") = 0x51a75eedull);

  py::class_<LimsupConfig> lc(m, "LimsupConfig");
  py::enum_<LimsupConfig::Centers>(lc, "Centers")
      .value("random", LimsupConfig::Centers::random)
      .value("orbit", LimsupConfig::Centers::orbit);
  lc.def(py::init<>())
      .def_readwrite("alpha", &LimsupConfig::alpha)
      .def_readwrite("beta", &LimsupConfig::beta)
      .def_readwrite("k0", &LimsupConfig::k0)
      .def_readwrite("K", &LimsupConfig::K)
      .def_readwrite("centers", &LimsupConfig::centers)
      .def_readwrite("map", &LimsupConfig::map)
      .def_readwrite("orbit_p_one", &LimsupConfig::orbit_p_one)
      .def_readwrite("bound_factor", &LimsupConfig::bound_factor)
      .def("depth_of", &LimsupConfig::depth_of, py::arg("k"))
      .def("validate", &LimsupConfig::validate);

  py::class_<LimsupRaster>(m, "LimsupRaster")
      .def_readonly("k", &LimsupRaster::k)
      .def_readonly("level", &LimsupRaster::level)
      .def_readonly("cover", &LimsupRaster::cover)
      .def_readonly("running", &LimsupRaster::running);
  m.def(
      "build_limsup",
      [](const TreeMeasure& mu, const LimsupConfig& cfg, std::uint64_t seed) {
        return build_limsup(mu, cfg, draw_centers(mu, cfg, seed));
      },
      py::arg("mu"), py::arg("config"), py::arg("seed"));

  py::class_<BlockEnergy>(m, "BlockEnergy")
      .def_readonly("k", &BlockEnergy::k)
      .def_readonly("level", &BlockEnergy::level)
      .def_readonly("theta", &BlockEnergy::theta)
      .def_readonly("value", &BlockEnergy::value)
      .def_readonly("e1", &BlockEnergy::e1)
      .def_readonly("e2", &BlockEnergy::e2)
      .def_readonly("c_k", &BlockEnergy::c_k)
      .def_readonly("kernel_bound", &BlockEnergy::kernel_bound)
      .def_readonly("centers_total", &BlockEnergy::centers_total)
      .def_readonly("centers_dropped", &BlockEnergy::centers_dropped)
      .def_readonly("support_in_balls", &BlockEnergy::support_in_balls);

  py::class_<EnergyExperiment>(m, "EnergyExperiment")
      .def_readonly("t1", &EnergyExperiment::t1)
      .def_readonly("rows", &EnergyExperiment::rows)
      .def_readonly("thetas", &EnergyExperiment::thetas)
      .def("series", &EnergyExperiment::series, py::arg("theta"))
      .def("sup_energy", &EnergyExperiment::sup_energy, py::arg("theta"))
      .def("bounded", &EnergyExperiment::bounded, py::arg("theta"),
           py::arg("factor"));
  m.def(
      "block_energy_experiment",
      [](const TreeMeasure& mu, const LimsupConfig& cfg,
         const std::vector<double>& thetas, std::uint64_t seed) {
        return block_energy_experiment(mu, cfg, thetas,
                                       draw_centers(mu, cfg, seed));
      },
      py::arg("mu"), py::arg("config"), py::arg("thetas"), py::arg("seed"));

  py::class_<DimensionEstimate>(m, "DimensionEstimate")
      .def_readonly("theta_star", &DimensionEstimate::theta_star)
      .def_readonly("dim_lower", &DimensionEstimate::dim_lower)
      .def_readonly("dim_upper", &DimensionEstimate::dim_upper)
      .def_readonly("udim", &DimensionEstimate::udim)
      .def_readonly("bounded_votes", &DimensionEstimate::bounded_votes)
      .def_readonly("theta_grid", &DimensionEstimate::theta_grid);
  m.def("dimension_threshold", &dimension_threshold, py::arg("mu"),
        py::arg("config"), py::arg("theta_grid"), py::arg("seeds"));

  py::class_<MembershipReport>(m, "MembershipReport")
      .def_readonly("eta", &MembershipReport::eta)
      .def_readonly("min_ratio", &MembershipReport::min_ratio)
      .def_readonly("passes", &MembershipReport::passes);

  py::class_<IntersectionReport>(m, "IntersectionReport")
      .def_readonly("intersection", &IntersectionReport::intersection)
      .def_readonly("empty", &IntersectionReport::empty)
      .def_readonly("membership", &IntersectionReport::membership)
      .def_readonly("scaling_dim", &IntersectionReport::scaling_dim)
      .def_readonly("family_counts", &IntersectionReport::family_counts);
  m.def("intersection_experiment", &intersection_experiment, py::arg("mu"),
        py::arg("configs"), py::arg("seeds"), py::arg("eta"), py::arg("L"));

  m.def("write_measure", &io::write_measure, py::arg("path"), py::arg("mu"));
  m.def("read_measure", &io::read_measure, py::arg("path"));
  m.def("write_cubeset", &io::write_cubeset, py::arg("path"), py::arg("set"));
  m.def("read_cubeset", &io::read_cubeset, py::arg("path"));
  m.def("file_hash", &io::file_hash, py::arg("path"));
}
