// Experiment harness: seeded runs over the library modules, CSV tables,
// JSON summaries, and a manifest of every emitted file with content hashes.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "limsuplab/dynamics.hpp"
#include "limsuplab/io.hpp"
#include "limsuplab/limsup.hpp"
#include "limsuplab/netmeasure.hpp"
#include "limsuplab/potential.hpp"
#include "limsuplab/rng.hpp"
#include "limsuplab/spectrum.hpp"

using json = nlohmann::json;
using namespace limsuplab;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(',') != std::string::npos) {
    std::string item;
    std::istringstream is(spec);
    while (std::getline(is, item, ',')) out.push_back(std::stod(item));
    return out;
  }
  auto c1 = spec.find(':');
  if (c1 == std::string::npos) return {std::stod(spec)};
  auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw std::invalid_argument("grid must be lo:hi:step, got " + spec);
  double lo = std::stod(spec.substr(0, c1));
  double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  double step = std::stod(spec.substr(c2 + 1));
  if (!(step > 0.0) || hi < lo)
    throw std::invalid_argument("bad grid bounds: " + spec);
  for (int i = 0;; ++i) {
    double v = lo + i * step;
    if (v > hi + step * 1e-6) break;
    out.push_back(v);
  }
  return out;
}

std::pair<int, int> parse_blocks(const std::string& spec) {
  auto c = spec.find(':');
  if (c == std::string::npos)
    throw std::invalid_argument("blocks must be k0:K, got " + spec);
  return {std::stoi(spec.substr(0, c)), std::stoi(spec.substr(c + 1))};
}

std::pair<int, int> parse_levels(const std::string& spec) {
  auto c = spec.find(':');
  if (c == std::string::npos)
    throw std::invalid_argument("levels must be lo:hi, got " + spec);
  return {std::stoi(spec.substr(0, c)), std::stoi(spec.substr(c + 1))};
}

double tail_param(const std::string& spec, double fallback) {
  if (spec.empty()) return fallback;
  auto eq = spec.find('=');
  return std::stod(eq == std::string::npos ? spec : spec.substr(eq + 1));
}

MapSpec parse_map(const std::string& spec) {
  auto c = spec.find(':');
  std::string name = spec.substr(0, c);
  std::string arg = c == std::string::npos ? "" : spec.substr(c + 1);
  if (name == "doubling") return MapSpec::doubling_map();
  if (name == "tent") return MapSpec::tent_map();
  if (name == "quadratic") return MapSpec::quadratic_map(tail_param(arg, 2.0));
  throw std::invalid_argument("unknown map: " + spec);
}

GibbsSpec parse_gibbs(const std::string& spec) {
  auto c = spec.find(':');
  std::string name = spec.substr(0, c);
  std::string arg = c == std::string::npos ? "" : spec.substr(c + 1);
  if (name == "bernoulli") {
    double w1 = tail_param(arg, 0.5);
    return GibbsSpec::bernoulli(1.0 - w1, w1);
  }
  if (name == "markov") {
    auto comma = arg.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("markov wants p01,p10: " + spec);
    double p01 = std::stod(arg.substr(0, comma));
    double p10 = std::stod(arg.substr(comma + 1));
    return GibbsSpec::markov_chain({{{1.0 - p01, p01}, {p10, 1.0 - p10}}});
  }
  throw std::invalid_argument("unknown gibbs spec: " + spec);
}

// Shared measure source: a file, a named density, or a map's invariant tree.
struct MeasureOpts {
  std::string file;
  std::string density;
  std::string map_spec;
  std::string gibbs_spec;
  int depth = 12;

  void attach(CLI::App* sub, bool with_map = true) {
    sub->add_option("--measure", file, "measure file path");
    sub->add_option("--density", density,
                    "uniform | arcsine | bernoulli:W1 | markov:P01,P10");
    if (with_map) {
      sub->add_option("--map", map_spec, "doubling | tent | quadratic:a=A");
      sub->add_option("--gibbs", gibbs_spec, "bernoulli:W1 | markov:P01,P10");
    }
    sub->add_option("--depth", depth, "tree depth for generated measures");
  }

  TreeMeasure build(bool* empirical = nullptr) const {
    if (!file.empty()) return io::read_measure(file);
    if (!density.empty()) {
      if (density == "uniform")
        return invariant_measure(MapSpec::doubling_map(), std::nullopt, depth,
                                 empirical);
      if (density == "arcsine")
        return invariant_measure(MapSpec::quadratic_map(2.0), std::nullopt, depth,
                                 empirical);
      if (density.rfind("bernoulli", 0) == 0 || density.rfind("markov", 0) == 0)
        return invariant_measure(MapSpec::doubling_map(), parse_gibbs(density),
                                 depth, empirical);
      throw std::invalid_argument("unknown density: " + density);
    }
    if (!map_spec.empty()) {
      std::optional<GibbsSpec> gibbs;
      if (!gibbs_spec.empty()) gibbs = parse_gibbs(gibbs_spec);
      return invariant_measure(parse_map(map_spec), gibbs, depth, empirical);
    }
    return invariant_measure(MapSpec::doubling_map(), std::nullopt, depth,
                             empirical);
  }
};

// Output directory plus the manifest of emitted files.
struct Emitter {
  std::filesystem::path dir;
  json files = json::array();

  explicit Emitter(const std::string& d) : dir(d) {
    std::filesystem::create_directories(dir);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  void note(const std::string& name) {
    files.push_back({{"file", name},
                     {"bytes", std::filesystem::file_size(path(name))},
                     {"fnv1a", io::file_hash(path(name))}});
  }
  void finish(const std::string& command, const json& config) {
    std::sort(files.begin(), files.end(), [](const json& a, const json& b) {
      return a.at("file").get<std::string>() < b.at("file").get<std::string>();
    });
    json manifest{{"command", command}, {"config", config}, {"files", files}};
    std::ofstream f(path("manifest.json"));
    if (!f) throw std::runtime_error("cannot write manifest");
    f << manifest.dump(2) << "\n";
  }
};

struct Csv {
  std::ofstream f;
  Csv(const std::string& path, const std::string& head) : f(path) {
    if (!f) throw std::runtime_error("cannot write " + path);
    f << head << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      f << (i ? "," : "") << cells[i];
    f << "\n";
  }
};

int default_fit_lo(const TreeMeasure& mu) {
  return std::max(mu.top_level() + 1, (mu.top_level() + mu.depth()) / 2);
}

void run_spectrum(const MeasureOpts& src, const std::string& s_spec,
                  const std::string& eps_spec, const std::string& level_spec,
                  Emitter& out) {
  TreeMeasure mu = src.build();
  auto s_grid = parse_grid(s_spec);
  auto eps_grid = parse_grid(eps_spec);
  int lo = std::max(mu.top_level() + 1, 4), hi = mu.depth();
  if (!level_spec.empty()) std::tie(lo, hi) = parse_levels(level_spec);
  SpectrumEstimate spec = g_spectrum(mu, s_grid, eps_grid, lo, hi);

  Csv bands(out.path("bands.csv"), "s,epsilon,level,n_plus,n_minus,band");
  for (const auto& b : spec.bands)
    bands.row({num(b.s), num(b.epsilon), std::to_string(b.level),
               std::to_string(b.counts.n_plus), std::to_string(b.counts.n_minus),
               std::to_string(b.counts.band)});
  out.note("bands.csv");

  Csv g(out.path("spectrum.csv"), "epsilon,s,g");
  for (std::size_t e = 0; e < spec.epsilon_grid.size(); ++e)
    for (std::size_t i = 0; i < spec.s_grid.size(); ++i)
      g.row({num(spec.epsilon_grid[e]), num(spec.s_grid[i]),
             num(spec.g_per_epsilon[e][i])});
  out.note("spectrum.csv");

  json summary{{"s_of_mu", s_of_mu(spec)},
               {"threshold_trace", spec.threshold_per_epsilon},
               {"epsilon_grid", spec.epsilon_grid},
               {"level_lo", spec.level_lo},
               {"level_hi", spec.level_hi}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void run_energy(const MeasureOpts& src, const std::string& theta_spec,
                std::optional<int> truncation, Emitter& out) {
  TreeMeasure mu = src.build();
  auto thetas = parse_grid(theta_spec);
  Csv table(out.path("energy.csv"), "theta,value,infinite,level,contribution");
  json values = json::array();
  for (double theta : thetas) {
    EnergyParams params;
    params.theta = theta;
    params.truncation_level = truncation;
    EnergyReport rep = energy_tree(mu, mu, params);
    values.push_back(rep.infinite ? json() : json(rep.value));
    for (const auto& [lvl, v] : rep.per_level)
      table.row({num(theta), num(rep.value), rep.infinite ? "1" : "0",
                 std::to_string(lvl), num(v)});
  }
  out.note("energy.csv");
  json summary{{"thetas", thetas}, {"values", values}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void run_net_measure(const MeasureOpts& src, const std::string& set_file,
                     const std::string& theta_spec, const std::string& level_spec,
                     Emitter& out) {
  TreeMeasure mu = src.build();
  if (set_file.empty()) throw std::invalid_argument("net-measure needs --set");
  CubeSet E = io::read_cubeset(set_file);
  int lo = mu.top_level(), hi = mu.depth();
  if (!level_spec.empty()) std::tie(lo, hi) = parse_levels(level_spec);

  Csv table(out.path("net.csv"), "theta,value,cover_size,min_level,max_level");
  json values = json::array();
  auto thetas = parse_grid(theta_spec);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    CoverResult res = net_measure(mu, E, thetas[i], lo, hi);
    table.row({num(thetas[i]), num(res.value), std::to_string(res.cover.size()),
               std::to_string(res.min_level), std::to_string(res.max_level)});
    values.push_back(res.value);
    CubeSet cover = CubeSet::of(E.dim(), hi, res.cover);
    std::string name = "cover_" + std::to_string(i) + ".cubeset";
    io::write_cubeset(out.path(name), cover);
    out.note(name);
  }
  out.note("net.csv");
  json summary{{"thetas", thetas}, {"values", values}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void emit_threshold_experiment(const TreeMeasure& mu, const LimsupConfig& cfg,
                               const std::vector<double>& thetas,
                               const std::vector<std::uint64_t>& seeds,
                               Emitter& out) {
  Csv table(out.path("energies.csv"),
            "seed,k,level,theta,value,e1,e2,c_k,kernel_bound,centers,dropped,"
            "support_in_balls");
  double t1 = 0.0;
  for (std::uint64_t seed : seeds) {
    auto centers = draw_centers(mu, cfg, seed);
    EnergyExperiment exp = block_energy_experiment(mu, cfg, thetas, centers);
    t1 = exp.t1;
    for (const BlockEnergy& r : exp.rows)
      table.row({std::to_string(seed), std::to_string(r.k),
                 std::to_string(r.level), num(r.theta), num(r.value), num(r.e1),
                 num(r.e2), num(r.c_k), num(r.kernel_bound),
                 std::to_string(r.centers_total),
                 std::to_string(r.centers_dropped),
                 r.support_in_balls ? "1" : "0"});
  }
  out.note("energies.csv");

  auto rasters = build_limsup(mu, cfg, draw_centers(mu, cfg, seeds.front()));
  for (const LimsupRaster& blk : rasters) {
    std::string name = "block_" + std::to_string(blk.k) + ".cubeset";
    io::write_cubeset(out.path(name), blk.cover);
    out.note(name);
  }
  io::write_cubeset(out.path("running.cubeset"), rasters.back().running);
  out.note("running.cubeset");

  DimensionEstimate est = dimension_threshold(mu, cfg, thetas, seeds);
  json summary{{"theta_star", est.theta_star}, {"dim_lower", est.dim_lower},
               {"dim_upper", est.dim_upper},   {"udim", est.udim},
               {"theta_grid", est.theta_grid}, {"bounded_votes", est.bounded_votes},
               {"t1_diagnostic", t1}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void run_orbit(const std::string& map_spec, std::uint64_t seed, std::size_t len,
               double p_one, std::optional<double> x0, Emitter& out) {
  MapSpec map = parse_map(map_spec);
  Csv table(out.path("orbit.csv"), "n,x");
  if (map.kind == MapSpec::Kind::doubling && !x0) {
    SymbolicPoint sp = SymbolicPoint::random_weighted(seed, p_one);
    for (std::size_t n = 0; n <= len; ++n)
      table.row({std::to_string(n), num(sp.shifted(n).value())});
  } else {
    double start;
    if (x0) {
      start = *x0;
    } else {
      rng::Stream rs(seed, "orbit-start");
      double u = rs.next_double();
      start = map.kind == MapSpec::Kind::quadratic ? 2.0 * u - 1.0 : u;
    }
    auto o = orbit(map, Point(start), len);
    for (std::size_t n = 0; n < o.size(); ++n)
      table.row({std::to_string(n), num(o[n].x[0])});
  }
  out.note("orbit.csv");
}

void run_invariant(const MeasureOpts& src, const std::string& file_name,
                   Emitter& out) {
  bool empirical = false;
  TreeMeasure mu = src.build(&empirical);
  io::write_measure(out.path(file_name), mu);
  out.note(file_name);
  json summary{{"file", file_name},
               {"depth", mu.depth()},
               {"top_level", mu.top_level()},
               {"total", mu.total()},
               {"empirical", empirical}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void run_bc_check(double a, double gamma, int horizon, Emitter& out) {
  BenedicksCarlesonCheck res = bc_check(a, gamma, horizon);
  Csv table(out.path("orbit.csv"), "n,abs_x,log2_deriv");
  for (std::size_t n = 0; n < res.orbit_abs.size(); ++n)
    table.row({std::to_string(n + 1), num(res.orbit_abs[n]),
               num(res.log2_deriv[n])});
  out.note("orbit.csv");
  json summary{{"a", res.a},
               {"gamma", res.gamma},
               {"horizon", res.horizon},
               {"holds", res.holds},
               {"first_failure", res.first_failure}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

void run_dimension(const MeasureOpts& src, std::size_t samples,
                   const std::string& level_spec, Emitter& out) {
  TreeMeasure mu = src.build();
  int lo = default_fit_lo(mu), hi = mu.depth();
  if (!level_spec.empty()) std::tie(lo, hi) = parse_levels(level_spec);

  DimBounds bounds = dim_bounds_of_measure(mu, samples, lo, hi);
  DecayFit decay = measure_decay_check(mu, lo, hi);

  std::vector<double> s_grid, eps_grid{0.2, 0.1, 0.05};
  for (int i = 0; i <= 60; ++i) s_grid.push_back(0.025 * i);
  SpectrumEstimate spec =
      g_spectrum(mu, s_grid, eps_grid, std::max(mu.top_level() + 1, 4), hi);

  json summary{{"ldim_p5", bounds.lower},
               {"udim_p95", bounds.upper},
               {"median", bounds.median},
               {"undefined_samples", bounds.undefined_count},
               {"t1", decay.t1},
               {"c1", decay.c1},
               {"decay_holds", decay.holds},
               {"s_of_mu", s_of_mu(spec)}};
  std::ofstream f(out.path("summary.json"));
  f << summary.dump(2) << "\n";
  f.close();
  out.note("summary.json");
}

// --config JSON: flat object of flag values, injected ahead of the command
// line so explicit flags win under the take-last policy.
std::vector<std::string> with_config(std::vector<std::string> args) {
  std::string cfg_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) cfg_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) cfg_path = args[i].substr(9);
  }
  if (cfg_path.empty() || args.empty()) return args;
  std::ifstream f(cfg_path);
  if (!f) throw std::invalid_argument("cannot read config " + cfg_path);
  json j = json::parse(f);
  std::vector<std::string> injected;
  for (auto it = j.begin(); it != j.end(); ++it) {
    injected.push_back("--" + it.key());
    const json& v = it.value();
    if (v.is_string()) injected.push_back(v.get<std::string>());
    else if (v.is_number_integer()) injected.push_back(std::to_string(v.get<long long>()));
    else if (v.is_number()) injected.push_back(num(v.get<double>()));
    else if (v.is_boolean()) injected.pop_back();  // flags: presence only
    else throw std::invalid_argument("config values must be scalars");
    if (v.is_boolean() && v.get<bool>()) injected.push_back("--" + it.key());
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyadic-cube measure and limsup-set experiments"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  int threads = 0;
  std::string config_file;

  auto* sp_spectrum = app.add_subcommand("spectrum", "coarse mass spectrum");
  auto* sp_energy = app.add_subcommand("energy", "self-energy of a measure");
  auto* sp_net = app.add_subcommand("net-measure", "optimal dyadic cover cost");
  auto* sp_random = app.add_subcommand("random-limsup", "random limsup threshold");
  auto* sp_target = app.add_subcommand("shrinking-target", "orbit limsup threshold");
  auto* sp_orbit = app.add_subcommand("orbit", "iterate a map");
  auto* sp_invariant = app.add_subcommand("invariant", "invariant measure to file");
  auto* sp_bc = app.add_subcommand("bc-check", "quadratic derivative growth check");
  auto* sp_dimension = app.add_subcommand("dimension", "dimension diagnostics");

  MeasureOpts m_spectrum, m_energy, m_net, m_random, m_dimension;
  std::string s_grid = "0:1.5:0.05", eps_grid = "0.2,0.1,0.05", levels;
  std::string theta = "0.5", set_file, blocks = "4:12";
  int truncation = -1;
  std::uint64_t seed = 0x11b5;
  int seed_count = 20;
  double alpha = 2.0, beta = 2.1, bound_factor = 2.0, p_one = 0.5;
  std::string target_map = "doubling", target_gibbs;
  std::vector<std::uint64_t> x_seeds;
  std::size_t orbit_len = 64, samples = 800;
  std::string orbit_map = "doubling";
  double bc_a = 2.0, bc_gamma = 0.1;
  int bc_horizon = 100;
  std::optional<double> orbit_x0;
  std::string invariant_file = "invariant.measure";
  int target_depth = 14;

  for (auto* sub : app.get_subcommands({})) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker cap (also LIMSUP_LAB_THREADS)");
    sub->add_option("--config", config_file, "JSON config file, flags win");
  }

  m_spectrum.attach(sp_spectrum);
  sp_spectrum->add_option("--s-grid", s_grid, "lo:hi:step");
  sp_spectrum->add_option("--eps", eps_grid, "comma list, decreasing");
  sp_spectrum->add_option("--levels", levels, "lo:hi band window");

  m_energy.attach(sp_energy);
  sp_energy->add_option("--theta", theta, "grid lo:hi:step or single value");
  sp_energy->add_option("--truncation", truncation, "pair resolution cap level");

  m_net.attach(sp_net);
  sp_net->add_option("--set", set_file, "cubeset file to cover");
  sp_net->add_option("--theta", theta, "grid");
  sp_net->add_option("--levels", levels, "lo:hi cover level window");

  m_random.attach(sp_random);
  sp_random->add_option("--alpha", alpha, "ball radius exponent");
  sp_random->add_option("--beta", beta, "raster depth slope");
  sp_random->add_option("--blocks", blocks, "k0:K");
  sp_random->add_option("--theta", theta, "grid lo:hi:step");
  sp_random->add_option("--seeds", seed_count, "number of seeds");
  sp_random->add_option("--seed", seed, "base seed");
  sp_random->add_option("--bound-factor", bound_factor, "sup-ratio verdict factor");

  sp_target->add_option("--map", target_map, "doubling | tent | quadratic:a=A");
  sp_target->add_option("--gibbs", target_gibbs, "digit law for doubling orbits");
  sp_target->add_option("--depth", target_depth, "invariant tree depth");
  sp_target->add_option("--alpha", alpha, "ball radius exponent");
  sp_target->add_option("--beta", beta, "raster depth slope");
  sp_target->add_option("--blocks", blocks, "k0:K");
  sp_target->add_option("--theta", theta, "grid lo:hi:step");
  sp_target->add_option("--bound-factor", bound_factor, "sup-ratio verdict factor");
  sp_target->add_option("--x-seed", x_seeds, "orbit start seeds, repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  sp_orbit->add_option("--map", orbit_map, "doubling | tent | quadratic:a=A");
  sp_orbit->add_option("--seed", seed, "orbit seed");
  sp_orbit->add_option("--len", orbit_len, "iterations");
  sp_orbit->add_option("--p-one", p_one, "digit bias for doubling");
  sp_orbit->add_option("--x0", orbit_x0, "explicit start point");

  MeasureOpts m_invariant;
  m_invariant.attach(sp_invariant);
  sp_invariant->add_option("--file", invariant_file, "output measure file name");

  sp_bc->add_option("--a", bc_a, "quadratic parameter");
  sp_bc->add_option("--gamma", bc_gamma, "recurrence exponent");
  sp_bc->add_option("--horizon", bc_horizon, "iterations");

  m_dimension.attach(sp_dimension);
  sp_dimension->add_option("--samples", samples, "points for the slope sample");
  sp_dimension->add_option("--levels", levels, "lo:hi fit window");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = with_config(args);
    std::vector<const char*> cargv{argv[0]};
    for (const std::string& a : args) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  }

  if (threads > 0)
    setenv("LIMSUP_LAB_THREADS", std::to_string(threads).c_str(), 1);

  try {
    Emitter out(out_dir);
    if (app.got_subcommand(sp_spectrum)) {
      run_spectrum(m_spectrum, s_grid, eps_grid, levels, out);
      out.finish("spectrum", {{"s_grid", s_grid}, {"eps", eps_grid},
                              {"levels", levels}, {"depth", m_spectrum.depth}});
    } else if (app.got_subcommand(sp_energy)) {
      std::optional<int> trunc;
      if (truncation >= 0) trunc = truncation;
      run_energy(m_energy, theta, trunc, out);
      out.finish("energy", {{"theta", theta}, {"truncation", truncation}});
    } else if (app.got_subcommand(sp_net)) {
      run_net_measure(m_net, set_file, theta, levels, out);
      out.finish("net-measure", {{"theta", theta}, {"set", set_file}});
    } else if (app.got_subcommand(sp_random)) {
      if (seed_count < 1) throw std::invalid_argument("need at least one seed");
      TreeMeasure mu = m_random.build();
      LimsupConfig cfg;
      cfg.alpha = alpha;
      cfg.beta = beta;
      std::tie(cfg.k0, cfg.K) = parse_blocks(blocks);
      cfg.bound_factor = bound_factor;
      cfg.validate();
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < seed_count; ++i)
        seeds.push_back(seed + static_cast<std::uint64_t>(i));
      emit_threshold_experiment(mu, cfg, parse_grid(theta), seeds, out);
      out.finish("random-limsup",
                 {{"alpha", alpha}, {"beta", beta}, {"blocks", blocks},
                  {"theta", theta}, {"seeds", seed_count}, {"seed", seed},
                  {"bound_factor", bound_factor}});
    } else if (app.got_subcommand(sp_target)) {
      if (x_seeds.empty()) throw std::invalid_argument("need --x-seed");
      MapSpec map = parse_map(target_map);
      std::optional<GibbsSpec> gibbs;
      if (!target_gibbs.empty()) gibbs = parse_gibbs(target_gibbs);
      if (gibbs && gibbs->markov)
        throw std::invalid_argument("markov digit laws have no orbit sampler");
      TreeMeasure mu = invariant_measure(map, gibbs, target_depth);
      LimsupConfig cfg;
      cfg.alpha = alpha;
      cfg.beta = beta;
      std::tie(cfg.k0, cfg.K) = parse_blocks(blocks);
      cfg.bound_factor = bound_factor;
      cfg.centers = LimsupConfig::Centers::orbit;
      cfg.map = map;
      if (gibbs) cfg.orbit_p_one = gibbs->weights[1];
      cfg.validate();
      emit_threshold_experiment(mu, cfg, parse_grid(theta), x_seeds, out);
      out.finish("shrinking-target",
                 {{"map", target_map}, {"gibbs", target_gibbs},
                  {"depth", target_depth}, {"alpha", alpha}, {"beta", beta},
                  {"blocks", blocks}, {"theta", theta},
                  {"x_seeds", x_seeds}, {"bound_factor", bound_factor}});
    } else if (app.got_subcommand(sp_orbit)) {
      run_orbit(orbit_map, seed, orbit_len, p_one, orbit_x0, out);
      out.finish("orbit", {{"map", orbit_map}, {"seed", seed},
                           {"len", orbit_len}, {"p_one", p_one}});
    } else if (app.got_subcommand(sp_invariant)) {
      run_invariant(m_invariant, invariant_file, out);
      out.finish("invariant",
                 {{"map", m_invariant.map_spec}, {"gibbs", m_invariant.gibbs_spec},
                  {"density", m_invariant.density}, {"depth", m_invariant.depth},
                  {"file", invariant_file}});
    } else if (app.got_subcommand(sp_bc)) {
      run_bc_check(bc_a, bc_gamma, bc_horizon, out);
      out.finish("bc-check",
                 {{"a", bc_a}, {"gamma", bc_gamma}, {"horizon", bc_horizon}});
    } else if (app.got_subcommand(sp_dimension)) {
      run_dimension(m_dimension, samples, levels, out);
      out.finish("dimension", {{"samples", samples}, {"levels", levels},
                               {"depth", m_dimension.depth}});
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
