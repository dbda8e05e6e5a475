#include "limsuplab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace limsuplab::io {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_cube(const CubeId& q) {
  if (q.is_root()) return "root";
  std::ostringstream os;
  os << q.level << ':';
  for (int a = 0; a < q.dim; ++a) {
    if (a) os << ',';
    os << q.c[static_cast<std::size_t>(a)];
  }
  return os.str();
}

CubeId parse_cube(const std::string& text, int dim) {
  if (text == "root") return CubeId::root(dim);
  std::istringstream is(text);
  int level = 0;
  char sep = 0;
  if (!(is >> level >> sep) || sep != ':')
    throw std::runtime_error("bad cube spec: " + text);
  CubeId q = CubeId::make(dim, level, {});
  for (int a = 0; a < dim; ++a) {
    if (a && (!(is >> sep) || sep != ','))
      throw std::runtime_error("bad cube spec: " + text);
    if (!(is >> q.c[static_cast<std::size_t>(a)]))
      throw std::runtime_error("bad cube spec: " + text);
  }
  return q;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return f;
}

// key=value headers until the first row without '='; rows returned verbatim
struct TextFile {
  std::vector<std::pair<std::string, std::string>> headers;
  std::vector<std::string> rows;
};

TextFile slurp(const std::string& path) {
  std::ifstream f = open_in(path);
  TextFile tf;
  std::string line;
  bool in_header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (in_header && eq != std::string::npos && line.find('\t') == std::string::npos) {
      tf.headers.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    } else {
      in_header = false;
      tf.rows.push_back(line);
    }
  }
  return tf;
}

std::string header(const TextFile& tf, const std::string& key) {
  for (const auto& [k, v] : tf.headers)
    if (k == key) return v;
  throw std::runtime_error("missing header " + key);
}

}  // namespace

void write_measure(const std::string& path, const TreeMeasure& mu) {
  if (!mu.valid()) throw std::invalid_argument("write_measure: empty measure");
  std::ofstream f = open_out(path);
  f << "# limsup-lab measure v1\n";
  f << "offset=";
  for (int a = 0; a < mu.dim(); ++a)
    f << (a ? "," : "") << fmt_double(mu.grid().p[static_cast<std::size_t>(a)]);
  f << "\nbase=" << fmt_cube(mu.base()) << "\ndepth=" << mu.depth()
    << "\ntotal=" << fmt_double(mu.total()) << "\n";
  for (const auto& [q, m] : mu.leaf_nodes())
    if (m > 0.0) f << fmt_cube(q) << '\t' << fmt_double(m) << '\n';
  if (!f) throw std::runtime_error("short write on " + path);
}

TreeMeasure read_measure(const std::string& path) {
  TextFile tf = slurp(path);
  std::string off = header(tf, "offset");
  GridOffset grid;
  grid.dim = 1 + static_cast<int>(std::count(off.begin(), off.end(), ','));
  {
    std::istringstream is(off);
    char sep;
    for (int a = 0; a < grid.dim; ++a) {
      if (a) is >> sep;
      is >> grid.p[static_cast<std::size_t>(a)];
    }
    if (!is) throw std::runtime_error("bad offset header in " + path);
  }
  CubeId base = parse_cube(header(tf, "base"), grid.dim);
  int depth = std::stoi(header(tf, "depth"));
  double total = std::stod(header(tf, "total"));

  std::vector<std::pair<CubeId, double>> leaves;
  leaves.reserve(tf.rows.size());
  double sum = 0.0;
  for (const std::string& row : tf.rows) {
    auto tab = row.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("bad leaf row in " + path);
    CubeId q = parse_cube(row.substr(0, tab), grid.dim);
    if (q.level != depth)
      throw std::runtime_error("leaf level mismatch in " + path);
    double m = std::stod(row.substr(tab + 1));
    sum += m;
    leaves.emplace_back(q, m);
  }
  if (std::fabs(sum - total) > 1e-9 * std::max(1.0, std::fabs(total)))
    throw std::runtime_error("total does not match leaf sum in " + path);
  return TreeMeasure::from_weighted_cubes(grid, base, leaves);
}

void write_cubeset(const std::string& path, const CubeSet& s) {
  std::ofstream f = open_out(path);
  f << "# limsup-lab cubeset v1\n";
  f << "dim=" << s.dim() << "\ndepth=" << s.depth() << "\n";
  for (const CubeId& q : s.cubes()) f << fmt_cube(q) << '\n';
  if (!f) throw std::runtime_error("short write on " + path);
}

CubeSet read_cubeset(const std::string& path) {
  TextFile tf = slurp(path);
  int dim = std::stoi(header(tf, "dim"));
  int depth = std::stoi(header(tf, "depth"));
  std::vector<CubeId> cubes;
  cubes.reserve(tf.rows.size());
  for (const std::string& row : tf.rows) cubes.push_back(parse_cube(row, dim));
  return CubeSet::of(dim, depth, std::move(cubes));
}

std::string file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot hash " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!f) break;
  }
  char out[20];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace limsuplab::io
