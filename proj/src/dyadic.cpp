#include "limsuplab/dyadic.hpp"

#include <charconv>

#include "limsuplab/rng.hpp"

namespace limsuplab {

GridOffset GridOffset::shifted(int dim, std::uint64_t seed) {
  GridOffset g;
  g.dim = dim;
  for (int i = 0; i < dim; ++i) {
    rng::Stream s(seed, "grid-offset", static_cast<std::uint64_t>(i));
    g.p[static_cast<std::size_t>(i)] = std::ldexp(s.next_double(), -8);
  }
  return g;
}

std::string cube_to_string(const CubeId& q) {
  if (q.is_root()) return "root";
  if (q.is_empty()) return "empty";
  std::string s = std::to_string(q.level);
  s += ':';
  for (int i = 0; i < q.dim; ++i) {
    if (i) s += ',';
    s += std::to_string(q.c[static_cast<std::size_t>(i)]);
  }
  return s;
}

CubeId cube_from_string(const std::string& s) {
  if (s == "root") return CubeId::root(1);
  if (s == "empty") return CubeId::empty(1);
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("cube string missing ':': " + s);
  CubeId q;
  const char* b = s.data();
  auto parse_i64 = [&s](const char* first, const char* last, std::int64_t& out) {
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
      throw std::invalid_argument("bad integer in cube string: " + s);
  };
  std::int64_t lvl = 0;
  parse_i64(b, b + colon, lvl);
  q.level = static_cast<std::int32_t>(lvl);
  int dim = 0;
  std::size_t pos = colon + 1;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    std::size_t end = (comma == std::string::npos) ? s.size() : comma;
    if (dim >= kMaxDim) throw std::invalid_argument("cube dim too large: " + s);
    parse_i64(b + pos, b + end, q.c[static_cast<std::size_t>(dim)]);
    ++dim;
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (dim == 0) throw std::invalid_argument("cube string has no coordinates: " + s);
  q.dim = static_cast<std::int8_t>(dim);
  return q;
}

}  // namespace limsuplab
