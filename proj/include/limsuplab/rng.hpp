#pragma once

#include <cstdint>
#include <string_view>

namespace limsuplab {

// Counter-based randomness: every draw is a pure function of the master seed
// and a label path (experiment, block, sample index, ...). Workers can be
// scheduled in any order or count without changing a single draw.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

inline std::uint64_t label_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

// A small keyed stream. Construction is cheap; next() walks a counter.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::uint64_t seed, std::string_view label, std::uint64_t a = 0,
         std::uint64_t b = 0, std::uint64_t c = 0)
      : key_(mix(mix(mix(mix(seed, label_hash(label)), a), b), c)) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * (++ctr_)); }

  // uniform in [0,1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  bool next_bit() { return (next_u64() >> 63) != 0; }

  Stream fork(std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return Stream(mix(mix(mix(key_, label_hash(label)), a), b));
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// van der Corput radical inverse, base 2: the standard low-discrepancy grid
inline double van_der_corput(std::uint64_t i) {
  // bit-reverse the low 53 bits
  double r = 0.0, f = 0.5;
  while (i) {
    if (i & 1ull) r += f;
    f *= 0.5;
    i >>= 1;
  }
  return r;
}

}  // namespace rng
}  // namespace limsuplab
