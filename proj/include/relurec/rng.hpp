#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace relurec {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based generator: draw i of a stream is a pure function of (key, i).
// child() derives an independent stream from (key, counter, tag).
class SeedStream {
 public:
  SeedStream() : SeedStream(0) {}
  explicit SeedStream(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x5DEECE66DULL)) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  SeedStream child(std::uint64_t tag) const {
    SeedStream s;
    s.key_ = detail::mix64(key_ ^ detail::mix64(tag + 0x632BE59BD9B4E019ULL) ^ detail::mix64(~counter_));
    return s;
  }
  SeedStream child(std::string_view tag) const { return child(detail::hash_tag(tag)); }

  std::uint64_t at(std::uint64_t i) const {
    return detail::mix64(key_ + detail::mix64(i));
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // uniform on (0,1)
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t uniform_index(std::uint64_t n) {
    // rejection keeps the draw exactly uniform
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace relurec
