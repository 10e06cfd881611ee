#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lesiontrack/geometry.hpp"

namespace lesiontrack {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);

/// Seeded random stream. Distribution transforms are written out here (not
/// taken from <random>) so that draws are identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Independent stream for a (seed, key) pair, e.g. key = "case_003/7/followup/15".
  static RandomStream derive(std::uint64_t seed, std::string_view key) {
    return RandomStream(mix64(seed) ^ fnv1a64(key));
  }

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  double exponential(double scale);
  WorldPoint unit_vector();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lesiontrack
