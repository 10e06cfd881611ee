#include "lesiontrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lesiontrack {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int RandomStream::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
  return lo + static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(uniform() * static_cast<double>(span)), span - 1));
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double RandomStream::exponential(double scale) {
  return -scale * std::log1p(-uniform());
}

WorldPoint RandomStream::unit_vector() {
  for (;;) {
    WorldPoint v{normal(), normal(), normal()};
    const double n = norm(v);
    if (n > 1e-12) return (1.0 / n) * v;
  }
}

}  // namespace lesiontrack
