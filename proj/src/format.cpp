#include "lesiontrack/format.hpp"

#include <array>
#include <charconv>

namespace lesiontrack {

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace lesiontrack
