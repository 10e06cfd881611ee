#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lesiontrack/volume.hpp"

namespace lesiontrack {

/// 2|A∩B| / (|A|+|B|). UndefinedDice when both masks are empty, ShapeMismatch on differing grids.
double dice(const MaskVolume& a, const MaskVolume& b);
double dice_from_counts(std::int64_t intersection, std::int64_t size_a, std::int64_t size_b);

/// Euclidean distance between a propagated centroid and the ground-truth centroid, in mm.
double registration_error(WorldPoint propagated, WorldPoint gt_centroid);

/// Half-open bins [k*w, (k+1)*w); counts[i] belongs to k = first_bin + i.
struct Histogram {
  double bin_width = 1.0;
  std::int64_t first_bin = 0;
  std::vector<std::int64_t> counts;

  double lower_edge(std::size_t i) const { return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * bin_width; }
  double upper_edge(std::size_t i) const { return lower_edge(i) + bin_width; }
  std::int64_t total() const;
};

Histogram histogram(std::span<const double> values, double bin_width);

struct PairedSample {
  std::string key;
  double baseline_value = 0.0;
  double followup_value = 0.0;
};

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;    // two-sided
  int n = 0;               // pairs with nonzero difference
  int zeros_dropped = 0;
  bool exact = false;
};

/// Exact null distribution for n <= this many nonzero differences, normal
/// approximation (tie and continuity corrected) above.
inline constexpr int kWilcoxonExactMaxN = 20;

/// Differences are followup - baseline; zero differences are dropped and
/// |d| ranked with midranks. DegenerateTest when nothing is left.
WilcoxonResult wilcoxon_signed_rank(std::span<const PairedSample> pairs);

}  // namespace lesiontrack
