#include "lesiontrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lesiontrack {

double dice_from_counts(std::int64_t intersection, std::int64_t size_a, std::int64_t size_b) {
  if (size_a + size_b == 0) throw Error(ErrorCode::UndefinedDice, "both masks are empty");
  return 2.0 * static_cast<double>(intersection) / static_cast<double>(size_a + size_b);
}

double dice(const MaskVolume& a, const MaskVolume& b) {
  if (!a.geometry().same_shape(b.geometry())) throw Error(ErrorCode::ShapeMismatch, "dice: masks have different grids");
  auto pa = a.data();
  auto pb = b.data();
  std::int64_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  return dice_from_counts(both, na, nb);
}

double registration_error(WorldPoint propagated, WorldPoint gt_centroid) { return distance(propagated, gt_centroid); }

std::int64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

Histogram histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw Error(ErrorCode::InvalidInput, "bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  if (values.empty()) return h;
  std::vector<std::int64_t> bins;
  bins.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "histogram values must be finite");
    bins.push_back(static_cast<std::int64_t>(std::floor(v / bin_width)));
  }
  const auto [lo, hi] = std::minmax_element(bins.begin(), bins.end());
  h.first_bin = *lo;
  h.counts.assign(static_cast<std::size_t>(*hi - *lo + 1), 0);
  for (auto b : bins) ++h.counts[static_cast<std::size_t>(b - h.first_bin)];
  return h;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const PairedSample> pairs) {
  WilcoxonResult r;
  std::vector<double> diffs;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.baseline_value) || !std::isfinite(p.followup_value)) {
      throw Error(ErrorCode::InvalidInput, "paired values must be finite");
    }
    const double d = p.followup_value - p.baseline_value;
    if (d == 0.0) {
      ++r.zeros_dropped;
    } else {
      diffs.push_back(d);
    }
  }
  r.n = static_cast<int>(diffs.size());
  if (r.n == 0) throw Error(ErrorCode::DegenerateTest, "all paired differences are zero");

  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::fabs(diffs[a]) < std::fabs(diffs[b]); });

  // Midranks, kept doubled so they stay integral.
  std::vector<std::int64_t> rank2(diffs.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
    const auto doubled = static_cast<std::int64_t>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  std::int64_t w_plus2 = 0, w_minus2 = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0.0 ? w_plus2 : w_minus2) += rank2[i];
  r.w_plus = 0.5 * static_cast<double>(w_plus2);
  r.w_minus = 0.5 * static_cast<double>(w_minus2);
  r.statistic = std::min(r.w_plus, r.w_minus);
  const std::int64_t stat2 = std::min(w_plus2, w_minus2);

  if (r.n <= kWilcoxonExactMaxN) {
    // Null distribution of doubled W+ over all 2^n sign assignments.
    const std::int64_t total2 = w_plus2 + w_minus2;
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(total2 + 1), 0);
    ways[0] = 1;
    std::int64_t reach = 0;
    for (auto rk : rank2) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (ways[static_cast<std::size_t>(s)] != 0) ways[static_cast<std::size_t>(s + rk)] += ways[static_cast<std::size_t>(s)];
      }
      reach += rk;
    }
    std::uint64_t at_most = 0;
    for (std::int64_t s = 0; s <= stat2; ++s) at_most += ways[static_cast<std::size_t>(s)];
    const double p = 2.0 * static_cast<double>(at_most) / std::ldexp(1.0, r.n);
    r.p_value = std::min(1.0, p);
    r.exact = true;
  } else {
    const double n = r.n;
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (r.statistic - mean + 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
  }
  return r;
}

}  // namespace lesiontrack
