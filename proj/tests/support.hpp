#pragma once

// Test helpers and brute-force oracles. Nothing here calls into the code it
// checks: labeling, Dice, overlaps and the signed-rank null distribution are
// recomputed from first principles.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lesiontrack/geometry.hpp"
#include "lesiontrack/rng.hpp"
#include "lesiontrack/volume.hpp"

namespace testsupport {

using lesiontrack::Dims;
using lesiontrack::Geometry;
using lesiontrack::LabelVolume;
using lesiontrack::MaskVolume;
using lesiontrack::RandomStream;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& bytes);

MaskVolume random_mask(const Geometry& g, double density, RandomStream& rng);

// Flood fill from each unvisited foreground voxel in raster order; labels
// are 1.. in order of discovery. `connectivity` is 6, 18 or 26.
std::vector<std::int32_t> flood_fill_labels(const MaskVolume& m, int connectivity, int* count = nullptr);

// True when two labelings induce the same partition of the foreground.
bool same_partition(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b);

double brute_dice(const MaskVolume& a, const MaskVolume& b);

// (label in a, label in b) -> shared voxels, both labels nonzero.
std::map<std::pair<int, int>, std::int64_t> brute_overlap(const LabelVolume& a, const LabelVolume& b);

struct SignedRankOracle {
  double w_plus = 0.0;
  double w_minus = 0.0;
  int n = 0;
  double p_exact = 1.0;  // two-sided, by enumerating every sign pattern
};

// Differences followup - baseline; zeros dropped, average ranks on ties.
SignedRankOracle signed_rank_oracle(const std::vector<double>& differences);

// Two-sided p from the enumerated null distribution of W+ for fixed ranks
// (given doubled so midranks stay integral). Gray-code walk over 2^n patterns.
double enumerate_signed_rank_p(const std::vector<int>& doubled_ranks, double w_observed);

// Mixture CDF written independently of the implementation.
double mixture_cdf(double r, double prob_inlier, double sigma, double tail);

// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf);

}  // namespace testsupport

#include <algorithm>
#include <cmath>

template <typename Cdf>
double testsupport::ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}
