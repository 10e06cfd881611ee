#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "lesiontrack/volume.hpp"

namespace lesiontrack {

enum class Connectivity { Six = 6, Eighteen = 18, TwentySix = 26 };

/// Accepts 6, 18 or 26; anything else is InvalidInput.
Connectivity connectivity_from_int(int n);
inline int to_int(Connectivity c) { return static_cast<int>(c); }

struct LabeledComponents {
  LabelVolume labels;                        // 0 = background, 1..count
  int count = 0;
  std::vector<std::int64_t> voxel_counts;    // indexed by label - 1
  std::vector<WorldPoint> centroids;         // world mm, indexed by label - 1
};

/// Labels are numbered in order of each component's first voxel in raster
/// (x-fastest) order, so the result is fully deterministic.
LabeledComponents label_components(const MaskVolume& mask, Connectivity connectivity = Connectivity::TwentySix);

/// Mean world position of the component's voxel centres. NotFound outside [1, count].
WorldPoint component_centroid(const LabeledComponents& lc, int label);

/// (pred label, gt label) -> shared voxel count; zero entries are absent.
using OverlapTable = std::map<std::pair<int, int>, std::int64_t>;

OverlapTable overlap_matrix(const LabeledComponents& pred, const LabelVolume& gt);

/// Voxel count, index sums and bounding box of one label in an instance volume.
struct InstanceStats {
  std::int64_t count = 0;
  std::array<double, 3> index_sum{0.0, 0.0, 0.0};
  std::array<std::int64_t, 3> lo{INT64_MAX, INT64_MAX, INT64_MAX};
  std::array<std::int64_t, 3> hi{-1, -1, -1};

  void merge(const InstanceStats& other);
  WorldPoint centroid(const Geometry& g) const;
};

std::map<std::int32_t, InstanceStats> instance_stats(const LabelVolume& instances);

}  // namespace lesiontrack
