#include "lesiontrack/voi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace lesiontrack {
namespace {

template <typename T>
Voi<T> cut(const Volume<T>& src, VoxelIndex start, WorldPoint center, const Dims& shape, T pad) {
  const Geometry& sg = src.geometry();
  Geometry vg(shape, sg.spacing(), sg.voxel_to_world(start));
  Voi<T> voi{Volume<T>(vg, pad), start, center, sg, false};

  // Overlap of [start, start + shape) with [0, dims) per axis.
  std::int64_t lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, -start[a]);
    hi[a] = std::min<std::int64_t>(shape[a], sg.dims()[a] - start[a]);
    if (hi[a] <= lo[a]) {
      voi.outside_source = true;
      return voi;
    }
  }
  auto dst = voi.data.data();
  auto s = src.data();
  const std::size_t run = static_cast<std::size_t>(hi[0] - lo[0]);
  for (std::int64_t k = lo[2]; k < hi[2]; ++k) {
    for (std::int64_t j = lo[1]; j < hi[1]; ++j) {
      const std::size_t from = sg.linear_index(start.i + lo[0], start.j + j, start.k + k);
      const std::size_t to = vg.linear_index(lo[0], j, k);
      std::copy_n(s.begin() + static_cast<std::ptrdiff_t>(from), run, dst.begin() + static_cast<std::ptrdiff_t>(to));
    }
  }
  return voi;
}

bool aligned(const Geometry& a, const Geometry& b) {
  if (!a.same_shape(b)) return false;
  for (int ax = 0; ax < 3; ++ax) {
    if (std::fabs(a.origin()[ax] - b.origin()[ax]) > 1e-3 * a.spacing()[ax]) return false;
  }
  return true;
}

template <typename T>
T pad_for(double pad_value) {
  if constexpr (std::is_same_v<T, float>) {
    return static_cast<float>(pad_value);
  } else {
    return T{0};
  }
}

}  // namespace

VoxelIndex voi_center_index(const Dims& shape) { return {shape[0] / 2, shape[1] / 2, shape[2] / 2}; }

template <typename T>
Voi<T> extract_voi(const Volume<T>& src, WorldPoint center, const VoiSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.shape[a] < 1) throw Error(ErrorCode::InvalidInput, "VOI shape must be >= 1 along every axis");
    if (!std::isfinite(center[a])) throw Error(ErrorCode::InvalidInput, "VOI centre must be finite");
  }
  const VoxelIndex nearest = src.geometry().world_to_voxel_nearest(center);
  const VoxelIndex half = voi_center_index(spec.shape);
  const VoxelIndex start{nearest.i - half.i, nearest.j - half.j, nearest.k - half.k};
  return cut(src, start, center, spec.shape, pad_for<T>(spec.pad_value));
}

template <typename T, typename U>
Voi<T> extract_like(const Volume<T>& src, const Voi<U>& like, double pad_value) {
  if (!aligned(src.geometry(), like.source)) {
    throw Error(ErrorCode::ShapeMismatch, "volume is not aligned with the VOI's source grid");
  }
  return cut(src, like.source_offset, like.center_world, like.data.dims(), pad_for<T>(pad_value));
}

template Voi<float> extract_voi(const Volume<float>&, WorldPoint, const VoiSpec&);
template Voi<std::uint8_t> extract_voi(const Volume<std::uint8_t>&, WorldPoint, const VoiSpec&);
template Voi<std::int32_t> extract_voi(const Volume<std::int32_t>&, WorldPoint, const VoiSpec&);
template Voi<std::uint8_t> extract_like(const Volume<std::uint8_t>&, const Voi<float>&, double);
template Voi<std::int32_t> extract_like(const Volume<std::int32_t>&, const Voi<float>&, double);
template Voi<std::uint8_t> extract_like(const Volume<std::uint8_t>&, const Voi<std::uint8_t>&, double);
template Voi<float> extract_like(const Volume<float>&, const Voi<float>&, double);
template Voi<std::int32_t> extract_like(const Volume<std::int32_t>&, const Voi<std::uint8_t>&, double);
template Voi<std::int32_t> extract_like(const Volume<std::int32_t>&, const Voi<std::int32_t>&, double);

std::vector<WorldPoint> displacement_along(WorldPoint true_centroid, WorldPoint unit_direction,
                                           const std::vector<double>& magnitudes_mm) {
  std::vector<WorldPoint> out;
  out.reserve(magnitudes_mm.size());
  for (double eps : magnitudes_mm) {
    if (!std::isfinite(eps) || eps < 0.0) {
      throw Error(ErrorCode::InvalidInput, "displacement magnitudes must be finite and non-negative");
    }
    out.push_back(eps == 0.0 ? true_centroid : true_centroid + eps * unit_direction);
  }
  return out;
}

std::vector<WorldPoint> displacement_schedule(WorldPoint true_centroid, WorldPoint volume_center,
                                              const std::vector<double>& magnitudes_mm) {
  const WorldPoint d = volume_center - true_centroid;
  const double len = norm(d);
  if (!(len > 0.0)) {
    throw Error(ErrorCode::DegenerateDirection, "lesion centroid coincides with the volume centre");
  }
  return displacement_along(true_centroid, (1.0 / len) * d, magnitudes_mm);
}

std::vector<double> default_displacement_magnitudes() {
  std::vector<double> m;
  for (int e = 0; e <= 50; e += 5) m.push_back(static_cast<double>(e));
  return m;
}

}  // namespace lesiontrack
