#pragma once

#include <vector>

#include "lesiontrack/volume.hpp"

namespace lesiontrack {

struct VoiSpec {
  Dims shape{256, 256, 128};
  double pad_value = 0.0;  // intensity volumes only; masks and labels always pad with 0
};

template <typename T>
struct Voi {
  Volume<T> data;
  VoxelIndex source_offset;   // source voxel mapped to VOI index (0,0,0)
  WorldPoint center_world;    // requested centre
  Geometry source;            // grid the VOI was cut from
  bool outside_source = false;  // true when no voxel overlaps the source grid
};

/// VOI index of the centre voxel: floor(shape / 2) per axis.
VoxelIndex voi_center_index(const Dims& shape);

/// Cuts a `spec.shape` window whose centre voxel is the source voxel
/// nearest to `center`. Out-of-grid voxels are padded.
template <typename T>
Voi<T> extract_voi(const Volume<T>& src, WorldPoint center, const VoiSpec& spec);

/// Re-cuts another volume on the same grid as `like.source` through the identical window.
template <typename T, typename U>
Voi<T> extract_like(const Volume<T>& src, const Voi<U>& like, double pad_value = 0.0);

/// World coordinates of the VOI's centre voxel.
template <typename T>
WorldPoint voi_center_world(const Voi<T>& voi) {
  return voi.data.geometry().voxel_to_world(voi_center_index(voi.data.dims()));
}

/// Points true_centroid + eps * u, u the unit vector toward volume_center.
/// DegenerateDirection when the two points coincide.
std::vector<WorldPoint> displacement_schedule(WorldPoint true_centroid, WorldPoint volume_center,
                                              const std::vector<double>& magnitudes_mm);

/// Same, with an explicit unit direction (used as the fallback for degenerate cases).
std::vector<WorldPoint> displacement_along(WorldPoint true_centroid, WorldPoint unit_direction,
                                           const std::vector<double>& magnitudes_mm);

/// {0, 5, ..., 50} mm.
std::vector<double> default_displacement_magnitudes();

}  // namespace lesiontrack
