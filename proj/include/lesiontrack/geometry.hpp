#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace lesiontrack {

/// A position in world millimetres.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend WorldPoint operator+(WorldPoint a, WorldPoint b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend WorldPoint operator-(WorldPoint a, WorldPoint b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend WorldPoint operator*(double s, WorldPoint a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

inline double norm(WorldPoint p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }
inline double distance(WorldPoint a, WorldPoint b) { return norm(a - b); }

/// Integer voxel coordinates. May lie outside a grid to address padded space.
struct VoxelIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  std::int64_t operator[](int axis) const { return axis == 0 ? i : (axis == 1 ? j : k); }
  std::int64_t& operator[](int axis) { return axis == 0 ? i : (axis == 1 ? j : k); }
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

using Dims = std::array<int, 3>;
using Spacing = std::array<double, 3>;

// Half-away-from-zero, which is what std::llround does.
inline std::int64_t round_half_away(double v) { return std::llround(v); }

/// Axis-aligned voxel grid: dims, positive spacing in mm, and the world
/// position of voxel (0,0,0). Storage order is x fastest.
class Geometry {
 public:
  Geometry() = default;
  Geometry(Dims dims, Spacing spacing, WorldPoint origin = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const WorldPoint& origin() const { return origin_; }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }

  std::size_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims_[0] * (j + static_cast<std::int64_t>(dims_[1]) * k));
  }
  std::size_t linear_index(VoxelIndex v) const { return linear_index(v.i, v.j, v.k); }

  bool contains(VoxelIndex v) const {
    return v.i >= 0 && v.j >= 0 && v.k >= 0 && v.i < dims_[0] && v.j < dims_[1] && v.k < dims_[2];
  }

  WorldPoint voxel_to_world(VoxelIndex v) const {
    return {origin_.x + spacing_[0] * static_cast<double>(v.i),
            origin_.y + spacing_[1] * static_cast<double>(v.j),
            origin_.z + spacing_[2] * static_cast<double>(v.k)};
  }

  VoxelIndex world_to_voxel_nearest(WorldPoint p) const {
    return {round_half_away((p.x - origin_.x) / spacing_[0]),
            round_half_away((p.y - origin_.y) / spacing_[1]),
            round_half_away((p.z - origin_.z) / spacing_[2])};
  }

  /// Geometric centre of the grid: midpoint between the first and last voxel centres.
  WorldPoint center_world() const {
    return {origin_.x + 0.5 * spacing_[0] * (dims_[0] - 1),
            origin_.y + 0.5 * spacing_[1] * (dims_[1] - 1),
            origin_.z + 0.5 * spacing_[2] * (dims_[2] - 1)};
  }

  /// Same dims and spacing (origin may differ).
  bool same_shape(const Geometry& other) const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

 private:
  Dims dims_{1, 1, 1};
  Spacing spacing_{1.0, 1.0, 1.0};
  WorldPoint origin_{};
};

inline VoxelIndex world_to_voxel_nearest(const Geometry& g, WorldPoint p) { return g.world_to_voxel_nearest(p); }
inline WorldPoint voxel_to_world(const Geometry& g, VoxelIndex v) { return g.voxel_to_world(v); }

}  // namespace lesiontrack
