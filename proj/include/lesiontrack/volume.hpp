#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lesiontrack/error.hpp"
#include "lesiontrack/geometry.hpp"

namespace lesiontrack {

enum class VolumeKind { Intensity, BinaryMask, InstanceLabels };

template <typename T>
struct VolumeTraits;
template <>
struct VolumeTraits<float> {
  static constexpr VolumeKind kind = VolumeKind::Intensity;
};
template <>
struct VolumeTraits<std::uint8_t> {
  static constexpr VolumeKind kind = VolumeKind::BinaryMask;
};
template <>
struct VolumeTraits<std::int32_t> {
  static constexpr VolumeKind kind = VolumeKind::InstanceLabels;
};

/// Dense voxel array over a Geometry. The voxel type fixes the kind:
/// float = intensity (HU), uint8 = binary mask {0,1}, int32 = instance labels (0 = background).
template <typename T>
class Volume {
 public:
  using value_type = T;
  static constexpr VolumeKind kind = VolumeTraits<T>::kind;

  Volume() = default;
  explicit Volume(Geometry geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.voxel_count(), fill) {}
  Volume(Geometry geometry, std::vector<T> data) : geometry_(geometry), data_(std::move(data)) {
    if (data_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::ShapeMismatch, "voxel buffer length does not match dims");
    }
  }

  const Geometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims(); }
  std::size_t size() const { return data_.size(); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  const T& operator[](std::size_t idx) const { return data_[idx]; }
  T& operator[](std::size_t idx) { return data_[idx]; }

  const T& at(VoxelIndex v) const { return data_[geometry_.linear_index(v)]; }
  T& at(VoxelIndex v) { return data_[geometry_.linear_index(v)]; }
  const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const { return data_[geometry_.linear_index(i, j, k)]; }
  T& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[geometry_.linear_index(i, j, k)]; }

 private:
  Geometry geometry_;
  std::vector<T> data_;
};

using IntensityVolume = Volume<float>;
using MaskVolume = Volume<std::uint8_t>;
using LabelVolume = Volume<std::int32_t>;

// Conversions from a freshly loaded (float) volume. Both validate the
// value domain and throw InvalidMask on violation.
MaskVolume as_mask(const IntensityVolume& v);
LabelVolume as_labels(const IntensityVolume& v);

/// Binary mask of voxels whose label is in `labels`.
MaskVolume select_labels(const LabelVolume& v, std::span<const std::int32_t> labels);
MaskVolume binarize(const LabelVolume& v);

std::size_t count_nonzero(const MaskVolume& m);

}  // namespace lesiontrack
