#include "lesiontrack/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lesiontrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidMask: return "InvalidMask";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::PlacementError: return "PlacementError";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::UndefinedDice: return "UndefinedDice";
    case ErrorCode::DegenerateTest: return "DegenerateTest";
    case ErrorCode::TopKUnsatisfiable: return "TopKUnsatisfiable";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Geometry::Geometry(Dims dims, Spacing spacing, WorldPoint origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1) {
      throw Error(ErrorCode::InvalidInput, "dims must be >= 1 along every axis");
    }
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
      throw Error(ErrorCode::InvalidInput, "spacing must be positive and finite");
    }
    if (!std::isfinite(origin_[a])) {
      throw Error(ErrorCode::InvalidInput, "origin must be finite");
    }
  }
}

bool Geometry::same_shape(const Geometry& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_;
}

MaskVolume as_mask(const IntensityVolume& v) {
  MaskVolume out(v.geometry());
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == 0.0f) {
      dst[i] = 0;
    } else if (src[i] == 1.0f) {
      dst[i] = 1;
    } else {
      throw Error(ErrorCode::InvalidMask, "voxel value " + std::to_string(src[i]) + " is not 0 or 1");
    }
  }
  return out;
}

LabelVolume as_labels(const IntensityVolume& v) {
  LabelVolume out(v.geometry());
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float x = src[i];
    if (!(x >= 0.0f) || x != std::floor(x) || x > static_cast<float>(std::numeric_limits<std::int32_t>::max())) {
      throw Error(ErrorCode::InvalidMask, "label value " + std::to_string(x) + " is not a non-negative integer");
    }
    dst[i] = static_cast<std::int32_t>(x);
  }
  return out;
}

MaskVolume select_labels(const LabelVolume& v, std::span<const std::int32_t> labels) {
  MaskVolume out(v.geometry());
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] != 0 && std::find(labels.begin(), labels.end(), src[i]) != labels.end()) {
      dst[i] = 1;
    }
  }
  return out;
}

MaskVolume binarize(const LabelVolume& v) {
  MaskVolume out(v.geometry());
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] != 0 ? 1 : 0;
  }
  return out;
}

std::size_t count_nonzero(const MaskVolume& m) {
  auto d = m.data();
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](std::uint8_t x) { return x != 0; }));
}

}  // namespace lesiontrack
