#pragma once

#include <filesystem>

#include "lesiontrack/volume.hpp"

namespace lesiontrack {

// NIfTI-1 subset: single-file (.nii / .nii.gz), little-endian, 3 spatial
// dims, datatype uint8 / int16 / float32. Orientation comes from the sform
// affine (axis-aligned only) or, without one, from pixdim with a zero origin.
// Negative axis scales are flipped at load so spacing is always positive.

/// Loads raw stored values with scl_slope / scl_inter applied (when slope != 0).
IntensityVolume load_volume(const std::filesystem::path& path);

/// Loads and validates a {0,1} mask.
MaskVolume load_mask(const std::filesystem::path& path);
/// Loads and validates an instance label volume.
LabelVolume load_labels(const std::filesystem::path& path);

// A ".gz" suffix selects gzip compression. Masks are stored as uint8,
// labels as int16 (RangeError above 32767), intensities as float32.
void save_volume(const MaskVolume& v, const std::filesystem::path& path);
void save_volume(const LabelVolume& v, const std::filesystem::path& path);
void save_volume(const IntensityVolume& v, const std::filesystem::path& path);

}  // namespace lesiontrack
