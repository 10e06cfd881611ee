#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "lesiontrack/manifest.hpp"
#include "lesiontrack/voi.hpp"

namespace lesiontrack {

/// Everything a segmenter may look at for one VOI. `gt_instances` is cut
/// through the same window as `image`; only the synthetic surrogate reads it.
struct SegmentationRequest {
  const Voi<float>& image;
  const Voi<std::int32_t>& gt_instances;
  std::string case_id;
  Timepoint timepoint = Timepoint::Baseline;
  std::int32_t lesion_id = 0;
  std::optional<double> epsilon_mm;
};

/// Maps an intensity VOI to a binary mask on the same grid. Implementations
/// are stateless from the caller's view and safe to call concurrently.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// Name plus parameter fingerprint, recorded in run metadata.
  virtual std::string identity() const = 0;
  virtual MaskVolume segment(const SegmentationRequest& request) const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic center-biased surrogate

struct CenterBiasParams {
  double detect_radius_mm = 20.0;
  double transition_band_mm = 5.0;
  double detect_floor_prob = 0.0;
  double boundary_noise_mm = 1.5;
  // Extra erosion that grows with the lesion's distance from the VOI centre,
  // reaching boundary_noise_mm * gain at detect_radius_mm.
  double offcenter_erosion_gain = 1.0;
  double hallucination_prob = 0.0;
  double hallucination_offset_mm = 10.0;
  std::uint64_t seed = 0;

  /// InvalidInput on out-of-range fields.
  void validate() const;
};

/// Probability that a lesion whose centroid lies `distance_mm` from the VOI centre is segmented.
double detection_probability(const CenterBiasParams& p, double distance_mm);

/// Seed of the stream used for one (case, lesion, timepoint, epsilon) evaluation.
std::uint64_t segmentation_stream_seed(std::uint64_t seed, std::string_view case_id, std::int32_t lesion_id,
                                       Timepoint timepoint, std::optional<double> epsilon_mm);

MaskVolume segment_synthetic(const Voi<float>& voi, const Voi<std::int32_t>& gt_instances_in_voi,
                             const CenterBiasParams& params, std::uint64_t stream_seed);

class SyntheticSegmenter final : public Segmenter {
 public:
  explicit SyntheticSegmenter(CenterBiasParams params);
  std::string identity() const override;
  MaskVolume segment(const SegmentationRequest& request) const override;
  const CenterBiasParams& params() const { return params_; }

 private:
  CenterBiasParams params_;
};

// ---------------------------------------------------------------------------
// Precomputed predictions

/// Directory of `<case_id>_<timepoint>.nii.gz` full-volume binary masks.
/// Loaded masks are kept in a small LRU cache; safe for concurrent use.
class PredictionStore {
 public:
  explicit PredictionStore(std::filesystem::path dir, std::size_t cache_capacity = 8);

  std::filesystem::path path_for(std::string_view case_id, Timepoint timepoint) const;
  /// MissingPrediction when the file does not exist.
  std::shared_ptr<const MaskVolume> get(std::string_view case_id, Timepoint timepoint) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<std::pair<std::string, std::shared_ptr<const MaskVolume>>> cache_;
};

/// Crops the stored prediction through the identical window as `voi`.
MaskVolume segment_external(const Voi<float>& voi, const PredictionStore& store, std::string_view case_id,
                            Timepoint timepoint);

class ExternalSegmenter final : public Segmenter {
 public:
  explicit ExternalSegmenter(std::filesystem::path prediction_dir, std::size_t cache_capacity = 8);
  std::string identity() const override;
  MaskVolume segment(const SegmentationRequest& request) const override;

 private:
  PredictionStore store_;
};

}  // namespace lesiontrack
