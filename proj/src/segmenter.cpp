#include "lesiontrack/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "lesiontrack/format.hpp"
#include "lesiontrack/labeling.hpp"
#include "lesiontrack/nifti.hpp"
#include "lesiontrack/rng.hpp"

namespace lesiontrack {
namespace {

struct Offset {
  int di, dj, dk;
};

// Voxel offsets within `radius_mm` of the origin (excluding the origin).
std::vector<Offset> ball_offsets(const Spacing& sp, double radius_mm) {
  std::vector<Offset> out;
  const int ri = static_cast<int>(std::floor(radius_mm / sp[0]));
  const int rj = static_cast<int>(std::floor(radius_mm / sp[1]));
  const int rk = static_cast<int>(std::floor(radius_mm / sp[2]));
  for (int dk = -rk; dk <= rk; ++dk) {
    for (int dj = -rj; dj <= rj; ++dj) {
      for (int di = -ri; di <= ri; ++di) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const double x = di * sp[0], y = dj * sp[1], z = dk * sp[2];
        if (x * x + y * y + z * z <= radius_mm * radius_mm) out.push_back({di, dj, dk});
      }
    }
  }
  return out;
}

// Writes instance `label` into `out`, dilated (amplitude > 0) or eroded
// (amplitude < 0) by |amplitude| mm.
void paint_instance(const LabelVolume& gt, std::int32_t label, const InstanceStats& s, double amplitude_mm,
                    MaskVolume& out) {
  const Geometry& g = gt.geometry();
  const auto& d = g.dims();
  const auto ball = ball_offsets(g.spacing(), std::fabs(amplitude_mm));
  auto inside = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return i >= 0 && j >= 0 && k >= 0 && i < d[0] && j < d[1] && k < d[2];
  };
  for (std::int64_t k = s.lo[2]; k <= s.hi[2]; ++k) {
    for (std::int64_t j = s.lo[1]; j <= s.hi[1]; ++j) {
      for (std::int64_t i = s.lo[0]; i <= s.hi[0]; ++i) {
        if (gt.at(i, j, k) != label) continue;
        if (ball.empty()) {
          out.at(i, j, k) = 1;
        } else if (amplitude_mm > 0.0) {
          out.at(i, j, k) = 1;
          for (const auto& o : ball) {
            const std::int64_t ni = i + o.di, nj = j + o.dj, nk = k + o.dk;
            if (inside(ni, nj, nk)) out.at(ni, nj, nk) = 1;
          }
        } else {
          bool keep = true;
          for (const auto& o : ball) {
            const std::int64_t ni = i + o.di, nj = j + o.dj, nk = k + o.dk;
            if (!inside(ni, nj, nk) || gt.at(ni, nj, nk) != label) {
              keep = false;
              break;
            }
          }
          if (keep) out.at(i, j, k) = 1;
        }
      }
    }
  }
}

void paint_blob(WorldPoint center, WorldPoint radii, MaskVolume& out) {
  const Geometry& g = out.geometry();
  const auto& d = g.dims();
  std::int64_t lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((center[a] - radii[a] - g.origin()[a]) / g.spacing()[a])));
    hi[a] = std::min<std::int64_t>(d[a] - 1, static_cast<std::int64_t>(std::ceil((center[a] + radii[a] - g.origin()[a]) / g.spacing()[a])));
  }
  for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        const WorldPoint p = g.voxel_to_world({i, j, k});
        double q = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double t = (p[a] - center[a]) / radii[a];
          q += t * t;
        }
        if (q <= 1.0) out.at(i, j, k) = 1;
      }
    }
  }
}

}  // namespace

void CenterBiasParams::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!nonneg(detect_radius_mm) || !nonneg(transition_band_mm) || !nonneg(boundary_noise_mm) ||
      !nonneg(offcenter_erosion_gain) || !nonneg(hallucination_offset_mm)) {
    throw Error(ErrorCode::InvalidInput, "center-bias radii and amplitudes must be finite and >= 0");
  }
  if (!prob(detect_floor_prob) || !prob(hallucination_prob)) {
    throw Error(ErrorCode::InvalidInput, "center-bias probabilities must lie in [0, 1]");
  }
}

double detection_probability(const CenterBiasParams& p, double distance_mm) {
  if (distance_mm <= p.detect_radius_mm) return 1.0;
  const double beyond = distance_mm - p.detect_radius_mm;
  if (p.transition_band_mm > 0.0 && beyond < p.transition_band_mm) {
    return 1.0 - (1.0 - p.detect_floor_prob) * (beyond / p.transition_band_mm);
  }
  return p.detect_floor_prob;
}

std::uint64_t segmentation_stream_seed(std::uint64_t seed, std::string_view case_id, std::int32_t lesion_id,
                                       Timepoint timepoint, std::optional<double> epsilon_mm) {
  std::string key(case_id);
  key += '/';
  key += std::to_string(lesion_id);
  key += '/';
  key += to_string(timepoint);
  key += '/';
  key += epsilon_mm ? format_number(*epsilon_mm) : std::string("-");
  return mix64(seed) ^ fnv1a64(key);
}

MaskVolume segment_synthetic(const Voi<float>& voi, const Voi<std::int32_t>& gt_instances_in_voi,
                             const CenterBiasParams& params, std::uint64_t stream_seed) {
  params.validate();
  const LabelVolume& gt = gt_instances_in_voi.data;
  if (!gt.geometry().same_shape(voi.data.geometry()) || !(gt_instances_in_voi.source_offset == voi.source_offset)) {
    throw Error(ErrorCode::ShapeMismatch, "ground-truth VOI is not aligned with the image VOI");
  }
  const Geometry& g = gt.geometry();
  const WorldPoint c_voi = voi_center_world(voi);
  RandomStream rng(stream_seed);
  MaskVolume out(g);

  for (const auto& [label, s] : instance_stats(gt)) {
    const double d = distance(s.centroid(g), c_voi);
    const double u_detect = rng.uniform();
    const double u_noise = rng.uniform(-1.0, 1.0);
    if (!(u_detect < detection_probability(params, d))) continue;

    double amplitude = params.boundary_noise_mm * u_noise;
    if (params.detect_radius_mm > 0.0) {
      const double reach = std::min(d, params.detect_radius_mm + params.transition_band_mm) / params.detect_radius_mm;
      amplitude -= params.boundary_noise_mm * params.offcenter_erosion_gain * reach;
    }
    paint_instance(gt, label, s, amplitude, out);
  }

  if (rng.uniform() < params.hallucination_prob) {
    const WorldPoint radii{rng.uniform(2.0, 6.0), rng.uniform(2.0, 6.0), rng.uniform(2.0, 6.0)};
    const WorldPoint dir = rng.unit_vector();
    const double r = params.hallucination_offset_mm * std::cbrt(rng.uniform());
    paint_blob(c_voi + r * dir, radii, out);
  }
  return out;
}

SyntheticSegmenter::SyntheticSegmenter(CenterBiasParams params) : params_(params) { params_.validate(); }

std::string SyntheticSegmenter::identity() const {
  std::ostringstream s;
  s << "synthetic(detect_radius_mm=" << format_number(params_.detect_radius_mm)
    << ",transition_band_mm=" << format_number(params_.transition_band_mm)
    << ",detect_floor_prob=" << format_number(params_.detect_floor_prob)
    << ",boundary_noise_mm=" << format_number(params_.boundary_noise_mm)
    << ",offcenter_erosion_gain=" << format_number(params_.offcenter_erosion_gain)
    << ",hallucination_prob=" << format_number(params_.hallucination_prob)
    << ",hallucination_offset_mm=" << format_number(params_.hallucination_offset_mm) << ",seed=" << params_.seed
    << ")";
  return s.str();
}

MaskVolume SyntheticSegmenter::segment(const SegmentationRequest& r) const {
  const auto seed = segmentation_stream_seed(params_.seed, r.case_id, r.lesion_id, r.timepoint, r.epsilon_mm);
  return segment_synthetic(r.image, r.gt_instances, params_, seed);
}

PredictionStore::PredictionStore(std::filesystem::path dir, std::size_t cache_capacity)
    : dir_(std::move(dir)), capacity_(std::max<std::size_t>(1, cache_capacity)) {}

std::filesystem::path PredictionStore::path_for(std::string_view case_id, Timepoint timepoint) const {
  return dir_ / (std::string(case_id) + "_" + std::string(to_string(timepoint)) + ".nii.gz");
}

std::shared_ptr<const MaskVolume> PredictionStore::get(std::string_view case_id, Timepoint timepoint) const {
  const auto path = path_for(case_id, timepoint);
  const std::string key = path.string();
  {
    std::lock_guard lock(mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (it->first == key) {
        cache_.splice(cache_.begin(), cache_, it);
        return cache_.front().second;
      }
    }
  }
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingPrediction, "no prediction at " + key);
  }
  auto mask = std::make_shared<const MaskVolume>(load_mask(path));
  std::lock_guard lock(mutex_);
  cache_.emplace_front(key, mask);
  while (cache_.size() > capacity_) cache_.pop_back();
  return mask;
}

MaskVolume segment_external(const Voi<float>& voi, const PredictionStore& store, std::string_view case_id,
                            Timepoint timepoint) {
  const auto prediction = store.get(case_id, timepoint);
  return extract_like(*prediction, voi).data;
}

ExternalSegmenter::ExternalSegmenter(std::filesystem::path prediction_dir, std::size_t cache_capacity)
    : store_(std::move(prediction_dir), cache_capacity) {}

std::string ExternalSegmenter::identity() const { return "external(prediction_dir=" + store_.dir().string() + ")"; }

MaskVolume ExternalSegmenter::segment(const SegmentationRequest& r) const {
  return segment_external(r.image, store_, r.case_id, r.timepoint);
}

}  // namespace lesiontrack
