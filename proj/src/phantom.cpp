#include "lesiontrack/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "lesiontrack/labeling.hpp"
#include "lesiontrack/nifti.hpp"
#include "lesiontrack/parallel.hpp"

namespace lesiontrack {
namespace {

constexpr int kPlacementAttempts = 1000;
constexpr double kGrowthHeadroom = 1.5;  // largest grow factor

struct Ellipsoid {
  WorldPoint center;
  std::array<double, 3> semi{};      // descending
  std::array<WorldPoint, 3> axes{};  // orthonormal principal directions

  double extent() const { return semi[0]; }
  double volume() const { return semi[0] * semi[1] * semi[2]; }
};

std::array<WorldPoint, 3> random_rotation(RandomStream& rng) {
  double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return {WorldPoint{1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)},
          WorldPoint{2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)},
          WorldPoint{2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)}};
}

double dot(WorldPoint a, WorldPoint b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

WorldPoint snap(const Geometry& g, WorldPoint p) { return g.voxel_to_world(g.world_to_voxel_nearest(p)); }

template <typename Inside>
void paint_region(LabelVolume& vol, WorldPoint lo_w, WorldPoint hi_w, std::int32_t label, Inside inside) {
  const Geometry& g = vol.geometry();
  std::int64_t lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((lo_w[a] - g.origin()[a]) / g.spacing()[a])));
    hi[a] = std::min<std::int64_t>(g.dims()[a] - 1,
                                   static_cast<std::int64_t>(std::ceil((hi_w[a] - g.origin()[a]) / g.spacing()[a])));
  }
  for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        auto& v = vol.at(i, j, k);
        if (v == 0 && inside(g.voxel_to_world({i, j, k}))) v = label;
      }
    }
  }
}

void paint_ellipsoid(LabelVolume& vol, const Ellipsoid& e, double scale, std::int32_t label) {
  const double r = e.extent() * scale;
  const WorldPoint span{r, r, r};
  paint_region(vol, e.center - span, e.center + span, label, [&](WorldPoint p) {
    const WorldPoint d = p - e.center;
    double q = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double t = dot(d, e.axes[a]) / (e.semi[a] * scale);
      q += t * t;
    }
    return q <= 1.0;
  });
}

void paint_capsule(LabelVolume& vol, WorldPoint a, WorldPoint b, double radius, std::int32_t label) {
  WorldPoint lo, hi;
  for (int ax = 0; ax < 3; ++ax) {
    lo[ax] = std::min(a[ax], b[ax]) - radius;
    hi[ax] = std::max(a[ax], b[ax]) + radius;
  }
  const WorldPoint ab = b - a;
  const double len2 = dot(ab, ab);
  paint_region(vol, lo, hi, label, [&](WorldPoint p) {
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + t * ab) <= radius;
  });
}

class CaseBuilder {
 public:
  CaseBuilder(const PhantomConfig& cfg, const std::string& case_id)
      : cfg_(cfg), case_id_(case_id), rng_(RandomStream::derive(cfg.seed, case_id)),
        geometry_(cfg.volume_dims, cfg.spacing, WorldPoint{}) {}

  PhantomCase build();

 private:
  Ellipsoid place(const std::vector<Ellipsoid>& existing);
  IntensityVolume render_ct(const LabelVolume& instances, const std::map<std::int32_t, double>& hu,
                            Timepoint timepoint) const;

  const PhantomConfig& cfg_;
  std::string case_id_;
  RandomStream rng_;
  Geometry geometry_;
};

Ellipsoid CaseBuilder::place(const std::vector<Ellipsoid>& existing) {
  const auto [rmin, rmax] = cfg_.lesion_radii_range_mm;
  const double max_spacing = *std::max_element(cfg_.spacing.begin(), cfg_.spacing.end());
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    Ellipsoid e;
    e.semi[0] = rng_.uniform(rmin, rmax);
    const double lower = std::max(rmin, e.semi[0] / 3.0);
    e.semi[1] = rng_.uniform(lower, e.semi[0]);
    e.semi[2] = rng_.uniform(lower, e.semi[0]);
    std::sort(e.semi.begin(), e.semi.end(), std::greater<>());
    e.axes = random_rotation(rng_);
    const double margin = kGrowthHeadroom * e.extent() + max_spacing;
    bool fits = true;
    for (int a = 0; a < 3; ++a) {
      const double span = cfg_.spacing[a] * (cfg_.volume_dims[a] - 1);
      if (span < 2.0 * margin) {
        fits = false;
        break;
      }
      e.center[a] = rng_.uniform(margin, span - margin);
    }
    if (!fits) continue;
    e.center = snap(geometry_, e.center);
    const bool clear = std::all_of(existing.begin(), existing.end(), [&](const Ellipsoid& o) {
      return distance(o.center, e.center) > kGrowthHeadroom * (o.extent() + e.extent()) + cfg_.min_gap_mm;
    });
    if (clear) return e;
  }
  throw Error(ErrorCode::PlacementError,
              case_id_ + ": could not place a lesion without overlap after " + std::to_string(kPlacementAttempts) + " attempts");
}

IntensityVolume CaseBuilder::render_ct(const LabelVolume& instances, const std::map<std::int32_t, double>& hu,
                                       Timepoint timepoint) const {
  RandomStream noise = RandomStream::derive(cfg_.seed, case_id_ + "/ct/" + std::string(to_string(timepoint)));
  IntensityVolume ct(geometry_);
  auto labels = instances.data();
  auto out = ct.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int32_t l = labels[i];
    out[i] = l == 0 ? static_cast<float>(-50.0 + 20.0 * noise.normal())
                    : static_cast<float>(hu.at(l) + 10.0 * noise.normal());
  }
  return ct;
}

PhantomCase CaseBuilder::build() {
  const int n = rng_.uniform_int(cfg_.lesion_count_range[0], cfg_.lesion_count_range[1]);

  std::vector<Ellipsoid> lesions;
  std::vector<Transition> transition;
  std::vector<double> hu;
  for (int i = 0; i < n; ++i) {
    lesions.push_back(place(lesions));
    transition.push_back(cfg_.transition_mix.sample(rng_));
    hu.push_back(rng_.uniform(40.0, 80.0));
  }

  // Pair each merging lesion with its nearest unpaired neighbour that is not resolving or splitting.
  std::vector<int> partner(n, -1);
  for (int i = 0; i < n; ++i) {
    if (transition[i] != Transition::Merge || partner[i] >= 0) continue;
    int best = -1;
    double best_d = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i || partner[j] >= 0) continue;
      const Transition t = transition[j];
      if (t != Transition::Stable && t != Transition::Grow && t != Transition::Shrink && t != Transition::Merge) continue;
      const double d = distance(lesions[i].center, lesions[j].center);
      if (best < 0 || d < best_d) best = j, best_d = d;
    }
    if (best < 0) {
      transition[i] = Transition::Stable;
    } else {
      partner[i] = best;
      partner[best] = i;
      transition[best] = Transition::Merge;
    }
  }

  PhantomCase out;
  out.case_id = case_id_;
  std::map<std::int32_t, double> hu_by_label;
  LabelVolume baseline(geometry_);
  for (int i = 0; i < n; ++i) {
    paint_ellipsoid(baseline, lesions[i], 1.0, i + 1);
    hu_by_label[i + 1] = hu[i];
  }

  LabelVolume followup(geometry_);
  std::int32_t next_id = n + 1;
  std::vector<int> survivor(n, -1);
  std::vector<std::array<std::int32_t, 2>> children(n, {0, 0});
  std::vector<std::pair<std::int32_t, int>> appeared;  // (new id, index into lesions)
  for (int i = 0; i < n; ++i) {
    const std::int32_t id = i + 1;
    switch (transition[i]) {
      case Transition::Stable:
        paint_ellipsoid(followup, lesions[i], 1.0, id);
        break;
      case Transition::Grow:
        paint_ellipsoid(followup, lesions[i], rng_.uniform(1.2, kGrowthHeadroom), id);
        break;
      case Transition::Shrink:
        paint_ellipsoid(followup, lesions[i], rng_.uniform(0.5, 0.8), id);
        break;
      case Transition::Resolve:
        break;
      case Transition::New: {
        paint_ellipsoid(followup, lesions[i], 1.0, id);
        lesions.push_back(place(lesions));
        appeared.emplace_back(next_id, static_cast<int>(lesions.size()) - 1);
        hu_by_label[next_id] = rng_.uniform(40.0, 80.0);
        ++next_id;
        break;
      }
      case Transition::Merge: {
        const int j = partner[i];
        if (j < i) break;  // pair already painted
        const int keep = lesions[j].volume() > lesions[i].volume() ? j : i;
        survivor[i] = survivor[j] = keep;
        const std::int32_t label = keep + 1;
        paint_ellipsoid(followup, lesions[i], 1.0, label);
        paint_ellipsoid(followup, lesions[j], 1.0, label);
        const double bridge = std::max(0.5 * std::min(lesions[i].semi[2], lesions[j].semi[2]),
                                       0.6 * *std::max_element(cfg_.spacing.begin(), cfg_.spacing.end()));
        paint_capsule(followup, lesions[i].center, lesions[j].center, bridge, label);
        break;
      }
      case Transition::Split: {
        const Ellipsoid& e = lesions[i];
        for (int c = 0; c < 2; ++c) {
          Ellipsoid child = e;
          const double side = c == 0 ? 1.0 : -1.0;
          child.center = snap(geometry_, e.center + (side * 0.65 * e.semi[0]) * e.axes[0]);
          paint_ellipsoid(followup, child, 0.55, next_id);
          hu_by_label[next_id] = hu[i];
          children[i][c] = next_id++;
        }
        break;
      }
      case Transition::SplitChild:
        break;
    }
  }
  for (const auto& [id, idx] : appeared) paint_ellipsoid(followup, lesions[idx], 1.0, id);

  const auto bl_stats = instance_stats(baseline);
  const auto fu_stats = instance_stats(followup);
  auto fu_centroid = [&](std::int32_t label) -> std::optional<WorldPoint> {
    auto it = fu_stats.find(label);
    if (it == fu_stats.end()) return std::nullopt;
    return it->second.centroid(geometry_);
  };

  for (int i = 0; i < n; ++i) {
    const std::int32_t id = i + 1;
    LesionRecord r;
    r.case_id = case_id_;
    r.lesion_id = id;
    r.baseline_centroid_mm = bl_stats.at(id).centroid(geometry_);
    r.transition = transition[i] == Transition::New ? Transition::Stable : transition[i];
    switch (transition[i]) {
      case Transition::Resolve:
        break;
      case Transition::Merge:
        r.followup_centroid_mm = fu_centroid(survivor[i] + 1);
        if (survivor[i] != i) r.merged_into = survivor[i] + 1;
        break;
      case Transition::Split: {
        InstanceStats joint;
        for (std::int32_t c : children[i]) {
          if (auto it = fu_stats.find(c); it != fu_stats.end()) joint.merge(it->second);
        }
        if (joint.count > 0) r.followup_centroid_mm = joint.centroid(geometry_);
        break;
      }
      default:
        r.followup_centroid_mm = fu_centroid(id);
        break;
    }

    const bool drop = rng_.uniform() < cfg_.missing_propagation_fraction;
    const double magnitude = cfg_.reg_error.sample_magnitude(rng_);
    const WorldPoint direction = rng_.unit_vector();
    const auto anchor = r.followup_centroid_mm ? r.followup_centroid_mm : r.baseline_centroid_mm;
    if (!(drop && r.followup_centroid_mm)) {
      r.propagated_centroid_mm = *anchor + magnitude * direction;
      r.registration_error_mm = magnitude;
    }
    out.lesions.push_back(std::move(r));

    for (std::int32_t c : children[i]) {
      if (c == 0) continue;
      LesionRecord child;
      child.case_id = case_id_;
      child.lesion_id = c;
      child.followup_centroid_mm = fu_centroid(c);
      child.transition = Transition::SplitChild;
      child.parent_id = id;
      out.lesions.push_back(std::move(child));
    }
  }
  for (const auto& [id, idx] : appeared) {
    LesionRecord r;
    r.case_id = case_id_;
    r.lesion_id = id;
    r.followup_centroid_mm = fu_centroid(id);
    r.transition = Transition::New;
    out.lesions.push_back(std::move(r));
  }
  std::sort(out.lesions.begin(), out.lesions.end(),
            [](const LesionRecord& a, const LesionRecord& b) { return a.lesion_id < b.lesion_id; });

  out.baseline.ct = render_ct(baseline, hu_by_label, Timepoint::Baseline);
  out.followup.ct = render_ct(followup, hu_by_label, Timepoint::Followup);
  out.baseline.instances = std::move(baseline);
  out.followup.instances = std::move(followup);
  return out;
}

}  // namespace

Transition TransitionMix::sample(RandomStream& rng) const {
  const std::array<std::pair<double, Transition>, 7> weights{{
      {stable, Transition::Stable},
      {grow, Transition::Grow},
      {shrink, Transition::Shrink},
      {resolve, Transition::Resolve},
      {appear_new, Transition::New},
      {merge, Transition::Merge},
      {split, Transition::Split},
  }};
  double u = rng.uniform() * total();
  for (const auto& [w, t] : weights) {
    if (u < w) return t;
    u -= w;
  }
  for (auto it = weights.rbegin(); it != weights.rend(); ++it) {
    if (it->first > 0.0) return it->second;
  }
  return Transition::Stable;
}

double RegistrationErrorModel::sample_magnitude(RandomStream& rng) const {
  const double u = rng.uniform();
  const double z = rng.normal();
  const double tail = rng.exponential(tail_scale_mm);
  return u < prob_inlier ? std::fabs(inlier_sigma_mm * z) : tail;
}

double RegistrationErrorModel::cdf(double r) const {
  if (r < 0.0) return 0.0;
  const double core = inlier_sigma_mm > 0.0 ? std::erf(r / (inlier_sigma_mm * std::sqrt(2.0))) : 1.0;
  const double tail = tail_scale_mm > 0.0 ? 1.0 - std::exp(-r / tail_scale_mm) : 1.0;
  return prob_inlier * core + (1.0 - prob_inlier) * tail;
}

void PhantomConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidInput, m); };
  for (int a = 0; a < 3; ++a) {
    if (volume_dims[a] < 1) fail("volume_dims must be >= 1");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) fail("spacing must be positive");
  }
  if (lesion_count_range[0] < 0 || lesion_count_range[1] < lesion_count_range[0]) fail("lesion_count_range must be [min, max] with 0 <= min <= max");
  if (!(lesion_radii_range_mm[0] > 0.0) || lesion_radii_range_mm[1] < lesion_radii_range_mm[0]) fail("lesion_radii_range_mm must be positive [min, max]");
  if (!(min_gap_mm >= 0.0)) fail("min_gap_mm must be >= 0");
  const TransitionMix& m = transition_mix;
  for (double w : {m.stable, m.grow, m.shrink, m.resolve, m.appear_new, m.merge, m.split}) {
    if (!(w >= 0.0)) fail("transition_mix weights must be >= 0");
  }
  if (std::fabs(m.total() - 1.0) > 1e-9) fail("transition_mix must sum to 1");
  if (!(reg_error.prob_inlier >= 0.0 && reg_error.prob_inlier <= 1.0)) fail("prob_inlier must lie in [0, 1]");
  if (!(reg_error.inlier_sigma_mm >= 0.0) || !(reg_error.tail_scale_mm >= 0.0)) fail("registration error scales must be >= 0");
  if (!(missing_propagation_fraction >= 0.0 && missing_propagation_fraction <= 1.0)) fail("missing_propagation_fraction must lie in [0, 1]");
}

PhantomCase generate_case(const PhantomConfig& cfg, const std::string& case_id) {
  cfg.validate();
  return CaseBuilder(cfg, case_id).build();
}

std::string phantom_case_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03d", index);
  return buf;
}

std::vector<LesionRecord> generate_dataset(const PhantomConfig& cfg, int n_cases, const std::filesystem::path& out_dir,
                                           int workers) {
  cfg.validate();
  if (n_cases < 0) throw Error(ErrorCode::InvalidInput, "n_cases must be >= 0");
  namespace fs = std::filesystem;
  const fs::path manifest_path = out_dir / "manifest.json";
  if (fs::exists(manifest_path)) throw Error(ErrorCode::IoError, manifest_path.string() + " already exists");
  for (int c = 0; c < n_cases; ++c) {
    if (fs::exists(out_dir / phantom_case_id(c))) {
      throw Error(ErrorCode::IoError, (out_dir / phantom_case_id(c)).string() + " already exists");
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::vector<LesionRecord>> per_case(static_cast<std::size_t>(n_cases));
  parallel_for(per_case.size(), workers, [&](std::size_t c) {
    const std::string id = phantom_case_id(static_cast<int>(c));
    PhantomCase pc = generate_case(cfg, id);
    const fs::path dir = out_dir / id;
    std::error_code dir_ec;
    fs::create_directories(dir, dir_ec);
    if (dir_ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
    save_volume(pc.baseline.ct, dir / "baseline_ct.nii.gz");
    save_volume(pc.baseline.instances, dir / "baseline_instances.nii.gz");
    save_volume(pc.followup.ct, dir / "followup_ct.nii.gz");
    save_volume(pc.followup.instances, dir / "followup_instances.nii.gz");
    per_case[c] = std::move(pc.lesions);
  });

  std::vector<LesionRecord> manifest;
  for (auto& v : per_case) {
    for (auto& r : v) manifest.push_back(std::move(r));
  }
  write_manifest(manifest, manifest_path);
  return manifest;
}

}  // namespace lesiontrack
