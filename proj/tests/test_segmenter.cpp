#include "doctest.h"
#include "lesiontrack/labeling.hpp"
#include "lesiontrack/metrics.hpp"
#include "lesiontrack/nifti.hpp"
#include "lesiontrack/segmenter.hpp"
#include "support.hpp"

using namespace lesiontrack;
using testsupport::TempDir;

namespace {

// Spherical lesion of radius r (mm) around world point c.
void paint_sphere(LabelVolume& l, WorldPoint c, double r, std::int32_t label) {
  const Geometry& g = l.geometry();
  for (std::int64_t k = 0; k < g.dims()[2]; ++k)
    for (std::int64_t j = 0; j < g.dims()[1]; ++j)
      for (std::int64_t i = 0; i < g.dims()[0]; ++i)
        if (distance(g.voxel_to_world({i, j, k}), c) <= r) l.at(i, j, k) = label;
}

struct Scene {
  Geometry g{{64, 64, 32}, {1, 1, 2}};
  IntensityVolume ct{g, 0.0f};
  LabelVolume gt{g};
};

CenterBiasParams exact() {
  CenterBiasParams p;
  p.boundary_noise_mm = 0.0;
  p.hallucination_prob = 0.0;
  return p;
}

MaskVolume run(const Scene& s, WorldPoint center, const CenterBiasParams& p, std::uint64_t seed = 1) {
  const auto voi = extract_voi(s.ct, center, VoiSpec{{32, 32, 16}, 0});
  const auto gt = extract_like(s.gt, voi);
  return segment_synthetic(voi, gt, p, seed);
}

}  // namespace

TEST_CASE("detection law is piecewise linear") {
  CenterBiasParams p;
  p.detect_floor_prob = 0.2;
  CHECK(detection_probability(p, 0.0) == 1.0);
  CHECK(detection_probability(p, 20.0) == 1.0);
  CHECK(detection_probability(p, 22.5) == doctest::Approx(0.6));
  CHECK(detection_probability(p, 25.0) == doctest::Approx(0.2));
  CHECK(detection_probability(p, 100.0) == 0.2);
  p.transition_band_mm = 0.0;
  CHECK(detection_probability(p, 20.0001) == 0.2);
}

TEST_CASE("centred lesion with no noise is reproduced exactly") {
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({32, 32, 16});
  paint_sphere(s.gt, c, 6.0, 1);
  const auto out = run(s, c, exact());
  const auto voi = extract_voi(s.ct, c, VoiSpec{{32, 32, 16}, 0});
  const auto gt = extract_like(s.gt, voi);
  CHECK(dice(out, binarize(gt.data)) == 1.0);
}

TEST_CASE("lesion beyond radius plus band is never segmented at floor 0") {
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({32, 32, 16});
  paint_sphere(s.gt, c + WorldPoint{26.0, 0, 0}, 3.0, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(count_nonzero(run(s, c, exact(), seed)) == 0);
}

TEST_CASE("noise-free output is a union of whole ground-truth instances") {
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({32, 32, 16});
  paint_sphere(s.gt, c, 4.0, 1);
  paint_sphere(s.gt, c + WorldPoint{12, 0, 0}, 3.0, 2);
  paint_sphere(s.gt, c + WorldPoint{0, -14, 4}, 3.0, 3);
  auto p = exact();
  p.detect_radius_mm = 5.0;
  p.transition_band_mm = 10.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto out = run(s, c, p, seed);
    const auto voi = extract_voi(s.ct, c, VoiSpec{{32, 32, 16}, 0});
    const auto gt = extract_like(s.gt, voi).data;
    std::map<std::int32_t, std::pair<std::int64_t, std::int64_t>> seen;  // label -> (in output, total)
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i]) REQUIRE(gt[i] != 0);
      if (gt[i]) {
        seen[gt[i]].first += out[i];
        seen[gt[i]].second += 1;
      }
    }
    for (const auto& [label, n] : seen) CHECK((n.first == 0 || n.first == n.second));
    CHECK(seen[1].first == seen[1].second);  // centred lesion always detected
  }
}

TEST_CASE("synthetic output is deterministic and binary; boundary noise stays bounded") {
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({32, 32, 16});
  paint_sphere(s.gt, c, 7.0, 1);
  CenterBiasParams p;
  p.boundary_noise_mm = 2.0;
  p.hallucination_prob = 0.5;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = run(s, c, p, seed);
    const auto b = run(s, c, p, seed);
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    for (auto v : a.data()) CHECK(v <= 1);
  }
  // Without hallucinations, every output voxel lies within the noise amplitude of the lesion.
  p.hallucination_prob = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = run(s, c, p, seed);
    const auto voi = extract_voi(s.ct, c, VoiSpec{{32, 32, 16}, 0});
    const Geometry& g = voi.data.geometry();
    for (std::int64_t k = 0; k < 16; ++k)
      for (std::int64_t j = 0; j < 32; ++j)
        for (std::int64_t i = 0; i < 32; ++i) {
          if (out.at(i, j, k)) CHECK(distance(g.voxel_to_world({i, j, k}), c) <= 7.0 + 2.0 + 1e-9);
        }
  }
}

TEST_CASE("hallucinations appear near the VOI centre even with nothing to segment") {
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({32, 32, 16});
  auto p = exact();
  p.hallucination_prob = 1.0;
  p.hallucination_offset_mm = 4.0;
  const auto out = run(s, c, p, 3);
  const auto lc = label_components(out);
  REQUIRE(lc.count >= 1);
  CHECK(distance(lc.centroids[0], c) < 4.0 + 6.0);
}

TEST_CASE("stream seeds depend on every key part") {
  const auto base = segmentation_stream_seed(1, "case_000", 2, Timepoint::Baseline, std::nullopt);
  CHECK(base == segmentation_stream_seed(1, "case_000", 2, Timepoint::Baseline, std::nullopt));
  CHECK(base != segmentation_stream_seed(2, "case_000", 2, Timepoint::Baseline, std::nullopt));
  CHECK(base != segmentation_stream_seed(1, "case_001", 2, Timepoint::Baseline, std::nullopt));
  CHECK(base != segmentation_stream_seed(1, "case_000", 3, Timepoint::Baseline, std::nullopt));
  CHECK(base != segmentation_stream_seed(1, "case_000", 2, Timepoint::Followup, std::nullopt));
  CHECK(base != segmentation_stream_seed(1, "case_000", 2, Timepoint::Baseline, 0.0));
  CHECK(segmentation_stream_seed(1, "c", 2, Timepoint::Baseline, 5.0) !=
        segmentation_stream_seed(1, "c", 2, Timepoint::Baseline, 10.0));
}

TEST_CASE("parameter validation and misaligned inputs") {
  CenterBiasParams p;
  p.detect_floor_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.detect_radius_mm = -1;
  CHECK_THROWS_AS(SyntheticSegmenter{p}, Error);

  Scene s;
  const auto voi = extract_voi(s.ct, {10, 10, 10}, VoiSpec{{8, 8, 8}, 0});
  const auto other = extract_voi(s.gt, {20, 10, 10}, VoiSpec{{8, 8, 8}, 0});
  try {
    segment_synthetic(voi, other, CenterBiasParams{}, 0);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("external predictions are cropped through the identical window") {
  TempDir dir;
  Scene s;
  MaskVolume pred(s.g);
  RandomStream rng(6);
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = rng.uniform() < 0.2;
  save_volume(pred, dir / "case_007_followup.nii.gz");
  const PredictionStore store(dir.path());
  CHECK(store.path_for("case_007", Timepoint::Followup) == dir / "case_007_followup.nii.gz");

  for (int t = 0; t < 20; ++t) {
    const WorldPoint c{rng.uniform(-10, 74), rng.uniform(-10, 74), rng.uniform(-10, 74)};
    const auto voi = extract_voi(s.ct, c, VoiSpec{{16, 16, 8}, -1024});
    const auto got = segment_external(voi, store, "case_007", Timepoint::Followup);
    const auto want = extract_voi(pred, c, VoiSpec{{16, 16, 8}, 0}).data;
    CHECK(got.geometry() == want.geometry());
    CHECK(std::equal(got.data().begin(), got.data().end(), want.data().begin()));
  }

  try {
    const auto voi = extract_voi(s.ct, {0, 0, 0}, VoiSpec{{4, 4, 4}, 0});
    segment_external(voi, store, "case_007", Timepoint::Baseline);
    FAIL("expected MissingPrediction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPrediction);
  }

  save_volume(MaskVolume(Geometry({32, 64, 64}, {2, 1, 1})), dir / "case_008_baseline.nii.gz");
  try {
    const auto voi = extract_voi(s.ct, {0, 0, 0}, VoiSpec{{4, 4, 4}, 0});
    segment_external(voi, store, "case_008", Timepoint::Baseline);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("external segmenter with a ground-truth prediction gives Dice 1 on a centred lesion") {
  TempDir dir;
  Scene s;
  const WorldPoint c = s.g.voxel_to_world({30, 31, 15});
  paint_sphere(s.gt, c, 5.0, 1);
  save_volume(binarize(s.gt), dir / "case_000_baseline.nii.gz");
  save_volume(MaskVolume(s.g), dir / "case_000_followup.nii.gz");
  const ExternalSegmenter seg(dir.path());
  const auto voi = extract_voi(s.ct, c, VoiSpec{{32, 32, 16}, 0});
  const auto gt = extract_like(s.gt, voi);
  const auto out = seg.segment({voi, gt, "case_000", Timepoint::Baseline, 1, std::nullopt});
  CHECK(dice(out, binarize(gt.data)) == 1.0);
  const auto empty = seg.segment({voi, gt, "case_000", Timepoint::Followup, 1, std::nullopt});
  CHECK(count_nonzero(empty) == 0);
  CHECK(seg.identity().find(dir.path().string()) != std::string::npos);
}
