#include "doctest.h"
#include "lesiontrack/labeling.hpp"
#include "lesiontrack/metrics.hpp"
#include "lesiontrack/nifti.hpp"
#include "lesiontrack/phantom.hpp"
#include "support.hpp"

#include <set>

using namespace lesiontrack;
using testsupport::TempDir;

namespace {

PhantomConfig small_config() {
  PhantomConfig cfg;
  cfg.volume_dims = {64, 64, 32};
  cfg.lesion_count_range = {2, 4};
  cfg.lesion_radii_range_mm = {3.0, 6.0};
  cfg.seed = 5;
  return cfg;
}

TransitionMix only(Transition t) {
  TransitionMix m{0, 0, 0, 0, 0, 0, 0};
  switch (t) {
    case Transition::Stable: m.stable = 1; break;
    case Transition::Grow: m.grow = 1; break;
    case Transition::Shrink: m.shrink = 1; break;
    case Transition::Resolve: m.resolve = 1; break;
    case Transition::New: m.appear_new = 1; break;
    case Transition::Merge: m.merge = 1; break;
    default: m.split = 1; break;
  }
  return m;
}

RegistrationErrorModel no_error() { return {1.0, 0.0, 0.0}; }

}  // namespace

TEST_CASE("all stable with zero registration error") {
  auto cfg = small_config();
  cfg.transition_mix = only(Transition::Stable);
  cfg.reg_error = no_error();
  const auto pc = generate_case(cfg, "case_000");
  CHECK(std::equal(pc.baseline.instances.data().begin(), pc.baseline.instances.data().end(),
                   pc.followup.instances.data().begin()));
  REQUIRE(!pc.lesions.empty());
  for (const auto& r : pc.lesions) {
    CHECK(r.transition == Transition::Stable);
    REQUIRE(r.propagated_centroid_mm);
    CHECK(*r.propagated_centroid_mm == *r.followup_centroid_mm);
    CHECK(*r.baseline_centroid_mm == *r.followup_centroid_mm);
  }
}

TEST_CASE("all resolve leaves an empty follow-up") {
  auto cfg = small_config();
  cfg.transition_mix = only(Transition::Resolve);
  const auto pc = generate_case(cfg, "case_001");
  CHECK(count_nonzero(binarize(pc.followup.instances)) == 0);
  for (const auto& r : pc.lesions) {
    CHECK(r.transition == Transition::Resolve);
    CHECK_FALSE(r.followup_centroid_mm);
    CHECK(r.propagated_centroid_mm);
  }
}

TEST_CASE("manifest centroids match the written masks and lesion ids are the voxel labels") {
  auto cfg = small_config();
  for (int c = 0; c < 8; ++c) {
    const auto pc = generate_case(cfg, phantom_case_id(c));
    const auto bl = instance_stats(pc.baseline.instances);
    const auto fu = instance_stats(pc.followup.instances);
    const auto& g = pc.baseline.instances.geometry();
    std::set<std::int32_t> baseline_ids;
    for (const auto& r : pc.lesions) {
      if (r.baseline_centroid_mm) {
        CHECK(baseline_ids.insert(r.lesion_id).second);
        const auto got = bl.at(r.lesion_id).centroid(g);
        for (int a = 0; a < 3; ++a) CHECK(std::fabs(got[a] - (*r.baseline_centroid_mm)[a]) <= 0.5 * g.spacing()[a]);
      }
      if (r.followup_centroid_mm && r.transition != Transition::Split && r.transition != Transition::Merge) {
        const auto got = fu.at(r.lesion_id).centroid(g);
        for (int a = 0; a < 3; ++a) CHECK(std::fabs(got[a] - (*r.followup_centroid_mm)[a]) <= 0.5 * g.spacing()[a]);
      }
      if (r.propagated_centroid_mm) {
        const WorldPoint anchor = r.followup_centroid_mm ? *r.followup_centroid_mm : *r.baseline_centroid_mm;
        CHECK(std::fabs(registration_error(*r.propagated_centroid_mm, anchor) - *r.registration_error_mm) < 1e-9);
      }
    }
    // Every baseline label appears exactly once in the manifest.
    for (const auto& [label, s] : bl) CHECK(baseline_ids.count(label) == 1);
    CHECK(baseline_ids.size() == bl.size());
    // Every follow-up label maps to exactly one manifest record.
    for (const auto& [label, s] : fu) {
      CHECK(std::count_if(pc.lesions.begin(), pc.lesions.end(),
                          [&](const LesionRecord& r) { return r.lesion_id == label; }) == 1);
    }
  }
}

TEST_CASE("merge: the larger lesion keeps its id, the other points at it") {
  auto cfg = small_config();
  cfg.transition_mix = only(Transition::Merge);
  cfg.lesion_count_range = {2, 2};
  const auto pc = generate_case(cfg, "case_002");
  REQUIRE(pc.lesions.size() == 2);
  const auto& a = pc.lesions[0];
  const auto& b = pc.lesions[1];
  CHECK(a.transition == Transition::Merge);
  CHECK(b.transition == Transition::Merge);
  CHECK((a.merged_into.has_value() != b.merged_into.has_value()));
  const auto& absorbed = a.merged_into ? a : b;
  const auto& keeper = a.merged_into ? b : a;
  CHECK(*absorbed.merged_into == keeper.lesion_id);
  const auto bl = instance_stats(pc.baseline.instances);
  CHECK(bl.at(keeper.lesion_id).count >= bl.at(absorbed.lesion_id).count * 0.5);
  const auto fu = instance_stats(pc.followup.instances);
  CHECK(fu.size() == 1);
  CHECK(fu.count(keeper.lesion_id) == 1);
  CHECK(label_components(binarize(pc.followup.instances)).count == 1);
}

TEST_CASE("split: two children with new ids linked to the parent") {
  auto cfg = small_config();
  cfg.transition_mix = only(Transition::Split);
  cfg.lesion_count_range = {1, 1};
  cfg.lesion_radii_range_mm = {6.0, 8.0};
  const auto pc = generate_case(cfg, "case_003");
  REQUIRE(pc.lesions.size() == 3);
  CHECK(pc.lesions[0].transition == Transition::Split);
  for (int c = 1; c <= 2; ++c) {
    CHECK(pc.lesions[c].transition == Transition::SplitChild);
    CHECK(pc.lesions[c].parent_id == 1);
    CHECK_FALSE(pc.lesions[c].baseline_centroid_mm);
    CHECK(pc.lesions[c].lesion_id > 1);
  }
  const auto fu = instance_stats(pc.followup.instances);
  CHECK(fu.size() == 2);
  CHECK(fu.count(1) == 0);
}

TEST_CASE("new lesions appear only at follow-up") {
  auto cfg = small_config();
  cfg.transition_mix = only(Transition::New);
  cfg.lesion_count_range = {2, 2};
  const auto pc = generate_case(cfg, "case_004");
  REQUIRE(pc.lesions.size() == 4);
  int fresh = 0;
  for (const auto& r : pc.lesions) {
    if (r.transition == Transition::New) {
      ++fresh;
      CHECK_FALSE(r.baseline_centroid_mm);
      CHECK(r.followup_centroid_mm);
      CHECK_FALSE(r.propagated_centroid_mm);
    } else {
      CHECK(r.transition == Transition::Stable);
    }
  }
  CHECK(fresh == 2);
  CHECK(instance_stats(pc.baseline.instances).size() == 2);
  CHECK(instance_stats(pc.followup.instances).size() == 4);
}

TEST_CASE("grow and shrink change lesion volume in the stated direction") {
  auto cfg = small_config();
  for (Transition t : {Transition::Grow, Transition::Shrink}) {
    cfg.transition_mix = only(t);
    const auto pc = generate_case(cfg, "case_005");
    const auto bl = instance_stats(pc.baseline.instances);
    const auto fu = instance_stats(pc.followup.instances);
    for (const auto& [label, s] : bl) {
      if (t == Transition::Grow) CHECK(fu.at(label).count > s.count);
      if (t == Transition::Shrink) CHECK(fu.at(label).count < s.count);
    }
  }
}

TEST_CASE("CT intensities: lesions in soft tissue range, noisy background") {
  const auto pc = generate_case(small_config(), "case_006");
  double bg_sum = 0, bg_sq = 0, n_bg = 0;
  double les_sum = 0, n_les = 0;
  for (std::size_t i = 0; i < pc.baseline.ct.size(); ++i) {
    const double v = pc.baseline.ct[i];
    if (pc.baseline.instances[i] == 0) {
      bg_sum += v;
      bg_sq += v * v;
      n_bg += 1;
    } else {
      les_sum += v;
      n_les += 1;
    }
  }
  const double bg_mean = bg_sum / n_bg;
  CHECK(bg_mean == doctest::Approx(-50).epsilon(0.02));
  CHECK(std::sqrt(bg_sq / n_bg - bg_mean * bg_mean) == doctest::Approx(20).epsilon(0.02));
  CHECK(les_sum / n_les > 35.0);
  CHECK(les_sum / n_les < 85.0);
}

TEST_CASE("missing propagation fraction removes propagated centroids from present lesions only") {
  auto cfg = small_config();
  cfg.missing_propagation_fraction = 1.0;
  cfg.transition_mix = TransitionMix{0.5, 0, 0, 0.5, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    for (const auto& r : generate_case(cfg, phantom_case_id(c)).lesions) {
      if (r.transition == Transition::Resolve) {
        CHECK(r.propagated_centroid_mm);
      } else {
        CHECK_FALSE(r.propagated_centroid_mm);
      }
    }
  }
}

TEST_CASE("registration error magnitudes follow the configured mixture") {
  PhantomConfig cfg;
  cfg.volume_dims = {64, 64, 32};
  cfg.lesion_count_range = {5, 5};
  cfg.lesion_radii_range_mm = {2.0, 3.0};
  cfg.transition_mix = only(Transition::Stable);
  cfg.seed = 77;
  std::vector<double> errors;
  for (int c = 0; errors.size() < 1000; ++c) {
    for (const auto& r : generate_case(cfg, phantom_case_id(c)).lesions) errors.push_back(*r.registration_error_mm);
  }
  errors.resize(1000);
  const auto& m = cfg.reg_error;
  const double ks = testsupport::ks_statistic(errors, [&](double r) {
    return testsupport::mixture_cdf(r, m.prob_inlier, m.inlier_sigma_mm, m.tail_scale_mm);
  });
  CHECK(ks < 0.05);

  const auto h = histogram(errors, 1.0);
  std::int64_t below5 = 0, beyond10 = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.upper_edge(i) <= 5.0) below5 += h.counts[i];
    if (h.lower_edge(i) >= 10.0) beyond10 += h.counts[i];
  }
  CHECK(std::fabs(below5 / 1000.0 - testsupport::mixture_cdf(5.0, 0.7, 3.0, 12.0)) < 0.03);
  CHECK(std::fabs(beyond10 / 1000.0 - (1.0 - testsupport::mixture_cdf(10.0, 0.7, 3.0, 12.0))) < 0.03);
  CHECK(beyond10 > 0);
  for (double r : {0.0, 1.0, 5.0, 10.0, 40.0}) CHECK(m.cdf(r) == doctest::Approx(testsupport::mixture_cdf(r, 0.7, 3, 12)));
}

TEST_CASE("configuration validation and placement failure") {
  PhantomConfig cfg;
  cfg.transition_mix.stable = 0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lesion_radii_range_mm = {5, 4};
  CHECK_THROWS_AS(cfg.validate(), Error);

  cfg = {};
  cfg.volume_dims = {24, 24, 8};
  cfg.lesion_count_range = {10, 10};
  try {
    generate_case(cfg, "crowded");
    FAIL("expected PlacementError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PlacementError);
  }
}

TEST_CASE("generate_dataset layout, determinism and collisions") {
  TempDir a, b;
  auto cfg = small_config();
  const auto ma = generate_dataset(cfg, 2, a.path(), 1);
  const auto mb = generate_dataset(cfg, 2, b.path(), 2);
  CHECK(testsupport::read_file(a / "manifest.json") == testsupport::read_file(b / "manifest.json"));
  for (const char* f : {"baseline_ct.nii.gz", "baseline_instances.nii.gz", "followup_ct.nii.gz", "followup_instances.nii.gz"}) {
    CHECK(testsupport::read_file(a.path() / "case_001" / f) == testsupport::read_file(b.path() / "case_001" / f));
  }
  CHECK(read_manifest(a / "manifest.json").size() == ma.size());

  const auto reloaded = load_labels(a.path() / "case_000" / "baseline_instances.nii.gz");
  const auto direct = generate_case(cfg, "case_000");
  CHECK(std::equal(reloaded.data().begin(), reloaded.data().end(), direct.baseline.instances.data().begin()));

  try {
    generate_dataset(cfg, 1, a.path());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }

  TempDir empty;
  CHECK(generate_dataset(cfg, 0, empty / "out").empty());
  CHECK(read_manifest(empty / "out" / "manifest.json").empty());
  std::size_t entries = 0;
  for (const auto& e : std::filesystem::directory_iterator(empty / "out")) entries += e.is_directory();
  CHECK(entries == 0);
}
