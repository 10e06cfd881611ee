#include "lesiontrack/experiments.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "lesiontrack/nifti.hpp"
#include "lesiontrack/parallel.hpp"

namespace lesiontrack {
namespace {

std::size_t slot(Outcome o) { return static_cast<std::size_t>(o); }

double proportion_of(const OutcomeCounts& c, Outcome o) {
  const std::int64_t total = c[0] + c[1] + c[2] + c[3];
  return total == 0 ? 0.0 : static_cast<double>(c[slot(o)]) / static_cast<double>(total);
}

std::set<std::int32_t> labels_present(const LabelVolume& v) {
  std::set<std::int32_t> out;
  std::int32_t last = 0;
  for (auto l : v.data()) {
    if (l != 0 && l != last) {
      out.insert(l);
      last = l;
    }
  }
  return out;
}

std::map<std::string, std::vector<LesionRecord>> group_by_case(const std::vector<LesionRecord>& manifest) {
  std::map<std::string, std::vector<LesionRecord>> cases;
  for (const auto& r : manifest) cases[r.case_id].push_back(r);
  for (auto& [id, v] : cases) {
    std::sort(v.begin(), v.end(), [](const LesionRecord& a, const LesionRecord& b) { return a.lesion_id < b.lesion_id; });
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i].lesion_id == v[i - 1].lesion_id) {
        throw Error(ErrorCode::MalformedManifest, id + ": duplicate lesion id " + std::to_string(v[i].lesion_id));
      }
    }
  }
  return cases;
}

const LesionRecord* find_lesion(const std::vector<LesionRecord>& records, std::int32_t id) {
  for (const auto& r : records) {
    if (r.lesion_id == id) return &r;
  }
  return nullptr;
}

ExpectedLesion expected_at(const std::vector<LesionRecord>& case_records, const LesionRecord& lesion, Timepoint tp,
                           const std::set<std::int32_t>& present_labels) {
  ExpectedLesion e;
  e.lesion_id = lesion.lesion_id;
  e.accepted_labels = tp == Timepoint::Baseline ? std::vector<std::int32_t>{lesion.lesion_id}
                                                : followup_lineage(case_records, lesion.lesion_id);
  e.present = std::any_of(e.accepted_labels.begin(), e.accepted_labels.end(),
                          [&](std::int32_t l) { return present_labels.count(l) > 0; });
  return e;
}

}  // namespace

std::unique_ptr<Segmenter> make_segmenter(const ExperimentConfig& cfg) {
  if (cfg.segmenter.kind == SegmenterKind::External) {
    return std::make_unique<ExternalSegmenter>(cfg.segmenter.prediction_dir,
                                               static_cast<std::size_t>(std::max(8, 2 * cfg.workers)));
  }
  CenterBiasParams p = cfg.segmenter.synthetic;
  p.seed = cfg.seed;
  return std::make_unique<SyntheticSegmenter>(p);
}

Scan load_scan(const std::filesystem::path& data_root, const std::string& case_id, Timepoint timepoint) {
  const auto dir = data_root / case_id;
  const std::string tp(to_string(timepoint));
  Scan s{load_volume(dir / (tp + "_ct.nii.gz")), load_labels(dir / (tp + "_instances.nii.gz"))};
  const Geometry& a = s.ct.geometry();
  const Geometry& b = s.instances.geometry();
  if (!a.same_shape(b) || distance(a.origin(), b.origin()) > 1e-3) {
    throw Error(ErrorCode::ShapeMismatch, case_id + "/" + tp + ": CT and instance volumes are not aligned");
  }
  return s;
}

double TimepointSummary::proportion(Outcome o) const { return proportion_of(counts, o); }
double SweepRow::proportion(Outcome o) const { return proportion_of(counts, o); }

bool record_less(const OutcomeRecord& a, const OutcomeRecord& b) {
  const double ea = a.epsilon_mm.value_or(-1.0);
  const double eb = b.epsilon_mm.value_or(-1.0);
  return std::tie(a.case_id, a.lesion_id, a.timepoint, ea) < std::tie(b.case_id, b.lesion_id, b.timepoint, eb);
}

OutcomeRecord evaluate_voi(const Scan& scan, WorldPoint center, const ExpectedLesion& expected, const Segmenter& segmenter,
                           const ExperimentConfig& cfg, const std::string& case_id, Timepoint timepoint,
                           std::optional<double> epsilon_mm) {
  const Voi<float> image = extract_voi(scan.ct, center, cfg.voi);
  const Voi<std::int32_t> gt = extract_like(scan.instances, image);
  const SegmentationRequest request{image, gt, case_id, timepoint, expected.lesion_id, epsilon_mm};
  const MaskVolume mask = segmenter.segment(request);
  if (!mask.geometry().same_shape(image.data.geometry())) {
    throw Error(ErrorCode::ShapeMismatch, "segmenter output does not match the VOI grid");
  }
  const LabeledComponents components = label_components(mask, cfg.connectivity);
  const auto selection = select_component(components, voi_center_world(image));
  const OverlapTable overlaps = overlap_matrix(components, gt.data);
  OutcomeRecord r = classify_outcome(selection, expected, components, gt.data, overlaps);
  r.case_id = case_id;
  r.timepoint = timepoint;
  r.epsilon_mm = epsilon_mm;
  return r;
}

LongitudinalResult run_longitudinal_eval(const ExperimentConfig& cfg) {
  const auto segmenter = make_segmenter(cfg);
  return run_longitudinal_eval(cfg, *segmenter);
}

LongitudinalResult run_longitudinal_eval(const ExperimentConfig& cfg, const Segmenter& segmenter) {
  cfg.validate();
  const std::vector<LesionRecord> manifest = read_manifest(cfg.manifest_path);
  const auto cases = group_by_case(manifest);
  std::vector<const std::pair<const std::string, std::vector<LesionRecord>>*> work;
  for (const auto& entry : cases) work.push_back(&entry);

  struct CaseOutput {
    std::vector<OutcomeRecord> records;
    std::optional<CaseError> error;
  };
  std::vector<CaseOutput> outputs(work.size());

  parallel_for(work.size(), cfg.workers, [&](std::size_t w) {
    const auto& [case_id, lesions] = *work[w];
    CaseOutput& out = outputs[w];
    try {
      for (Timepoint tp : {Timepoint::Baseline, Timepoint::Followup}) {
        const Scan scan = load_scan(cfg.data_root, case_id, tp);
        const auto present = labels_present(scan.instances);
        for (const auto& lesion : lesions) {
          if (!lesion.tracked()) continue;
          bool best_case = false;
          WorldPoint center = *lesion.baseline_centroid_mm;
          if (tp == Timepoint::Followup) {
            if (lesion.propagated_centroid_mm) {
              center = *lesion.propagated_centroid_mm;
            } else {
              best_case = true;
              if (lesion.followup_centroid_mm) center = *lesion.followup_centroid_mm;
            }
          }
          const ExpectedLesion expected = expected_at(lesions, lesion, tp, present);
          OutcomeRecord r = evaluate_voi(scan, center, expected, segmenter, cfg, case_id, tp, std::nullopt);
          r.best_case = best_case;
          r.merged = lesion.transition == Transition::Merge;
          out.records.push_back(std::move(r));
        }
      }
    } catch (const Error& e) {
      out.records.clear();
      out.error = CaseError{case_id, e.what()};
    }
  });

  LongitudinalResult result;
  for (auto& o : outputs) {
    for (auto& r : o.records) result.records.push_back(std::move(r));
    if (o.error) result.case_errors.push_back(std::move(*o.error));
  }
  std::sort(result.records.begin(), result.records.end(), record_less);
  result.summary = summarize_longitudinal(result.records, manifest, result.case_errors);
  return result;
}

LongitudinalSummary summarize_longitudinal(std::span<const OutcomeRecord> records, std::span<const LesionRecord> manifest,
                                           const std::vector<CaseError>& case_errors) {
  LongitudinalSummary s;
  std::set<std::string> failed;
  for (const auto& e : case_errors) failed.insert(e.case_id);

  std::vector<const LesionRecord*> sorted;
  for (const auto& r : manifest) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const LesionRecord* a, const LesionRecord* b) {
    return std::tie(a->case_id, a->lesion_id) < std::tie(b->case_id, b->lesion_id);
  });
  for (const LesionRecord* r : sorted) {
    if (failed.count(r->case_id) || !r->tracked()) continue;
    if (r->propagated_centroid_mm && r->followup_centroid_mm) {
      s.registration_errors_mm.push_back(registration_error(*r->propagated_centroid_mm, *r->followup_centroid_mm));
    }
  }
  s.registration_error_hist = histogram(s.registration_errors_mm, 1.0);

  std::map<std::pair<std::string, std::int32_t>, std::array<const OutcomeRecord*, 2>> by_lesion;
  for (const auto& r : records) {
    if (r.epsilon_mm) continue;
    TimepointSummary& t = r.timepoint == Timepoint::Baseline ? s.baseline : s.followup;
    ++t.counts[slot(r.outcome)];
    if (r.best_case) ++t.best_case_counts[slot(r.outcome)];
    if (r.dice) t.dice.push_back(*r.dice);
    by_lesion[{r.case_id, r.lesion_id}][r.timepoint == Timepoint::Baseline ? 0 : 1] = &r;
  }
  for (const auto& [key, pair] : by_lesion) {
    if (pair[0] && pair[1] && pair[0]->dice && pair[1]->dice) {
      s.paired_dice.push_back({key.first + "/" + std::to_string(key.second), *pair[0]->dice, *pair[1]->dice});
    } else {
      ++s.excluded_from_pairing;
    }
  }
  try {
    s.wilcoxon = wilcoxon_signed_rank(s.paired_dice);
    s.wilcoxon_status = "ok";
  } catch (const Error& e) {
    s.wilcoxon_status = std::string(to_string(e.code()));
  }
  return s;
}

std::vector<OutcomeRecord> select_top_lesions(std::span<const OutcomeRecord> results, int top_k, Timepoint source) {
  std::vector<OutcomeRecord> candidates;
  for (const auto& r : results) {
    if (!r.epsilon_mm && r.timepoint == source && r.outcome == Outcome::Correct && r.dice) candidates.push_back(r);
  }
  std::sort(candidates.begin(), candidates.end(), [](const OutcomeRecord& a, const OutcomeRecord& b) {
    if (*a.dice != *b.dice) return *a.dice > *b.dice;
    return std::tie(a.case_id, a.lesion_id) < std::tie(b.case_id, b.lesion_id);
  });
  if (static_cast<int>(candidates.size()) < top_k) {
    throw Error(ErrorCode::TopKUnsatisfiable, "requested top " + std::to_string(top_k) + " lesions but only " +
                                                  std::to_string(candidates.size()) + " Correct " +
                                                  std::string(to_string(source)) + " results are available");
  }
  candidates.resize(static_cast<std::size_t>(top_k));
  return candidates;
}

SweepResult run_displacement_sweep(const ExperimentConfig& cfg, std::span<const OutcomeRecord> baseline_results) {
  const auto segmenter = make_segmenter(cfg);
  return run_displacement_sweep(cfg, baseline_results, *segmenter);
}

SweepResult run_displacement_sweep(const ExperimentConfig& cfg, std::span<const OutcomeRecord> baseline_results,
                                   const Segmenter& segmenter) {
  cfg.validate();
  SweepResult result;
  result.selected = select_top_lesions(baseline_results, cfg.top_k, cfg.top_k_source);

  const std::vector<LesionRecord> manifest = read_manifest(cfg.manifest_path);
  const auto cases = group_by_case(manifest);

  std::map<std::string, std::vector<std::int32_t>> by_case;
  for (const auto& r : result.selected) by_case[r.case_id].push_back(r.lesion_id);
  std::vector<std::pair<std::string, std::vector<std::int32_t>>> work(by_case.begin(), by_case.end());

  struct CaseOutput {
    std::vector<OutcomeRecord> records;
    std::vector<std::string> warnings;
  };
  std::vector<CaseOutput> outputs(work.size());
  const Timepoint tp = cfg.top_k_source;

  parallel_for(work.size(), cfg.workers, [&](std::size_t w) {
    const auto& [case_id, lesion_ids] = work[w];
    auto it = cases.find(case_id);
    if (it == cases.end()) throw Error(ErrorCode::InvalidInput, case_id + " is not in the manifest");
    const Scan scan = load_scan(cfg.data_root, case_id, tp);
    const WorldPoint volume_center = scan.ct.geometry().center_world();
    const auto present = labels_present(scan.instances);
    for (std::int32_t id : lesion_ids) {
      const LesionRecord* lesion = find_lesion(it->second, id);
      if (!lesion) throw Error(ErrorCode::InvalidInput, case_id + "/" + std::to_string(id) + " is not in the manifest");
      const auto& centroid = tp == Timepoint::Baseline ? lesion->baseline_centroid_mm : lesion->followup_centroid_mm;
      if (!centroid) {
        throw Error(ErrorCode::InvalidInput, case_id + "/" + std::to_string(id) + " has no centroid at " + std::string(to_string(tp)));
      }
      std::vector<WorldPoint> centers;
      try {
        centers = displacement_schedule(*centroid, volume_center, cfg.magnitudes_mm);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateDirection) throw;
        outputs[w].warnings.push_back(case_id + "/" + std::to_string(id) +
                                      ": centroid at volume centre, displacing along +x");
        centers = displacement_along(*centroid, WorldPoint{1.0, 0.0, 0.0}, cfg.magnitudes_mm);
      }
      const ExpectedLesion expected = expected_at(it->second, *lesion, tp, present);
      for (std::size_t m = 0; m < centers.size(); ++m) {
        OutcomeRecord r = evaluate_voi(scan, centers[m], expected, segmenter, cfg, case_id, tp, cfg.magnitudes_mm[m]);
        r.merged = lesion->transition == Transition::Merge;
        outputs[w].records.push_back(std::move(r));
      }
    }
  });

  for (auto& o : outputs) {
    for (auto& r : o.records) result.records.push_back(std::move(r));
    for (auto& wmsg : o.warnings) result.warnings.push_back(std::move(wmsg));
  }
  std::sort(result.records.begin(), result.records.end(), record_less);

  for (double eps : cfg.magnitudes_mm) {
    SweepRow row;
    row.epsilon_mm = eps;
    for (const auto& r : result.records) {
      if (*r.epsilon_mm != eps) continue;
      ++row.counts[slot(r.outcome)];
      row.dice.push_back(r.dice_vs_expected.value_or(0.0));
    }
    double sum = 0.0;
    for (double d : row.dice) sum += d;
    row.mean_dice = row.dice.empty() ? 0.0 : sum / static_cast<double>(row.dice.size());
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace lesiontrack
