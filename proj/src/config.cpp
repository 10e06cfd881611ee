#include "lesiontrack/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lesiontrack {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T, std::size_t N>
void read_array(const json& j, const char* key, std::array<T, N>& out) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != N) config_error(std::string(key) + " must be an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    config_error(e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (top_k < 1) config_error("top_k must be >= 1");
  if (workers < 1) config_error("workers must be >= 1");
  if (magnitudes_mm.empty() || magnitudes_mm.front() != 0.0) config_error("magnitudes_mm must start at 0");
  for (std::size_t i = 0; i < magnitudes_mm.size(); ++i) {
    if (!std::isfinite(magnitudes_mm[i]) || magnitudes_mm[i] < 0.0) config_error("magnitudes_mm must be finite and >= 0");
    if (i > 0 && !(magnitudes_mm[i] > magnitudes_mm[i - 1])) config_error("magnitudes_mm must be strictly ascending");
  }
  for (int a = 0; a < 3; ++a) {
    if (voi.shape[a] < 1) config_error("voi.shape must be >= 1 along every axis");
  }
  if (!std::isfinite(voi.pad_value)) config_error("voi.pad_value must be finite");
  if (segmenter.kind == SegmenterKind::External && segmenter.prediction_dir.empty()) {
    config_error("external segmenter needs prediction_dir");
  }
  try {
    segmenter.synthetic.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
}

void ExperimentConfig::apply_overrides(std::optional<std::uint64_t> seed_override, std::optional<int> workers_override) {
  if (seed_override) {
    seed = *seed_override;
    segmenter.synthetic.seed = *seed_override;
  }
  if (workers_override) workers = *workers_override;
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json j = parse_json(json_text);
  ExperimentConfig cfg;
  try {
    if (!j.is_object()) config_error("experiment config must be a JSON object");
    reject_unknown(j, {"manifest", "data_root", "segmenter", "voi", "connectivity", "magnitudes_mm", "top_k",
                       "top_k_source", "seed", "workers", "output_dir"},
                   "experiment config");
    if (!j.contains("manifest")) config_error("missing 'manifest'");
    cfg.manifest_path = resolve(base_dir, j.at("manifest").get<std::string>());
    cfg.data_root = j.contains("data_root") ? resolve(base_dir, j.at("data_root").get<std::string>())
                                            : cfg.manifest_path.parent_path();
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("results")));
    read_opt(j, "seed", cfg.seed);
    read_opt(j, "workers", cfg.workers);
    read_opt(j, "top_k", cfg.top_k);
    if (j.contains("top_k_source")) cfg.top_k_source = timepoint_from_string(j.at("top_k_source").get<std::string>());
    if (j.contains("connectivity")) cfg.connectivity = connectivity_from_int(j.at("connectivity").get<int>());
    if (j.contains("magnitudes_mm")) cfg.magnitudes_mm = j.at("magnitudes_mm").get<std::vector<double>>();
    if (j.contains("voi")) {
      const json& v = j.at("voi");
      reject_unknown(v, {"shape", "pad_value"}, "voi");
      read_array(v, "shape", cfg.voi.shape);
      read_opt(v, "pad_value", cfg.voi.pad_value);
    }
    if (j.contains("segmenter")) {
      const json& s = j.at("segmenter");
      const std::string type = s.value("type", std::string("synthetic"));
      if (type == "synthetic") {
        reject_unknown(s, {"type", "detect_radius_mm", "transition_band_mm", "detect_floor_prob", "boundary_noise_mm",
                           "offcenter_erosion_gain", "hallucination_prob", "hallucination_offset_mm"},
                       "synthetic segmenter");
        CenterBiasParams& p = cfg.segmenter.synthetic;
        read_opt(s, "detect_radius_mm", p.detect_radius_mm);
        read_opt(s, "transition_band_mm", p.transition_band_mm);
        read_opt(s, "detect_floor_prob", p.detect_floor_prob);
        read_opt(s, "boundary_noise_mm", p.boundary_noise_mm);
        read_opt(s, "offcenter_erosion_gain", p.offcenter_erosion_gain);
        read_opt(s, "hallucination_prob", p.hallucination_prob);
        read_opt(s, "hallucination_offset_mm", p.hallucination_offset_mm);
      } else if (type == "external") {
        reject_unknown(s, {"type", "prediction_dir"}, "external segmenter");
        cfg.segmenter.kind = SegmenterKind::External;
        if (!s.contains("prediction_dir")) config_error("external segmenter needs prediction_dir");
        cfg.segmenter.prediction_dir = resolve(base_dir, s.at("prediction_dir").get<std::string>());
      } else {
        config_error("unknown segmenter type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  cfg.segmenter.synthetic.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text(path), path.parent_path());
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json j;  // nlohmann::json objects keep keys sorted
  j["manifest"] = cfg.manifest_path.lexically_normal().string();
  j["data_root"] = cfg.data_root.lexically_normal().string();
  j["voi"] = {{"shape", cfg.voi.shape}, {"pad_value", cfg.voi.pad_value}};
  j["connectivity"] = to_int(cfg.connectivity);
  j["magnitudes_mm"] = cfg.magnitudes_mm;
  j["top_k"] = cfg.top_k;
  j["top_k_source"] = std::string(to_string(cfg.top_k_source));
  j["seed"] = cfg.seed;
  if (cfg.segmenter.kind == SegmenterKind::External) {
    j["segmenter"] = {{"type", "external"}, {"prediction_dir", cfg.segmenter.prediction_dir.lexically_normal().string()}};
  } else {
    const CenterBiasParams& p = cfg.segmenter.synthetic;
    j["segmenter"] = {{"type", "synthetic"},
                      {"detect_radius_mm", p.detect_radius_mm},
                      {"transition_band_mm", p.transition_band_mm},
                      {"detect_floor_prob", p.detect_floor_prob},
                      {"boundary_noise_mm", p.boundary_noise_mm},
                      {"offcenter_erosion_gain", p.offcenter_erosion_gain},
                      {"hallucination_prob", p.hallucination_prob},
                      {"hallucination_offset_mm", p.hallucination_offset_mm}};
  }
  return j.dump();
}

PhantomJob parse_phantom_job(std::string_view json_text) {
  const json j = parse_json(json_text);
  PhantomJob job;
  PhantomConfig& c = job.phantom;
  try {
    if (!j.is_object()) config_error("phantom config must be a JSON object");
    reject_unknown(j, {"n_cases", "workers", "volume_dims", "spacing", "lesion_count_range", "lesion_radii_range_mm",
                       "min_gap_mm", "transition_mix", "reg_error_model", "missing_propagation_fraction", "seed"},
                   "phantom config");
    read_opt(j, "n_cases", job.n_cases);
    read_opt(j, "workers", job.workers);
    read_array(j, "volume_dims", c.volume_dims);
    read_array(j, "spacing", c.spacing);
    read_array(j, "lesion_count_range", c.lesion_count_range);
    read_array(j, "lesion_radii_range_mm", c.lesion_radii_range_mm);
    read_opt(j, "min_gap_mm", c.min_gap_mm);
    read_opt(j, "missing_propagation_fraction", c.missing_propagation_fraction);
    read_opt(j, "seed", c.seed);
    if (j.contains("transition_mix")) {
      const json& m = j.at("transition_mix");
      reject_unknown(m, {"stable", "grow", "shrink", "resolve", "new", "merge", "split"}, "transition_mix");
      TransitionMix mix{0, 0, 0, 0, 0, 0, 0};
      read_opt(m, "stable", mix.stable);
      read_opt(m, "grow", mix.grow);
      read_opt(m, "shrink", mix.shrink);
      read_opt(m, "resolve", mix.resolve);
      read_opt(m, "new", mix.appear_new);
      read_opt(m, "merge", mix.merge);
      read_opt(m, "split", mix.split);
      c.transition_mix = mix;
    }
    if (j.contains("reg_error_model")) {
      const json& r = j.at("reg_error_model");
      reject_unknown(r, {"prob_inlier", "inlier_sigma_mm", "tail_scale_mm"}, "reg_error_model");
      read_opt(r, "prob_inlier", c.reg_error.prob_inlier);
      read_opt(r, "inlier_sigma_mm", c.reg_error.inlier_sigma_mm);
      read_opt(r, "tail_scale_mm", c.reg_error.tail_scale_mm);
    }
    if (job.n_cases < 0) config_error("n_cases must be >= 0");
    if (job.workers < 1) config_error("workers must be >= 1");
    c.validate();
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  return job;
}

PhantomJob load_phantom_job(const std::filesystem::path& path) { return parse_phantom_job(read_text(path)); }

}  // namespace lesiontrack
