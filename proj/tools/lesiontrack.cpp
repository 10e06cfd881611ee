#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lesiontrack/config.hpp"
#include "lesiontrack/error.hpp"
#include "lesiontrack/experiments.hpp"
#include "lesiontrack/phantom.hpp"
#include "lesiontrack/report.hpp"

namespace lt = lesiontrack;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--workers", o.workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed (overrides config)");
}

lt::ExperimentConfig load_config(const std::string& path, const Overrides& o) {
  auto cfg = lt::load_experiment_config(path);
  cfg.apply_overrides(o.seed, o.workers);
  cfg.validate();
  return cfg;
}

void report_case_errors(const std::vector<lt::CaseError>& errors) {
  for (const auto& e : errors) std::cerr << "warning: case " << e.case_id << " failed: " << e.message << '\n';
}

int cmd_gen_phantom(const std::string& config, const std::string& out, const Overrides& o) {
  auto job = lt::load_phantom_job(config);
  if (o.seed) job.phantom.seed = *o.seed;
  if (o.workers) job.workers = *o.workers;
  try {
    job.phantom.validate();
  } catch (const lt::Error& e) {
    throw lt::Error(lt::ErrorCode::ConfigError, e.what());
  }
  const auto manifest = lt::generate_dataset(job.phantom, job.n_cases, out, job.workers);
  std::cout << "wrote " << job.n_cases << " cases, " << manifest.size() << " lesions to " << out << '\n';
  return 0;
}

int cmd_eval(const std::string& config, const Overrides& o) {
  const auto cfg = load_config(config, o);
  const auto segmenter = lt::make_segmenter(cfg);
  const auto result = lt::run_longitudinal_eval(cfg, *segmenter);
  report_case_errors(result.case_errors);

  const auto meta = lt::make_run_metadata(cfg, *segmenter, "eval");
  lt::write_figure_data(result.summary, meta, cfg.output_dir);
  lt::write_outcomes_csv(result.records, cfg.output_dir / "outcomes.csv");
  lt::write_run_metadata(meta, cfg.output_dir);

  const auto& s = result.summary;
  std::cout << "records: " << result.records.size() << ", failed cases: " << result.case_errors.size() << '\n';
  std::cout << "baseline correct: " << s.baseline.proportion(lt::Outcome::Correct)
            << ", followup correct: " << s.followup.proportion(lt::Outcome::Correct) << '\n';
  if (s.wilcoxon) {
    std::cout << "wilcoxon: W=" << s.wilcoxon->statistic << " n=" << s.wilcoxon->n << " p=" << s.wilcoxon->p_value << '\n';
  } else {
    std::cout << "wilcoxon: " << s.wilcoxon_status << '\n';
  }
  std::cout << "output: " << cfg.output_dir.lexically_normal().string() << '\n';
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& baseline, const Overrides& o) {
  const auto cfg = load_config(config, o);
  const auto segmenter = lt::make_segmenter(cfg);
  const auto baseline_records = lt::read_outcomes_csv(baseline);
  const auto sweep = lt::run_displacement_sweep(cfg, baseline_records, *segmenter);
  for (const auto& w : sweep.warnings) std::cerr << "warning: " << w << '\n';

  std::vector<lt::OutcomeRecord> all = baseline_records;
  all.insert(all.end(), sweep.records.begin(), sweep.records.end());
  const auto meta = lt::make_run_metadata(cfg, *segmenter, "sweep");
  lt::write_figure_data(sweep, meta, cfg.output_dir);
  lt::write_outcomes_csv(all, cfg.output_dir / "outcomes.csv");
  lt::write_run_metadata(meta, cfg.output_dir);

  for (const auto& row : sweep.rows) {
    std::printf("eps %5.1f mm  mean dice %.4f  correct %.3f  fn %.3f\n", row.epsilon_mm, row.mean_dice,
                row.proportion(lt::Outcome::Correct), row.proportion(lt::Outcome::FalseNegative));
  }
  std::cout << "output: " << cfg.output_dir.lexically_normal().string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal lesion tracking evaluation"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config, out, baseline;

  auto* gen = app.add_subcommand("gen-phantom", "generate a synthetic longitudinal phantom dataset");
  gen->add_option("--config", config, "phantom JSON config")->required();
  gen->add_option("--out", out, "output directory")->required();
  add_overrides(gen, overrides);

  auto* eval = app.add_subcommand("eval", "longitudinal evaluation over a case manifest");
  eval->add_option("--config", config, "experiment JSON config")->required();
  add_overrides(eval, overrides);

  auto* sweep = app.add_subcommand("sweep", "VOI displacement sweep over the top baseline lesions");
  sweep->add_option("--config", config, "experiment JSON config")->required();
  sweep->add_option("--baseline", baseline, "outcomes.csv from a previous eval run")->required();
  add_overrides(sweep, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_phantom(config, out, overrides);
    if (*eval) return cmd_eval(config, overrides);
    return cmd_sweep(config, baseline, overrides);
  } catch (const lt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == lt::ErrorCode::ConfigError ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
