// skipshift: command-line front end of the pipeline.
//
// Exit codes: 0 success, 1 hard failure, 2 configuration or usage error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "skipshift/config.hpp"
#include "skipshift/fs_util.hpp"
#include "skipshift/pipeline.hpp"
#include "skipshift/shift_probe.hpp"
#include "skipshift/verify.hpp"

namespace {

using namespace skipshift;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

struct CommonFlags {
  std::string config;
  bool force = false;
  int workers = 0;
  bool desk = false;
  bool paper = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON); defaults to the desk-scale preset");
  cmd->add_flag("--force", f.force, "Recompute stages even when cached");
  cmd->add_option("--workers", f.workers, "Parallel (spec x fold) training jobs")->check(CLI::PositiveNumber);
  auto* desk = cmd->add_flag("--desk-scale", f.desk, "Use desk-scale dataset/model/training sizes");
  auto* paper = cmd->add_flag("--paper-scale", f.paper, "Use the full-size settings");
  desk->excludes(paper);
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? (f.paper ? paper_preset() : desk_preset()) : load_config(f.config);
  if (!f.config.empty() && f.desk) apply_scale(cfg, desk_preset());
  if (!f.config.empty() && f.paper) apply_scale(cfg, paper_preset());
  if (f.config.empty()) {
    if (const char* out = std::getenv("SKIPSHIFT_OUTPUT_DIR"); out != nullptr && *out != '\0') cfg.output_dir = out;
  }
  if (f.workers > 0) cfg.workers = f.workers;
  cfg.validate();
  return cfg;
}

PipelineOptions pipeline_options(const CommonFlags& f) {
  PipelineOptions o;
  o.force = f.force;
  o.workers = f.workers;
  o.log = [](const std::string& m) { std::cout << m << std::endl; };
  return o;
}

int standalone_probe(const std::string& ref_dir, const std::string& shifted_dir, int bins,
                     const std::string& output) {
  const FeatureSet ref = read_feature_set(ref_dir);
  const FeatureSet shifted = read_feature_set(shifted_dir);
  LayerShiftReport r;
  r.shift = "external";
  r.bins = bins;
  r.images = ref.images;
  r.layers = compare_features(ref, shifted, bins);
  if (!output.empty()) write_text_atomic(output, r.to_json().dump() + "\n");
  std::cout << r.means_csv();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skip-connection domain-shift workbench"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, probe_f, verify_f, report_f;
  auto* gen = app.add_subcommand("generate", "Build the synthetic dataset");
  add_common(gen, gen_f);
  auto* run = app.add_subcommand("run", "Generate, train/evaluate the sweep, probe layers and plot");
  add_common(run, run_f);
  auto* probe = app.add_subcommand("probe", "Layer-wise shift of trained checkpoints, or of two feature dumps");
  add_common(probe, probe_f);
  std::string ref_features, shifted_features, probe_output;
  int bins = 100;
  auto* ref_opt = probe->add_option("--ref-features", ref_features, "Directory of reference .npy feature files");
  auto* sh_opt =
      probe->add_option("--shifted-features", shifted_features, "Directory of shifted .npy feature files");
  ref_opt->needs(sh_opt);
  sh_opt->needs(ref_opt);
  probe->add_option("--bins", bins, "Histogram bins for standalone mode")->check(CLI::Range(2, 1 << 20));
  probe->add_option("--output", probe_output, "Report JSON path for standalone mode");
  auto* verify = app.add_subcommand("verify", "Static checks plus soft trend checks on existing results");
  add_common(verify, verify_f);
  bool verify_json = false;
  verify->add_flag("--json", verify_json, "Print the checklist as JSON");
  auto* report = app.add_subcommand("report", "Re-render plots from existing results");
  add_common(report, report_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) {
      Pipeline p(resolve_config(gen_f), pipeline_options(gen_f));
      p.generate();
      return kOk;
    }
    if (run->parsed()) {
      Pipeline p(resolve_config(run_f), pipeline_options(run_f));
      const bool ok = p.run();
      if (!ok) std::cerr << "some jobs failed; see " << (p.output_dir() / RunRecord::kFileName).string() << "\n";
      return ok ? kOk : kFailure;
    }
    if (probe->parsed()) {
      if (!ref_features.empty()) return standalone_probe(ref_features, shifted_features, bins, probe_output);
      Pipeline p(resolve_config(probe_f), pipeline_options(probe_f));
      return p.probe() == StageResult::partial ? kFailure : kOk;
    }
    if (verify->parsed()) {
      const VerifyReport r = run_verify(resolve_config(verify_f));
      std::cout << (verify_json ? r.to_json().dump(2) + "\n" : r.to_text());
      return r.hard_passed() ? kOk : kFailure;
    }
    if (report->parsed()) {
      Pipeline p(resolve_config(report_f), pipeline_options(report_f));
      p.report();
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
