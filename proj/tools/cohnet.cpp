// cohnet command-line driver.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cohnet/config.hpp"
#include "cohnet/ingest.hpp"
#include "cohnet/report.hpp"
#include "cohnet/synthetic.hpp"

namespace {

using namespace cohnet;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::string data;
  std::vector<int> subjects;
  int workers{0};
  long long seed{-1};
  bool grid_search{false};
  bool no_figures{false};
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file (a run manifest also works)");
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set svm.C=1 (repeatable)");
  cmd->add_option("-o,--output", o.output, "Output directory");
  cmd->add_option("-d,--data", o.data, "Dataset directory");
  cmd->add_option("-s,--subjects", o.subjects, "Subject ids to process")->delimiter(',');
  cmd->add_option("-j,--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for cross-validation folds")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--grid-search", o.grid_search, "Cross-validated grid search before training");
  cmd->add_flag("--no-figures", o.no_figures, "Skip figure output");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  cfg = apply_overrides(cfg, o.overrides);
  if (!o.output.empty()) cfg.output_dir = o.output;
  if (!o.data.empty()) {
    cfg.data.directory = o.data;
    cfg.data.inputs.clear();
  }
  if (!o.subjects.empty()) cfg.data.subjects = o.subjects;
  if (o.workers > 0) cfg.workers = static_cast<std::size_t>(o.workers);
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.grid_search) cfg.grid_search = true;
  if (o.no_figures) cfg.figures = false;
  validate(cfg);
  return cfg;
}

int print_stage(const report::StageReport& rep) {
  for (const auto& it : rep.items) {
    if (it.ok) {
      std::printf("%s subject %d: %s\n", rep.stage.c_str(), it.subject, it.summary.c_str());
    } else {
      std::fprintf(stderr, "%s subject %d FAILED: %s\n", rep.stage.c_str(), it.subject, it.error.c_str());
    }
  }
  return rep.exit_code();
}

int run_all(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = report::run_pipeline(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& s : rep.subjects) {
    if (s.ok) {
      std::printf("subject %d: accuracy %.4f\n", s.subject, s.evaluation->metrics.accuracy);
    } else {
      std::fprintf(stderr, "subject %d FAILED: %s\n", s.subject, s.error.c_str());
    }
  }
  if (rep.summary) {
    const auto& m = rep.summary->mean;
    std::printf("mean over %zu subjects: accuracy %.4f precision %.4f recall %.4f f1 %.4f auc %s\n",
                rep.succeeded(), m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1,
                m.macro_auc ? std::to_string(*m.macro_auc).c_str() : "n/a");
  }
  std::printf("outputs in %s (%.1f s)\n", rep.output_dir.c_str(), secs);
  return rep.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherence-network sEMG gesture classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(report::kToolVersion));

  CommonOptions common;
  struct Stage {
    const char* name;
    const char* help;
  };
  const std::vector<Stage> stages{
      {"ingest", "Load and segment recordings; writes segments/"},
      {"coherence", "Filter, normalize and compute per-trial coherence matrices; writes coherence/"},
      {"features", "Build 102x132 feature tables from coherence/; writes features/"},
      {"train", "Train one SVM per subject from features/; writes models/"},
      {"evaluate", "Evaluate models on the test repetitions; writes metrics/"},
      {"report", "Render heatmaps, networks and confusion figures; writes figures/"},
      {"run-all", "Run every stage end to end and write a manifest"},
  };
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    stage_cmds.push_back(cmd);
  }

  auto* show = app.add_subcommand("config", "Print the effective config as JSON");
  add_common(show, common);

  std::string synth_out;
  int synth_subjects = 2;
  unsigned long long synth_seed = 1;
  synthetic::Params synth;
  auto* syn = app.add_subcommand("synth", "Write synthetic subject recordings as CSV");
  syn->add_option("-o,--output", synth_out, "Directory for subject_<id>.csv files")->required();
  syn->add_option("-n,--subjects", synth_subjects, "Number of subjects")->check(CLI::Range(1, 100));
  syn->add_option("--seed", synth_seed, "Recording noise seed");
  syn->add_option("--gestures", synth.num_gestures, "Gestures per subject")->check(CLI::Range(2, kNumGestures));
  syn->add_option("--trial-samples", synth.trial_samples, "Samples per trial")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : report::kUsageError;
  }

  try {
    if (syn->parsed()) {
      std::filesystem::create_directories(synth_out);
      for (int id = 1; id <= synth_subjects; ++id) {
        const auto ds = synthetic::make_subject(synth, id, synth_seed);
        const auto path = (std::filesystem::path(synth_out) / ("subject_" + std::to_string(id) + ".csv")).string();
        save_csv(path, ds);
        std::printf("wrote %s\n", path.c_str());
      }
      return report::kOk;
    }
    const RunConfig cfg = resolve_config(common);
    if (show->parsed()) {
      std::cout << config_to_text(cfg);
      return report::kOk;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "run-all") return run_all(cfg);
    if (name == "ingest") return print_stage(report::stage_ingest(cfg));
    if (name == "coherence") return print_stage(report::stage_coherence(cfg));
    if (name == "features") return print_stage(report::stage_features(cfg));
    if (name == "train") return print_stage(report::stage_train(cfg));
    if (name == "evaluate") return print_stage(report::stage_evaluate(cfg));
    if (name == "report") return print_stage(report::stage_report(cfg));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return report::kUsageError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return report::kDataFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return report::kDataFailure;
  }
  return report::kUsageError;
}
