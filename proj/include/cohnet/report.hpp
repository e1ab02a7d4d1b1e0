#pragma once

// End-to-end orchestration: per-subject processing, artifact files, run
// manifest. Each stage is also callable on its own so the CLI can resume
// from the artifacts of an earlier stage.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "cohnet/config.hpp"
#include "cohnet/datamodel.hpp"
#include "cohnet/dsp.hpp"
#include "cohnet/error.hpp"
#include "cohnet/eval.hpp"
#include "cohnet/figures.hpp"
#include "cohnet/ingest.hpp"
#include "cohnet/mat.hpp"
#include "cohnet/netfeat.hpp"
#include "cohnet/parallel.hpp"
#include "cohnet/spectral.hpp"
#include "cohnet/svm.hpp"
#include "json.hpp"

namespace cohnet::report {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kManifestVersion = 1;
inline constexpr const char* kAucMethod =
    "one-vs-rest Mann-Whitney AUC over one-vs-one vote scores (votes + atan(summed margin)/pi)";

// Exit codes shared by the library entry points and the CLI.
enum ExitCode : int { kOk = 0, kUsageError = 1, kDataFailure = 2, kPartialFailure = 3 };

// The output directory, after the environment override.
inline std::string output_dir(const RunConfig& c) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return c.output_dir;
}

inline std::string subject_stem(int id) { return "subject_" + std::to_string(id); }

// Rethrows with a context prefix while keeping the error category, which
// decides the exit code.
template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ctx + ": " + e.what());
  }
}

// ---- ingest + segmentation -------------------------------------------------

inline SubjectDataset load_subject(const SubjectInput& in) {
  const auto ext = fs::path(in.path).extension().string();
  if (ext == ".mat") return load_db2_subject(in.path, in.subject);
  if (ext == ".csv") return load_csv(in.path, in.subject);
  throw ConfigError("unsupported input file type '" + ext + "' for " + in.path);
}

// Segments inside the table layout; trials beyond it are ignored, missing
// ones are an error.
inline std::vector<TrialSegment> segment_subject(const SubjectDataset& ds, const RunConfig& cfg) {
  if (!ds.channels.empty() && ds.channels.front().sample_rate_hz != cfg.filter.sample_rate_hz) {
    throw DataError("sample rate " + csv::format_double(ds.channels.front().sample_rate_hz) +
                    " Hz does not match filter.sample_rate_hz " + csv::format_double(cfg.filter.sample_rate_hz));
  }
  auto segs = segment_trials(ds, {2 * cfg.welch.window_length});
  std::erase_if(segs, [&](const TrialSegment& s) {
    return s.gesture > cfg.layout.num_gestures || s.repetition > cfg.layout.num_repetitions;
  });
  const auto missing = missing_trials(segs, cfg.layout.num_gestures, cfg.layout.num_repetitions);
  if (!missing.empty()) throw StructuralError("missing trials: " + describe(missing));
  return segs;
}

inline std::string trial_context(const TrialSegment& s) {
  return "gesture " + std::to_string(s.gesture) + ", repetition " + std::to_string(s.repetition);
}

// ---- coherence stage -------------------------------------------------------

struct SubjectCoherence {
  int subject{0};
  std::vector<CoherenceMatrix> matrices;  // segment order
  dsp::ChannelStats stats;                // fitted on the training repetitions
};

// filter -> z-score (training statistics) -> 12x12 MSC per trial.
inline SubjectCoherence compute_coherence(const SubjectDataset& ds, const RunConfig& cfg, std::size_t workers = 1) {
  const auto segs = segment_subject(ds, cfg);
  const dsp::Preprocessor pre(cfg.filter);
  std::vector<TrialSegment> filtered(segs.size());
  parallel_for(segs.size(), workers, [&](std::size_t i) {
    filtered[i] = with_context(trial_context(segs[i]) + ", filtering", [&] { return pre.apply(segs[i]); });
  });
  std::vector<TrialSegment> train;
  for (const auto& s : filtered) {
    if (cfg.split.train_repetitions.contains(s.repetition)) train.push_back(s);
  }
  SubjectCoherence out;
  out.subject = ds.subject_id;
  out.stats = with_context("z-score fit", [&] { return dsp::zscore_fit(train); });
  out.matrices.resize(filtered.size());
  parallel_for(filtered.size(), workers, [&](std::size_t i) {
    out.matrices[i] = with_context(trial_context(filtered[i]) + ", coherence", [&] {
      return spectral::coherence_matrix(dsp::zscore_apply(out.stats, filtered[i]), cfg.welch);
    });
  });
  return out;
}

inline std::vector<std::pair<std::string, std::string>> stats_metadata(int subject, const dsp::ChannelStats& s) {
  return {{"subject", std::to_string(subject)},
          {"channel_mean", json(s.mean).dump()},
          {"channel_std", json(s.stddev).dump()}};
}

inline std::optional<dsp::ChannelStats> stats_from_metadata(
    const std::vector<std::pair<std::string, std::string>>& meta) {
  std::optional<std::string> mean, sd;
  for (const auto& [k, v] : meta) {
    if (k == "channel_mean") mean = v;
    if (k == "channel_std") sd = v;
  }
  if (!mean || !sd) return std::nullopt;
  try {
    dsp::ChannelStats s;
    s.mean = json::parse(*mean).get<std::array<double, kNumChannels>>();
    s.stddev = json::parse(*sd).get<std::array<double, kNumChannels>>();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed channel statistics metadata: ") + e.what());
  }
}

inline std::vector<std::string> coherence_header() {
  std::vector<std::string> h{"gesture", "repetition"};
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    for (std::size_t j = 0; j < kNumChannels; ++j) {
      h.push_back("c" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    }
  }
  return h;
}

inline void write_coherence_csv(std::ostream& out, const SubjectCoherence& c) {
  for (const auto& [k, v] : stats_metadata(c.subject, c.stats)) out << "# " << k << '=' << v << '\n';
  const auto h = coherence_header();
  for (std::size_t k = 0; k < h.size(); ++k) out << (k ? "," : "") << h[k];
  out << '\n';
  for (const auto& m : c.matrices) {
    out << m.gesture << ',' << m.repetition;
    for (double v : m.values) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

inline SubjectCoherence read_coherence_csv(std::istream& in) {
  SubjectCoherence c;
  std::vector<std::pair<std::string, std::string>> meta;
  std::string line;
  std::vector<std::string> header;
  std::size_t row = 0;
  while (csv::getline_stripped(in, line)) {
    ++row;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("coherence CSV: malformed metadata line " + std::to_string(row));
      meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    header = csv::split_record(line);
    break;
  }
  if (header != coherence_header()) throw FormatError("coherence CSV: unexpected header");
  for (const auto& [k, v] : meta) {
    if (k == "subject") c.subject = std::stoi(v);
  }
  auto stats = stats_from_metadata(meta);
  if (!stats) throw MissingFieldError("channel_mean/channel_std");
  c.stats = *stats;
  while (csv::getline_stripped(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split_record(line);
    if (f.size() != header.size()) throw FormatError("coherence CSV row " + std::to_string(row) + ": wrong field count");
    CoherenceMatrix m;
    std::vector<double> nums;
    for (const auto& s : f) {
      const auto v = csv::parse_double(s);
      if (!v) throw FormatError("coherence CSV row " + std::to_string(row) + ": bad number '" + s + "'");
      nums.push_back(*v);
    }
    m.gesture = static_cast<int>(nums[0]);
    m.repetition = static_cast<int>(nums[1]);
    std::copy(nums.begin() + 2, nums.end(), m.values.begin());
    c.matrices.push_back(m);
  }
  return c;
}

// ---- training + evaluation -------------------------------------------------

struct SubjectModel {
  svm::TrainedModel model;
  std::optional<svm::GridSearchResult> grid;
};

inline SubjectModel train_subject(const FeatureTable& table, const std::optional<dsp::ChannelStats>& stats,
                                  const RunConfig& cfg, std::size_t workers = 1) {
  const auto [train, test] = split(table, cfg.split);
  SubjectModel out;
  svm::HyperParams params = cfg.svm;
  if (cfg.grid_search) {
    out.grid = with_context("grid search", [&] {
      return svm::grid_search_cv(train, cfg.grid, cfg.svm, cfg.folds, cfg.seed, workers);
    });
    params = out.grid->best;
  }
  out.model = with_context("training", [&] { return svm::ovo_train(train, params, workers); });
  out.model.channel_stats = stats;
  return out;
}

struct TestPrediction {
  int gesture{0};
  int repetition{0};
  int predicted{0};
  std::vector<double> scores;  // per gesture label 1..G
};

struct SubjectEvaluation {
  int subject{0};
  std::vector<TestPrediction> predictions;
  eval::Confusion confusion;
  eval::Metrics metrics;
};

inline SubjectEvaluation evaluate_subject(int subject, const svm::TrainedModel& model, const FeatureTable& table,
                                          const RunConfig& cfg) {
  const auto [train, test] = split(table, cfg.split);
  const auto g = static_cast<std::size_t>(cfg.layout.num_gestures);
  SubjectEvaluation ev;
  ev.subject = subject;
  std::vector<int> truths, preds;
  std::vector<std::vector<double>> scores;
  for (const auto& row : test.rows) {
    const auto p = svm::predict(model, row.values);
    TestPrediction tp{row.gesture, row.repetition, p.label, std::vector<double>(g, std::numeric_limits<double>::lowest())};
    for (std::size_t k = 0; k < model.classes.size(); ++k) {
      const int label = model.classes[k];
      if (label >= 1 && static_cast<std::size_t>(label) <= g) tp.scores[static_cast<std::size_t>(label - 1)] = p.scores[k];
    }
    truths.push_back(row.gesture);
    preds.push_back(p.label);
    scores.push_back(tp.scores);
    ev.predictions.push_back(std::move(tp));
  }
  ev.confusion = eval::confusion(preds, truths, g);
  ev.metrics = eval::classification_metrics(ev.confusion);
  eval::attach_auc(ev.metrics, eval::roc_auc(scores, truths, g));
  return ev;
}

// ---- metrics serialization -------------------------------------------------

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json metrics_to_json(const eval::Metrics& m) {
  json per = json::array();
  for (std::size_t k = 0; k < m.per_class.size(); ++k) {
    const auto& c = m.per_class[k];
    per.push_back({{"gesture", k + 1},
                   {"accuracy", c.accuracy},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1},
                   {"auc", optional_json(c.auc)},
                   {"zero_division", c.zero_division}});
  }
  return {{"accuracy", m.accuracy},
          {"macro",
           {{"class_accuracy", m.macro_class_accuracy},
            {"precision", m.macro_precision},
            {"recall", m.macro_recall},
            {"f1", m.macro_f1},
            {"auc", optional_json(m.macro_auc)}}},
          {"per_class", per}};
}

inline eval::Metrics metrics_from_json(const json& j) {
  auto opt = [](const json& v) { return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()); };
  eval::Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  const auto& mac = j.at("macro");
  m.macro_class_accuracy = mac.at("class_accuracy").get<double>();
  m.macro_precision = mac.at("precision").get<double>();
  m.macro_recall = mac.at("recall").get<double>();
  m.macro_f1 = mac.at("f1").get<double>();
  m.macro_auc = opt(mac.at("auc"));
  for (const auto& c : j.at("per_class")) {
    eval::ClassMetrics cm;
    cm.accuracy = c.at("accuracy").get<double>();
    cm.precision = c.at("precision").get<double>();
    cm.recall = c.at("recall").get<double>();
    cm.f1 = c.at("f1").get<double>();
    cm.auc = opt(c.at("auc"));
    cm.zero_division = c.at("zero_division").get<bool>();
    m.per_class.push_back(cm);
  }
  return m;
}

inline json confusion_to_json(const eval::Confusion& c) {
  json rows = json::array();
  for (std::size_t t = 0; t < c.num_classes; ++t) {
    json r = json::array();
    for (std::size_t p = 0; p < c.num_classes; ++p) r.push_back(c.at(t, p));
    rows.push_back(r);
  }
  return rows;
}

inline eval::Confusion confusion_from_json(const json& j) {
  eval::Confusion c(j.size());
  for (std::size_t t = 0; t < c.num_classes; ++t) {
    if (j[t].size() != c.num_classes) throw FormatError("confusion matrix is not square");
    for (std::size_t p = 0; p < c.num_classes; ++p) c.at(t, p) = j[t][p].get<double>();
  }
  return c;
}

inline json evaluation_to_json(const SubjectEvaluation& ev) {
  json preds = json::array();
  for (const auto& p : ev.predictions) {
    json scores = json::array();
    for (double s : p.scores) scores.push_back(s == std::numeric_limits<double>::lowest() ? json(nullptr) : json(s));
    preds.push_back(
        {{"gesture", p.gesture}, {"repetition", p.repetition}, {"predicted", p.predicted}, {"scores", scores}});
  }
  auto j = metrics_to_json(ev.metrics);
  j["subject"] = ev.subject;
  j["auc_method"] = kAucMethod;
  j["confusion"] = confusion_to_json(ev.confusion);
  j["predictions"] = preds;
  return j;
}

inline SubjectEvaluation evaluation_from_json(const json& j) {
  try {
    SubjectEvaluation ev;
    ev.subject = j.at("subject").get<int>();
    ev.metrics = metrics_from_json(j);
    ev.confusion = confusion_from_json(j.at("confusion"));
    for (const auto& p : j.at("predictions")) {
      TestPrediction tp{p.at("gesture").get<int>(), p.at("repetition").get<int>(), p.at("predicted").get<int>(), {}};
      for (const auto& s : p.at("scores")) {
        tp.scores.push_back(s.is_null() ? std::numeric_limits<double>::lowest() : s.get<double>());
      }
      ev.predictions.push_back(std::move(tp));
    }
    return ev;
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics file: ") + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string opt_csv(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

// summary.csv: across-subject means per gesture, then macro and overall
// rows, then one macro row per subject.
inline std::string summary_csv(const std::vector<SubjectEvaluation>& evs) {
  std::vector<eval::Metrics> ms;
  for (const auto& e : evs) ms.push_back(e.metrics);
  const auto mean = eval::mean_metrics(ms);
  std::ostringstream o;
  o << "# auc_method=" << kAucMethod << '\n';
  o << "# subjects=" << evs.size() << '\n';
  o << "scope,gesture,accuracy,precision,recall,f1,auc\n";
  auto put = [&o](const std::string& scope, const std::string& cls, double a, double p, double r, double f,
                  const std::optional<double>& auc) {
    o << scope << ',' << cls << ',' << csv::format_double(a) << ',' << csv::format_double(p) << ','
      << csv::format_double(r) << ',' << csv::format_double(f) << ',' << opt_csv(auc) << '\n';
  };
  for (std::size_t k = 0; k < mean.per_class.size(); ++k) {
    const auto& c = mean.per_class[k];
    put("mean", std::to_string(k + 1), c.accuracy, c.precision, c.recall, c.f1, c.auc);
  }
  put("mean", "macro", mean.macro_class_accuracy, mean.macro_precision, mean.macro_recall, mean.macro_f1,
      mean.macro_auc);
  o << "mean,overall," << csv::format_double(mean.accuracy) << ",,,,\n";
  for (const auto& e : evs) {
    const auto& m = e.metrics;
    put(subject_stem(e.subject), "macro", m.macro_class_accuracy, m.macro_precision, m.macro_recall, m.macro_f1,
        m.macro_auc);
    o << subject_stem(e.subject) << ",overall," << csv::format_double(m.accuracy) << ",,,,\n";
  }
  return o.str();
}

inline std::string confusion_csv(const eval::Confusion& c) {
  std::ostringstream o;
  o << "true\\predicted";
  for (std::size_t p = 0; p < c.num_classes; ++p) o << ',' << p + 1;
  o << '\n';
  for (std::size_t t = 0; t < c.num_classes; ++t) {
    o << t + 1;
    for (std::size_t p = 0; p < c.num_classes; ++p) o << ',' << csv::format_double(c.at(t, p));
    o << '\n';
  }
  return o.str();
}

struct Summary {
  eval::Metrics mean;
  eval::Confusion mean_confusion;
};

inline Summary summarize(const std::vector<SubjectEvaluation>& evs) {
  std::vector<eval::Metrics> ms;
  std::vector<eval::Confusion> cs;
  for (const auto& e : evs) {
    ms.push_back(e.metrics);
    cs.push_back(e.confusion);
  }
  return {eval::mean_metrics(ms), eval::mean_confusion(cs)};
}

// Writes metrics/summary.{csv,json} and metrics/confusion_mean.csv.
inline Summary write_summary(const fs::path& out, const std::vector<SubjectEvaluation>& evs) {
  const auto s = summarize(evs);
  write_text(out / "metrics" / "summary.csv", summary_csv(evs));
  json subjects = json::array();
  for (const auto& e : evs) subjects.push_back(e.subject);
  json j = metrics_to_json(s.mean);
  j["subjects"] = subjects;
  j["auc_method"] = kAucMethod;
  j["mean_confusion"] = confusion_to_json(s.mean_confusion);
  write_text(out / "metrics" / "summary.json", j.dump(2) + "\n");
  write_text(out / "metrics" / "confusion_mean.csv", confusion_csv(s.mean_confusion));
  return s;
}

// ---- figures ----------------------------------------------------------------

inline std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

// Per-gesture median heatmap and network for one subject.
inline std::vector<std::string> write_subject_figures(const fs::path& out, int subject, const FeatureTable& table,
                                                      const eval::Confusion* confusion) {
  std::vector<std::string> written;
  std::map<int, std::vector<CoherenceMatrix>> by_gesture;
  for (const auto& r : table.rows) by_gesture[r.gesture].push_back(unvectorize(r.values, r.gesture, r.repetition));
  const auto dir = out / "figures";
  for (const auto& [g, ms] : by_gesture) {
    const auto med = median_matrix(ms);
    const std::string stem = subject_stem(subject) + "_gesture_" + two_digits(g);
    const std::string title = "Subject " + std::to_string(subject) + ", gesture " + std::to_string(g);
    write_text(dir / (stem + "_heatmap.svg"), figures::render_heatmap(med, title + " median MSC"));
    write_text(dir / (stem + "_network.svg"), figures::render_network(med, title + " network"));
    written.push_back("figures/" + stem + "_heatmap.svg");
    written.push_back("figures/" + stem + "_network.svg");
  }
  if (confusion) {
    const std::string name = "figures/" + subject_stem(subject) + "_confusion.svg";
    write_text(out / name, figures::render_confusion(*confusion, "Subject " + std::to_string(subject) + " confusion"));
    written.push_back(name);
  }
  return written;
}

// ---- whole-run orchestration ------------------------------------------------

struct SubjectResult {
  int subject{0};
  std::string input;
  bool ok{false};
  std::string error;
  bool config_error{false};
  std::size_t num_trials{0};
  std::optional<FeatureTable> table;
  std::optional<SubjectModel> model;
  std::optional<SubjectEvaluation> evaluation;
  std::vector<std::string> artifacts;
};

struct RunReport {
  std::string output_dir;
  std::vector<SubjectResult> subjects;
  std::optional<Summary> summary;
  std::vector<std::string> artifacts;

  std::size_t succeeded() const {
    return static_cast<std::size_t>(std::count_if(subjects.begin(), subjects.end(), [](auto& s) { return s.ok; }));
  }
  int exit_code() const {
    const auto ok = succeeded();
    if (ok == subjects.size()) return kOk;
    if (ok > 0) return kPartialFailure;
    return std::all_of(subjects.begin(), subjects.end(), [](auto& s) { return s.config_error; }) ? kUsageError
                                                                                                 : kDataFailure;
  }
};

// Splits a worker budget between subjects (outer) and work inside a subject.
inline std::pair<std::size_t, std::size_t> worker_split(std::size_t workers, std::size_t subjects) {
  const std::size_t outer = std::max<std::size_t>(1, std::min(workers, subjects));
  return {outer, std::max<std::size_t>(1, workers / outer)};
}

inline FeatureTable features_from(const SubjectCoherence& c, const RunConfig& cfg) {
  return with_context("feature table", [&] { return build_feature_table(c.matrices, cfg.layout); });
}

inline SubjectResult process_subject(const SubjectInput& in, const RunConfig& cfg, std::size_t workers) {
  SubjectResult r;
  r.subject = in.subject;
  r.input = in.path;
  try {
    with_context("subject " + std::to_string(in.subject), [&] {
      const auto ds = with_context("ingest " + in.path, [&] { return load_subject(in); });
      const auto coh = compute_coherence(ds, cfg, workers);
      r.num_trials = coh.matrices.size();
      r.table = features_from(coh, cfg);
      r.model = train_subject(*r.table, coh.stats, cfg, workers);
      r.evaluation = with_context("evaluation", [&] { return evaluate_subject(in.subject, r.model->model, *r.table, cfg); });
    });
    r.ok = true;
  } catch (const ConfigError& e) {
    r.error = e.what();
    r.config_error = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

inline json manifest_json(const RunConfig& cfg, const std::vector<SubjectInput>& inputs, const RunReport& rep,
                          const std::string& stage) {
  RunConfig embedded = cfg;
  embedded.data.inputs = inputs;
  embedded.data.directory.clear();
  embedded.output_dir = rep.output_dir;
  json subjects = json::array();
  for (const auto& s : rep.subjects) {
    json e{{"subject", s.subject}, {"input", s.input}, {"status", s.ok ? "ok" : "failed"}};
    if (!s.ok) e["error"] = s.error;
    if (s.ok) e["trials"] = s.num_trials;
    if (s.model) {
      e["model_params"] = svm::to_json(s.model->model.params);
      e["non_converged_models"] = s.model->model.non_converged();
      if (s.model->grid) {
        json pts = json::array();
        for (const auto& p : s.model->grid->points) {
          pts.push_back({{"params", svm::to_json(p.params)}, {"mean_accuracy", p.mean_accuracy}});
        }
        e["grid_search"] = pts;
      }
    }
    if (s.evaluation) e["accuracy"] = s.evaluation->metrics.accuracy;
    e["artifacts"] = s.artifacts;
    subjects.push_back(e);
  }
  return {{"manifest_version", kManifestVersion},
          {"tool", "cohnet"},
          {"tool_version", kToolVersion},
          {"stage", stage},
          {"seed", cfg.seed},
          {"auc_method", kAucMethod},
          {"config", to_json(embedded)},
          {"subjects", subjects},
          {"artifacts", rep.artifacts}};
}

// Full pipeline. Input resolution and config validation happen before any
// file is written, so a bad dataset path leaves no artifacts behind.
inline RunReport run_pipeline(const RunConfig& cfg) {
  validate(cfg);
  const auto inputs = resolve_inputs(cfg.data);
  RunReport rep;
  rep.output_dir = output_dir(cfg);
  const fs::path out(rep.output_dir);
  const auto [outer, inner] = worker_split(cfg.workers, inputs.size());

  rep.subjects.resize(inputs.size());
  parallel_for(inputs.size(), outer, [&](std::size_t i) { rep.subjects[i] = process_subject(inputs[i], cfg, inner); });

  // Deterministic join in subject-id order.
  std::vector<SubjectEvaluation> evs;
  for (auto& s : rep.subjects) {
    if (!s.ok) continue;
    const std::string stem = subject_stem(s.subject);
    std::vector<std::pair<std::string, std::string>> meta{{"subject", std::to_string(s.subject)}};
    if (s.model->model.channel_stats) meta = stats_metadata(s.subject, *s.model->model.channel_stats);
    fs::create_directories(out / "features");
    save_feature_csv((out / "features" / (stem + ".csv")).string(), *s.table, meta);
    fs::create_directories(out / "models");
    svm::save_model((out / "models" / (stem + ".model")).string(), s.model->model);
    write_text(out / "metrics" / (stem + ".json"), evaluation_to_json(*s.evaluation).dump(2) + "\n");
    s.artifacts = {"features/" + stem + ".csv", "models/" + stem + ".model", "metrics/" + stem + ".json"};
    if (cfg.figures) {
      const auto figs = write_subject_figures(out, s.subject, *s.table, &s.evaluation->confusion);
      s.artifacts.insert(s.artifacts.end(), figs.begin(), figs.end());
    }
    evs.push_back(*s.evaluation);
  }
  if (!evs.empty()) {
    rep.summary = write_summary(out, evs);
    rep.artifacts = {"metrics/summary.csv", "metrics/summary.json", "metrics/confusion_mean.csv"};
    if (cfg.figures) {
      write_text(out / "figures" / "confusion_mean.svg",
                 figures::render_confusion(rep.summary->mean_confusion, "Mean confusion across subjects"));
      rep.artifacts.push_back("figures/confusion_mean.svg");
    }
  }
  write_text(out / "manifest.json", manifest_json(cfg, inputs, rep, "run-all").dump(2) + "\n");
  return rep;
}

// ---- resumable stages -------------------------------------------------------

// Subject ids for a stage that reads an earlier stage's files: the config's
// selection, else every subject_<id><ext> under dir.
inline std::vector<int> stage_subjects(const RunConfig& cfg, const fs::path& dir, const std::string& ext) {
  if (!cfg.data.subjects.empty()) {
    auto ids = cfg.data.subjects;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }
  if (!fs::is_directory(dir)) throw DataError("stage input directory not found: " + dir.string());
  const std::regex pattern("^subject_(\\d+)" + std::regex_replace(ext, std::regex(R"(\.)"), R"(\.)") + "$");
  std::vector<int> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, pattern)) ids.push_back(std::stoi(m[1].str()));
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw DataError("no subject_<id>" + ext + " files in " + dir.string());
  return ids;
}

struct StageItem {
  int subject{0};
  bool ok{false};
  bool config_error{false};
  std::string error;
  std::string summary;  // one human-readable line
};

struct StageReport {
  std::string stage;
  std::vector<StageItem> items;

  int exit_code() const {
    const auto ok = static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](auto& i) { return i.ok; }));
    if (ok == items.size()) return kOk;
    if (ok > 0) return kPartialFailure;
    return std::all_of(items.begin(), items.end(), [](auto& i) { return i.config_error; }) ? kUsageError
                                                                                           : kDataFailure;
  }
};

// Runs fn per subject in parallel, capturing failures per subject.
inline StageReport run_stage(const std::string& stage, const std::vector<int>& ids, const RunConfig& cfg,
                             const std::function<std::string(int, std::size_t)>& fn) {
  StageReport rep;
  rep.stage = stage;
  rep.items.resize(ids.size());
  const auto [outer, inner] = worker_split(cfg.workers, ids.size());
  parallel_for(ids.size(), outer, [&](std::size_t i) {
    auto& it = rep.items[i];
    it.subject = ids[i];
    try {
      it.summary = with_context("subject " + std::to_string(ids[i]), [&] { return fn(ids[i], inner); });
      it.ok = true;
    } catch (const ConfigError& e) {
      it.error = e.what();
      it.config_error = true;
    } catch (const std::exception& e) {
      it.error = e.what();
    }
  });
  return rep;
}

inline std::map<int, SubjectInput> inputs_by_id(const RunConfig& cfg) {
  std::map<int, SubjectInput> m;
  for (const auto& in : resolve_inputs(cfg.data)) m.emplace(in.subject, in);
  return m;
}

inline std::vector<int> ids_of(const std::map<int, SubjectInput>& m) {
  std::vector<int> ids;
  for (const auto& [id, _] : m) ids.push_back(id);
  return ids;
}

// ingest: load and segment; writes segments/subject_<id>.csv.
inline StageReport stage_ingest(const RunConfig& cfg) {
  validate(cfg);
  const auto inputs = inputs_by_id(cfg);
  const fs::path out(output_dir(cfg));
  return run_stage("ingest", ids_of(inputs), cfg, [&](int id, std::size_t) {
    const auto& in = inputs.at(id);
    const auto ds = with_context("ingest " + in.path, [&] { return load_subject(in); });
    const auto segs = segment_subject(ds, cfg);
    std::ostringstream o;
    o << "gesture,repetition,begin,end,samples\n";
    for (const auto& s : segs) {
      o << s.gesture << ',' << s.repetition << ',' << s.begin << ',' << s.end << ',' << s.end - s.begin << '\n';
    }
    write_text(out / "segments" / (subject_stem(id) + ".csv"), o.str());
    return std::to_string(segs.size()) + " trials, " + std::to_string(ds.num_samples()) + " samples";
  });
}

// coherence: writes coherence/subject_<id>.csv (one 12x12 matrix per trial).
inline StageReport stage_coherence(const RunConfig& cfg) {
  validate(cfg);
  const auto inputs = inputs_by_id(cfg);
  const fs::path out(output_dir(cfg));
  return run_stage("coherence", ids_of(inputs), cfg, [&](int id, std::size_t workers) {
    const auto ds = with_context("ingest " + inputs.at(id).path, [&] { return load_subject(inputs.at(id)); });
    const auto coh = compute_coherence(ds, cfg, workers);
    std::ostringstream o;
    write_coherence_csv(o, coh);
    write_text(out / "coherence" / (subject_stem(id) + ".csv"), o.str());
    return std::to_string(coh.matrices.size()) + " coherence matrices";
  });
}

inline StageReport stage_features(const RunConfig& cfg) {
  validate(cfg);
  const fs::path out(output_dir(cfg));
  const auto ids = stage_subjects(cfg, out / "coherence", ".csv");
  return run_stage("features", ids, cfg, [&](int id, std::size_t) {
    const auto path = out / "coherence" / (subject_stem(id) + ".csv");
    std::istringstream in(read_text(path));
    auto coh = with_context(path.string(), [&] { return read_coherence_csv(in); });
    coh.subject = id;
    const auto table = features_from(coh, cfg);
    fs::create_directories(out / "features");
    save_feature_csv((out / "features" / (subject_stem(id) + ".csv")).string(), table, stats_metadata(id, coh.stats));
    return std::to_string(table.num_rows()) + "x" + std::to_string(table.num_features()) + " feature table";
  });
}

inline FeatureFile load_subject_features(const fs::path& out, int id) {
  const auto path = (out / "features" / (subject_stem(id) + ".csv")).string();
  return with_context(path, [&] { return load_feature_csv(path); });
}

inline StageReport stage_train(const RunConfig& cfg) {
  validate(cfg);
  const fs::path out(output_dir(cfg));
  const auto ids = stage_subjects(cfg, out / "features", ".csv");
  return run_stage("train", ids, cfg, [&](int id, std::size_t workers) {
    const auto f = load_subject_features(out, id);
    const auto m = train_subject(f.table, stats_from_metadata(f.metadata), cfg, workers);
    fs::create_directories(out / "models");
    svm::save_model((out / "models" / (subject_stem(id) + ".model")).string(), m.model);
    std::string line = std::to_string(m.model.models.size()) + " binary models, degree " +
                       std::to_string(m.model.params.degree) + ", C " + csv::format_double(m.model.params.C);
    if (m.model.non_converged()) line += ", " + std::to_string(m.model.non_converged()) + " not converged";
    return line;
  });
}

inline StageReport stage_evaluate(const RunConfig& cfg) {
  validate(cfg);
  const fs::path out(output_dir(cfg));
  const auto ids = stage_subjects(cfg, out / "models", ".model");
  std::vector<std::optional<SubjectEvaluation>> evs(ids.size());
  auto rep = run_stage("evaluate", ids, cfg, [&](int id, std::size_t) {
    const auto f = load_subject_features(out, id);
    const auto path = (out / "models" / (subject_stem(id) + ".model")).string();
    const auto model = with_context(path, [&] { return svm::load_model(path); });
    auto ev = evaluate_subject(id, model, f.table, cfg);
    write_text(out / "metrics" / (subject_stem(id) + ".json"), evaluation_to_json(ev).dump(2) + "\n");
    const auto idx = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    evs[idx] = ev;
    return "accuracy " + csv::format_double(ev.metrics.accuracy);
  });
  std::vector<SubjectEvaluation> done;
  for (auto& e : evs) {
    if (e) done.push_back(std::move(*e));
  }
  if (!done.empty()) write_summary(out, done);
  return rep;
}

// report: figures from features and per-subject metrics.
inline StageReport stage_report(const RunConfig& cfg) {
  validate(cfg);
  const fs::path out(output_dir(cfg));
  const auto ids = stage_subjects(cfg, out / "features", ".csv");
  std::vector<std::optional<eval::Confusion>> cms(ids.size());
  auto rep = run_stage("report", ids, cfg, [&](int id, std::size_t) {
    const auto f = load_subject_features(out, id);
    std::optional<eval::Confusion> cm;
    const auto mpath = out / "metrics" / (subject_stem(id) + ".json");
    if (fs::exists(mpath)) {
      cm = with_context(mpath.string(), [&] {
        try {
          return evaluation_from_json(json::parse(read_text(mpath))).confusion;
        } catch (const json::exception& e) {
          throw FormatError(e.what());
        }
      });
    }
    const auto figs = write_subject_figures(out, id, f.table, cm ? &*cm : nullptr);
    const auto idx = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    cms[idx] = cm;
    return std::to_string(figs.size()) + " figures";
  });
  std::vector<eval::Confusion> have;
  for (auto& c : cms) {
    if (c) have.push_back(*c);
  }
  if (!have.empty()) {
    write_text(out / "figures" / "confusion_mean.svg",
               figures::render_confusion(eval::mean_confusion(have), "Mean confusion across subjects"));
  }
  return rep;
}

}  // namespace cohnet::report
