#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "cohnet/datamodel.hpp"
#include "cohnet/dsp.hpp"
#include "cohnet/error.hpp"
#include "cohnet/netfeat.hpp"
#include "cohnet/spectral.hpp"
#include "cohnet/svm.hpp"
#include "json.hpp"

namespace cohnet {

inline constexpr const char* kOutputDirEnv = "COHNET_OUTPUT_DIR";

struct SubjectInput {
  int subject{0};
  std::string path;

  bool operator==(const SubjectInput&) const = default;
};

struct DataConfig {
  // Either a directory scanned for S<id>*.mat / subject_<id>.csv files, or an
  // explicit input list (which wins when nonempty).
  std::string directory;
  std::vector<SubjectInput> inputs;
  std::vector<int> subjects;  // selection; empty = all discovered

  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  DataConfig data;
  dsp::FilterParams filter;
  spectral::WelchParams welch;
  SplitSpec split;
  TableLayout layout;
  svm::HyperParams svm;
  bool grid_search{false};
  svm::Grid grid;
  std::size_t folds{3};
  std::uint64_t seed{0};
  std::string output_dir{"cohnet-out"};
  std::size_t workers{1};
  bool figures{true};

  bool operator==(const RunConfig& o) const {
    return data == o.data && filter == o.filter && welch == o.welch &&
           split.train_repetitions == o.split.train_repetitions &&
           split.test_repetitions == o.split.test_repetitions &&
           layout.num_gestures == o.layout.num_gestures &&
           layout.num_repetitions == o.layout.num_repetitions && svm == o.svm &&
           grid_search == o.grid_search && grid == o.grid && folds == o.folds && seed == o.seed &&
           output_dir == o.output_dir && workers == o.workers && figures == o.figures;
  }
};

inline void validate(const RunConfig& c) {
  validate(c.split);
  spectral::validate(c.welch);
  svm::validate(c.svm);
  // Filter design validates band edges.
  (void)dsp::Preprocessor(c.filter);
  if (c.folds < 2) throw ConfigError("config: folds must be >= 2");
  if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (c.layout.num_gestures < 2 || c.layout.num_gestures > kNumGestures) {
    throw ConfigError("config: layout.gestures must be in 2.." + std::to_string(kNumGestures));
  }
  if (c.layout.num_repetitions < 2 || c.layout.num_repetitions > kNumRepetitions) {
    throw ConfigError("config: layout.repetitions must be in 2.." + std::to_string(kNumRepetitions));
  }
  for (const auto* set : {&c.split.train_repetitions, &c.split.test_repetitions}) {
    for (int r : *set) {
      if (r > c.layout.num_repetitions) throw ConfigError("config: split uses repetition beyond layout");
    }
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json inputs = json::array();
  for (const auto& in : c.data.inputs) inputs.push_back({{"subject", in.subject}, {"path", in.path}});
  return {
      {"data", {{"directory", c.data.directory}, {"inputs", inputs}, {"subjects", c.data.subjects}}},
      {"filter",
       {{"bandpass_order", c.filter.bandpass_order},
        {"low_hz", c.filter.low_hz},
        {"high_hz", c.filter.high_hz},
        {"notch_enabled", c.filter.notch_enabled},
        {"notch_hz", c.filter.notch_hz},
        {"notch_quality", c.filter.notch_quality},
        {"sample_rate_hz", c.filter.sample_rate_hz}}},
      {"welch",
       {{"window_length", c.welch.window_length},
        {"overlap_fraction", c.welch.overlap_fraction},
        {"nfft", c.welch.nfft},
        {"taper", spectral::taper_name(c.welch.taper)}}},
      {"split", {{"train", c.split.train_repetitions}, {"test", c.split.test_repetitions}}},
      {"layout", {{"gestures", c.layout.num_gestures}, {"repetitions", c.layout.num_repetitions}}},
      {"svm", svm::to_json(c.svm)},
      {"grid_search",
       {{"enabled", c.grid_search},
        {"folds", c.folds},
        {"degrees", c.grid.degrees},
        {"C", c.grid.C},
        {"gamma", c.grid.gamma},
        {"coef0", c.grid.coef0}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"figures", c.figures},
  };
}

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

// Missing keys keep their defaults. Unknown top-level keys are rejected so
// typos do not silently fall back to defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"data", "filter", "welch", "split", "layout", "svm",
                                           "grid_search", "seed", "output_dir", "workers", "figures"};
  RunConfig c;
  try {
    for (const auto& [k, _] : j.items()) {
      if (!known.contains(k)) throw ConfigError("config: unknown key '" + k + "'");
    }
    using detail::read_if;
    if (j.contains("data")) {
      const auto& d = j.at("data");
      read_if(d, "directory", c.data.directory);
      read_if(d, "subjects", c.data.subjects);
      if (d.contains("inputs")) {
        for (const auto& in : d.at("inputs")) {
          c.data.inputs.push_back({in.at("subject").get<int>(), in.at("path").get<std::string>()});
        }
      }
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      read_if(f, "bandpass_order", c.filter.bandpass_order);
      read_if(f, "low_hz", c.filter.low_hz);
      read_if(f, "high_hz", c.filter.high_hz);
      read_if(f, "notch_enabled", c.filter.notch_enabled);
      read_if(f, "notch_hz", c.filter.notch_hz);
      read_if(f, "notch_quality", c.filter.notch_quality);
      read_if(f, "sample_rate_hz", c.filter.sample_rate_hz);
    }
    if (j.contains("welch")) {
      const auto& w = j.at("welch");
      read_if(w, "window_length", c.welch.window_length);
      read_if(w, "overlap_fraction", c.welch.overlap_fraction);
      read_if(w, "nfft", c.welch.nfft);
      if (w.contains("taper")) c.welch.taper = spectral::parse_taper(w.at("taper").get<std::string>());
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      read_if(s, "train", c.split.train_repetitions);
      read_if(s, "test", c.split.test_repetitions);
    }
    if (j.contains("layout")) {
      read_if(j.at("layout"), "gestures", c.layout.num_gestures);
      read_if(j.at("layout"), "repetitions", c.layout.num_repetitions);
    }
    if (j.contains("svm")) c.svm = svm::hyperparams_from_json(j.at("svm"));
    if (j.contains("grid_search")) {
      const auto& g = j.at("grid_search");
      read_if(g, "enabled", c.grid_search);
      read_if(g, "folds", c.folds);
      read_if(g, "degrees", c.grid.degrees);
      read_if(g, "C", c.grid.C);
      read_if(g, "gamma", c.grid.gamma);
      read_if(g, "coef0", c.grid.coef0);
    }
    read_if(j, "seed", c.seed);
    read_if(j, "output_dir", c.output_dir);
    read_if(j, "workers", c.workers);
    read_if(j, "figures", c.figures);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline std::string config_to_text(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  // A run manifest embeds the config that produced it.
  if (j.contains("manifest_version") && j.contains("config")) return config_from_json(j.at("config"));
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_text(text);
}

// Applies "a.b.c=value" overrides. The value is parsed as JSON when it can
// be, otherwise taken as a string.
inline RunConfig apply_overrides(const RunConfig& c, const std::vector<std::string>& overrides) {
  auto j = to_json(c);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;
    }
    std::string ptr = "/";
    for (char ch : key) ptr += ch == '.' ? '/' : ch;
    try {
      const nlohmann::json::json_pointer p(ptr);
      if (!j.contains(p.parent_pointer())) throw ConfigError("override '" + key + "': no such section");
      j[p] = value;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("override '" + key + "': " + e.what());
    }
  }
  return config_from_json(j);
}

// Inputs explicitly listed, or discovered in data.directory, filtered by the
// subject selection and sorted by subject id.
inline std::vector<SubjectInput> resolve_inputs(const DataConfig& d) {
  namespace fs = std::filesystem;
  std::vector<SubjectInput> found = d.inputs;
  if (found.empty()) {
    if (d.directory.empty()) throw ConfigError("config: data.directory or data.inputs is required");
    if (!fs::is_directory(d.directory)) throw DataError("dataset directory not found: " + d.directory);
    static const std::regex pattern(R"(^(?:S|s|subject_?)(\d+)(?:_[A-Za-z0-9_]*)?\.(mat|csv)$)");
    for (const auto& entry : fs::directory_iterator(d.directory)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      std::smatch m;
      if (std::regex_match(name, m, pattern)) found.push_back({std::stoi(m[1].str()), entry.path().string()});
    }
  }
  std::map<int, SubjectInput> by_id;
  for (const auto& in : found) {
    if (!d.subjects.empty() && std::find(d.subjects.begin(), d.subjects.end(), in.subject) == d.subjects.end()) {
      continue;
    }
    if (!by_id.emplace(in.subject, in).second) {
      throw ConfigError("more than one input file for subject " + std::to_string(in.subject));
    }
  }
  std::vector<SubjectInput> out;
  for (const auto& [id, in] : by_id) {
    if (!fs::is_regular_file(in.path)) throw DataError("dataset file not found: " + in.path);
    out.push_back(in);
  }
  if (out.empty()) throw DataError("no subject files found");
  return out;
}

}  // namespace cohnet
