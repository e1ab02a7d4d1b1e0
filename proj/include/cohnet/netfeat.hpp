#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "cohnet/coherence_matrix.hpp"
#include "cohnet/datamodel.hpp"
#include "cohnet/error.hpp"
#include "cohnet/ingest.hpp"

namespace cohnet {

inline constexpr std::size_t kNumFeatures = kNumChannels * kNumChannels - kNumChannels;  // 132

inline void validate(const CoherenceMatrix& m) {
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    if (m(i, i) != 0.0) throw DataError("coherence matrix diagonal must be zero");
    for (std::size_t j = 0; j < kNumChannels; ++j) {
      const double v = m(i, j);
      if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
        throw DataError("coherence matrix entry (" + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + ") = " + std::to_string(v) + " outside [0, 1]");
      }
      if (v != m(j, i)) throw DataError("coherence matrix is not symmetric");
    }
  }
}

struct ChannelPair {
  std::size_t row;
  std::size_t col;
};

// Row-major scan of the 12x12 matrix with the diagonal skipped. Position k
// of a feature vector holds entry column_map()[k].
inline const std::vector<ChannelPair>& column_map() {
  static const std::vector<ChannelPair> map = [] {
    std::vector<ChannelPair> m;
    for (std::size_t i = 0; i < kNumChannels; ++i) {
      for (std::size_t j = 0; j < kNumChannels; ++j) {
        if (i != j) m.push_back({i, j});
      }
    }
    return m;
  }();
  return map;
}

inline std::vector<std::string> column_names() {
  std::vector<std::string> names;
  for (const auto& p : column_map()) {
    names.push_back("ch_" + std::to_string(p.row + 1) + "-ch_" + std::to_string(p.col + 1));
  }
  return names;
}

inline std::vector<double> vectorize(const CoherenceMatrix& m) {
  std::vector<double> v;
  v.reserve(kNumFeatures);
  for (const auto& p : column_map()) v.push_back(m(p.row, p.col));
  return v;
}

inline CoherenceMatrix unvectorize(std::span<const double> v, int gesture = 0, int repetition = 0) {
  if (v.size() != kNumFeatures) throw ShapeError("feature vector must have 132 entries");
  CoherenceMatrix m;
  m.gesture = gesture;
  m.repetition = repetition;
  const auto& map = column_map();
  for (std::size_t k = 0; k < kNumFeatures; ++k) m(map[k].row, map[k].col) = v[k];
  return m;
}

struct FeatureRow {
  int gesture{0};
  int repetition{0};
  std::vector<double> values;

  bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;

  std::size_t num_rows() const { return rows.size(); }
  std::size_t num_features() const { return rows.empty() ? kNumFeatures : rows.front().values.size(); }
  std::set<int> gestures() const {
    std::set<int> g;
    for (const auto& r : rows) g.insert(r.gesture);
    return g;
  }
  std::set<int> repetitions() const {
    std::set<int> s;
    for (const auto& r : rows) s.insert(r.repetition);
    return s;
  }

  bool operator==(const FeatureTable&) const = default;
};

// The (gesture, repetition) grid a complete feature table must cover.
struct TableLayout {
  int num_gestures{kNumGestures};
  int num_repetitions{kNumRepetitions};
};

// Rows in gesture-major, repetition-minor order; every grid cell exactly once.
inline FeatureTable build_feature_table(std::span<const CoherenceMatrix> matrices,
                                        const TableLayout& layout = {}) {
  std::map<TrialKey, const CoherenceMatrix*> by_key;
  for (const auto& m : matrices) {
    const TrialKey key{m.gesture, m.repetition};
    if (m.gesture < 1 || m.gesture > layout.num_gestures || m.repetition < 1 ||
        m.repetition > layout.num_repetitions) {
      throw StructuralError("coherence matrix labelled " + to_string(key) + " is outside the table layout");
    }
    if (!by_key.emplace(key, &m).second) {
      throw StructuralError("duplicate coherence matrix for trial " + to_string(key));
    }
  }
  std::vector<TrialKey> missing;
  for (int g = 1; g <= layout.num_gestures; ++g) {
    for (int r = 1; r <= layout.num_repetitions; ++r) {
      if (!by_key.contains({g, r})) missing.push_back({g, r});
    }
  }
  if (!missing.empty()) {
    throw StructuralError("feature table incomplete, missing trials: " + describe(missing));
  }
  FeatureTable t;
  t.rows.reserve(by_key.size());
  for (const auto& [key, m] : by_key) {
    validate(*m);
    t.rows.push_back({key.gesture, key.repetition, vectorize(*m)});
  }
  return t;
}

// Rows whose repetition is in neither set are dropped.
inline std::pair<FeatureTable, FeatureTable> split(const FeatureTable& table, const SplitSpec& spec) {
  validate(spec);
  const auto present = table.repetitions();
  for (const auto* set : {&spec.train_repetitions, &spec.test_repetitions}) {
    for (int r : *set) {
      if (!present.contains(r)) {
        throw StructuralError("split: repetition " + std::to_string(r) + " is absent from the feature table");
      }
    }
  }
  FeatureTable train, test;
  for (const auto& row : table.rows) {
    if (spec.train_repetitions.contains(row.repetition)) train.rows.push_back(row);
    if (spec.test_repetitions.contains(row.repetition)) test.rows.push_back(row);
  }
  auto order = [](const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.gesture, a.repetition) < std::tie(b.gesture, b.repetition);
  };
  std::sort(train.rows.begin(), train.rows.end(), order);
  std::sort(test.rows.begin(), test.rows.end(), order);
  return {std::move(train), std::move(test)};
}

// Entrywise median; for an even count the mean of the two middle values.
// Used for visualization only.
inline CoherenceMatrix median_matrix(std::span<const CoherenceMatrix> matrices) {
  if (matrices.empty()) throw ConfigError("median_matrix: no matrices");
  const int g = matrices.front().gesture;
  for (const auto& m : matrices) {
    if (m.gesture != g) throw ConfigError("median_matrix: matrices come from different gestures");
  }
  CoherenceMatrix out;
  out.gesture = g;
  out.repetition = 0;
  std::vector<double> col(matrices.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    for (std::size_t i = 0; i < matrices.size(); ++i) col[i] = matrices[i].values[k];
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out.values[k] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return out;
}

// ---- serialization -----------------------------------------------------

// Leading "# key=value" lines carry run metadata; then a header row of pair
// names followed by gesture,repetition.
inline void write_feature_csv(std::ostream& out, const FeatureTable& t,
                              const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  for (const auto& name : column_names()) out << name << ',';
  out << "gesture,repetition\n";
  for (const auto& row : t.rows) {
    if (row.values.size() != kNumFeatures) throw ShapeError("feature row must have 132 values");
    for (double v : row.values) out << csv::format_double(v) << ',';
    out << row.gesture << ',' << row.repetition << '\n';
  }
}

struct FeatureFile {
  FeatureTable table;
  std::vector<std::pair<std::string, std::string>> metadata;
};

inline FeatureFile read_feature_csv(std::istream& in) {
  FeatureFile f;
  std::string line;
  std::vector<std::string> header;
  while (csv::getline_stripped(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("feature CSV: malformed metadata line '" + line + "'");
      f.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    header = csv::split_record(line);
    break;
  }
  auto expected = column_names();
  expected.push_back("gesture");
  expected.push_back("repetition");
  if (header != expected) throw FormatError("feature CSV: unexpected header");
  std::size_t row = 1 + f.metadata.size();
  while (csv::getline_stripped(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv::split_record(line);
    if (fields.size() != expected.size()) {
      throw FormatError("feature CSV row " + std::to_string(row) + ": wrong field count");
    }
    FeatureRow r;
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      const auto v = csv::parse_double(fields[k]);
      if (!v) throw FormatError("feature CSV row " + std::to_string(row) + ": bad number '" + fields[k] + "'");
      r.values.push_back(*v);
    }
    const auto g = csv::parse_double(fields[kNumFeatures]);
    const auto rep = csv::parse_double(fields[kNumFeatures + 1]);
    if (!g || !rep) throw FormatError("feature CSV row " + std::to_string(row) + ": bad labels");
    r.gesture = static_cast<int>(*g);
    r.repetition = static_cast<int>(*rep);
    f.table.rows.push_back(std::move(r));
  }
  return f;
}

inline void save_feature_csv(const std::string& path, const FeatureTable& t,
                             const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_feature_csv(out, t, metadata);
}

inline FeatureFile load_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_feature_csv(in);
}

}  // namespace cohnet
