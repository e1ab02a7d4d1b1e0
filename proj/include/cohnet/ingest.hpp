#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "cohnet/datamodel.hpp"
#include "cohnet/error.hpp"
#include "cohnet/mat.hpp"

namespace cohnet {

struct Db2Fields {
  std::string emg{"emg"};
  // First name present wins. Rectified streams come first.
  std::vector<std::string> stimulus{"restimulus", "stimulus"};
  std::vector<std::string> repetition{"rerepetition", "repetition"};
  std::string subject{"subject"};
};

namespace detail {

inline const mat::MatVariable& pick(const mat::MatFile& file, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (const auto* v = file.find(n)) return *v;
  }
  std::string joined;
  for (const auto& n : names) joined += (joined.empty() ? "" : "|") + n;
  throw MissingFieldError(joined);
}

inline std::vector<int> label_stream(const mat::MatVariable& v, std::size_t expected) {
  if (v.numel() != expected || (v.rows() != 1 && v.cols() != 1 && expected > 1)) {
    throw ShapeError("label stream '" + v.name + "' has " + std::to_string(v.numel()) +
                     " values, expected a vector of " + std::to_string(expected));
  }
  std::vector<int> out(v.data.size());
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    const double x = v.data[i];
    if (x != std::floor(x)) {
      throw DataError("label stream '" + v.name + "' has non-integer value at sample " +
                      std::to_string(i));
    }
    out[i] = static_cast<int>(x);
  }
  return out;
}

}  // namespace detail

// Maps the variables of a DB2 subject file onto a SubjectDataset. Integer EMG
// storage is cast directly; scale is irrelevant after z-scoring.
inline SubjectDataset load_db2_subject(const mat::MatFile& file, int subject_id = 0,
                                       const Db2Fields& fields = {}) {
  const auto* emg = file.find(fields.emg);
  if (!emg) throw MissingFieldError(fields.emg);
  if (emg->shape.size() != 2 || emg->cols() != kNumChannels) {
    throw ShapeError("'" + fields.emg + "' must be T x " + std::to_string(kNumChannels) +
                     ", got " + std::to_string(emg->rows()) + " x " + std::to_string(emg->cols()));
  }
  const std::size_t t = emg->rows();
  SubjectDataset ds;
  ds.subject_id = subject_id;
  if (const auto* s = file.find(fields.subject); s && subject_id == 0 && s->numel() == 1) {
    ds.subject_id = static_cast<int>(s->data[0]);
  }
  ds.stimulus = detail::label_stream(detail::pick(file, fields.stimulus), t);
  ds.repetition = detail::label_stream(detail::pick(file, fields.repetition), t);
  ds.channels.resize(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    ds.channels[c].sample_rate_hz = kDb2SampleRateHz;
    ds.channels[c].samples.assign(emg->data.begin() + static_cast<std::ptrdiff_t>(c * t),
                                  emg->data.begin() + static_cast<std::ptrdiff_t>((c + 1) * t));
  }
  validate(ds);
  return ds;
}

inline SubjectDataset load_db2_subject(const std::string& path, int subject_id = 0,
                                       const Db2Fields& fields = {}) {
  return load_db2_subject(mat::load_mat(path), subject_id, fields);
}

// ---- CSV ---------------------------------------------------------------

struct CsvSchema {
  std::vector<std::string> channel_columns{"ch1", "ch2", "ch3", "ch4",  "ch5",  "ch6",
                                           "ch7", "ch8", "ch9", "ch10", "ch11", "ch12"};
  std::string stimulus_column{"stimulus"};
  std::string repetition_column{"repetition"};
  double sample_rate_hz{kDb2SampleRateHz};
};

namespace csv {

// Splits one RFC-4180 record (no embedded newlines).
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace csv

inline SubjectDataset read_csv(std::istream& in, int subject_id = 0, const CsvSchema& schema = {}) {
  std::string line;
  if (!csv::getline_stripped(in, line)) throw FormatError("CSV is empty (header row required)");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = csv::split_record(line);
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw MissingFieldError(name);
  };
  std::vector<std::size_t> ch_idx;
  for (const auto& name : schema.channel_columns) ch_idx.push_back(column(name));
  if (ch_idx.size() != kNumChannels) {
    throw ShapeError("CSV schema must name " + std::to_string(kNumChannels) + " channel columns");
  }
  const std::size_t stim_idx = column(schema.stimulus_column);
  const std::size_t rep_idx = column(schema.repetition_column);

  SubjectDataset ds;
  ds.subject_id = subject_id;
  ds.channels.resize(kNumChannels);
  for (auto& ch : ds.channels) ch.sample_rate_hz = schema.sample_rate_hz;

  std::size_t row = 1;  // header is row 1
  while (csv::getline_stripped(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split_record(line);
    if (f.size() != header.size()) {
      throw FormatError("CSV row " + std::to_string(row) + ": " + std::to_string(f.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    auto number = [&](std::size_t idx) {
      const auto v = csv::parse_double(f[idx]);
      if (!v) {
        throw FormatError("CSV row " + std::to_string(row) + ", column '" + header[idx] +
                          "': not a number: '" + f[idx] + "'");
      }
      return *v;
    };
    for (std::size_t c = 0; c < kNumChannels; ++c) ds.channels[c].samples.push_back(number(ch_idx[c]));
    auto label = [&](std::size_t idx) {
      const double v = number(idx);
      if (v != std::floor(v)) {
        throw FormatError("CSV row " + std::to_string(row) + ", column '" + header[idx] +
                          "': label must be an integer");
      }
      return static_cast<int>(v);
    };
    ds.stimulus.push_back(label(stim_idx));
    ds.repetition.push_back(label(rep_idx));
  }
  validate(ds);
  return ds;
}

inline SubjectDataset load_csv(const std::string& path, int subject_id = 0,
                               const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_csv(in, subject_id, schema);
}

inline void write_csv(std::ostream& out, const SubjectDataset& ds, const CsvSchema& schema = {}) {
  validate(ds);
  for (const auto& name : schema.channel_columns) out << name << ',';
  out << schema.stimulus_column << ',' << schema.repetition_column << '\n';
  for (std::size_t i = 0; i < ds.num_samples(); ++i) {
    for (const auto& ch : ds.channels) out << csv::format_double(ch.samples[i]) << ',';
    out << ds.stimulus[i] << ',' << ds.repetition[i] << '\n';
  }
}

inline void save_csv(const std::string& path, const SubjectDataset& ds, const CsvSchema& schema = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_csv(out, ds, schema);
}

}  // namespace cohnet
