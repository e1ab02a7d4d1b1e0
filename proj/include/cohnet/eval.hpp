#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohnet/error.hpp"

namespace cohnet::eval {

// counts[truth][pred], labels 1..num_classes
struct Confusion {
  std::size_t num_classes{0};
  std::vector<double> counts;

  explicit Confusion(std::size_t k = 0) : num_classes(k), counts(k * k, 0.0) {}
  double& at(std::size_t truth, std::size_t pred) { return counts[truth * num_classes + pred]; }
  double at(std::size_t truth, std::size_t pred) const { return counts[truth * num_classes + pred]; }

  double total() const {
    double s = 0.0;
    for (double v : counts) s += v;
    return s;
  }
  double row_sum(std::size_t t) const {
    double s = 0.0;
    for (std::size_t p = 0; p < num_classes; ++p) s += at(t, p);
    return s;
  }
  double col_sum(std::size_t p) const {
    double s = 0.0;
    for (std::size_t t = 0; t < num_classes; ++t) s += at(t, p);
    return s;
  }
  double trace() const {
    double s = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) s += at(c, c);
    return s;
  }
};

inline Confusion confusion(std::span<const int> predictions, std::span<const int> truths, std::size_t num_classes) {
  if (predictions.size() != truths.size()) throw ConfigError("confusion: prediction and truth counts differ");
  Confusion c(num_classes);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int t = truths[i], p = predictions[i];
    if (t < 1 || p < 1 || t > static_cast<int>(num_classes) || p > static_cast<int>(num_classes)) {
      throw ConfigError("confusion: label out of range 1.." + std::to_string(num_classes) + " at index " +
                        std::to_string(i));
    }
    c.at(static_cast<std::size_t>(t - 1), static_cast<std::size_t>(p - 1)) += 1.0;
  }
  return c;
}

// Entrywise mean over subjects.
inline Confusion mean_confusion(std::span<const Confusion> per_subject) {
  if (per_subject.empty()) throw ConfigError("mean_confusion: no matrices");
  Confusion m(per_subject.front().num_classes);
  for (const auto& c : per_subject) {
    if (c.num_classes != m.num_classes) throw ConfigError("mean_confusion: class counts differ");
    for (std::size_t k = 0; k < m.counts.size(); ++k) m.counts[k] += c.counts[k];
  }
  for (double& v : m.counts) v /= static_cast<double>(per_subject.size());
  return m;
}

struct ClassMetrics {
  double accuracy{0};  // per-class correct rate, equal to recall
  double precision{0};
  double recall{0};
  double f1{0};
  std::optional<double> auc;
  bool zero_division{false};  // a denominator was zero and the metric set to 0
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double accuracy{0};  // trace / total
  double macro_precision{0};
  double macro_recall{0};
  double macro_f1{0};
  double macro_class_accuracy{0};
  std::optional<double> macro_auc;  // over classes with defined AUC
};

// Unweighted means of the per-class rows; AUC over classes where defined.
inline void fill_macro(Metrics& m) {
  const double k = static_cast<double>(m.per_class.size());
  m.macro_precision = m.macro_recall = m.macro_f1 = m.macro_class_accuracy = 0.0;
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const auto& cm : m.per_class) {
    m.macro_precision += cm.precision / k;
    m.macro_recall += cm.recall / k;
    m.macro_f1 += cm.f1 / k;
    m.macro_class_accuracy += cm.accuracy / k;
    if (cm.auc) {
      auc_sum += *cm.auc;
      ++auc_n;
    }
  }
  m.macro_auc = auc_n ? std::optional<double>(auc_sum / static_cast<double>(auc_n)) : std::nullopt;
}

inline Metrics classification_metrics(const Confusion& c) {
  if (c.num_classes == 0 || c.total() <= 0.0) throw ConfigError("classification_metrics: empty confusion matrix");
  Metrics m;
  m.accuracy = c.trace() / c.total();
  for (std::size_t k = 0; k < c.num_classes; ++k) {
    ClassMetrics cm;
    const double tp = c.at(k, k);
    const double predicted = c.col_sum(k);
    const double actual = c.row_sum(k);
    if (predicted > 0) cm.precision = tp / predicted;
    else cm.zero_division = true;
    if (actual > 0) cm.recall = tp / actual;
    else cm.zero_division = true;
    if (cm.precision + cm.recall > 0) cm.f1 = 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
    else cm.zero_division = true;
    cm.accuracy = cm.recall;
    m.per_class.push_back(cm);
  }
  fill_macro(m);
  return m;
}

// One-vs-rest AUC by the Mann-Whitney statistic: the fraction of
// (positive, negative) pairs where the positive scores higher, ties counted
// as one half. Undefined without both positives and negatives.
inline std::optional<double> binary_auc(std::span<const double> scores, std::span<const int> truths,
                                        int positive_label) {
  if (scores.size() != truths.size()) throw ConfigError("auc: score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t t = i; t < j; ++t) {
      if (truths[order[t]] == positive_label) {
        pos_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

// scores[i][k]: score of sample i for class k (labels 1..K).
inline std::vector<std::optional<double>> roc_auc(const std::vector<std::vector<double>>& scores,
                                                  std::span<const int> truths, std::size_t num_classes) {
  if (scores.size() != truths.size()) throw ConfigError("roc_auc: score and truth counts differ");
  std::vector<std::optional<double>> out(num_classes);
  std::vector<double> col(scores.size());
  for (std::size_t k = 0; k < num_classes; ++k) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].size() != num_classes) throw ConfigError("roc_auc: score vector has wrong length");
      col[i] = scores[i][k];
    }
    out[k] = binary_auc(col, truths, static_cast<int>(k + 1));
  }
  return out;
}

inline void attach_auc(Metrics& m, const std::vector<std::optional<double>>& auc) {
  for (std::size_t k = 0; k < m.per_class.size() && k < auc.size(); ++k) m.per_class[k].auc = auc[k];
  fill_macro(m);
}

// Unweighted across-subject mean of per-subject metrics. A class's AUC is
// averaged over the subjects where it is defined.
inline Metrics mean_metrics(std::span<const Metrics> per_subject) {
  if (per_subject.empty()) throw ConfigError("mean_metrics: no subjects");
  const std::size_t k = per_subject.front().per_class.size();
  const double n = static_cast<double>(per_subject.size());
  Metrics out;
  out.per_class.resize(k);
  std::vector<double> auc_sum(k, 0.0);
  std::vector<std::size_t> auc_n(k, 0);
  double macro_auc_sum = 0.0;
  std::size_t macro_auc_n = 0;
  for (const auto& m : per_subject) {
    if (m.per_class.size() != k) throw ConfigError("mean_metrics: class counts differ");
    out.accuracy += m.accuracy / n;
    out.macro_precision += m.macro_precision / n;
    out.macro_recall += m.macro_recall / n;
    out.macro_f1 += m.macro_f1 / n;
    out.macro_class_accuracy += m.macro_class_accuracy / n;
    if (m.macro_auc) {
      macro_auc_sum += *m.macro_auc;
      ++macro_auc_n;
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto& cm = m.per_class[c];
      out.per_class[c].accuracy += cm.accuracy / n;
      out.per_class[c].precision += cm.precision / n;
      out.per_class[c].recall += cm.recall / n;
      out.per_class[c].f1 += cm.f1 / n;
      out.per_class[c].zero_division = out.per_class[c].zero_division || cm.zero_division;
      if (cm.auc) {
        auc_sum[c] += *cm.auc;
        ++auc_n[c];
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (auc_n[c]) out.per_class[c].auc = auc_sum[c] / static_cast<double>(auc_n[c]);
  }
  if (macro_auc_n) out.macro_auc = macro_auc_sum / static_cast<double>(macro_auc_n);
  return out;
}

}  // namespace cohnet::eval
