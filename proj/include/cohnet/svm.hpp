#pragma once

// Soft-margin kernel SVM: SMO dual solver with maximal-violating-pair
// working-set selection, one-vs-one (or one-vs-rest) multiclass wrapper,
// and stratified k-fold grid search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cohnet/dsp.hpp"
#include "cohnet/error.hpp"
#include "cohnet/netfeat.hpp"
#include "cohnet/parallel.hpp"
#include "cohnet/random.hpp"
#include "json.hpp"

namespace cohnet::svm {

enum class KernelKind { kPolynomial, kRbf };
enum class Multiclass { kOneVsOne, kOneVsRest };

struct HyperParams {
  KernelKind kernel{KernelKind::kPolynomial};
  int degree{2};
  double C{10.0};
  // gamma <= 0 selects 1 / (n_features * variance of the training matrix)
  double gamma{0.0};
  double coef0{0.0};
  double tolerance{1e-6};
  std::size_t max_iterations{200000};
  Multiclass multiclass{Multiclass::kOneVsOne};

  bool operator==(const HyperParams&) const = default;
};

inline void validate(const HyperParams& p) {
  if (!(p.C > 0.0)) throw ConfigError("svm: C must be positive");
  if (p.degree < 1) throw ConfigError("svm: kernel degree must be >= 1");
  if (!(p.tolerance > 0.0)) throw ConfigError("svm: tolerance must be positive");
  if (p.max_iterations == 0) throw ConfigError("svm: max_iterations must be positive");
}

struct Kernel {
  KernelKind kind{KernelKind::kPolynomial};
  int degree{2};
  double gamma{1.0};
  double coef0{0.0};

  double operator()(std::span<const double> u, std::span<const double> v) const {
    if (u.size() != v.size()) {
      throw ShapeError("kernel: vector lengths differ (" + std::to_string(u.size()) + " vs " +
                       std::to_string(v.size()) + ")");
    }
    if (kind == KernelKind::kRbf) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) d2 += (u[i] - v[i]) * (u[i] - v[i]);
      return std::exp(-gamma * d2);
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    const double base = gamma * dot + coef0;
    double r = 1.0;
    for (int k = 0; k < degree; ++k) r *= base;
    return r;
  }
};

// (gamma <u, v> + coef0)^degree
inline double poly_kernel(std::span<const double> u, std::span<const double> v, double gamma,
                          double coef0, int degree) {
  return Kernel{KernelKind::kPolynomial, degree, gamma, coef0}(u, v);
}

using Matrix = std::vector<std::vector<double>>;

inline double auto_gamma(const Matrix& x) {
  if (x.empty() || x.front().empty()) return 1.0;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : x) {
    for (double v : row) sum += v;
    n += row.size();
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& row : x) {
    for (double v : row) ss += (v - mean) * (v - mean);
  }
  const double var = ss / static_cast<double>(n);
  return var > 0.0 ? 1.0 / (static_cast<double>(x.front().size()) * var) : 1.0;
}

inline Kernel make_kernel(const HyperParams& p, const Matrix& train) {
  return {p.kernel, p.degree, p.gamma > 0.0 ? p.gamma : auto_gamma(train), p.coef0};
}

struct BinaryModel {
  int positive_class{+1};
  int negative_class{-1};
  Matrix support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i
  double bias{0.0};               // f(x) = sum dual_coef_i K(sv_i, x) + bias
  bool converged{false};
  std::size_t iterations{0};

  bool operator==(const BinaryModel&) const = default;
};

inline double decision(const BinaryModel& m, const Kernel& k, std::span<const double> x) {
  double f = m.bias;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i) f += m.dual_coef[i] * k(m.support_vectors[i], x);
  return f;
}

struct SmoResult {
  BinaryModel model;
  std::vector<double> alpha;             // one per training row
  double objective{0.0};                 // dual objective at termination
  std::vector<double> objective_history;  // filled when requested
};

struct SmoOptions {
  double C{10.0};
  double tolerance{1e-6};
  std::size_t max_iterations{200000};
  bool record_objective{false};
};

// Solves  max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij  s.t. 0 <= a <= C,
// sum a_i y_i = 0. Labels must be +1/-1. Stops when the maximal KKT
// violation m(a) - M(a) drops below tolerance or the iteration cap is hit
// (model.converged = false).
inline SmoResult smo_train(const Matrix& x, std::span<const int> y, const Kernel& kernel,
                           const SmoOptions& opt) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ShapeError("smo: label count differs from row count");
  if (!(opt.C > 0.0)) throw ConfigError("smo: C must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw ConfigError("smo: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw ConfigError("smo: training set needs examples of both classes");

  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = y[i] * y[j] * kernel(x[i], x[j]);
      q[i * n + j] = v;
      q[j * n + i] = v;
    }
  }
  const double c = opt.C;
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto objective = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (1.0 - grad[t]);
    return 0.5 * s;
  };
  auto in_up = [&](std::size_t t) { return y[t] == 1 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c; };

  SmoResult res;
  if (opt.record_objective) res.objective_history.push_back(0.0);
  std::size_t iter = 0;
  bool converged = false;
  for (; iter < opt.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < opt.tolerance) {
      converged = true;
      break;
    }

    const double ai_old = alpha[i], aj_old = alpha[j];
    const double qii = q[i * n + i], qjj = q[j * n + j], qij = q[i * n + j];
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = 1e-12;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    alpha[i] = std::clamp(alpha[i], 0.0, c);
    alpha[j] = std::clamp(alpha[j], 0.0, c);

    const double di = alpha[i] - ai_old, dj = alpha[j] - aj_old;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
    if (opt.record_objective) res.objective_history.push_back(objective());
  }

  // bias from free vectors, else the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  res.model.bias = -rho;
  res.model.converged = converged;
  res.model.iterations = iter;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      res.model.support_vectors.push_back(x[t]);
      res.model.dual_coef.push_back(alpha[t] * y[t]);
    }
  }
  res.objective = objective();
  res.alpha = std::move(alpha);
  return res;
}

// Largest violation of the KKT conditions expressed on the training
// margins y_i f(x_i):
//   a_i = 0      =>  y f >= 1
//   0 < a_i < C  =>  y f == 1
//   a_i = C      =>  y f <= 1
inline double kkt_residual(const SmoResult& r, const Matrix& x, std::span<const int> y,
                           const Kernel& kernel, double C) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double margin = y[i] * decision(r.model, kernel, x[i]);
    double v;
    if (r.alpha[i] <= 0.0) v = std::max(0.0, 1.0 - margin);
    else if (r.alpha[i] >= C) v = std::max(0.0, margin - 1.0);
    else v = std::abs(margin - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

// ---- multiclass --------------------------------------------------------

struct TrainedModel {
  static constexpr int kFormatVersion = 1;

  HyperParams params;  // gamma resolved (never <= 0 here)
  Kernel kernel;
  std::vector<int> classes;  // ascending
  // OvO: pairs (classes[a], classes[b]) for a < b in lexicographic order,
  // classes[a] is the +1 side. OvR: one model per class, class is +1.
  std::vector<BinaryModel> models;
  std::size_t num_features{0};
  std::vector<std::string> feature_columns;
  std::optional<dsp::ChannelStats> channel_stats;

  std::size_t non_converged() const {
    std::size_t n = 0;
    for (const auto& m : models) n += m.converged ? 0 : 1;
    return n;
  }

  bool operator==(const TrainedModel& o) const {
    return params == o.params && classes == o.classes && models == o.models &&
           num_features == o.num_features && feature_columns == o.feature_columns &&
           channel_stats == o.channel_stats && kernel.kind == o.kernel.kind &&
           kernel.degree == o.kernel.degree && kernel.gamma == o.kernel.gamma &&
           kernel.coef0 == o.kernel.coef0;
  }
};

inline std::size_t class_index(const std::vector<int>& classes, int label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) throw ConfigError("unknown class " + std::to_string(label));
  return static_cast<std::size_t>(it - classes.begin());
}

inline TrainedModel ovo_train(const FeatureTable& table, const HyperParams& params,
                              std::size_t workers = 1) {
  validate(params);
  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < table.rows.size(); ++i) rows_of[table.rows[i].gesture].push_back(i);
  if (rows_of.size() < 2) throw ConfigError("svm: need at least two classes to train");
  const std::size_t nf = table.num_features();
  for (const auto& r : table.rows) {
    if (r.values.size() != nf) throw ShapeError("svm: ragged feature table");
  }

  Matrix all;
  all.reserve(table.rows.size());
  for (const auto& r : table.rows) all.push_back(r.values);

  TrainedModel model;
  model.kernel = make_kernel(params, all);
  model.params = params;
  model.params.gamma = model.kernel.gamma;
  model.num_features = nf;
  if (nf == kNumFeatures) model.feature_columns = column_names();
  for (const auto& [cls, _] : rows_of) model.classes.push_back(cls);

  const SmoOptions opt{params.C, params.tolerance, params.max_iterations, false};
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  const std::size_t k = model.classes.size();
  if (params.multiclass == Multiclass::kOneVsOne) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) jobs.emplace_back(a, b);
    }
  } else {
    for (std::size_t a = 0; a < k; ++a) jobs.emplace_back(a, k);
  }
  model.models.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t job) {
    const auto [a, b] = jobs[job];
    Matrix x;
    std::vector<int> y;
    if (b < k) {
      for (std::size_t i : rows_of.at(model.classes[a])) {
        x.push_back(table.rows[i].values);
        y.push_back(1);
      }
      for (std::size_t i : rows_of.at(model.classes[b])) {
        x.push_back(table.rows[i].values);
        y.push_back(-1);
      }
    } else {
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        x.push_back(table.rows[i].values);
        y.push_back(table.rows[i].gesture == model.classes[a] ? 1 : -1);
      }
    }
    auto r = smo_train(x, y, model.kernel, opt);
    r.model.positive_class = model.classes[a];
    r.model.negative_class = b < k ? model.classes[b] : 0;
    model.models[job] = std::move(r.model);
  });
  return model;
}

struct Prediction {
  int label{0};
  std::vector<int> votes;           // per class (OvO); zero for OvR
  std::vector<double> margin_sums;  // per class, signed towards the class
  // Ranking score per class, used for AUC. OvO: votes + atan(margin)/pi,
  // which orders by votes and breaks ties by margin. OvR: decision value.
  std::vector<double> scores;
};

// OvO: majority vote; ties go to the larger summed margin, then to the
// smaller class label.
inline Prediction predict(const TrainedModel& m, std::span<const double> x) {
  if (x.size() != m.num_features) {
    throw ShapeError("predict: feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(m.num_features));
  }
  const std::size_t k = m.classes.size();
  Prediction p;
  p.votes.assign(k, 0);
  p.margin_sums.assign(k, 0.0);
  p.scores.assign(k, 0.0);
  if (m.params.multiclass == Multiclass::kOneVsOne) {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b, ++idx) {
        const double f = decision(m.models[idx], m.kernel, x);
        ++p.votes[f > 0 ? a : b];
        p.margin_sums[a] += f;
        p.margin_sums[b] -= f;
      }
    }
    std::size_t best = 0;
    for (std::size_t c = 0; c < k; ++c) {
      p.scores[c] = p.votes[c] + std::atan(p.margin_sums[c]) / std::numbers::pi;
      if (p.votes[c] > p.votes[best] ||
          (p.votes[c] == p.votes[best] && p.margin_sums[c] > p.margin_sums[best])) {
        best = c;
      }
    }
    p.label = m.classes[best];
  } else {
    std::size_t best = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double f = decision(m.models[c], m.kernel, x);
      p.margin_sums[c] = f;
      p.scores[c] = f;
      if (f > p.scores[best]) best = c;
    }
    p.label = m.classes[best];
  }
  return p;
}

// ---- cross-validated grid search ----------------------------------------

// Per class: shuffle that class's rows (seeded), then deal them round-robin
// into folds. Returns the fold index of every row.
inline std::vector<std::size_t> stratified_folds(const FeatureTable& table, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cv: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < table.rows.size(); ++i) rows_of[table.rows[i].gesture].push_back(i);
  std::vector<std::size_t> fold(table.rows.size(), 0);
  SplitMix64 rng(seed);
  for (auto& [cls, rows] : rows_of) {
    if (rows.size() < folds) {
      throw ConfigError("cv: class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                        " rows, fewer than " + std::to_string(folds) + " folds");
    }
    for (std::size_t i = rows.size() - 1; i > 0; --i) {
      std::swap(rows[i], rows[rng.below(i + 1)]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % folds;
  }
  return fold;
}

struct Grid {
  std::vector<int> degrees{1, 2, 3};
  std::vector<double> C{0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma{0.0};  // 0 = automatic
  std::vector<double> coef0{0.0, 1.0};

  bool operator==(const Grid&) const = default;
};

struct GridPointResult {
  HyperParams params;
  std::vector<double> fold_accuracy;
  double mean_accuracy{0.0};
};

struct GridSearchResult {
  HyperParams best;
  std::vector<GridPointResult> points;
};

inline double accuracy(const TrainedModel& m, const FeatureTable& t) {
  if (t.rows.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : t.rows) ok += predict(m, r.values).label == r.gesture ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(t.rows.size());
}

// Highest mean validation accuracy wins; ties go to lower degree, then lower
// C, then earlier gamma/coef0 in grid order.
inline GridSearchResult grid_search_cv(const FeatureTable& table, const Grid& grid, const HyperParams& base,
                                       std::size_t folds = 3, std::uint64_t seed = 0,
                                       std::size_t workers = 1) {
  if (grid.degrees.empty() || grid.C.empty() || grid.gamma.empty() || grid.coef0.empty()) {
    throw ConfigError("grid search: every grid axis needs at least one value");
  }
  const auto fold = stratified_folds(table, folds, seed);
  std::vector<FeatureTable> train_parts(folds), val_parts(folds);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      (fold[i] == f ? val_parts[f] : train_parts[f]).rows.push_back(table.rows[i]);
    }
  }

  GridSearchResult res;
  for (int d : grid.degrees) {
    for (double c : grid.C) {
      for (double g : grid.gamma) {
        for (double c0 : grid.coef0) {
          HyperParams p = base;
          p.degree = d;
          p.C = c;
          p.gamma = g;
          p.coef0 = c0;
          validate(p);
          res.points.push_back({p, std::vector<double>(folds, 0.0), 0.0});
        }
      }
    }
  }
  parallel_for(res.points.size() * folds, workers, [&](std::size_t job) {
    auto& pt = res.points[job / folds];
    const std::size_t f = job % folds;
    const auto m = ovo_train(train_parts[f], pt.params);
    pt.fold_accuracy[f] = accuracy(m, val_parts[f]);
  });
  const GridPointResult* best = nullptr;
  for (auto& pt : res.points) {
    double s = 0.0;
    for (double a : pt.fold_accuracy) s += a;
    pt.mean_accuracy = s / static_cast<double>(folds);
    if (!best || pt.mean_accuracy > best->mean_accuracy ||
        (pt.mean_accuracy == best->mean_accuracy &&
         std::pair(pt.params.degree, pt.params.C) < std::pair(best->params.degree, best->params.C))) {
      best = &pt;
    }
  }
  res.best = best->params;
  return res;
}

// ---- serialization -----------------------------------------------------

inline const char* kernel_name(KernelKind k) { return k == KernelKind::kRbf ? "rbf" : "polynomial"; }
inline KernelKind parse_kernel(const std::string& s) {
  if (s == "polynomial" || s == "poly") return KernelKind::kPolynomial;
  if (s == "rbf") return KernelKind::kRbf;
  throw ConfigError("unknown kernel '" + s + "'");
}
inline const char* multiclass_name(Multiclass m) { return m == Multiclass::kOneVsRest ? "ovr" : "ovo"; }
inline Multiclass parse_multiclass(const std::string& s) {
  if (s == "ovo") return Multiclass::kOneVsOne;
  if (s == "ovr") return Multiclass::kOneVsRest;
  throw ConfigError("unknown multiclass strategy '" + s + "'");
}

inline nlohmann::json to_json(const HyperParams& p) {
  return {{"kernel", kernel_name(p.kernel)}, {"degree", p.degree},     {"C", p.C},
          {"gamma", p.gamma},                {"coef0", p.coef0},       {"tolerance", p.tolerance},
          {"max_iterations", p.max_iterations}, {"multiclass", multiclass_name(p.multiclass)}};
}

inline HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams p = {}) {
  if (j.contains("kernel")) p.kernel = parse_kernel(j.at("kernel").get<std::string>());
  if (j.contains("degree")) p.degree = j.at("degree").get<int>();
  if (j.contains("C")) p.C = j.at("C").get<double>();
  if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
  if (j.contains("coef0")) p.coef0 = j.at("coef0").get<double>();
  if (j.contains("tolerance")) p.tolerance = j.at("tolerance").get<double>();
  if (j.contains("max_iterations")) p.max_iterations = j.at("max_iterations").get<std::size_t>();
  if (j.contains("multiclass")) p.multiclass = parse_multiclass(j.at("multiclass").get<std::string>());
  return p;
}

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& b : m.models) {
    models.push_back({{"positive_class", b.positive_class},
                      {"negative_class", b.negative_class},
                      {"bias", b.bias},
                      {"converged", b.converged},
                      {"iterations", b.iterations},
                      {"dual_coef", b.dual_coef},
                      {"support_vectors", b.support_vectors}});
  }
  nlohmann::json j = {{"format", "cohnet-svm-model"},
                      {"format_version", TrainedModel::kFormatVersion},
                      {"hyperparams", to_json(m.params)},
                      {"kernel", {{"kind", kernel_name(m.kernel.kind)},
                                  {"degree", m.kernel.degree},
                                  {"gamma", m.kernel.gamma},
                                  {"coef0", m.kernel.coef0}}},
                      {"classes", m.classes},
                      {"num_features", m.num_features},
                      {"feature_columns", m.feature_columns},
                      {"models", models}};
  if (m.channel_stats) {
    j["channel_stats"] = {{"mean", m.channel_stats->mean}, {"std", m.channel_stats->stddev}};
  } else {
    j["channel_stats"] = nullptr;
  }
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "cohnet-svm-model") throw FormatError("not a cohnet model file");
  const int version = j.at("format_version").get<int>();
  if (version != TrainedModel::kFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  TrainedModel m;
  m.params = hyperparams_from_json(j.at("hyperparams"));
  const auto& k = j.at("kernel");
  m.kernel = {parse_kernel(k.at("kind").get<std::string>()), k.at("degree").get<int>(),
              k.at("gamma").get<double>(), k.at("coef0").get<double>()};
  m.classes = j.at("classes").get<std::vector<int>>();
  m.num_features = j.at("num_features").get<std::size_t>();
  m.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  for (const auto& b : j.at("models")) {
    BinaryModel bm;
    bm.positive_class = b.at("positive_class").get<int>();
    bm.negative_class = b.at("negative_class").get<int>();
    bm.bias = b.at("bias").get<double>();
    bm.converged = b.at("converged").get<bool>();
    bm.iterations = b.at("iterations").get<std::size_t>();
    bm.dual_coef = b.at("dual_coef").get<std::vector<double>>();
    bm.support_vectors = b.at("support_vectors").get<Matrix>();
    if (bm.dual_coef.size() != bm.support_vectors.size()) throw FormatError("model: coefficient count mismatch");
    m.models.push_back(std::move(bm));
  }
  const std::size_t k_cls = m.classes.size();
  const std::size_t expected = m.params.multiclass == Multiclass::kOneVsOne ? k_cls * (k_cls - 1) / 2 : k_cls;
  if (m.models.size() != expected) throw FormatError("model: wrong number of binary models");
  if (!j.at("channel_stats").is_null()) {
    dsp::ChannelStats s;
    s.mean = j.at("channel_stats").at("mean").get<std::array<double, kNumChannels>>();
    s.stddev = j.at("channel_stats").at("std").get<std::array<double, kNumChannels>>();
    m.channel_stats = s;
  }
  return m;
}

inline void save_model(const std::string& path, const TrainedModel& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json(m).dump(1) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace cohnet::svm
