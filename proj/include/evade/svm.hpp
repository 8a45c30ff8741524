#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "evade/dataset.hpp"
#include "evade/errors.hpp"
#include "evade/kernel.hpp"
#include "evade/matrix.hpp"
#include "evade/parallel.hpp"

namespace evade {

struct TrainConfig {
  double cost = 1.0;        // box constraint C
  double tolerance = 1e-3;  // KKT slack
  std::size_t max_passes = 100000;  // pair updates before giving up
  std::size_t dense_gram_limit = 10000;  // full kernel matrix up to this n
  std::size_t lru_row_capacity = 1024;   // row cache beyond it
  unsigned n_threads = 1;                // kernel matrix build
};

// One-vs-rest models carry this sentinel as their negative class id.
constexpr int kRestClass = std::numeric_limits<int>::min();

struct SvmBinaryModel {
  Matrix support_vectors;          // n_sv x d
  std::vector<double> dual_coefs;  // alpha_i * y_i per support vector
  double bias = 0.0;
  KernelSpec kernel;
  double cost = 0.0;  // C the model was trained with
  int positive_class = 1;
  int negative_class = -1;
  std::size_t feature_count = 0;

  std::size_t n_sv() const { return support_vectors.rows; }
};

struct MulticlassModel {
  std::vector<int> classes;                      // ordered
  std::vector<SvmBinaryModel> per_class_models;  // classes[i] vs rest
  std::size_t feature_count = 0;

  const KernelSpec& kernel() const { return per_class_models.front().kernel; }
};

inline Matrix to_matrix(const Dataset& ds) {
  Matrix m(ds.size(), ds.feature_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto dst = m.row(i);
    std::copy(ds.samples[i].features.begin(), ds.samples[i].features.end(), dst.begin());
  }
  return m;
}

// Raw kernel rows K(x_i, .) over a fixed point set. Dense and precomputed when
// n fits dense_limit (then reads are lock-free and shareable across one-vs-all
// solves); otherwise rows are computed on demand behind an LRU. The LRU path
// is single-consumer.
class KernelCache {
public:
  KernelCache(const Matrix& points, KernelSpec spec, std::size_t dense_limit,
              std::size_t lru_capacity, unsigned n_threads = 1)
      : points_(points), spec_(spec), lru_capacity_(std::max<std::size_t>(lru_capacity, 2)) {
    const std::size_t n = points_.rows;
    if (n <= dense_limit) {
      dense_.assign(n * n, 0.0);
      parallel_for(0, n, n_threads, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const double v = kernel_eval(spec_, points_.row(i), points_.row(j));
          dense_[i * n + j] = v;
          dense_[j * n + i] = v;
        }
      });
    }
  }

  std::size_t size() const { return points_.rows; }
  bool dense() const { return !dense_.empty(); }

  const double* row(std::size_t i) {
    if (!dense_.empty()) return dense_.data() + i * points_.rows;
    auto it = lru_rows_.find(i);
    if (it != lru_rows_.end()) {
      lru_order_.splice(lru_order_.begin(), lru_order_, it->second.second);
      return it->second.first.data();
    }
    if (lru_rows_.size() >= lru_capacity_) {
      lru_rows_.erase(lru_order_.back());
      lru_order_.pop_back();
    }
    std::vector<double> values(points_.rows);
    for (std::size_t j = 0; j < points_.rows; ++j)
      values[j] = kernel_eval(spec_, points_.row(i), points_.row(j));
    lru_order_.push_front(i);
    auto [pos, inserted] =
        lru_rows_.emplace(i, std::make_pair(std::move(values), lru_order_.begin()));
    return pos->second.first.data();
  }

private:
  const Matrix& points_;
  KernelSpec spec_;
  std::vector<double> dense_;
  std::size_t lru_capacity_;
  std::list<std::size_t> lru_order_;
  std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>>
      lru_rows_;
};

struct SolveResult {
  std::vector<double> alphas;
  double bias = 0.0;
  std::size_t pair_updates = 0;
  double final_violation = 0.0;  // m_up - m_low at exit
  bool converged = false;
};

// Dual soft-margin solve by sequential minimal optimization with
// max-violating-pair selection. Labels are +-1. Terminates when the maximal
// KKT violation drops to tol, or errors out after max_passes pair updates.
inline SolveResult smo_solve(KernelCache& kernel_rows, std::span<const signed char> y,
                             double C, double tol, std::size_t max_passes) {
  const std::size_t n = y.size();
  SolveResult res;
  res.alphas.assign(n, 0.0);
  std::vector<double>& alpha = res.alphas;
  std::vector<double> g(n, -1.0);  // gradient of 1/2 a'Qa - 1'a at a=0

  const double snap = 1e-12 * std::max(1.0, C);
  while (true) {
    // max-violating pair
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    std::size_t i_up = n, i_low = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = -double(y[k]) * g[k];
      const bool up = (y[k] > 0) ? (alpha[k] < C) : (alpha[k] > 0.0);
      const bool low = (y[k] > 0) ? (alpha[k] > 0.0) : (alpha[k] < C);
      if (up && v > m_up) {
        m_up = v;
        i_up = k;
      }
      if (low && v < m_low) {
        m_low = v;
        i_low = k;
      }
    }
    res.final_violation = m_up - m_low;
    if (i_up == n || i_low == n || res.final_violation <= tol) {
      res.converged = true;
      break;
    }
    if (res.pair_updates >= max_passes)
      throw TrainError("SMO did not converge: KKT violation " +
                           std::to_string(res.final_violation) + " after " +
                           std::to_string(res.pair_updates) + " pair updates",
                       res.final_violation);

    const std::size_t i = i_up, j = i_low;
    const double* Ki = kernel_rows.row(i);
    const double* Kj = kernel_rows.row(j);
    double quad = Ki[i] + Kj[j] - 2.0 * Ki[j];
    if (quad <= 0.0) quad = 1e-12;

    // step along (y_i e_i - y_j e_j), clipped to the box
    const double unconstrained = res.final_violation / quad;
    const double room_i = (y[i] > 0) ? (C - alpha[i]) : alpha[i];
    const double room_j = (y[j] > 0) ? alpha[j] : (C - alpha[j]);
    const double t = std::min(unconstrained, std::min(room_i, room_j));
    if (!(t > 0.0))
      throw TrainError("SMO numerically stuck at KKT violation " +
                           std::to_string(res.final_violation),
                       res.final_violation);

    alpha[i] += double(y[i]) * t;
    alpha[j] -= double(y[j]) * t;
    for (std::size_t idx : {i, j}) {
      if (alpha[idx] < snap) alpha[idx] = 0.0;
      if (alpha[idx] > C - snap) alpha[idx] = C;
    }
    for (std::size_t k = 0; k < n; ++k)
      g[k] += t * double(y[k]) * (Ki[k] - Kj[k]);
    ++res.pair_updates;
  }

  // bias: mean of -y_i g_i over free vectors, else midpoint of the feasible
  // interval (both expressions follow from the KKT conditions)
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lb = -std::numeric_limits<double>::infinity();
  double ub = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double v = -double(y[k]) * g[k];
    if (alpha[k] > 0.0 && alpha[k] < C) {
      free_sum += v;
      ++free_count;
    } else if ((y[k] > 0 && alpha[k] == 0.0) || (y[k] < 0 && alpha[k] == C)) {
      lb = std::max(lb, v);
    } else {
      ub = std::min(ub, v);
    }
  }
  if (free_count > 0)
    res.bias = free_sum / double(free_count);
  else if (std::isfinite(lb) && std::isfinite(ub))
    res.bias = 0.5 * (lb + ub);
  else
    res.bias = std::isfinite(lb) ? lb : (std::isfinite(ub) ? ub : 0.0);
  return res;
}

// Dual objective 1'a - 1/2 a'Qa for a solved alpha vector.
inline double dual_objective(KernelCache& kernel_rows, std::span<const signed char> y,
                             std::span<const double> alpha) {
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    linear += alpha[i];
    const double* Ki = kernel_rows.row(i);
    for (std::size_t j = 0; j < alpha.size(); ++j)
      if (alpha[j] != 0.0)
        quad += alpha[i] * alpha[j] * double(y[i]) * double(y[j]) * Ki[j];
  }
  return linear - 0.5 * quad;
}

namespace detail {

// Builds the model from a solve: keep alpha_i > cut as support vectors. The
// cut follows the configured tolerance, but falls back to keeping every
// nonzero alpha if dropping the small ones would break sum(coefs) ~ 0.
inline SvmBinaryModel collect_model(const Matrix& points, std::span<const signed char> y,
                                    const SolveResult& solved, const KernelSpec& kernel,
                                    const TrainConfig& cfg, int positive_class,
                                    int negative_class) {
  const std::size_t n = y.size();
  auto gather = [&](double cut) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < n; ++k)
      if (solved.alphas[k] > cut) keep.push_back(k);
    return keep;
  };
  std::vector<std::size_t> keep = gather(cfg.tolerance);
  double coef_sum = 0.0;
  for (std::size_t k : keep) coef_sum += solved.alphas[k] * double(y[k]);
  if (std::abs(coef_sum) > cfg.tolerance) keep = gather(0.0);
  if (keep.empty()) keep = gather(0.0);
  if (keep.empty())
    throw TrainError("no support vectors: all dual coefficients are zero");

  SvmBinaryModel m;
  m.kernel = kernel;
  m.cost = cfg.cost;
  m.positive_class = positive_class;
  m.negative_class = negative_class;
  m.feature_count = points.cols;
  m.bias = solved.bias;
  m.support_vectors = Matrix(keep.size(), points.cols);
  m.dual_coefs.resize(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto src = points.row(keep[r]);
    std::copy(src.begin(), src.end(), m.support_vectors.row(r).begin());
    m.dual_coefs[r] = solved.alphas[keep[r]] * double(y[keep[r]]);
  }
  return m;
}

inline std::vector<signed char> binary_labels(const Dataset& ds, int positive) {
  std::vector<signed char> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    y[i] = (ds.samples[i].label == positive) ? +1 : -1;
  return y;
}

}  // namespace detail

// Trains classes[0] (+1) vs classes[1] (-1); the class order of the dataset
// fixes the label mapping so attack directions stay unambiguous.
inline SvmBinaryModel train_binary(const Dataset& ds, const KernelSpec& kernel,
                                   const TrainConfig& cfg) {
  if (ds.classes.size() != 2)
    throw TrainError("train_binary needs exactly two classes, got " +
                     std::to_string(ds.classes.size()));
  const int pos = ds.classes[0], neg = ds.classes[1];
  const std::size_t n_pos = ds.count_label(pos);
  if (n_pos == 0 || n_pos == ds.size())
    throw TrainError("single-class data: class " +
                     std::to_string(n_pos == 0 ? pos : neg) + " has no samples");

  const Matrix points = to_matrix(ds);
  KernelCache cache(points, kernel, cfg.dense_gram_limit, cfg.lru_row_capacity, cfg.n_threads);
  const auto y = detail::binary_labels(ds, pos);
  const SolveResult solved = smo_solve(cache, y, cfg.cost, cfg.tolerance, cfg.max_passes);
  return detail::collect_model(points, y, solved, kernel, cfg, pos, neg);
}

// --- decision function and its gradient -------------------------------------

inline double decision_value(const SvmBinaryModel& m, std::span<const double> x) {
  if (x.size() != m.feature_count)
    throw FormatError("decision_value: expected length " + std::to_string(m.feature_count) +
                      ", got " + std::to_string(x.size()));
  double f = m.bias;
  for (std::size_t i = 0; i < m.n_sv(); ++i)
    f += m.dual_coefs[i] * kernel_eval(m.kernel, m.support_vectors.row(i), x);
  return f;
}

// Analytic gradient of the decision function. For the RBF kernel the k-th
// component is sum_i 2*gamma*coef_i*(sv_i[k]-x[k])*exp(-gamma*||x-sv_i||^2);
// for the linear kernel it is the primal weight vector.
inline void decision_gradient_into(const SvmBinaryModel& m, std::span<const double> x,
                                   std::span<double> grad, double* value_out = nullptr) {
  if (x.size() != m.feature_count)
    throw FormatError("decision_gradient: expected length " + std::to_string(m.feature_count) +
                      ", got " + std::to_string(x.size()));
  std::fill(grad.begin(), grad.end(), 0.0);
  double f = m.bias;
  if (m.kernel.kind == KernelKind::Linear) {
    for (std::size_t i = 0; i < m.n_sv(); ++i) {
      const auto sv = m.support_vectors.row(i);
      const double c = m.dual_coefs[i];
      f += c * dot(sv, x);
      for (std::size_t k = 0; k < x.size(); ++k) grad[k] += c * sv[k];
    }
  } else {
    const double gamma = m.kernel.gamma;
    for (std::size_t i = 0; i < m.n_sv(); ++i) {
      const auto sv = m.support_vectors.row(i);
      const double w = m.dual_coefs[i] * std::exp(-gamma * squared_distance(x, sv));
      f += w;
      const double scale = 2.0 * gamma * w;
      for (std::size_t k = 0; k < x.size(); ++k) grad[k] += scale * (sv[k] - x[k]);
    }
  }
  if (value_out) *value_out = f;
}

inline std::vector<double> decision_gradient(const SvmBinaryModel& m,
                                             std::span<const double> x) {
  std::vector<double> grad(m.feature_count, 0.0);
  decision_gradient_into(m, x, grad);
  return grad;
}

// Threshold at 0; the boundary itself goes to the positive class, matching
// the lowest-index tie rule of the multiclass argmax.
inline int predict(const SvmBinaryModel& m, std::span<const double> x) {
  return decision_value(m, x) >= 0.0 ? m.positive_class : m.negative_class;
}

// --- one-vs-all multiclass ---------------------------------------------------

inline MulticlassModel train_multiclass(const Dataset& ds, const KernelSpec& kernel,
                                        const TrainConfig& cfg, unsigned n_threads = 1) {
  if (ds.classes.size() < 3)
    throw TrainError("train_multiclass needs at least three classes, got " +
                     std::to_string(ds.classes.size()));
  const Matrix points = to_matrix(ds);
  const bool share_cache = points.rows <= cfg.dense_gram_limit;

  MulticlassModel model;
  model.classes = ds.classes;
  model.feature_count = ds.feature_count;
  model.per_class_models.resize(ds.classes.size());

  // the raw kernel matrix is label-free, so one dense cache serves every
  // one-vs-rest problem
  KernelCache shared(points, kernel, share_cache ? cfg.dense_gram_limit : 0,
                     cfg.lru_row_capacity, n_threads);

  std::vector<std::string> failures(ds.classes.size());
  parallel_for(0, ds.classes.size(), n_threads, [&](std::size_t ci) {
    const int cls = ds.classes[ci];
    try {
      const auto y = detail::binary_labels(ds, cls);
      if (ds.count_label(cls) == 0 || ds.count_label(cls) == ds.size())
        throw TrainError("single-class data");
      SolveResult solved;
      if (share_cache) {
        solved = smo_solve(shared, y, cfg.cost, cfg.tolerance, cfg.max_passes);
      } else {
        KernelCache own(points, kernel, 0, cfg.lru_row_capacity);
        solved = smo_solve(own, y, cfg.cost, cfg.tolerance, cfg.max_passes);
      }
      model.per_class_models[ci] =
          detail::collect_model(points, y, solved, kernel, cfg, cls, kRestClass);
    } catch (const Error& e) {
      failures[ci] = e.what();
    }
  });
  for (std::size_t ci = 0; ci < ds.classes.size(); ++ci)
    if (!failures[ci].empty())
      throw TrainError("class " + std::to_string(ds.classes[ci]) + ": " + failures[ci]);
  return model;
}

inline std::vector<double> class_scores(const MulticlassModel& m, std::span<const double> x) {
  std::vector<double> scores(m.per_class_models.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores[i] = decision_value(m.per_class_models[i], x);
  return scores;
}

// argmax with ties broken by the lowest index
inline std::size_t argmax_score(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

// index of the runner-up (highest score outside `exclude`), ties to lowest index
inline std::size_t runner_up_score(std::span<const double> scores, std::size_t exclude) {
  std::size_t best = exclude == 0 ? 1 : 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == exclude) continue;
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

inline int predict(const MulticlassModel& m, std::span<const double> x) {
  const auto scores = class_scores(m, x);
  return m.classes[argmax_score(scores)];
}

template <typename ModelT>
double model_accuracy(const ModelT& m, const Dataset& test) {
  if (test.samples.empty()) throw EmptyWorkError("empty test set");
  std::size_t hits = 0;
  for (const auto& s : test.samples)
    hits += (predict(m, s.features) == s.label) ? 1 : 0;
  return 100.0 * double(hits) / double(test.size());
}

}  // namespace evade
