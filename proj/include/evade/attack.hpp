#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "evade/dataset.hpp"
#include "evade/errors.hpp"
#include "evade/matrix.hpp"
#include "evade/svm.hpp"

namespace evade {

enum class AttackMode { Descent, Quotient };
enum class AttackObjective { Evasion, Mimicry };
enum class AttackOutcome { Success, StepLimit, BudgetExceeded, Stalled, Degenerate };

inline const char* outcome_name(AttackOutcome o) {
  switch (o) {
    case AttackOutcome::Success: return "success";
    case AttackOutcome::StepLimit: return "step_limit";
    case AttackOutcome::BudgetExceeded: return "budget_exceeded";
    case AttackOutcome::Stalled: return "stalled";
    case AttackOutcome::Degenerate: return "degenerate";
  }
  return "unknown";
}

struct AttackConfig {
  int max_steps = 30;
  double eta = 1.0 / 255.0;  // unit feature change; see default_eta()
  double band_lo = 5.0;      // step band multipliers: eps_t * max|grad| in sqrt(t)*[lo,hi]*eta
  double band_hi = 10.0;
  std::optional<double> l1_budget;    // strict: ||delta||_1 < B1
  std::optional<double> linf_budget;  // strict: ||delta||_inf < Binf
  bool clip_to_range = false;
  std::optional<Interval> clip_range;
  AttackMode mode = AttackMode::Descent;
  AttackObjective objective = AttackObjective::Evasion;
  int target_class = 0;  // mimicry only

  void validate() const {
    if (max_steps < 1) throw FormatError("attack config: max_steps must be >= 1");
    if (!(eta > 0.0)) throw FormatError("attack config: eta must be positive");
    if (!(band_lo < band_hi))
      throw FormatError("attack config: band lower bound must be below upper bound");
    if (l1_budget && !(*l1_budget > 0.0))
      throw FormatError("attack config: l1 budget must be positive");
    if (linf_budget && !(*linf_budget > 0.0))
      throw FormatError("attack config: linf budget must be positive");
    if (clip_to_range && !clip_range)
      throw FormatError("attack config: clip_to_range requires a feature range");
  }
};

// Unit feature change for a dataset scaled to the given range: one 8-bit pixel
// step for image-style ranges (1/255 on [0,1], 2/255 on [-1,1]).
inline double default_eta(const Interval& range) { return range.span() / 255.0; }

// Full attack record. Row 0 of `iterates` is the starting point; each later
// row is one accepted step. `predicted_labels` / score columns are evaluated
// on the attacked model (the surrogate, for transfer attacks); transfer
// attacks additionally fill `target_labels` with the target model's label at
// every iterate. Every attack stops at the first iterate satisfying its
// success predicate, so `final_label` always reflects the outcome.
struct AttackTrace {
  Matrix iterates;
  std::vector<double> step_sizes;        // eps_t per accepted step
  std::vector<int> predicted_labels;     // one per iterate
  std::vector<double> top_scores;        // best class score per iterate (binary: f)
  std::vector<double> runner_up_scores;  // second-best per iterate (binary: -f)
  std::vector<int> target_labels;        // transfer attacks only
  std::vector<double> perturbation;      // x_T - x_0
  double l1_change = 0.0;
  double linf_change = 0.0;
  AttackOutcome outcome = AttackOutcome::Stalled;
  int steps_used = 0;
  int initial_label = 0;
  int final_label = 0;
};

// Midpoint-of-band step size from Algorithm 1: eps_t = mid * eta * sqrt(t) / max|grad|.
// A vanished (or non-finite) gradient yields no step; the caller stalls.
inline std::optional<double> step_size(int t, std::span<const double> gradient, double eta,
                                       double band_lo, double band_hi) {
  double max_abs = 0.0;
  for (double g : gradient) {
    if (!std::isfinite(g)) return std::nullopt;
    max_abs = std::max(max_abs, std::abs(g));
  }
  if (!(max_abs > 0.0)) return std::nullopt;
  const double mid = 0.5 * (band_lo + band_hi);
  const double eps = mid * eta * std::sqrt(static_cast<double>(t)) / max_abs;
  if (!std::isfinite(eps) || !(eps > 0.0)) return std::nullopt;
  return eps;
}

// Strict budget test from Problem (4): a candidate complies only while
// ||delta||_1 < B1 and ||delta||_inf < Binf; equality already breaches.
inline bool budgets_breached(std::span<const double> candidate, std::span<const double> x0,
                             const AttackConfig& cfg) {
  if (!cfg.l1_budget && !cfg.linf_budget) return false;
  double l1 = 0.0, linf = 0.0;
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    const double d = std::abs(candidate[k] - x0[k]);
    l1 += d;
    linf = std::max(linf, d);
  }
  if (cfg.l1_budget && !(l1 < *cfg.l1_budget)) return true;
  if (cfg.linf_budget && !(linf < *cfg.linf_budget)) return true;
  return false;
}

namespace detail {

constexpr double kQuotientSingularity = 1e-12;

inline std::size_t class_index(const MulticlassModel& m, int cls) {
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    if (m.classes[i] == cls) return i;
  throw FormatError("attack: class " + std::to_string(cls) + " is not among the model classes");
}

inline void clip_candidate(std::vector<double>& x, const AttackConfig& cfg) {
  if (!cfg.clip_to_range) return;
  for (double& v : x) v = std::clamp(v, cfg.clip_range->lo, cfg.clip_range->hi);
}

inline void trace_record(AttackTrace& tr, std::span<const double> x, int label, double top,
                         double second) {
  tr.iterates.push_row(x);
  tr.predicted_labels.push_back(label);
  tr.top_scores.push_back(top);
  tr.runner_up_scores.push_back(second);
}

inline AttackTrace trace_finish(AttackTrace&& tr, std::span<const double> x0,
                                AttackOutcome outcome) {
  tr.outcome = outcome;
  tr.steps_used = static_cast<int>(tr.step_sizes.size());
  const auto last = tr.iterates.row(tr.iterates.rows - 1);
  tr.perturbation.resize(x0.size());
  tr.l1_change = 0.0;
  tr.linf_change = 0.0;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    tr.perturbation[k] = last[k] - x0[k];
    tr.l1_change += std::abs(tr.perturbation[k]);
    tr.linf_change = std::max(tr.linf_change, std::abs(tr.perturbation[k]));
  }
  tr.final_label = tr.predicted_labels.back();
  return std::move(tr);
}

inline bool goal_reached(const AttackConfig& cfg, int predicted, int true_label) {
  return cfg.objective == AttackObjective::Mimicry ? predicted == cfg.target_class
                                                   : predicted != true_label;
}

inline void check_mimicry_target(const AttackConfig& cfg, int true_label) {
  if (cfg.objective == AttackObjective::Mimicry && cfg.target_class == true_label)
    throw FormatError("attack: mimicry target must differ from the sample's own class");
}

}  // namespace detail

// Binary gradient-descent attack: push the decision value of the point's own
// side toward the boundary (x <- x - eps * s * grad f with s = +1 for a
// positive-class point) until the predicted label flips.
inline AttackTrace gradient_descent_attack(const SvmBinaryModel& model,
                                           std::span<const double> x0, int true_label,
                                           const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AttackMode::Descent)
    throw FormatError("gradient_descent_attack requires mode=descent");
  if (x0.size() != model.feature_count)
    throw FormatError("attack: point has " + std::to_string(x0.size()) + " features, model expects " +
                      std::to_string(model.feature_count));
  if (true_label != model.positive_class && true_label != model.negative_class)
    throw FormatError("attack: label " + std::to_string(true_label) +
                      " is not among the model classes");
  if (cfg.objective == AttackObjective::Mimicry && cfg.target_class != model.positive_class &&
      cfg.target_class != model.negative_class)
    throw FormatError("attack: mimicry target is not among the model classes");
  detail::check_mimicry_target(cfg, true_label);

  AttackTrace tr;
  tr.iterates = Matrix(0, model.feature_count);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> grad(model.feature_count);

  double f = 0.0;
  decision_gradient_into(model, x, grad, &f);
  int predicted = f >= 0.0 ? model.positive_class : model.negative_class;
  tr.initial_label = predicted;
  detail::trace_record(tr, x, predicted, f, -f);
  if (detail::goal_reached(cfg, predicted, true_label))
    return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);

  const double side = (true_label == model.positive_class) ? 1.0 : -1.0;
  for (int t = 1; t <= cfg.max_steps; ++t) {
    const auto eps = step_size(t, grad, cfg.eta, cfg.band_lo, cfg.band_hi);
    if (!eps) return detail::trace_finish(std::move(tr), x0, AttackOutcome::Stalled);
    std::vector<double> cand = x;
    for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= *eps * side * grad[k];
    detail::clip_candidate(cand, cfg);
    if (budgets_breached(cand, x0, cfg))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::BudgetExceeded);
    x = std::move(cand);
    tr.step_sizes.push_back(*eps);
    decision_gradient_into(model, x, grad, &f);
    predicted = f >= 0.0 ? model.positive_class : model.negative_class;
    detail::trace_record(tr, x, predicted, f, -f);
    if (detail::goal_reached(cfg, predicted, true_label))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);
  }
  return detail::trace_finish(std::move(tr), x0, AttackOutcome::StepLimit);
}

// Multiclass gradient-descent attack: each step descends the score of the
// current argmax class (the one-vs-all subgradient choice).
inline AttackTrace gradient_descent_attack(const MulticlassModel& model,
                                           std::span<const double> x0, int true_label,
                                           const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AttackMode::Descent)
    throw FormatError("gradient_descent_attack requires mode=descent");
  if (x0.size() != model.feature_count)
    throw FormatError("attack: feature count mismatch");
  detail::class_index(model, true_label);
  if (cfg.objective == AttackObjective::Mimicry) detail::class_index(model, cfg.target_class);
  detail::check_mimicry_target(cfg, true_label);

  AttackTrace tr;
  tr.iterates = Matrix(0, model.feature_count);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> grad(model.feature_count);

  auto scores = class_scores(model, x);
  std::size_t top = argmax_score(scores);
  int predicted = model.classes[top];
  tr.initial_label = predicted;
  detail::trace_record(tr, x, predicted, scores[top],
                       scores[runner_up_score(scores, top)]);
  if (detail::goal_reached(cfg, predicted, true_label))
    return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);

  for (int t = 1; t <= cfg.max_steps; ++t) {
    decision_gradient_into(model.per_class_models[top], x, grad, nullptr);
    const auto eps = step_size(t, grad, cfg.eta, cfg.band_lo, cfg.band_hi);
    if (!eps) return detail::trace_finish(std::move(tr), x0, AttackOutcome::Stalled);
    std::vector<double> cand = x;
    for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= *eps * grad[k];
    detail::clip_candidate(cand, cfg);
    if (budgets_breached(cand, x0, cfg))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::BudgetExceeded);
    x = std::move(cand);
    tr.step_sizes.push_back(*eps);
    scores = class_scores(model, x);
    top = argmax_score(scores);
    predicted = model.classes[top];
    detail::trace_record(tr, x, predicted, scores[top],
                         scores[runner_up_score(scores, top)]);
    if (detail::goal_reached(cfg, predicted, true_label))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);
  }
  return detail::trace_finish(std::move(tr), x0, AttackOutcome::StepLimit);
}

namespace detail {

// Direction s * grad(f_i / f_j) with the quotient-singularity fallback: when
// |f_j| drops below 1e-12 the quotient is unusable, so the step falls back to
// s * grad(f_i) for this iteration.
inline void quotient_direction(const MulticlassModel& model, std::span<const double> x,
                               std::span<const double> scores, std::size_t i_idx,
                               std::size_t j_idx, std::vector<double>& grad_i,
                               std::vector<double>& grad_j, std::vector<double>& out) {
  decision_gradient_into(model.per_class_models[i_idx], x, grad_i, nullptr);
  const double fi = scores[i_idx];
  const double fj = scores[j_idx];
  if (std::abs(fj) < kQuotientSingularity) {
    std::copy(grad_i.begin(), grad_i.end(), out.begin());
    return;
  }
  decision_gradient_into(model.per_class_models[j_idx], x, grad_j, nullptr);
  const double inv_fj2 = 1.0 / (fj * fj);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = (fj * grad_i[k] - fi * grad_j[k]) * inv_fj2;
}

inline AttackTrace degenerate_trace(const MulticlassModel& model, std::span<const double> x0) {
  AttackTrace tr;
  tr.iterates = Matrix(0, model.feature_count);
  const auto scores = class_scores(model, x0);
  const std::size_t top = argmax_score(scores);
  tr.initial_label = model.classes[top];
  trace_record(tr, x0, tr.initial_label, scores[top],
               scores.size() > 1 ? scores[runner_up_score(scores, top)] : scores[top]);
  return trace_finish(std::move(tr), x0, AttackOutcome::Degenerate);
}

}  // namespace detail

// Gradient-quotient attack: each step moves along -grad(f_i/f_j) with i the
// current argmax class and j the runner-up (evasion) or the fixed target
// class (mimicry). Binary one-vs-all score pairs are mirrored (f_2 = -f_1),
// which makes the quotient a constant, so two-class models are degenerate.
inline AttackTrace gradient_quotient_attack(const MulticlassModel& model,
                                            std::span<const double> x0, int true_label,
                                            const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AttackMode::Quotient)
    throw FormatError("gradient_quotient_attack requires mode=quotient");
  if (x0.size() != model.feature_count)
    throw FormatError("attack: feature count mismatch");
  detail::class_index(model, true_label);
  const bool mimicry = cfg.objective == AttackObjective::Mimicry;
  const std::size_t target_idx = mimicry ? detail::class_index(model, cfg.target_class) : 0;
  detail::check_mimicry_target(cfg, true_label);
  if (model.classes.size() < 3) return detail::degenerate_trace(model, x0);

  AttackTrace tr;
  tr.iterates = Matrix(0, model.feature_count);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> grad_i(model.feature_count), grad_j(model.feature_count);
  std::vector<double> direction(model.feature_count);

  auto scores = class_scores(model, x);
  std::size_t top = argmax_score(scores);
  int predicted = model.classes[top];
  tr.initial_label = predicted;
  detail::trace_record(tr, x, predicted, scores[top], scores[runner_up_score(scores, top)]);
  if (detail::goal_reached(cfg, predicted, true_label))
    return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);

  for (int t = 1; t <= cfg.max_steps; ++t) {
    const std::size_t i_idx = top;
    const std::size_t j_idx = mimicry ? target_idx : runner_up_score(scores, top);
    detail::quotient_direction(model, x, scores, i_idx, j_idx, grad_i, grad_j, direction);
    const auto eps = step_size(t, direction, cfg.eta, cfg.band_lo, cfg.band_hi);
    if (!eps) return detail::trace_finish(std::move(tr), x0, AttackOutcome::Stalled);
    std::vector<double> cand = x;
    for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= *eps * direction[k];
    detail::clip_candidate(cand, cfg);
    if (budgets_breached(cand, x0, cfg))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::BudgetExceeded);
    x = std::move(cand);
    tr.step_sizes.push_back(*eps);
    scores = class_scores(model, x);
    top = argmax_score(scores);
    predicted = model.classes[top];
    detail::trace_record(tr, x, predicted, scores[top], scores[runner_up_score(scores, top)]);
    if (detail::goal_reached(cfg, predicted, true_label))
      return detail::trace_finish(std::move(tr), x0, AttackOutcome::Success);
  }
  return detail::trace_finish(std::move(tr), x0, AttackOutcome::StepLimit);
}

// Surrogate-transfer attack. Every step is computed on the surrogate with the
// quotient rule anchored at i = original class: while the surrogate still
// predicts the original class the step is -grad(f_i/f_j) with j the runner-up
// (identical to the direct quotient attack), and once the surrogate
// misclassifies it flips to +grad(f_i/f_j) with j the surrogate's current top
// class, so the path oscillates around the surrogate's boundary. Success is
// judged on the target model; the attack stops at the first iterate the
// target misclassifies.
inline AttackTrace surrogate_transfer_attack(const MulticlassModel& surrogate,
                                             const MulticlassModel& target,
                                             std::span<const double> x0, int true_label,
                                             const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AttackMode::Quotient)
    throw FormatError("surrogate_transfer_attack requires mode=quotient");
  if (surrogate.feature_count != target.feature_count)
    throw FormatError("attack: surrogate and target models disagree on feature count");
  if (x0.size() != surrogate.feature_count)
    throw FormatError("attack: feature count mismatch");
  const std::size_t orig_idx = detail::class_index(surrogate, true_label);
  if (cfg.objective == AttackObjective::Mimicry) detail::class_index(target, cfg.target_class);
  detail::check_mimicry_target(cfg, true_label);
  if (surrogate.classes.size() < 3) {
    AttackTrace tr = detail::degenerate_trace(surrogate, x0);
    tr.target_labels.push_back(predict(target, x0));
    return tr;
  }

  AttackTrace tr;
  tr.iterates = Matrix(0, surrogate.feature_count);
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> grad_i(surrogate.feature_count), grad_j(surrogate.feature_count);
  std::vector<double> direction(surrogate.feature_count);

  // The success predicate runs on the target model, so the trace's
  // initial/final labels come from target_labels rather than the surrogate's
  // per-iterate labels.
  auto finish = [&x0](AttackTrace&& t, AttackOutcome outcome) {
    AttackTrace done = detail::trace_finish(std::move(t), x0, outcome);
    done.final_label = done.target_labels.back();
    return done;
  };

  auto scores = class_scores(surrogate, x);
  std::size_t top = argmax_score(scores);
  int target_label = predict(target, x);
  tr.initial_label = target_label;
  detail::trace_record(tr, x, surrogate.classes[top], scores[top],
                       scores[runner_up_score(scores, top)]);
  tr.target_labels.push_back(target_label);
  if (detail::goal_reached(cfg, target_label, true_label))
    return finish(std::move(tr), AttackOutcome::Success);

  for (int t = 1; t <= cfg.max_steps; ++t) {
    const bool on_original_side = surrogate.classes[top] == true_label;
    const std::size_t j_idx = on_original_side ? runner_up_score(scores, orig_idx) : top;
    const double sign = on_original_side ? 1.0 : -1.0;
    detail::quotient_direction(surrogate, x, scores, orig_idx, j_idx, grad_i, grad_j,
                               direction);
    const auto eps = step_size(t, direction, cfg.eta, cfg.band_lo, cfg.band_hi);
    if (!eps) return finish(std::move(tr), AttackOutcome::Stalled);
    std::vector<double> cand = x;
    for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= *eps * sign * direction[k];
    detail::clip_candidate(cand, cfg);
    if (budgets_breached(cand, x0, cfg))
      return finish(std::move(tr), AttackOutcome::BudgetExceeded);
    x = std::move(cand);
    tr.step_sizes.push_back(*eps);
    scores = class_scores(surrogate, x);
    top = argmax_score(scores);
    target_label = predict(target, x);
    detail::trace_record(tr, x, surrogate.classes[top], scores[top],
                         scores[runner_up_score(scores, top)]);
    tr.target_labels.push_back(target_label);
    if (detail::goal_reached(cfg, target_label, true_label))
      return finish(std::move(tr), AttackOutcome::Success);
  }
  return finish(std::move(tr), AttackOutcome::StepLimit);
}

}  // namespace evade
