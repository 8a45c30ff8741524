#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "evade/attack.hpp"
#include "evade/dataset.hpp"
#include "evade/errors.hpp"
#include "evade/parallel.hpp"
#include "evade/svm.hpp"

namespace evade {

// --- support-vector geometry -------------------------------------------------

// Per-SV minimum Euclidean distance from each SV of `from_class` to the
// nearest SV of `to_class`. Indices refer to rows of model.support_vectors.
struct MinDistProfile {
  int from_class = 0;
  int to_class = 0;
  std::vector<std::pair<std::size_t, double>> per_sv_min_dist;
};

inline std::pair<MinDistProfile, MinDistProfile> min_inter_class_sv_distance(
    const SvmBinaryModel& model) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < model.n_sv(); ++i)
    (model.dual_coefs[i] > 0.0 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    throw AnalysisError("min_inter_class_sv_distance: all support vectors lie on one side");

  auto profile_of = [&](const std::vector<std::size_t>& from, const std::vector<std::size_t>& to,
                        int from_class, int to_class) {
    MinDistProfile p;
    p.from_class = from_class;
    p.to_class = to_class;
    p.per_sv_min_dist.reserve(from.size());
    for (std::size_t i : from) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j : to)
        best = std::min(best, squared_distance(model.support_vectors.row(i),
                                               model.support_vectors.row(j)));
      p.per_sv_min_dist.emplace_back(i, std::sqrt(best));
    }
    return p;
  };
  return {profile_of(pos, neg, model.positive_class, model.negative_class),
          profile_of(neg, pos, model.negative_class, model.positive_class)};
}

// Percentage of SVs whose kernel width 2/sqrt(gamma) reaches the nearest
// opposite-class SV: 100 * |{i : 2/sqrt(gamma) >= MinDist_i}| / n.
inline double width_coverage(double gamma, const MinDistProfile& profile) {
  if (!(gamma > 0.0)) throw AnalysisError("width_coverage: gamma must be positive");
  if (profile.per_sv_min_dist.empty())
    throw AnalysisError("width_coverage: empty MinDist profile");
  const double width = 2.0 / std::sqrt(gamma);
  std::size_t covered = 0;
  for (const auto& [idx, dist] : profile.per_sv_min_dist) covered += (width >= dist) ? 1 : 0;
  return 100.0 * static_cast<double>(covered) /
         static_cast<double>(profile.per_sv_min_dist.size());
}

// Per-SV absolute decision value |f(sv_i)|, the margin proxy paired with
// MinDist for correlation reporting.
inline std::vector<std::pair<std::size_t, double>> margin_proxy(const SvmBinaryModel& model) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(model.n_sv());
  for (std::size_t i = 0; i < model.n_sv(); ++i)
    out.emplace_back(i, std::abs(decision_value(model, model.support_vectors.row(i))));
  return out;
}

// --- closed-form phase transition ---------------------------------------------

// Axis component of the gradient of f(x) = a1*k(x1,x) - a2*k(x2,x) for the RBF
// kernel: 2*gamma*[a1*(x1-x)_axis*e^{-gamma*D1} - a2*(x2-x)_axis*e^{-gamma*D2}].
inline double two_sv_axis_gradient(std::span<const double> x, std::span<const double> x1,
                                   std::span<const double> x2, double alpha1, double alpha2,
                                   std::size_t axis, double gamma) {
  const double d1 = squared_distance(x, x1);
  const double d2 = squared_distance(x, x2);
  return 2.0 * gamma *
         (alpha1 * (x1[axis] - x[axis]) * std::exp(-gamma * d1) -
          alpha2 * (x2[axis] - x[axis]) * std::exp(-gamma * d2));
}

// The gamma at which the axis gradient component of the two-SV configuration
// crosses zero:
//   gamma* = [log(a1*(x1-x)_axis) - log(a2*(x2-x)_axis)] / [D1 - D2].
// Returns nullopt when no transition exists: equidistant SVs (zero
// denominator), non-positive log arguments, or a vanishing quotient.
inline std::optional<double> phase_transition_gamma(std::span<const double> x,
                                                    std::span<const double> x1,
                                                    std::span<const double> x2, double alpha1,
                                                    double alpha2, std::size_t axis) {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
    throw FormatError("phase_transition_gamma: dual coefficients must be positive");
  if (x.size() != x1.size() || x.size() != x2.size() || axis >= x.size())
    throw FormatError("phase_transition_gamma: dimension mismatch");
  const double num1 = alpha1 * (x1[axis] - x[axis]);
  const double num2 = alpha2 * (x2[axis] - x[axis]);
  if (!(num1 > 0.0) || !(num2 > 0.0)) return std::nullopt;
  const double den = squared_distance(x, x1) - squared_distance(x, x2);
  if (den == 0.0) return std::nullopt;
  const double gamma = (std::log(num1) - std::log(num2)) / den;
  if (!std::isfinite(gamma) || gamma == 0.0) return std::nullopt;
  return gamma;
}

// --- rank correlation ----------------------------------------------------------

// Ranks with ties assigned the average of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation (Pearson on average ranks). NaN when either
// series is constant.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw AnalysisError("spearman: length mismatch");
  if (a.size() < 2) throw AnalysisError("spearman: need at least two observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

// --- attack campaigns ------------------------------------------------------------

struct AttackSummary {
  std::size_t test_index = 0;
  int true_label = 0;
  int final_label = 0;
  AttackOutcome outcome = AttackOutcome::Stalled;
  int steps_used = 0;
  double l1_change = 0.0;
  double linf_change = 0.0;
};

struct DirectionReport {
  std::string direction;  // "a->b", "a->any", "a->T", or "all" for the pooled row
  std::size_t n_test = 0;
  std::size_t n_success = 0;
  double success_rate = 0.0;                  // percent
  std::optional<double> avg_l1_success;       // mean ||delta||_1 over successes
  std::optional<double> width_coverage_pct;   // binary models only
};

struct CampaignReport {
  KernelSpec kernel;
  double cost = 0.0;
  std::vector<int> classes;
  double accuracy_pct = 0.0;  // model accuracy on the full test set handed in
  bool clip_mode = false;
  std::optional<double> budget_b1;
  std::optional<double> budget_binf;
  std::size_t n_test = 0;     // eligible (correctly classified, filtered) samples
  std::size_t n_success = 0;
  double success_rate = 0.0;  // pooled, percent
  std::optional<double> avg_l1_success;
  std::optional<double> width_coverage_pct;  // pooled over both directions, binary only
  std::vector<DirectionReport> directions;
};

struct CampaignOptions {
  std::optional<int> source_class;  // attack only samples of this class
  unsigned n_threads = 1;
  bool keep_traces = false;  // retain full traces (memory-heavy) for export
};

struct CampaignResult {
  CampaignReport report;
  std::vector<AttackSummary> summaries;  // eligible samples, in test order
  std::vector<AttackTrace> traces;       // parallel to summaries when kept
};

// Criterion-7 style compliance check, run on every campaign trace: every
// recorded iterate (not just the endpoint) must satisfy the strict budget
// inequalities, and budget_exceeded may only appear when budgets are set.
inline void validate_budget_compliance(const AttackTrace& tr, const AttackConfig& cfg) {
  if (tr.outcome == AttackOutcome::BudgetExceeded && !cfg.l1_budget && !cfg.linf_budget)
    throw AnalysisError("trace reports budget_exceeded but no budgets were set");
  if (!cfg.l1_budget && !cfg.linf_budget) return;
  const auto x0 = tr.iterates.row(0);
  for (std::size_t r = 0; r < tr.iterates.rows; ++r) {
    const auto row = tr.iterates.row(r);
    double l1 = 0.0, linf = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double d = std::abs(row[k] - x0[k]);
      l1 += d;
      linf = std::max(linf, d);
    }
    if (cfg.l1_budget && !(l1 < *cfg.l1_budget))
      throw AnalysisError("emitted trace violates the L1 budget at iterate " + std::to_string(r));
    if (cfg.linf_budget && !(linf < *cfg.linf_budget))
      throw AnalysisError("emitted trace violates the Linf budget at iterate " +
                          std::to_string(r));
  }
}

namespace detail {

inline std::string direction_string(int source, const AttackConfig& cfg,
                                    const SvmBinaryModel& model) {
  const int other = source == model.positive_class ? model.negative_class : model.positive_class;
  const int dest = cfg.objective == AttackObjective::Mimicry ? cfg.target_class : other;
  return std::to_string(source) + "->" + std::to_string(dest);
}

inline std::string direction_string(int source, const AttackConfig& cfg,
                                    const MulticlassModel&) {
  if (cfg.objective == AttackObjective::Mimicry)
    return std::to_string(source) + "->" + std::to_string(cfg.target_class);
  return std::to_string(source) + "->any";
}

// Width coverage per source class for binary models; multiclass models have
// no single inter-class profile, so coverage stays empty.
inline void attach_width_coverage(const SvmBinaryModel& model, CampaignReport& report) {
  std::pair<MinDistProfile, MinDistProfile> profiles;
  try {
    profiles = min_inter_class_sv_distance(model);
  } catch (const AnalysisError&) {
    return;  // one-sided SV set: leave coverage unset rather than failing the campaign
  }
  const double gamma = model.kernel.gamma;
  if (model.kernel.kind != KernelKind::Rbf || !(gamma > 0.0)) return;
  auto coverage_for = [&](int cls) -> std::optional<double> {
    const MinDistProfile& p =
        cls == profiles.first.from_class ? profiles.first : profiles.second;
    if (p.per_sv_min_dist.empty()) return std::nullopt;
    return width_coverage(gamma, p);
  };
  for (auto& dir : report.directions) {
    if (dir.direction == "all") continue;
    const int source = std::stoi(dir.direction.substr(0, dir.direction.find('-')));
    dir.width_coverage_pct = coverage_for(source);
  }
  MinDistProfile pooled = profiles.first;
  pooled.per_sv_min_dist.insert(pooled.per_sv_min_dist.end(),
                                profiles.second.per_sv_min_dist.begin(),
                                profiles.second.per_sv_min_dist.end());
  report.width_coverage_pct = width_coverage(gamma, pooled);
  for (auto& dir : report.directions)
    if (dir.direction == "all") dir.width_coverage_pct = report.width_coverage_pct;
}

inline void attach_width_coverage(const MulticlassModel&, CampaignReport&) {}

inline void describe_model(const SvmBinaryModel& m, CampaignReport& report) {
  report.kernel = m.kernel;
  report.cost = m.cost;
  report.classes = {m.positive_class, m.negative_class};
}

inline void describe_model(const MulticlassModel& m, CampaignReport& report) {
  report.kernel = m.per_class_models.front().kernel;
  report.cost = m.per_class_models.front().cost;
  report.classes = m.classes;
}

}  // namespace detail

template <typename ModelT>
CampaignResult run_campaign(const ModelT& model, const Dataset& test, const AttackConfig& cfg,
                            const CampaignOptions& opts = {}) {
  static_assert(std::is_same_v<ModelT, SvmBinaryModel> || std::is_same_v<ModelT, MulticlassModel>,
                "run_campaign expects an SVM model");
  cfg.validate();
  if (test.samples.empty()) throw EmptyWorkError("run_campaign: empty test set");
  if constexpr (std::is_same_v<ModelT, SvmBinaryModel>) {
    if (cfg.mode == AttackMode::Quotient)
      throw FormatError("run_campaign: the quotient attack needs a multiclass model");
  }

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    const Sample& s = test.samples[i];
    if (opts.source_class && s.label != *opts.source_class) continue;
    if (cfg.objective == AttackObjective::Mimicry && s.label == cfg.target_class) continue;
    if (predict(model, s.features) != s.label) continue;
    eligible.push_back(i);
  }
  if (eligible.empty())
    throw EmptyWorkError("run_campaign: no correctly classified test samples to attack");

  CampaignResult result;
  result.summaries.resize(eligible.size());
  if (opts.keep_traces) result.traces.resize(eligible.size());

  parallel_for(std::size_t{0}, eligible.size(), opts.n_threads, [&](std::size_t slot) {
    const std::size_t idx = eligible[slot];
    const Sample& s = test.samples[idx];
    AttackTrace tr;
    if constexpr (std::is_same_v<ModelT, SvmBinaryModel>) {
      tr = gradient_descent_attack(model, s.features, s.label, cfg);
    } else {
      tr = cfg.mode == AttackMode::Descent
               ? gradient_descent_attack(model, s.features, s.label, cfg)
               : gradient_quotient_attack(model, s.features, s.label, cfg);
    }
    validate_budget_compliance(tr, cfg);
    result.summaries[slot] = AttackSummary{idx,           s.label,      tr.final_label,
                                           tr.outcome,    tr.steps_used, tr.l1_change,
                                           tr.linf_change};
    if (opts.keep_traces) result.traces[slot] = std::move(tr);
  });

  CampaignReport& report = result.report;
  detail::describe_model(model, report);
  report.accuracy_pct = model_accuracy(model, test);
  report.clip_mode = cfg.clip_to_range;
  report.budget_b1 = cfg.l1_budget;
  report.budget_binf = cfg.linf_budget;

  struct Bucket {
    std::size_t n = 0, wins = 0;
    double l1_sum = 0.0;
  };
  std::map<int, Bucket> per_class;
  Bucket pooled;
  for (const auto& s : result.summaries) {
    Bucket& b = per_class[s.true_label];
    ++b.n;
    ++pooled.n;
    if (s.outcome == AttackOutcome::Success) {
      ++b.wins;
      ++pooled.wins;
      b.l1_sum += s.l1_change;
      pooled.l1_sum += s.l1_change;
    }
  }
  auto fill = [](DirectionReport& dir, const Bucket& b) {
    dir.n_test = b.n;
    dir.n_success = b.wins;
    dir.success_rate = b.n ? 100.0 * double(b.wins) / double(b.n) : 0.0;
    if (b.wins) dir.avg_l1_success = b.l1_sum / double(b.wins);
  };
  for (const auto& [cls, bucket] : per_class) {
    DirectionReport dir;
    dir.direction = detail::direction_string(cls, cfg, model);
    fill(dir, bucket);
    report.directions.push_back(std::move(dir));
  }
  // The pooled row is only informative when more than one direction exists;
  // with a single source class it would duplicate that row verbatim.
  if (per_class.size() > 1) {
    DirectionReport all;
    all.direction = "all";
    fill(all, pooled);
    report.directions.push_back(std::move(all));
  }
  report.n_test = pooled.n;
  report.n_success = pooled.wins;
  report.success_rate = pooled.n ? 100.0 * double(pooled.wins) / double(pooled.n) : 0.0;
  if (pooled.wins) report.avg_l1_success = pooled.l1_sum / double(pooled.wins);
  detail::attach_width_coverage(model, report);
  return result;
}

// Transfer campaign: every attack runs on the surrogate, success is judged on
// the target model. Eligibility requires the TARGET to classify the sample
// correctly (the transfer claim is about fooling the target).
inline CampaignResult run_transfer_campaign(const MulticlassModel& surrogate,
                                            const MulticlassModel& target, const Dataset& test,
                                            const AttackConfig& cfg,
                                            const CampaignOptions& opts = {}) {
  cfg.validate();
  if (test.samples.empty()) throw EmptyWorkError("run_transfer_campaign: empty test set");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < test.samples.size(); ++i) {
    const Sample& s = test.samples[i];
    if (opts.source_class && s.label != *opts.source_class) continue;
    if (cfg.objective == AttackObjective::Mimicry && s.label == cfg.target_class) continue;
    if (predict(target, s.features) != s.label) continue;
    eligible.push_back(i);
  }
  if (eligible.empty())
    throw EmptyWorkError("run_transfer_campaign: no correctly classified test samples");

  CampaignResult result;
  result.summaries.resize(eligible.size());
  if (opts.keep_traces) result.traces.resize(eligible.size());

  parallel_for(std::size_t{0}, eligible.size(), opts.n_threads, [&](std::size_t slot) {
    const std::size_t idx = eligible[slot];
    const Sample& s = test.samples[idx];
    AttackTrace tr = surrogate_transfer_attack(surrogate, target, s.features, s.label, cfg);
    validate_budget_compliance(tr, cfg);
    result.summaries[slot] = AttackSummary{idx,           s.label,      tr.final_label,
                                           tr.outcome,    tr.steps_used, tr.l1_change,
                                           tr.linf_change};
    if (opts.keep_traces) result.traces[slot] = std::move(tr);
  });

  CampaignReport& report = result.report;
  detail::describe_model(target, report);
  report.accuracy_pct = model_accuracy(target, test);
  report.clip_mode = cfg.clip_to_range;
  report.budget_b1 = cfg.l1_budget;
  report.budget_binf = cfg.linf_budget;

  struct Bucket {
    std::size_t n = 0, wins = 0;
    double l1_sum = 0.0;
  };
  std::map<int, Bucket> per_class;
  Bucket pooled;
  for (const auto& s : result.summaries) {
    Bucket& b = per_class[s.true_label];
    ++b.n;
    ++pooled.n;
    if (s.outcome == AttackOutcome::Success) {
      ++b.wins;
      ++pooled.wins;
      b.l1_sum += s.l1_change;
      pooled.l1_sum += s.l1_change;
    }
  }
  auto fill = [](DirectionReport& dir, const Bucket& b) {
    dir.n_test = b.n;
    dir.n_success = b.wins;
    dir.success_rate = b.n ? 100.0 * double(b.wins) / double(b.n) : 0.0;
    if (b.wins) dir.avg_l1_success = b.l1_sum / double(b.wins);
  };
  for (const auto& [cls, bucket] : per_class) {
    DirectionReport dir;
    dir.direction = detail::direction_string(cls, cfg, surrogate);
    fill(dir, bucket);
    report.directions.push_back(std::move(dir));
  }
  if (per_class.size() > 1) {
    DirectionReport all;
    all.direction = "all";
    fill(all, pooled);
    report.directions.push_back(std::move(all));
  }
  report.n_test = pooled.n;
  report.n_success = pooled.wins;
  report.success_rate = pooled.n ? 100.0 * double(pooled.wins) / double(pooled.n) : 0.0;
  if (pooled.wins) report.avg_l1_success = pooled.l1_sum / double(pooled.wins);
  return result;
}

// --- gamma sweeps -----------------------------------------------------------------

struct GridPoint {
  double gamma = 0.0;
  double cost = 1.0;
};

struct SweepPoint {
  GridPoint point;
  std::optional<CampaignReport> report;  // empty when training failed
  std::string error;                     // failure note for skipped points
};

struct SweepOptions {
  CampaignOptions campaign;   // campaign.n_threads applies inside each point
  unsigned point_threads = 1; // parallelism across grid points
  KernelKind kernel = KernelKind::Rbf;
  TrainConfig train;          // cost is overridden per grid point
};

// One trained model + campaign per grid point, ordered by gamma (then C).
// Binary datasets train a binary model; three or more classes train
// one-vs-all. Training failures are recorded and the sweep continues.
inline std::vector<SweepPoint> gamma_sweep(const Dataset& train, const Dataset& test,
                                           std::vector<GridPoint> grid, const AttackConfig& cfg,
                                           const SweepOptions& opts = {}) {
  if (grid.empty()) throw EmptyWorkError("gamma_sweep: empty grid");
  if (train.classes.size() < 2) throw TrainError("gamma_sweep: need at least two classes");
  std::stable_sort(grid.begin(), grid.end(), [](const GridPoint& a, const GridPoint& b) {
    return a.gamma != b.gamma ? a.gamma < b.gamma : a.cost < b.cost;
  });

  std::vector<SweepPoint> points(grid.size());
  parallel_for(std::size_t{0}, grid.size(), opts.point_threads, [&](std::size_t i) {
    SweepPoint& sp = points[i];
    sp.point = grid[i];
    KernelSpec kernel = opts.kernel == KernelKind::Rbf ? KernelSpec::rbf(grid[i].gamma)
                                                       : KernelSpec::linear();
    TrainConfig tc = opts.train;
    tc.cost = grid[i].cost;
    try {
      if (train.classes.size() == 2) {
        const SvmBinaryModel model = train_binary(train, kernel, tc);
        sp.report = run_campaign(model, test, cfg, opts.campaign).report;
      } else {
        const MulticlassModel model = train_multiclass(train, kernel, tc);
        sp.report = run_campaign(model, test, cfg, opts.campaign).report;
      }
    } catch (const Error& e) {
      sp.error = e.what();
    }
  });
  return points;
}

}  // namespace evade
