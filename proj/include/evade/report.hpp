#pragma once

#include <span>
#include <string>
#include <vector>

#include "evade/analysis.hpp"
#include "evade/textio.hpp"

namespace evade {

// Stable CSV schema for campaign reports: one row per (model, direction),
// including the pooled "all" direction. Optional fields (avg L1 without
// successes, coverage for multiclass models, unset budgets) are left empty.
inline const char* campaign_csv_header() {
  return "gamma,C,accuracy_pct,direction,success_rate_pct,avg_l1_success,"
         "width_coverage_pct,n_test,n_success,clip_mode,budget_b1,budget_binf";
}

inline void append_campaign_rows(std::string& out, const CampaignReport& r) {
  const std::string prefix = fmt_double(r.kernel.kind == KernelKind::Rbf ? r.kernel.gamma : 0.0) +
                             "," + fmt_double(r.cost) + "," + fmt_double(r.accuracy_pct) + ",";
  const std::string suffix = std::string(",") + (r.clip_mode ? "clip" : "none") + "," +
                             (r.budget_b1 ? fmt_double(*r.budget_b1) : "") + "," +
                             (r.budget_binf ? fmt_double(*r.budget_binf) : "");
  for (const DirectionReport& dir : r.directions) {
    out += prefix;
    out += dir.direction;
    out += ',';
    out += fmt_double(dir.success_rate);
    out += ',';
    if (dir.avg_l1_success) out += fmt_double(*dir.avg_l1_success);
    out += ',';
    if (dir.width_coverage_pct) out += fmt_double(*dir.width_coverage_pct);
    out += ',';
    out += std::to_string(dir.n_test);
    out += ',';
    out += std::to_string(dir.n_success);
    out += suffix;
    out += '\n';
  }
}

inline std::string campaign_csv(std::span<const CampaignReport> reports) {
  std::string out = campaign_csv_header();
  out += '\n';
  for (const CampaignReport& r : reports) append_campaign_rows(out, r);
  return out;
}

inline std::string campaign_csv(const CampaignReport& report) {
  return campaign_csv(std::span<const CampaignReport>(&report, 1));
}

// Sweep CSV: successful grid points only, already ordered by gamma. Failed
// points carry their error note and are reported by the caller.
inline std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = campaign_csv_header();
  out += '\n';
  for (const SweepPoint& p : points)
    if (p.report) append_campaign_rows(out, *p.report);
  return out;
}

}  // namespace evade
