#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "evade/attack.hpp"
#include "evade/textio.hpp"

namespace evade {

// Structured text export of one attack trace: a header block, one "step"
// record per iterate (t, eps_t, cumulative ||delta||_1 / ||delta||_inf,
// top-2 scores, predicted label, and the target model's label for transfer
// attacks), and optionally the raw iterates for image rendering. All numbers
// use 17 significant digits, so identical traces serialize byte-identically.
inline std::string trace_to_string(const AttackTrace& tr, bool include_iterates = false) {
  std::ostringstream out;
  const bool transfer = !tr.target_labels.empty();
  out << "evadetrace 1\n";
  out << "outcome " << outcome_name(tr.outcome) << '\n';
  out << "steps " << tr.steps_used << '\n';
  out << "initial_label " << tr.initial_label << '\n';
  out << "final_label " << tr.final_label << '\n';
  out << "l1_change " << fmt_double(tr.l1_change) << '\n';
  out << "linf_change " << fmt_double(tr.linf_change) << '\n';
  out << "dim " << tr.iterates.cols << '\n';
  out << "columns t eps l1 linf top_score runner_up_score predicted";
  if (transfer) out << " target_predicted";
  out << '\n';
  const auto x0 = tr.iterates.row(0);
  for (std::size_t r = 0; r < tr.iterates.rows; ++r) {
    const auto row = tr.iterates.row(r);
    double l1 = 0.0, linf = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double d = std::abs(row[k] - x0[k]);
      l1 += d;
      linf = std::max(linf, d);
    }
    out << "step " << r << ' ' << fmt_double(r == 0 ? 0.0 : tr.step_sizes[r - 1]) << ' '
        << fmt_double(l1) << ' ' << fmt_double(linf) << ' ' << fmt_double(tr.top_scores[r])
        << ' ' << fmt_double(tr.runner_up_scores[r]) << ' ' << tr.predicted_labels[r];
    if (transfer) out << ' ' << tr.target_labels[r];
    out << '\n';
  }
  if (include_iterates) {
    for (std::size_t r = 0; r < tr.iterates.rows; ++r) {
      out << "iterate " << r;
      for (double v : tr.iterates.row(r)) out << ' ' << fmt_double(v);
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

inline void save_trace(const AttackTrace& tr, const std::filesystem::path& path,
                       bool include_iterates = false) {
  write_file_atomic(path, trace_to_string(tr, include_iterates));
}

}  // namespace evade
