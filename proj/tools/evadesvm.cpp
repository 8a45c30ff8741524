// evadesvm: one executable for the whole pipeline — train kernel SVMs, run
// evasion attack campaigns, sweep gamma grids, and report support-vector
// geometry. Exit codes: 0 success, 1 internal error, 2 input error, 3 empty
// work (nothing to attack / nothing to do).
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evade/evade.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

// --- shared flag bundles ------------------------------------------------------

struct DataFlags {
  std::string dataset;
  std::string labels;  // idx label file
  std::string format = "idx";
  std::size_t features = 0;      // sparse dimension
  std::size_t label_column = 0;  // csv label column
};

struct AttackFlags {
  std::string mode = "descent";
  std::optional<int> target_class;
  std::optional<int> source_class;
  int max_steps = 30;
  std::optional<double> eta;
  std::optional<double> b1, binf;
  bool clip = false;
  bool dump_iterates = false;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, const char* what) {
  cmd->add_option("--dataset", f.dataset, std::string(what) + " data file")->required();
  cmd->add_option("--format", f.format, "dataset format")
      ->check(CLI::IsMember({"idx", "sparse", "csv"}));
  cmd->add_option("--labels", f.labels, "idx label file (idx format)");
  cmd->add_option("--features", f.features, "feature count (sparse format)");
  cmd->add_option("--label-column", f.label_column, "label column (csv format)");
}

void add_attack_flags(CLI::App* cmd, AttackFlags& f) {
  cmd->add_option("--mode", f.mode, "attack mode")->check(CLI::IsMember({"descent", "quotient"}));
  cmd->add_option("--target-class", f.target_class, "mimicry target class");
  cmd->add_option("--source-class", f.source_class, "attack only this source class");
  cmd->add_option("--max-steps", f.max_steps, "maximum attack steps");
  cmd->add_option("--eta", f.eta, "unit feature change (default: range span / 255)");
  cmd->add_option("--b1", f.b1, "strict L1 budget");
  cmd->add_option("--binf", f.binf, "strict Linf budget");
  cmd->add_flag("--clip", f.clip, "clip iterates to the feature range");
  cmd->add_flag("--dump-iterates", f.dump_iterates, "embed raw iterates in trace files");
}

std::vector<int> parse_class_list(const std::string& csv) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok =
        csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(static_cast<int>(evade::parse_int(tok, "--classes entry")));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

evade::Dataset load_data(const DataFlags& f) {
  if (f.format == "idx") {
    if (f.labels.empty()) throw evade::FormatError("idx format needs --labels");
    return evade::load_idx(f.dataset, f.labels);
  }
  if (f.format == "sparse") {
    if (f.features == 0) throw evade::FormatError("sparse format needs --features");
    return evade::load_sparse_text(f.dataset, f.features);
  }
  return evade::load_csv_labeled(f.dataset, f.label_column);
}

evade::Interval scale_target(const std::string& name) {
  if (name == "unit") return {0.0, 1.0};
  if (name == "sym") return {-1.0, 1.0};
  throw evade::FormatError("unknown --scale '" + name + "'");
}

ordered_json data_json(const DataFlags& f) {
  ordered_json j;
  j["dataset"] = f.dataset;
  j["format"] = f.format;
  if (f.format == "idx") j["labels"] = f.labels;
  if (f.format == "sparse") j["features"] = f.features;
  if (f.format == "csv") j["label_column"] = f.label_column;
  return j;
}

ordered_json attack_json(const AttackFlags& f, double resolved_eta) {
  ordered_json j;
  j["mode"] = f.mode;
  j["target_class"] = f.target_class ? ordered_json(*f.target_class) : ordered_json(nullptr);
  j["source_class"] = f.source_class ? ordered_json(*f.source_class) : ordered_json(nullptr);
  j["max_steps"] = f.max_steps;
  j["eta"] = resolved_eta;
  j["b1"] = f.b1 ? ordered_json(*f.b1) : ordered_json(nullptr);
  j["binf"] = f.binf ? ordered_json(*f.binf) : ordered_json(nullptr);
  j["clip"] = f.clip;
  j["dump_iterates"] = f.dump_iterates;
  return j;
}

// Every run drops the resolved configuration into its output directory so the
// artifacts are self-describing and bit-reproducible.
void write_config(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                  ordered_json params) {
  ordered_json j;
  j["tool"] = "evadesvm";
  j["version"] = evade::kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["params"] = std::move(params);
  evade::write_file_atomic(out_dir / "config.json", j.dump(2) + "\n");
}

evade::AttackConfig build_attack_config(const AttackFlags& f, const evade::Interval& range) {
  evade::AttackConfig cfg;
  cfg.mode = f.mode == "quotient" ? evade::AttackMode::Quotient : evade::AttackMode::Descent;
  if (f.target_class) {
    cfg.objective = evade::AttackObjective::Mimicry;
    cfg.target_class = *f.target_class;
  }
  cfg.max_steps = f.max_steps;
  cfg.eta = f.eta ? *f.eta : evade::default_eta(range);
  cfg.l1_budget = f.b1;
  cfg.linf_budget = f.binf;
  cfg.clip_to_range = f.clip;
  if (f.clip) cfg.clip_range = range;
  return cfg;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  DataFlags data;
  std::string classes_csv;
  std::string scale = "unit";
  std::string kernel = "rbf";
  double gamma = 0.5;
  double cost = 1.0;
  double tolerance = 1e-3;
  std::string test_dataset, test_labels;
  unsigned jobs = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  evade::Dataset train = load_data(a.data);
  if (!a.classes_csv.empty())
    train = evade::filter_classes(train, parse_class_list(a.classes_csv));

  std::optional<evade::ScaleParams> scaling;
  if (a.scale != "none") {
    scaling = evade::fit_scaling(train, scale_target(a.scale));
    train = evade::apply_scaling(train, *scaling);
  }

  const evade::KernelSpec kernel = a.kernel == "linear" ? evade::KernelSpec::linear()
                                                        : evade::KernelSpec::rbf(a.gamma);
  evade::TrainConfig tc;
  tc.cost = a.cost;
  tc.tolerance = a.tolerance;
  tc.n_threads = a.jobs;

  evade::Dataset eval = train;
  if (!a.test_dataset.empty()) {
    DataFlags tf = a.data;
    tf.dataset = a.test_dataset;
    tf.labels = a.test_labels;
    eval = load_data(tf);
    if (!a.classes_csv.empty())
      eval = evade::filter_classes(eval, parse_class_list(a.classes_csv));
    if (scaling) eval = evade::apply_scaling(eval, *scaling);
  }

  const fs::path out_dir(a.out);
  double accuracy = 0.0;
  if (train.classes.size() == 2) {
    const auto model = evade::train_binary(train, kernel, tc);
    accuracy = evade::model_accuracy(model, eval);
    evade::save_model(model, out_dir / "model.txt");
  } else {
    const auto model = evade::train_multiclass(train, kernel, tc);
    accuracy = evade::model_accuracy(model, eval);
    evade::save_model(model, out_dir / "model.txt");
  }
  if (scaling) evade::save_scaling(*scaling, out_dir / "scaling.txt");

  ordered_json params = data_json(a.data);
  params["classes"] = a.classes_csv.empty() ? ordered_json(nullptr) : ordered_json(a.classes_csv);
  params["scale"] = a.scale;
  params["kernel"] = a.kernel;
  params["gamma"] = a.gamma;
  params["cost"] = a.cost;
  params["tolerance"] = a.tolerance;
  params["test_dataset"] = a.test_dataset.empty() ? ordered_json(nullptr) : ordered_json(a.test_dataset);
  params["jobs"] = a.jobs;
  write_config(out_dir, "train", a.seed, std::move(params));

  const std::string line = "accuracy " + evade::fmt_double(accuracy) + "% on " +
                           std::to_string(eval.size()) + " samples (" +
                           (a.test_dataset.empty() ? "training set" : "test set") + ")\n";
  evade::write_file_atomic(out_dir / "accuracy.txt", line);
  std::fputs(line.c_str(), stdout);
  return 0;
}

// --- attack ---------------------------------------------------------------------

struct AttackArgs {
  std::string model;
  std::string surrogate;
  DataFlags data;
  std::string classes_csv;
  std::string scaling_file;
  AttackFlags attack;
  unsigned jobs = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int cmd_attack(const AttackArgs& a) {
  const evade::AnyModel model = evade::load_model(a.model);

  evade::Dataset test = load_data(a.data);
  if (!a.classes_csv.empty()) test = evade::filter_classes(test, parse_class_list(a.classes_csv));
  if (!a.scaling_file.empty())
    test = evade::apply_scaling(test, evade::load_scaling(a.scaling_file));

  const evade::AttackConfig cfg = build_attack_config(a.attack, test.feature_range);
  evade::CampaignOptions opts;
  opts.source_class = a.attack.source_class;
  opts.n_threads = a.jobs;
  opts.keep_traces = true;

  evade::CampaignResult result;
  if (!a.surrogate.empty()) {
    const evade::AnyModel surrogate = evade::load_model(a.surrogate);
    const auto* sur = std::get_if<evade::MulticlassModel>(&surrogate);
    const auto* tgt = std::get_if<evade::MulticlassModel>(&model);
    if (!sur || !tgt)
      throw evade::FormatError("transfer attacks need multiclass surrogate and target models");
    result = evade::run_transfer_campaign(*sur, *tgt, test, cfg, opts);
  } else {
    result = std::visit(
        [&](const auto& m) { return evade::run_campaign(m, test, cfg, opts); }, model);
  }

  const fs::path out_dir(a.out);
  evade::write_file_atomic(out_dir / "report.csv", evade::campaign_csv(result.report));
  for (std::size_t i = 0; i < result.summaries.size(); ++i) {
    const auto& s = result.summaries[i];
    evade::save_trace(result.traces[i],
                      out_dir / "traces" / ("trace_" + std::to_string(s.test_index) + ".txt"),
                      a.attack.dump_iterates);
  }

  ordered_json params = data_json(a.data);
  params["model"] = a.model;
  params["surrogate"] = a.surrogate.empty() ? ordered_json(nullptr) : ordered_json(a.surrogate);
  params["classes"] = a.classes_csv.empty() ? ordered_json(nullptr) : ordered_json(a.classes_csv);
  params["scaling"] =
      a.scaling_file.empty() ? ordered_json(nullptr) : ordered_json(a.scaling_file);
  params["attack"] = attack_json(a.attack, cfg.eta);
  params["jobs"] = a.jobs;
  write_config(out_dir, "attack", a.seed, std::move(params));

  std::printf("attacked %zu eligible samples: %zu successes (%s%%), report + %zu traces in %s\n",
              result.report.n_test, result.report.n_success,
              evade::fmt_double(result.report.success_rate).c_str(), result.summaries.size(),
              a.out.c_str());
  return 0;
}

// --- sweep ---------------------------------------------------------------------

struct SweepArgs {
  DataFlags data;
  std::string test_dataset, test_labels;
  std::string classes_csv;
  std::string scale = "unit";
  std::string kernel = "rbf";
  std::string grid_file;
  double cost = 1.0;
  AttackFlags attack;
  unsigned jobs = 1;
  unsigned point_jobs = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::vector<evade::GridPoint> parse_grid(const fs::path& path) {
  const std::string text = evade::read_file(path);
  std::vector<evade::GridPoint> grid;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string g, c;
    if (!(ls >> g)) continue;  // blank / comment line
    if (!(ls >> c))
      throw evade::FormatError("grid line " + std::to_string(line_no) +
                               ": expected 'gamma cost'");
    std::string extra;
    if (ls >> extra)
      throw evade::FormatError("grid line " + std::to_string(line_no) + ": trailing token '" +
                               extra + "'");
    evade::GridPoint p;
    p.gamma = evade::parse_double(g, "grid gamma");
    p.cost = evade::parse_double(c, "grid cost");
    grid.push_back(p);
  }
  if (grid.empty()) throw evade::EmptyWorkError("grid file has no points: " + path.string());
  return grid;
}

// First data row of a point CSV must carry the expected gamma and C; anything
// else means the file belongs to a different grid and is recomputed.
bool point_file_matches(const fs::path& path, const evade::GridPoint& p) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return false;
  const std::string text = evade::read_file(path);
  const std::size_t header_end = text.find('\n');
  if (header_end == std::string::npos) return false;
  if (text.compare(0, header_end, evade::campaign_csv_header()) != 0) return false;
  const std::size_t row_end = text.find('\n', header_end + 1);
  if (row_end == std::string::npos) return false;
  const std::string row = text.substr(header_end + 1, row_end - header_end - 1);
  const std::size_t c1 = row.find(',');
  if (c1 == std::string::npos) return false;
  const std::size_t c2 = row.find(',', c1 + 1);
  if (c2 == std::string::npos) return false;
  try {
    return evade::parse_double(row.substr(0, c1), "point gamma") == p.gamma &&
           evade::parse_double(row.substr(c1 + 1, c2 - c1 - 1), "point cost") == p.cost;
  } catch (const evade::FormatError&) {
    return false;
  }
}

int cmd_sweep(const SweepArgs& a) {
  evade::Dataset train = load_data(a.data);
  DataFlags tf = a.data;
  tf.dataset = a.test_dataset;
  tf.labels = a.test_labels;
  evade::Dataset test = load_data(tf);
  if (!a.classes_csv.empty()) {
    const auto keep = parse_class_list(a.classes_csv);
    train = evade::filter_classes(train, keep);
    test = evade::filter_classes(test, keep);
  }
  if (a.scale != "none") {
    const auto scaling = evade::fit_scaling(train, scale_target(a.scale));
    train = evade::apply_scaling(train, scaling);
    test = evade::apply_scaling(test, scaling);
    evade::save_scaling(scaling, fs::path(a.out) / "scaling.txt");
  }

  std::vector<evade::GridPoint> grid = parse_grid(a.grid_file);
  std::stable_sort(grid.begin(), grid.end(),
                   [](const evade::GridPoint& x, const evade::GridPoint& y) {
                     return x.gamma != y.gamma ? x.gamma < y.gamma : x.cost < y.cost;
                   });

  const evade::AttackConfig cfg = build_attack_config(a.attack, test.feature_range);
  const fs::path out_dir(a.out);
  const fs::path points_dir = out_dir / "points";

  auto point_path = [&](std::size_t i) {
    return points_dir / ("point_" + std::to_string(i) + ".csv");
  };

  std::vector<std::size_t> pending;
  std::size_t reused = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (point_file_matches(point_path(i), grid[i]))
      ++reused;
    else
      pending.push_back(i);
  }

  evade::SweepOptions sweep_opts;
  sweep_opts.campaign.n_threads = a.jobs;
  sweep_opts.campaign.source_class = a.attack.source_class;
  sweep_opts.point_threads = a.point_jobs;
  sweep_opts.kernel = a.kernel == "linear" ? evade::KernelKind::Linear : evade::KernelKind::Rbf;
  sweep_opts.train.n_threads = a.jobs;
  sweep_opts.train.cost = a.cost;  // overridden per grid point

  std::string failures;
  std::size_t failed = 0;
  if (!pending.empty()) {
    std::vector<evade::GridPoint> todo;
    todo.reserve(pending.size());
    for (std::size_t i : pending) todo.push_back(grid[i]);
    const auto results = evade::gamma_sweep(train, test, todo, cfg, sweep_opts);
    // gamma_sweep returns points in the same (gamma, cost) order as `pending`.
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& r = results[k];
      if (r.report) {
        evade::write_file_atomic(point_path(pending[k]), evade::campaign_csv(*r.report));
      } else {
        ++failed;
        failures += evade::fmt_double(r.point.gamma) + "," + evade::fmt_double(r.point.cost) +
                    ": " + r.error + "\n";
      }
    }
  }
  if (!failures.empty()) evade::write_file_atomic(out_dir / "failures.txt", failures);

  std::string merged = evade::campaign_csv_header();
  merged += '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::error_code ec;
    if (!fs::exists(point_path(i), ec)) continue;
    const std::string text = evade::read_file(point_path(i));
    const std::size_t header_end = text.find('\n');
    if (header_end != std::string::npos) merged += text.substr(header_end + 1);
  }
  evade::write_file_atomic(out_dir / "sweep.csv", merged);

  ordered_json params = data_json(a.data);
  params["test_dataset"] = a.test_dataset;
  params["classes"] = a.classes_csv.empty() ? ordered_json(nullptr) : ordered_json(a.classes_csv);
  params["scale"] = a.scale;
  params["kernel"] = a.kernel;
  params["grid"] = a.grid_file;
  params["cost"] = a.cost;
  params["attack"] = attack_json(a.attack, cfg.eta);
  params["jobs"] = a.jobs;
  params["point_jobs"] = a.point_jobs;
  write_config(out_dir, "sweep", a.seed, std::move(params));

  std::printf("sweep: %zu grid points (%zu computed, %zu reused, %zu failed) -> %s\n",
              grid.size(), pending.size() - failed, reused, failed,
              (out_dir / "sweep.csv").string().c_str());
  if (failed == grid.size() && reused == 0)
    throw evade::EmptyWorkError("sweep: every grid point failed");
  return 0;
}

// --- analyze --------------------------------------------------------------------

struct AnalyzeArgs {
  std::string model;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

std::string direction_label(int from, int to) {
  auto name = [](int c) {
    return c == evade::kRestClass ? std::string("rest") : std::to_string(c);
  };
  return name(from) + "->" + name(to);
}

int cmd_analyze(const AnalyzeArgs& a) {
  const evade::AnyModel any = evade::load_model(a.model);

  std::vector<const evade::SvmBinaryModel*> models;
  if (const auto* b = std::get_if<evade::SvmBinaryModel>(&any)) {
    models.push_back(b);
  } else {
    for (const auto& sub : std::get<evade::MulticlassModel>(any).per_class_models)
      models.push_back(&sub);
  }
  if (models.front()->kernel.kind != evade::KernelKind::Rbf)
    throw evade::FormatError("analyze: width analysis needs an rbf model");

  std::string csv = "direction,sv_index,min_dist,margin_proxy,width,covered\n";
  std::ostringstream summary;
  const double gamma = models.front()->kernel.gamma;
  const double width = 2.0 / std::sqrt(gamma);
  summary << "model: " << a.model << "\n";
  summary << "kernel: rbf gamma=" << evade::fmt_double(gamma)
          << "  width 2/sqrt(gamma)=" << evade::fmt_double(width) << "\n";

  for (const auto* m : models) {
    const auto profiles = evade::min_inter_class_sv_distance(*m);
    const auto margins = evade::margin_proxy(*m);
    std::map<std::size_t, double> margin_of(margins.begin(), margins.end());
    for (const auto& profile : {profiles.first, profiles.second}) {
      const std::string dir = direction_label(profile.from_class, profile.to_class);
      std::vector<double> dists, dir_margins;
      for (const auto& [sv, dist] : profile.per_sv_min_dist) {
        csv += dir + "," + std::to_string(sv) + "," + evade::fmt_double(dist) + "," +
               evade::fmt_double(margin_of.at(sv)) + "," + evade::fmt_double(width) + "," +
               (width >= dist ? "1" : "0") + "\n";
        dists.push_back(dist);
        dir_margins.push_back(margin_of.at(sv));
      }
      const double coverage = evade::width_coverage(gamma, profile);
      auto [mn, mx] = std::minmax_element(dists.begin(), dists.end());
      summary << "direction " << dir << ": n_sv=" << dists.size()
              << " min_dist=[" << evade::fmt_double(*mn) << ", " << evade::fmt_double(*mx)
              << "] coverage=" << evade::fmt_double(coverage) << "%";
      if (dists.size() >= 2) {
        const double rho = evade::spearman(dists, dir_margins);
        if (std::isfinite(rho))
          summary << " spearman(min_dist, margin)=" << evade::fmt_double(rho);
      }
      summary << "\n";
    }
  }

  const fs::path out_dir(a.out);
  evade::write_file_atomic(out_dir / "mindist.csv", csv);
  evade::write_file_atomic(out_dir / "summary.txt", summary.str());

  ordered_json params;
  params["model"] = a.model;
  write_config(out_dir, "analyze", a.seed, std::move(params));

  std::fputs(summary.str().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-SVM evasion-attack laboratory"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train an SVM and save the model");
  add_data_flags(train_cmd, train_args.data, "training");
  train_cmd->add_option("--classes", train_args.classes_csv, "keep only these labels (a,b[,...])");
  train_cmd->add_option("--scale", train_args.scale, "feature scaling")
      ->check(CLI::IsMember({"unit", "sym", "none"}));
  train_cmd->add_option("--kernel", train_args.kernel, "kernel kind")
      ->check(CLI::IsMember({"rbf", "linear"}));
  train_cmd->add_option("--gamma", train_args.gamma, "rbf width parameter");
  train_cmd->add_option("--cost", train_args.cost, "soft-margin C");
  train_cmd->add_option("--tolerance", train_args.tolerance, "KKT tolerance");
  train_cmd->add_option("--test", train_args.test_dataset, "held-out data for the accuracy line");
  train_cmd->add_option("--test-labels", train_args.test_labels, "idx labels for --test");
  train_cmd->add_option("--jobs", train_args.jobs, "worker threads");
  train_cmd->add_option("--seed", train_args.seed, "run seed (logged in config.json)");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();

  AttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand("attack", "run an attack campaign against a saved model");
  attack_cmd->add_option("--model", attack_args.model, "model file")->required();
  attack_cmd->add_option("--surrogate", attack_args.surrogate,
                         "surrogate model file (runs a transfer campaign)");
  add_data_flags(attack_cmd, attack_args.data, "test");
  attack_cmd->add_option("--classes", attack_args.classes_csv, "keep only these labels");
  attack_cmd->add_option("--scaling", attack_args.scaling_file,
                         "scaling.txt saved by train, replayed on the test data");
  add_attack_flags(attack_cmd, attack_args.attack);
  attack_cmd->add_option("--jobs", attack_args.jobs, "worker threads");
  attack_cmd->add_option("--seed", attack_args.seed, "run seed (logged in config.json)");
  attack_cmd->add_option("--out", attack_args.out, "output directory")->required();

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "train + attack across a gamma grid");
  add_data_flags(sweep_cmd, sweep_args.data, "training");
  sweep_cmd->add_option("--test", sweep_args.test_dataset, "test data file")->required();
  sweep_cmd->add_option("--test-labels", sweep_args.test_labels, "idx labels for --test");
  sweep_cmd->add_option("--classes", sweep_args.classes_csv, "keep only these labels");
  sweep_cmd->add_option("--scale", sweep_args.scale, "feature scaling")
      ->check(CLI::IsMember({"unit", "sym", "none"}));
  sweep_cmd->add_option("--kernel", sweep_args.kernel, "kernel kind")
      ->check(CLI::IsMember({"rbf", "linear"}));
  sweep_cmd->add_option("--grid", sweep_args.grid_file, "grid file: 'gamma cost' per line")
      ->required();
  sweep_cmd->add_option("--cost", sweep_args.cost, "default C when exploring gamma only");
  add_attack_flags(sweep_cmd, sweep_args.attack);
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "worker threads per point");
  sweep_cmd->add_option("--point-jobs", sweep_args.point_jobs, "grid points in flight");
  sweep_cmd->add_option("--seed", sweep_args.seed, "run seed (logged in config.json)");
  sweep_cmd->add_option("--out", sweep_args.out, "output directory")->required();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "support-vector MinDist / width-coverage report");
  analyze_cmd->add_option("--model", analyze_args.model, "model file")->required();
  analyze_cmd->add_option("--seed", analyze_args.seed, "run seed (logged in config.json)");
  analyze_cmd->add_option("--out", analyze_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (*train_cmd) return cmd_train(train_args);
    if (*attack_cmd) return cmd_attack(attack_args);
    if (*sweep_cmd) return cmd_sweep(sweep_args);
    return cmd_analyze(analyze_args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const evade::EmptyWorkError& e) {
    std::fprintf(stderr, "error (empty work): %s\n", e.what());
    return 3;
  } catch (const evade::FormatError& e) {
    std::fprintf(stderr, "error (input): %s\n", e.what());
    return 2;
  } catch (const evade::IoError& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
