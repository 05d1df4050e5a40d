#include "slc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "slc/bench.hpp"
#include "slc/config.hpp"
#include "slc/data.hpp"
#include "slc/errors.hpp"
#include "slc/losses.hpp"
#include "slc/network.hpp"
#include "slc/pols.hpp"
#include "slc/rng.hpp"
#include "slc/slc_eval.hpp"
#include "slc/trainer.hpp"

#ifndef SLC_VERSION
#define SLC_VERSION "dev"
#endif

namespace slc::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

// Creates `dir` and proves it is writable before any compute starts.
void prepare_output_dir(const fs::path& dir, const std::string& field) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(field, "cannot create " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".slc_write_test";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError(field, dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) prepare_output_dir(path.parent_path(), "output");
  std::ofstream out(path);
  if (!out) throw ConfigError("output", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DatasetSource parse_source(const std::string& uri, bool csv_header, const char* field) {
  try {
    DatasetSource s = DatasetSource::parse(uri);
    s.csv_header = csv_header;
    s.check_resolvable();
    return s;
  } catch (const ConfigError& e) {
    throw ConfigError(field, e.what());
  }
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  fs::path config;
  std::vector<std::string> overrides;
  std::string output;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  json config = load_config_file(a.config);
  for (const auto& o : a.overrides) apply_override(config, o);
  RunConfig rc = RunConfig::from_json(config, default_output_dir());
  if (!a.output.empty()) rc.output_dir = a.output;

  auto resolvable = [](const DatasetSource& source, const char* field) {
    try {
      source.check_resolvable();
    } catch (const ConfigError& e) {
      throw ConfigError(field, e.what());
    }
  };
  resolvable(rc.data, "data.train");
  if (rc.test_data) resolvable(*rc.test_data, "data.test");
  prepare_output_dir(rc.output_dir, "output.dir");

  const Dataset full = rc.data.load();
  rc.train.loss.validate(full.k);
  auto [train_set, val_set] = split(full, rc.validation_fraction, rc.split_seed);
  std::optional<Dataset> test_set;
  if (rc.test_data) {
    test_set = rc.test_data->load();
    if (test_set->k != full.k || test_set->width() != full.width())
      throw ConfigError("data.test", "shape " + std::to_string(test_set->width()) + " features, k=" +
                                         std::to_string(test_set->k) + " does not match training data (" +
                                         std::to_string(full.width()) + " features, k=" +
                                         std::to_string(full.k) + ")");
  }

  out << "training " << to_string(rc.train.loss.kind) << " on " << rc.data.uri() << " ("
      << train_set.size() << " train / " << val_set.size() << " validation examples, "
      << rc.train.learning_rates.size() << " learning rates x " << rc.train.steps << " steps)\n";
  const GridResult grid = grid_search(rc.train, train_set, val_set);

  json runs = json::array();
  for (const auto& r : grid.runs) {
    runs.push_back(to_json(r));
    out << "  lr " << std::setw(8) << fmt(r.learning_rate) << "  "
        << (r.diverged ? std::string("diverged") : "val_acc " + fmt(r.val_accuracy, 4)) << '\n';
  }
  out << "selected lr " << fmt(grid.best.learning_rate) << " (val_acc " << fmt(grid.best.val_accuracy, 4)
      << ")\n";

  const json resolved = rc.to_json();
  const fs::path ckpt = rc.output_dir / "model.ckpt";
  const fs::path history = rc.output_dir / "history.csv";
  const fs::path manifest_path = rc.output_dir / "manifest.json";
  save_checkpoint(ckpt, grid.best.model,
                  {{"config", resolved},
                   {"learning_rate", grid.best.learning_rate},
                   {"data", rc.data.uri()},
                   {"test_data", rc.test_data ? json(rc.test_data->uri()) : json()},
                   {"version", version()}});
  grid.best.history.write_csv(history);

  json manifest{
      {"version", version()},
      {"command", argv},
      {"overrides", a.overrides},
      {"config", resolved},
      {"seeds",
       {{"train", rc.train.seed},
        {"split", rc.split_seed},
        {"loss_mc", rc.train.loss.mc_seed},
        {"data", rc.data.kind == DatasetSource::Kind::synth ? json(rc.data.synth.seed) : json()}}},
      {"grid", runs},
      {"selected_learning_rate", grid.best.learning_rate},
      {"val_accuracy", grid.best.val_accuracy},
      {"outputs", {{"checkpoint", ckpt.string()}, {"history", history.string()}}}};
  if (test_set) {
    const double acc = accuracy(grid.best.model, *test_set);
    manifest["test_accuracy"] = acc;
    out << "test accuracy " << fmt(acc, 4) << '\n';
  }
  write_json(manifest_path, manifest);
  out << "wrote " << ckpt.string() << ", " << history.string() << ", " << manifest_path.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  fs::path checkpoint;
  std::string data;
  bool csv_header = false;
  std::string mode = "both";
  std::string output;
};

// Dataset named on the command line, else the checkpoint's test set, else
// its training set.
DatasetSource eval_source(const std::string& uri, bool csv_header, const json& metadata) {
  if (!uri.empty()) return parse_source(uri, csv_header, "data");
  for (const char* key : {"test_data", "data"}) {
    if (metadata.contains(key) && metadata.at(key).is_string())
      return parse_source(metadata.at(key).get<std::string>(), csv_header, "data");
  }
  throw ConfigError("data", "no dataset given and the checkpoint does not name one");
}

Dataset load_matching(const DatasetSource& source, const MlpModel& model) {
  Dataset data = source.load();
  if (data.k != model.classes())
    throw ConfigError("data", "dataset has k=" + std::to_string(data.k) + " classes but the checkpoint has " +
                                  std::to_string(model.classes()));
  if (data.width() != model.input_width())
    throw ConfigError("data", "dataset has " + std::to_string(data.width()) +
                                  " features but the checkpoint expects " +
                                  std::to_string(model.input_width()));
  return data;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::vector<ScoreMode> modes;
  if (a.mode == "both") {
    modes = {ScoreMode::single_logit, ScoreMode::all_logits_softmax};
  } else {
    try {
      modes = {parse_score_mode(a.mode)};
    } catch (const std::exception& e) {
      throw ConfigError("mode", e.what());
    }
  }
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const DatasetSource source = eval_source(a.data, a.csv_header, ckpt.metadata);
  const fs::path output = a.output.empty() ? default_output_dir() / "eval.json" : fs::path(a.output);
  if (output.has_parent_path()) prepare_output_dir(output.parent_path(), "output");
  const Dataset data = load_matching(source, ckpt.model);

  json reports = json::array();
  for (ScoreMode mode : modes) {
    const SlcReport report = evaluate_slc(ckpt.model, data, mode);
    reports.push_back(to_json(report));
    out << std::left << std::setw(20) << to_string(mode) << " macro AUPRC " << fmt(report.macro.auprc)
        << "  1-AUPRC " << fmt(report.one_minus_macro.auprc) << "  P@0.90 " << fmt(report.macro.p_at_090)
        << "  P@0.99 " << fmt(report.macro.p_at_099) << '\n';
    for (const auto& w : report.warnings) out << "  warning: " << w << '\n';
  }
  const SeparationReport sep = separation(LogitMatrix(ckpt.model.forward_all(data.features), data.labels));
  out << "separation margin " << fmt(sep.margin) << ", violating pair fraction "
      << fmt(sep.violating_pair_fraction) << '\n';

  write_json(output, {{"checkpoint", a.checkpoint.string()},
                      {"data", source.uri()},
                      {"examples", data.size()},
                      {"reports", reports},
                      {"separation", to_json(sep)}});
  out << "wrote " << output.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  fs::path checkpoint;
  std::string data;
  bool csv_header = false;
  std::size_t probe_size = 256;
  std::uint64_t probe_seed = 0;
  std::string counterexample;
  double alpha = 1.0;
  bool check_alignment = false;
  AlignmentOptions alignment;
  std::string start = "mixed";
  double gamma = 1.0;
  std::string output;
};

void print_separation(std::ostream& out, const SeparationReport& s) {
  out << "  min true logit         " << fmt(s.min_true_logit) << '\n'
      << "  max false logit        " << fmt(s.max_false_logit) << '\n'
      << "  margin                 " << fmt(s.margin) << (s.separated() ? "  (separated)" : "  (not separated)")
      << '\n'
      << "  violating pairs        " << s.violating_pairs << " / " << s.n_true * s.n_false << '\n';
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() && a.counterexample.empty() && !a.check_alignment)
    throw UsageError("diagnose needs --checkpoint, --counterexample or --check-alignment");
  if (!a.output.empty() && fs::path(a.output).has_parent_path())
    prepare_output_dir(fs::path(a.output).parent_path(), "output");
  json result = json::object();

  if (!a.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const DatasetSource source = eval_source(a.data, a.csv_header, ckpt.metadata);
    Dataset data = load_matching(source, ckpt.model);
    if (a.probe_size > 0 && a.probe_size < data.size()) {
      std::vector<std::size_t> idx(data.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      CounterRng rng(a.probe_seed);
      rng.shuffle(idx);
      idx.resize(a.probe_size);
      data = data.subset(idx);
    }
    const SeparationReport sep = separation(LogitMatrix(ckpt.model.forward_all(data.features), data.labels));
    out << "checkpoint " << a.checkpoint.string() << " on " << data.size() << " probe examples of "
        << source.uri() << '\n';
    print_separation(out, sep);
    result["checkpoint"] = {{"path", a.checkpoint.string()},
                            {"data", source.uri()},
                            {"probe_examples", data.size()},
                            {"separation", to_json(sep)}};
  }

  if (!a.counterexample.empty()) {
    if (a.counterexample != "ce" && a.counterexample != "margin")
      throw ConfigError("counterexample", "expected ce or margin, got '" + a.counterexample + "'");
    const bool margin = a.counterexample == "margin";
    const LogitMatrix lm = margin ? counterexample_margin(a.alpha) : counterexample_ce(a.alpha);
    const SeparationReport sep = separation(lm);
    out << "counterexample " << a.counterexample << " (alpha = " << fmt(a.alpha) << ")\n";
    print_separation(out, sep);
    out << "  " << std::left << std::setw(18) << "loss" << "per-example value\n";
    json losses = json::object();
    for (LossKind kind : kAllLosses) {
      LossConfig cfg;
      cfg.kind = kind;
      cfg.gamma = margin ? a.alpha : a.gamma;
      const LossValue v = loss_dispatch(cfg, lm);
      losses[std::string(to_string(kind))] = v.value;
      out << "  " << std::left << std::setw(18) << to_string(kind) << fmt(v.value) << '\n';
    }
    result["counterexample"] = {{"name", a.counterexample},
                                {"alpha", a.alpha},
                                {"separation", to_json(sep)},
                                {"losses", losses}};
    json rows = json::array();
    for (std::size_t i = 0; i < lm.m(); ++i) {
      const auto row = lm.z().row(i);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    result["counterexample"]["logits"] = rows;
    result["counterexample"]["labels"] = lm.labels();
  }

  if (a.check_alignment) {
    AlignmentOptions opt = a.alignment;
    if (a.start == "random") opt.start = AlignmentStart::random;
    else if (a.start == "counterexample") opt.start = AlignmentStart::counterexample;
    else if (a.start == "mixed") opt.start = AlignmentStart::mixed;
    else throw ConfigError("start", "expected random, counterexample or mixed");
    std::vector<AlignmentResult> results;
    for (LossKind kind : kAllLosses) {
      LossConfig cfg;
      cfg.kind = kind;
      cfg.gamma = a.gamma;
      results.push_back(check_alignment(cfg, opt));
    }
    auto min_margin = [](const AlignmentResult& r) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& t : r.trials) m = std::min(m, t.final_margin);
      return m;
    };
    out << "alignment check: " << opt.trials << " trials x " << opt.steps << " descent steps\n";
    out << "  " << std::left << std::setw(18) << "loss" << std::setw(14) << "verdict" << "min final margin\n";
    auto print_group = [&](bool aligned) {
      for (const auto& r : results) {
        if ((r.verdict == Verdict::aligned) != aligned) continue;
        out << "  " << std::left << std::setw(18) << to_string(r.kind) << std::setw(14)
            << (r.verdict == Verdict::aligned ? "aligned"
                                              : r.verdict == Verdict::not_aligned ? "NOT aligned" : "inconclusive")
            << fmt(min_margin(r)) << '\n';
      }
    };
    print_group(false);
    out << "  " << std::string(46, '-') << '\n';
    print_group(true);
    json verdicts = json::array();
    for (const auto& r : results) verdicts.push_back(to_json(r));
    result["alignment"] = verdicts;
  }

  if (!a.output.empty()) {
    write_json(a.output, result);
    out << "wrote " << a.output << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  fs::path config;
  std::vector<std::size_t> classes;
  std::string backbone;
  std::optional<std::size_t> input_width, batch, reps, warmup;
  std::optional<std::uint64_t> seed;
  std::string output;
};

std::vector<std::size_t> parse_widths(const std::string& text) {
  if (text == "none") return {};
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long w = std::stoull(item, &used);
      if (used != item.size() || w == 0) throw std::invalid_argument(item);
      widths.push_back(w);
    } catch (const std::exception&) {
      throw ConfigError("backbone", "expected 'none' or comma-separated widths, got '" + text + "'");
    }
  }
  return widths;
}

BenchConfig bench_config(const BenchArgs& a) {
  BenchConfig c;
  if (!a.config.empty()) {
    const json file = load_config_file(a.config);
    const json& b = file.contains("bench") ? file.at("bench") : file;
    for (const auto& [key, value] : b.items()) {
      // Every bench field is a non-negative integer, a list of them, or a
      // backbone string; reject values json would silently wrap or truncate.
      const bool counts = value.is_number_unsigned() || value.is_string() ||
                          (value.is_array() && std::all_of(value.begin(), value.end(), [](const json& e) {
                             return e.is_number_unsigned();
                           }));
      if (!counts) throw ConfigError("bench." + key, "has the wrong type");
      try {
        if (key == "classes") c.class_counts = value.get<std::vector<std::size_t>>();
        else if (key == "backbone") c.hidden = value.is_string() ? parse_widths(value.get<std::string>())
                                                                 : value.get<std::vector<std::size_t>>();
        else if (key == "input_width") c.input_width = value.get<std::size_t>();
        else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
        else if (key == "repetitions") c.repetitions = value.get<std::size_t>();
        else if (key == "warmup") c.warmup = value.get<std::size_t>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw ConfigError("bench." + key, "unknown field");
      } catch (const json::exception&) {
        throw ConfigError("bench." + key, "has the wrong type");
      }
    }
  }
  if (!a.classes.empty()) c.class_counts = a.classes;
  if (!a.backbone.empty()) c.hidden = parse_widths(a.backbone);
  if (a.input_width) c.input_width = *a.input_width;
  if (a.batch) c.batch_size = *a.batch;
  if (a.reps) c.repetitions = *a.reps;
  if (a.warmup) c.warmup = *a.warmup;
  if (a.seed) c.seed = *a.seed;
  // The single-logit row is always measured; it anchors the speedup column.
  if (c.class_counts.empty() || c.class_counts.front() != 1) c.class_counts.insert(c.class_counts.begin(), 1);
  c.validate();
  return c;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const BenchConfig config = bench_config(a);
  const fs::path dir = a.output.empty() ? default_output_dir() : fs::path(a.output);
  prepare_output_dir(dir, "output");

  const BenchReport report = run_bench(config);
  json j = to_json(report);
  j["config"] = {{"input_width", config.input_width},
                 {"backbone", config.hidden},
                 {"classes", config.class_counts},
                 {"batch_size", config.batch_size},
                 {"repetitions", config.repetitions},
                 {"warmup", config.warmup},
                 {"seed", config.seed}};
  out << std::left << std::setw(10) << "classes" << std::setw(18) << "time/example [s]" << std::setw(14)
      << "stddev [s]" << "speedup\n";
  for (const auto& row : report.rows) {
    out << std::left << std::setw(10) << row.classes << std::setw(18) << fmt(row.time_per_example, 4)
        << std::setw(14) << fmt(row.stddev, 3) << 'x' << fmt(row.speedup, 4) << '\n';
  }
  if (report.rows.size() >= 3) {
    const CostModel m = fit_cost_model(report);
    j["cost_model"] = {{"fixed_cost_s", m.fixed_cost},
                       {"per_class_cost_s", m.per_class_cost},
                       {"r_squared", m.r_squared},
                       {"positive_slope_fraction", m.positive_slope_fraction},
                       {"sign_test_p_value", m.sign_test_p_value}};
    out << "cost model: " << fmt(m.fixed_cost, 4) << " s + " << fmt(m.per_class_cost, 4)
        << " s * k  (R^2 = " << fmt(m.r_squared, 4) << ", sign-test p = " << fmt(m.sign_test_p_value, 3) << ")\n";
  }
  if (report.low_confidence)
    err << "warning: timer resolution is coarser than 1% of a measured interval; timings are low-confidence\n";
  write_json(dir / "bench.json", j);
  write_bench_csv(dir / "bench.csv", report);
  out << "wrote " << (dir / "bench.json").string() << ", " << (dir / "bench.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

std::string version() { return SLC_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-logit classification: train, evaluate, diagnose and benchmark"};
  app.name("slc");
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Grid-search training; writes checkpoint, history and manifest");
  train_cmd->add_option("-c,--config", train_args.config, "Run configuration (TOML subset or manifest JSON)")
      ->required();
  train_cmd->add_option("-o,--override", train_args.overrides, "Dotted-path override, e.g. loss.kind=ce");
  train_cmd->add_option("--output", train_args.output, "Output directory (overrides output.dir)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Per-class AUPRC report and logit separation of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", eval_args.data, "Dataset URI (default: the checkpoint's test or training data)");
  eval_cmd->add_flag("--csv-header", eval_args.csv_header, "CSV dataset has a header row");
  eval_cmd->add_option("--mode", eval_args.mode, "single_logit | all_logits | both");
  eval_cmd->add_option("--output", eval_args.output, "Report path (default: <output dir>/eval.json)");

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Logit separation and loss alignment diagnostics");
  diag_cmd->add_option("--checkpoint", diag.checkpoint, "Model checkpoint to probe");
  diag_cmd->add_option("--data", diag.data, "Probe dataset URI (default: the checkpoint's test or training data)");
  diag_cmd->add_flag("--csv-header", diag.csv_header, "CSV dataset has a header row");
  diag_cmd->add_option("--probe-size", diag.probe_size, "Examples drawn for the probe set (0: all)");
  diag_cmd->add_option("--probe-seed", diag.probe_seed, "Seed of the probe draw");
  diag_cmd->add_option("--counterexample", diag.counterexample, "ce | margin");
  diag_cmd->add_option("--alpha", diag.alpha, "Scale of the counterexample logits");
  diag_cmd->add_option("--gamma", diag.gamma, "Margin of the hinge losses");
  diag_cmd->add_flag("--check-alignment", diag.check_alignment, "Run the descent alignment check on all losses");
  diag_cmd->add_option("--trials", diag.alignment.trials, "Alignment trials per loss");
  diag_cmd->add_option("--steps", diag.alignment.steps, "Descent steps per trial");
  diag_cmd->add_option("--step-size", diag.alignment.step_size, "Descent step size");
  diag_cmd->add_option("--seed", diag.alignment.seed, "Alignment seed");
  diag_cmd->add_option("--start", diag.start, "random | counterexample | mixed");
  diag_cmd->add_option("--output", diag.output, "Write the diagnostics as JSON");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Forward-pass time against class count");
  bench_cmd->add_option("--config", bench.config, "Bench configuration ([bench] table)");
  bench_cmd->add_option("--classes", bench.classes, "Class counts to sweep")->delimiter(',');
  bench_cmd->add_option("--backbone", bench.backbone, "Hidden widths, e.g. 1024,128, or 'none'");
  bench_cmd->add_option("--input-width", bench.input_width, "Input features");
  bench_cmd->add_option("--batch", bench.batch, "Minibatch size");
  bench_cmd->add_option("--reps", bench.reps, "Timed minibatches per class count");
  bench_cmd->add_option("--warmup", bench.warmup, "Discarded warmup minibatches");
  bench_cmd->add_option("--seed", bench.seed, "Model and noise seed");
  bench_cmd->add_option("--output", bench.output, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  std::vector<std::string> argv{"slc"};
  argv.insert(argv.end(), args.begin(), args.end());
  try {
    if (train_cmd->parsed()) return cmd_train(train_args, argv, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (diag_cmd->parsed()) return cmd_diagnose(diag, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::logic_error& e) {
    // Dimension, domain, index and usage errors all stem from bad input here.
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace slc::cli
