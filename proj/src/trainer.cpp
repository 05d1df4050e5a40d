#include "slc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "slc/autodiff.hpp"
#include "slc/errors.hpp"
#include "slc/pols.hpp"
#include "slc/rng.hpp"

namespace slc {
namespace {

enum Stream : std::uint64_t { kInit = 1, kSampler = 2, kProbe = 3, kNoise = 4 };

std::vector<std::size_t> probe_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(CounterRng::derive(seed, kProbe));
  rng.shuffle(idx);
  idx.resize(std::min(n, size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double probe_margin(const MlpModel& model, const Dataset& probe) {
  if (probe.k < 2) return 0.0;
  return separation(LogitMatrix(model.forward_all(probe.features), probe.labels)).margin;
}

}  // namespace

void TrainConfig::validate() const {
  loss.validate();
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (steps < 1) throw ConfigError("train.steps", "must be >= 1");
  if (learning_rates.empty()) throw ConfigError("train.learning_rates", "needs at least one rate");
  for (double lr : learning_rates)
    if (!(lr > 0.0)) throw ConfigError("train.learning_rates", "rates must be positive");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("train.hidden", "widths must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("train.bn_momentum", "must lie in (0, 1]");
  if (!(bn_epsilon > 0.0)) throw ConfigError("train.bn_epsilon", "must be > 0");
  if (log_every < 1) throw ConfigError("train.log_every", "must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"loss", to_json(c.loss)},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"learning_rates", c.learning_rates},
          {"seed", c.seed},
          {"hidden", c.hidden},
          {"batch_norm", c.batch_norm},
          {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon},
          {"log_every", c.log_every},
          {"probe_size", c.probe_size}};
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "step,loss,val_acc,probe_margin\n";
  out.precision(17);
  for (const auto& e : entries)
    out << e.step << ',' << e.loss << ',' << e.val_accuracy << ',' << e.probe_margin << '\n';
}

TrainHistory TrainHistory::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "step,loss,val_acc,probe_margin") throw FormatError(path.string() + ": unexpected history header");
  TrainHistory h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    HistoryEntry e;
    char comma;
    if (!(row >> e.step >> comma >> e.loss >> comma >> e.val_accuracy >> comma >> e.probe_margin))
      throw FormatError(path.string() + ": malformed history row '" + line + "'");
    h.entries.push_back(e);
  }
  return h;
}

TrainingDiverged::TrainingDiverged(std::size_t step, double last_finite_loss)
    : NumericalError("training diverged at step " + std::to_string(step) +
                     " (last finite loss " + std::to_string(last_finite_loss) + ")"),
      step_(step),
      last_finite_loss_(last_finite_loss) {}

double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const Tensor logits = model.forward_all(data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = logits.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const TrainConfig& config, double learning_rate, const Dataset& train_set,
                  const Dataset& val_set) {
  config.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
  if (train_set.size() == 0) throw DomainError("train: empty training set");
  if (val_set.k != train_set.k || (val_set.size() > 0 && val_set.width() != train_set.width()))
    throw DimensionError("train: validation set does not match the training set's shape");
  config.loss.validate(train_set.k);

  const Architecture arch{train_set.width(), config.hidden, train_set.k, config.batch_norm};
  MlpModel model = MlpModel::initialize(arch, CounterRng::derive(config.seed, kInit));
  for (auto& bn : model.norms()) {
    bn.momentum = config.bn_momentum;
    bn.epsilon = config.bn_epsilon;
  }
  BatchSampler sampler(train_set.size(), config.batch_size, CounterRng::derive(config.seed, kSampler));
  const Dataset probe = train_set.subset(probe_indices(train_set.size(), config.probe_size, config.seed));

  TrainResult result{model, {}, learning_rate, 0.0};
  LossConfig loss = config.loss;
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const auto batch = sampler.next();
    const Tensor x = train_set.features.gather_rows(batch);
    std::vector<std::size_t> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) y[i] = train_set.labels[batch[i]];

    Tape tape;
    const auto graph = model.record(tape, x);
    const Tensor& z = tape.value(graph.logits);
    if (!z.all_finite()) throw TrainingDiverged(step, last_finite);
    loss.mc_seed = CounterRng::derive(config.loss.mc_seed ^ CounterRng::derive(config.seed, kNoise), step);
    const LossValue lv = loss_dispatch(loss, LogitMatrix(z, y));
    if (!std::isfinite(lv.value)) throw TrainingDiverged(step, last_finite);
    last_finite = lv.value;
    tape.backward(tape.external_loss(graph.logits, lv.value, lv.gradient));

    auto params = model.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto dst = params[p]->data();
      const auto g = tape.grad(graph.params[p]).data();
      for (std::size_t n = 0; n < dst.size(); ++n) dst[n] -= learning_rate * g[n];
      if (!params[p]->all_finite()) throw TrainingDiverged(step, last_finite);
    }
    for (std::size_t l = 0; l < graph.norm_nodes.size(); ++l)
      batchnorm_update(model.norms()[l], tape.batch_stats(graph.norm_nodes[l]));

    if (step % config.log_every == 0 || step == config.steps) {
      result.history.entries.push_back(
          {step, lv.value, val_set.size() ? accuracy(model, val_set) : 0.0, probe_margin(model, probe)});
    }
  }
  result.val_accuracy = val_set.size() ? accuracy(model, val_set) : 0.0;
  result.model = std::move(model);
  return result;
}

GridResult grid_search(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set) {
  config.validate();
  std::optional<TrainResult> best;
  std::vector<GridEntry> runs;
  std::ostringstream failures;
  for (double lr : config.learning_rates) {
    GridEntry entry{lr};
    try {
      TrainResult r = train(config, lr, train_set, val_set);
      entry.val_accuracy = r.val_accuracy;
      entry.final_loss = r.history.entries.empty() ? 0.0 : r.history.entries.back().loss;
      const bool better = !best || r.val_accuracy > best->val_accuracy ||
                          (r.val_accuracy == best->val_accuracy && lr < best->learning_rate);
      if (better) best = std::move(r);
    } catch (const TrainingDiverged& e) {
      entry.diverged = true;
      entry.diverged_at = e.step();
      failures << " lr=" << lr << ": " << e.what() << ';';
    }
    runs.push_back(entry);
  }
  if (!best) throw NumericalError("grid search: every learning rate diverged;" + failures.str());
  return GridResult{std::move(*best), std::move(runs)};
}

nlohmann::json to_json(const GridEntry& e) {
  nlohmann::json j{{"learning_rate", e.learning_rate},
                   {"diverged", e.diverged},
                   {"val_accuracy", e.val_accuracy},
                   {"final_loss", e.final_loss}};
  j["diverged_at"] = e.diverged_at ? nlohmann::json(*e.diverged_at) : nlohmann::json(nullptr);
  return j;
}

}  // namespace slc
