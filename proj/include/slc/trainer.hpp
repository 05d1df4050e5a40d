#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slc/data.hpp"
#include "slc/errors.hpp"
#include "slc/losses.hpp"
#include "slc/network.hpp"

namespace slc {

struct TrainConfig {
  LossConfig loss;
  std::size_t batch_size = 64;
  std::size_t steps = 100000;
  std::vector<double> learning_rates = {1.0, 0.1, 0.01, 0.001};
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {500, 500};
  bool batch_norm = true;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  std::size_t log_every = 100;
  std::size_t probe_size = 256;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

struct HistoryEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
  double probe_margin = 0.0;
};

struct TrainHistory {
  std::vector<HistoryEntry> entries;

  void write_csv(const std::filesystem::path& path) const;
  static TrainHistory read_csv(const std::filesystem::path& path);
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
  double learning_rate = 0.0;
  double val_accuracy = 0.0;
};

// Loss became non-finite during training.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(std::size_t step, double last_finite_loss);
  std::size_t step() const noexcept { return step_; }
  double last_finite_loss() const noexcept { return last_finite_loss_; }

 private:
  std::size_t step_;
  double last_finite_loss_;
};

// Minibatch SGD without momentum. Each sampled minibatch is the batch the
// batch losses are defined on. Deterministic for a fixed seed.
TrainResult train(const TrainConfig& config, double learning_rate, const Dataset& train_set,
                  const Dataset& val_set);

// Fraction of examples whose full-logit argmax equals the label.
double accuracy(const MlpModel& model, const Dataset& data);

struct GridEntry {
  double learning_rate = 0.0;
  bool diverged = false;
  std::optional<std::size_t> diverged_at;
  double val_accuracy = 0.0;
  double final_loss = 0.0;
};

struct GridResult {
  TrainResult best;
  std::vector<GridEntry> runs;
};

// Trains one model per learning rate and keeps the one with the highest
// validation accuracy (ties go to the smaller rate). Throws NumericalError
// if every run diverged.
GridResult grid_search(const TrainConfig& config, const Dataset& train_set,
                       const Dataset& val_set);

nlohmann::json to_json(const GridEntry& entry);

}  // namespace slc
