#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slc/autodiff.hpp"
#include "slc/tensor.hpp"

namespace slc {

enum class Mode { train, inference };

struct Architecture {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden;  // widths of the hidden layers
  std::size_t classes = 0;
  bool batch_norm = true;
};

struct DenseLayer {
  Tensor weight;  // fan_in x fan_out
  Tensor bias;    // 1 x fan_out
};

// Batch normalization parameters and running statistics for one layer.
// Running statistics follow running = (1 - momentum) * running + momentum * batch.
struct BatchNormState {
  Tensor scale;
  Tensor shift;
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-5;
  double momentum = 0.1;

  static BatchNormState identity(std::size_t width);
  // Normalizes one row in place using the running statistics.
  void apply_inference(std::span<double> row) const;
};

void batchnorm_update(BatchNormState& state, const BatchStats& batch);

// MLP: hidden layers (dense -> batch norm -> ReLU) followed by a dense
// output layer whose outputs are the logits.
class MlpModel {
 public:
  MlpModel(std::vector<DenseLayer> hidden, std::vector<BatchNormState> norms, DenseLayer output);

  // Glorot-uniform weights from a seeded generator; zero biases; identity
  // batch norm.
  static MlpModel initialize(const Architecture& arch, std::uint64_t seed);

  std::size_t input_width() const;
  std::size_t classes() const noexcept { return output_.weight.cols(); }
  std::size_t feature_width() const noexcept { return output_.weight.rows(); }
  bool has_batch_norm() const noexcept { return !norms_.empty(); }
  Architecture architecture() const;

  const std::vector<DenseLayer>& hidden() const noexcept { return hidden_; }
  const std::vector<BatchNormState>& norms() const noexcept { return norms_; }
  std::vector<BatchNormState>& norms() noexcept { return norms_; }
  const DenseLayer& output() const noexcept { return output_; }

  // Logits for every class, m x k. Inference mode uses running statistics,
  // so each row depends only on its own input.
  Tensor forward_all(const Tensor& batch, Mode mode = Mode::inference) const;
  // Logit of class j alone. Equals forward_all(x)(0, j) bit for bit.
  double forward_single(std::span<const double> x, std::size_t j) const;

  // Backbone output (inference mode), m x feature_width.
  Tensor features(const Tensor& batch) const;
  // Output-layer logit j for precomputed features; reads one weight column.
  double logit_from_features(std::span<const double> features, std::size_t j) const;

  // Records a training-mode forward pass. `params` lines up with
  // parameters(); `norm_nodes` with norms().
  struct Graph {
    Var logits;
    std::vector<Var> params;
    std::vector<Var> norm_nodes;
  };
  Graph record(Tape& tape, const Tensor& batch) const;
  std::vector<Tensor*> parameters();

 private:
  Tensor backbone(const Tensor& batch, Mode mode) const;
  void check_input(std::size_t width) const;

  std::vector<DenseLayer> hidden_;
  std::vector<BatchNormState> norms_;
  DenseLayer output_;
};

// Binary checkpoint: magic, JSON header (shapes, batch-norm constants,
// caller metadata), then every parameter as raw IEEE-754 doubles.
void save_checkpoint(const std::filesystem::path& path, const MlpModel& model,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct Checkpoint {
  MlpModel model;
  nlohmann::json metadata;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace slc
