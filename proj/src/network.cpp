#include "slc/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "slc/errors.hpp"
#include "slc/kernels.hpp"
#include "slc/rng.hpp"

namespace slc {
namespace {

constexpr char kMagic[8] = {'S', 'L', 'C', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

Tensor glorot(std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(fan_in, fan_out);
  for (double& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
}

void normalize_with(Tensor& t, const BatchNormState& bn, const Tensor& mean, const Tensor& var) {
  for (std::size_t c = 0; c < t.cols(); ++c) {
    const double inv_std = 1.0 / std::sqrt(var(0, c) + bn.epsilon);
    for (std::size_t r = 0; r < t.rows(); ++r)
      t(r, c) = (t(r, c) - mean(0, c)) * inv_std * bn.scale(0, c) + bn.shift(0, c);
  }
}

BatchStats batch_statistics(const Tensor& t) {
  BatchStats s{Tensor(1, t.cols()), Tensor(1, t.cols())};
  const double inv_m = 1.0 / static_cast<double>(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) s.mean(0, c) += t(r, c);
  for (double& v : s.mean.data()) v *= inv_m;
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double d = t(r, c) - s.mean(0, c);
      s.variance(0, c) += d * d;
    }
  for (double& v : s.variance.data()) v *= inv_m;
  return s;
}

// --- checkpoint byte helpers -------------------------------------------------

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(bits.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  std::array<char, sizeof(T)> bits;
  const auto offset = static_cast<long long>(in.tellg());
  if (!in.read(bits.data(), sizeof(T))) {
    throw FormatError(path.string() + ": truncated checkpoint at byte " + std::to_string(offset));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

void write_tensor(std::ostream& out, const Tensor& t) {
  for (double v : t.data()) write_le(out, v);
}

Tensor read_tensor(std::istream& in, const std::filesystem::path& path, std::size_t rows,
                   std::size_t cols) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = read_le<double>(in, path);
  return t;
}

}  // namespace

BatchNormState BatchNormState::identity(std::size_t width) {
  return BatchNormState{Tensor(1, width, 1.0), Tensor(1, width, 0.0), Tensor(1, width, 0.0),
                        Tensor(1, width, 1.0)};
}

void BatchNormState::apply_inference(std::span<double> row) const {
  for (std::size_t c = 0; c < row.size(); ++c) {
    const double inv_std = 1.0 / std::sqrt(running_var(0, c) + epsilon);
    row[c] = (row[c] - running_mean(0, c)) * inv_std * scale(0, c) + shift(0, c);
  }
}

void batchnorm_update(BatchNormState& state, const BatchStats& batch) {
  if (!batch.mean.same_shape(state.running_mean) || !batch.variance.same_shape(state.running_var)) {
    throw DimensionError("batchnorm_update: statistics " + batch.mean.shape_string() +
                         " do not match state " + state.running_mean.shape_string());
  }
  const double mu = state.momentum;
  for (std::size_t c = 0; c < batch.mean.cols(); ++c) {
    state.running_mean(0, c) = (1.0 - mu) * state.running_mean(0, c) + mu * batch.mean(0, c);
    state.running_var(0, c) = (1.0 - mu) * state.running_var(0, c) + mu * batch.variance(0, c);
  }
}

MlpModel::MlpModel(std::vector<DenseLayer> hidden, std::vector<BatchNormState> norms,
                   DenseLayer output)
    : hidden_(std::move(hidden)), norms_(std::move(norms)), output_(std::move(output)) {
  if (!norms_.empty() && norms_.size() != hidden_.size())
    throw DimensionError("MlpModel: one batch-norm state per hidden layer is required");
  std::size_t width = hidden_.empty() ? output_.weight.rows() : hidden_.front().weight.rows();
  auto check_layer = [&](const DenseLayer& layer, const std::string& name) {
    if (layer.weight.rows() != width) {
      throw DimensionError("MlpModel: " + name + " expects input width " +
                           std::to_string(layer.weight.rows()) + " but receives " +
                           std::to_string(width));
    }
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols())
      throw DimensionError("MlpModel: " + name + " bias " + layer.bias.shape_string() +
                           " does not match weight " + layer.weight.shape_string());
    width = layer.weight.cols();
  };
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    check_layer(hidden_[i], "hidden layer " + std::to_string(i));
    if (!norms_.empty()) {
      const auto& bn = norms_[i];
      for (const Tensor* t : {&bn.scale, &bn.shift, &bn.running_mean, &bn.running_var})
        if (t->rows() != 1 || t->cols() != width)
          throw DimensionError("MlpModel: batch-norm state width mismatch at layer " + std::to_string(i));
      for (double v : bn.running_var.data())
        if (!(v > 0.0)) throw DomainError("MlpModel: batch-norm running variance must be positive");
      if (!(bn.epsilon > 0.0)) throw DomainError("MlpModel: batch-norm epsilon must be positive");
    }
  }
  check_layer(output_, "output layer");
  if (output_.weight.cols() < 1) throw DomainError("MlpModel: at least one class is required");
}

MlpModel MlpModel::initialize(const Architecture& arch, std::uint64_t seed) {
  if (arch.input_width == 0) throw DomainError("architecture: input width must be positive");
  if (arch.classes == 0) throw DomainError("architecture: class count must be positive");
  CounterRng rng(seed);
  std::vector<DenseLayer> hidden;
  std::vector<BatchNormState> norms;
  std::size_t width = arch.input_width;
  for (std::size_t h : arch.hidden) {
    if (h == 0) throw DomainError("architecture: hidden widths must be positive");
    hidden.push_back({glorot(width, h, rng), Tensor(1, h)});
    if (arch.batch_norm) norms.push_back(BatchNormState::identity(h));
    width = h;
  }
  DenseLayer output{glorot(width, arch.classes, rng), Tensor(1, arch.classes)};
  return MlpModel(std::move(hidden), std::move(norms), std::move(output));
}

std::size_t MlpModel::input_width() const {
  return hidden_.empty() ? output_.weight.rows() : hidden_.front().weight.rows();
}

Architecture MlpModel::architecture() const {
  Architecture a{input_width(), {}, classes(), has_batch_norm()};
  for (const auto& layer : hidden_) a.hidden.push_back(layer.weight.cols());
  return a;
}

void MlpModel::check_input(std::size_t width) const {
  if (width != input_width()) {
    throw DimensionError("model expects input width " + std::to_string(input_width()) +
                         ", got " + std::to_string(width));
  }
}

Tensor MlpModel::backbone(const Tensor& batch, Mode mode) const {
  check_input(batch.cols());
  Tensor h = batch;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    h = kernels::matmul(h, hidden_[i].weight);
    kernels::add_row_inplace(h, hidden_[i].bias);
    if (!norms_.empty()) {
      const auto& bn = norms_[i];
      if (mode == Mode::inference) {
        for (std::size_t r = 0; r < h.rows(); ++r) bn.apply_inference(h.row(r));
      } else {
        const BatchStats s = batch_statistics(h);
        normalize_with(h, bn, s.mean, s.variance);
      }
    }
    relu_inplace(h);
  }
  return h;
}

Tensor MlpModel::features(const Tensor& batch) const { return backbone(batch, Mode::inference); }

Tensor MlpModel::forward_all(const Tensor& batch, Mode mode) const {
  Tensor logits = kernels::matmul(backbone(batch, mode), output_.weight);
  kernels::add_row_inplace(logits, output_.bias);
  return logits;
}

double MlpModel::logit_from_features(std::span<const double> features, std::size_t j) const {
  if (j >= classes()) {
    throw IndexError("class " + std::to_string(j) + " out of range for " +
                     std::to_string(classes()) + " classes");
  }
  return kernels::dot_column(features, output_.weight, j) + output_.bias(0, j);
}

double MlpModel::forward_single(std::span<const double> x, std::size_t j) const {
  if (j >= classes()) {
    throw IndexError("class " + std::to_string(j) + " out of range for " +
                     std::to_string(classes()) + " classes");
  }
  check_input(x.size());
  const Tensor feats = backbone(Tensor::row_vector(x), Mode::inference);
  return logit_from_features(feats.row(0), j);
}

MlpModel::Graph MlpModel::record(Tape& tape, const Tensor& batch) const {
  check_input(batch.cols());
  Graph g;
  Var h = tape.constant(batch);
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const Var w = tape.input(hidden_[i].weight);
    const Var b = tape.input(hidden_[i].bias);
    g.params.insert(g.params.end(), {w, b});
    h = tape.add_row(tape.matmul(h, w), b);
    if (!norms_.empty()) {
      const Var scale = tape.input(norms_[i].scale);
      const Var shift = tape.input(norms_[i].shift);
      g.params.insert(g.params.end(), {scale, shift});
      h = tape.batch_norm(h, scale, shift, norms_[i].epsilon);
      g.norm_nodes.push_back(h);
    }
    h = tape.relu(h);
  }
  const Var w = tape.input(output_.weight);
  const Var b = tape.input(output_.bias);
  g.params.insert(g.params.end(), {w, b});
  g.logits = tape.add_row(tape.matmul(h, w), b);
  return g;
}

std::vector<Tensor*> MlpModel::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    out.push_back(&hidden_[i].weight);
    out.push_back(&hidden_[i].bias);
    if (!norms_.empty()) {
      out.push_back(&norms_[i].scale);
      out.push_back(&norms_[i].shift);
    }
  }
  out.push_back(&output_.weight);
  out.push_back(&output_.bias);
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["input_width"] = model.input_width();
  header["classes"] = model.classes();
  header["batch_norm"] = model.has_batch_norm();
  header["hidden"] = model.architecture().hidden;
  nlohmann::json eps = nlohmann::json::array(), mom = nlohmann::json::array();
  for (const auto& bn : model.norms()) {
    // Stored as bit patterns so the constants round-trip exactly.
    eps.push_back(std::bit_cast<std::uint64_t>(bn.epsilon));
    mom.push_back(std::bit_cast<std::uint64_t>(bn.momentum));
  }
  header["bn_epsilon_bits"] = eps;
  header["bn_momentum_bits"] = mom;
  header["metadata"] = metadata;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t i = 0; i < model.hidden().size(); ++i) {
    write_tensor(out, model.hidden()[i].weight);
    write_tensor(out, model.hidden()[i].bias);
    if (model.has_batch_norm()) {
      const auto& bn = model.norms()[i];
      for (const Tensor* t : {&bn.scale, &bn.shift, &bn.running_mean, &bn.running_var})
        write_tensor(out, *t);
    }
  }
  write_tensor(out, model.output().weight);
  write_tensor(out, model.output().bias);
  if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError(path.string() + ": bad checkpoint magic at byte 0");
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != kFormatVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto length = read_le<std::uint64_t>(in, path);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw FormatError(path.string() + ": truncated checkpoint header at byte 20");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": corrupt checkpoint header: " + e.what());
  }
  try {
    const auto widths = header.at("hidden").get<std::vector<std::size_t>>();
    const bool use_bn = header.at("batch_norm").get<bool>();
    const auto eps = header.at("bn_epsilon_bits").get<std::vector<std::uint64_t>>();
    const auto mom = header.at("bn_momentum_bits").get<std::vector<std::uint64_t>>();
    std::size_t width = header.at("input_width").get<std::size_t>();
    const auto classes = header.at("classes").get<std::size_t>();
    if (use_bn && (eps.size() != widths.size() || mom.size() != widths.size()))
      throw FormatError(path.string() + ": batch-norm constants do not match layer count");

    std::vector<DenseLayer> hidden;
    std::vector<BatchNormState> norms;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      DenseLayer layer;
      layer.weight = read_tensor(in, path, width, widths[i]);
      layer.bias = read_tensor(in, path, 1, widths[i]);
      hidden.push_back(std::move(layer));
      if (use_bn) {
        BatchNormState bn;
        bn.scale = read_tensor(in, path, 1, widths[i]);
        bn.shift = read_tensor(in, path, 1, widths[i]);
        bn.running_mean = read_tensor(in, path, 1, widths[i]);
        bn.running_var = read_tensor(in, path, 1, widths[i]);
        bn.epsilon = std::bit_cast<double>(eps[i]);
        bn.momentum = std::bit_cast<double>(mom[i]);
        norms.push_back(std::move(bn));
      }
      width = widths[i];
    }
    DenseLayer output;
    output.weight = read_tensor(in, path, width, classes);
    output.bias = read_tensor(in, path, 1, classes);
    if (in.peek() != std::char_traits<char>::eof())
      throw FormatError(path.string() + ": trailing bytes after parameters");
    return Checkpoint{MlpModel(std::move(hidden), std::move(norms), std::move(output)),
                      header.value("metadata", nlohmann::json::object())};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
}

}  // namespace slc
