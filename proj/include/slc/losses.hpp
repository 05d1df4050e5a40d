#pragma once

// The seven training objectives, each returning its value and the gradient
// with respect to the logits. Per-example terms are averaged over the batch.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slc/tensor.hpp"

namespace slc {

// Logits of a labeled batch: row i holds z(x_i), labels[i] is y_i.
class LogitMatrix {
 public:
  LogitMatrix(Tensor logits, std::vector<std::size_t> labels);

  std::size_t m() const noexcept { return z_.rows(); }
  std::size_t k() const noexcept { return z_.cols(); }
  const Tensor& z() const noexcept { return z_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t label(std::size_t i) const { return labels_[i]; }
  double true_logit(std::size_t i) const { return z_(i, labels_[i]); }

 private:
  Tensor z_;
  std::vector<std::size_t> labels_;
};

enum class LossKind { ce, max_margin, self_norm, nce, binary_ce, batch_ce, batch_max_margin };
enum class NceMode { exact, monte_carlo };

inline constexpr LossKind kAllLosses[] = {LossKind::ce,        LossKind::max_margin,
                                          LossKind::self_norm, LossKind::nce,
                                          LossKind::binary_ce, LossKind::batch_ce,
                                          LossKind::batch_max_margin};

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(NceMode mode);
NceMode parse_nce_mode(std::string_view name);
// True for losses whose small values force logit separation across the set.
bool separates_logits(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::ce;
  double gamma = 1.0;          // margin for the max-margin losses
  double alpha = 0.1;          // self-normalization weight
  std::uint32_t t = 1;         // NCE noise ratio
  std::vector<double> q;       // NCE noise distribution; empty means uniform
  NceMode nce_mode = NceMode::exact;
  std::uint32_t mc_samples = 1;
  std::uint64_t mc_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate(std::optional<std::size_t> classes = std::nullopt) const;
  // q if given, otherwise uniform over k classes.
  std::vector<double> noise_distribution(std::size_t k) const;
};

nlohmann::json to_json(const LossConfig& config);
LossConfig loss_config_from_json(const nlohmann::json& j);

struct LossValue {
  double value = 0.0;
  Tensor gradient;  // m x k, d value / d z
  bool saturated = false;  // NCE only: some 1 - g_j underflowed below 1e-300
};

LossValue ce(const LogitMatrix& lm);
LossValue max_margin(const LogitMatrix& lm, double gamma);
LossValue self_norm(const LogitMatrix& lm, double alpha);
LossValue nce(const LogitMatrix& lm, std::uint32_t t, std::span<const double> q, NceMode mode,
              std::uint32_t mc_samples, std::uint64_t mc_seed);
LossValue binary_ce(const LogitMatrix& lm);
LossValue batch_ce(const LogitMatrix& lm);
LossValue batch_max_margin(const LogitMatrix& lm, double gamma);

LossValue loss_dispatch(const LossConfig& config, const LogitMatrix& lm);

// Numerically stable log(1 + e^x).
double softplus(double x);

}  // namespace slc
