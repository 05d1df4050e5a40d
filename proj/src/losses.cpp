#include "slc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slc/autodiff.hpp"
#include "slc/errors.hpp"
#include "slc/rng.hpp"

namespace slc {
namespace {

constexpr double kLogFloor = 1e-300;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_false_logits(const LogitMatrix& lm, const char* what) {
  if (lm.k() < 2) throw DomainError(std::string(what) + ": needs k >= 2 (no false logits when k = 1)");
}

void require_positive_gamma(double gamma, const char* what) {
  if (!(gamma > 0.0)) throw DomainError(std::string(what) + ": gamma must be positive");
}

// Index of the largest logit of row i other than the label; ties go to the
// lowest index.
std::size_t max_false_index(const LogitMatrix& lm, std::size_t i) {
  const auto row = lm.z().row(i);
  std::size_t best = lm.label(i) == 0 ? 1 : 0;
  for (std::size_t j = best + 1; j < row.size(); ++j)
    if (j != lm.label(i) && row[j] > row[best]) best = j;
  return best;
}

// Adds the mean per-example hinge terms to `out`.
void accumulate_hinge(const LogitMatrix& lm, double gamma, LossValue& out) {
  const double inv_m = 1.0 / static_cast<double>(lm.m());
  for (std::size_t i = 0; i < lm.m(); ++i) {
    const std::size_t y = lm.label(i);
    const std::size_t j = max_false_index(lm, i);
    const double h = gamma - lm.z()(i, y) + lm.z()(i, j);
    if (h > 0.0) {
      out.value += inv_m * h;
      out.gradient(i, y) -= inv_m;
      out.gradient(i, j) += inv_m;
    }
  }
}

}  // namespace

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

LogitMatrix::LogitMatrix(Tensor logits, std::vector<std::size_t> labels)
    : z_(std::move(logits)), labels_(std::move(labels)) {
  if (z_.rows() == 0 || z_.cols() == 0)
    throw DimensionError("LogitMatrix: needs m >= 1 and k >= 1, got " + z_.shape_string());
  if (labels_.size() != z_.rows()) {
    throw DimensionError("LogitMatrix: " + std::to_string(labels_.size()) + " labels for " +
                         std::to_string(z_.rows()) + " rows");
  }
  for (std::size_t y : labels_)
    if (y >= z_.cols())
      throw IndexError("LogitMatrix: label " + std::to_string(y) + " out of range for k = " +
                       std::to_string(z_.cols()));
  if (!z_.all_finite()) throw DomainError("LogitMatrix: logits must be finite");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ce: return "ce";
    case LossKind::max_margin: return "max_margin";
    case LossKind::self_norm: return "self_norm";
    case LossKind::nce: return "nce";
    case LossKind::binary_ce: return "binary_ce";
    case LossKind::batch_ce: return "batch_ce";
    case LossKind::batch_max_margin: return "batch_max_margin";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : kAllLosses)
    if (to_string(k) == name) return k;
  throw ConfigError("loss.kind", "unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(NceMode mode) {
  return mode == NceMode::exact ? "exact" : "monte_carlo";
}

NceMode parse_nce_mode(std::string_view name) {
  if (name == "exact") return NceMode::exact;
  if (name == "monte_carlo") return NceMode::monte_carlo;
  throw ConfigError("loss.nce_mode", "expected 'exact' or 'monte_carlo', got '" + std::string(name) + "'");
}

bool separates_logits(LossKind kind) {
  return kind != LossKind::ce && kind != LossKind::max_margin;
}

void LossConfig::validate(std::optional<std::size_t> classes) const {
  if ((kind == LossKind::max_margin || kind == LossKind::batch_max_margin) && !(gamma > 0.0))
    throw ConfigError("loss.gamma", "must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("loss.alpha", "must be >= 0");
  if (t < 1) throw ConfigError("loss.t", "must be a positive integer");
  if (mc_samples < 1) throw ConfigError("loss.mc_samples", "must be a positive integer");
  if (!q.empty()) {
    double total = 0.0;
    for (double p : q) {
      if (!(p >= 0.0)) throw ConfigError("loss.q", "entries must be non-negative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("loss.q", "must sum to 1 (sum is " + std::to_string(total) + ")");
    if (classes && q.size() != *classes)
      throw ConfigError("loss.q", "has " + std::to_string(q.size()) + " entries for " +
                                      std::to_string(*classes) + " classes");
  }
}

std::vector<double> LossConfig::noise_distribution(std::size_t k) const {
  if (!q.empty()) return q;
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

nlohmann::json to_json(const LossConfig& c) {
  return {{"kind", to_string(c.kind)}, {"gamma", c.gamma},           {"alpha", c.alpha},
          {"t", c.t},                  {"q", c.q},                   {"nce_mode", to_string(c.nce_mode)},
          {"mc_samples", c.mc_samples}, {"mc_seed", c.mc_seed}};
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  LossConfig c;
  c.kind = parse_loss_kind(j.at("kind").get<std::string>());
  c.gamma = j.value("gamma", c.gamma);
  c.alpha = j.value("alpha", c.alpha);
  c.t = j.value("t", c.t);
  c.q = j.value("q", c.q);
  c.nce_mode = parse_nce_mode(j.value("nce_mode", std::string(to_string(c.nce_mode))));
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.mc_seed = j.value("mc_seed", c.mc_seed);
  return c;
}

LossValue ce(const LogitMatrix& lm) { return self_norm(lm, 0.0); }

LossValue max_margin(const LogitMatrix& lm, double gamma) {
  require_positive_gamma(gamma, "max_margin");
  require_false_logits(lm, "max_margin");
  LossValue out{0.0, Tensor(lm.m(), lm.k())};
  accumulate_hinge(lm, gamma, out);
  return out;
}

LossValue self_norm(const LogitMatrix& lm, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("self_norm: alpha must be non-negative");
  const double inv_m = 1.0 / static_cast<double>(lm.m());
  LossValue out{0.0, Tensor(lm.m(), lm.k())};
  for (std::size_t i = 0; i < lm.m(); ++i) {
    const auto row = lm.z().row(i);
    const double lse = logsumexp(row);
    out.value += inv_m * ((lse - lm.true_logit(i)) + alpha * lse * lse);
    const double weight = 1.0 + 2.0 * alpha * lse;
    for (std::size_t j = 0; j < row.size(); ++j)
      out.gradient(i, j) = inv_m * std::exp(row[j] - lse) * weight;
    out.gradient(i, lm.label(i)) -= inv_m;
  }
  return out;
}

LossValue nce(const LogitMatrix& lm, std::uint32_t t, std::span<const double> q, NceMode mode,
              std::uint32_t mc_samples, std::uint64_t mc_seed) {
  if (t < 1) throw DomainError("nce: t must be a positive integer");
  if (q.size() != lm.k())
    throw DimensionError("nce: noise distribution has " + std::to_string(q.size()) +
                         " entries for k = " + std::to_string(lm.k()));
  if (mode == NceMode::monte_carlo && mc_samples < 1)
    throw DomainError("nce: mc_samples must be positive");
  const double td = static_cast<double>(t);
  const double inv_m = 1.0 / static_cast<double>(lm.m());
  // u_j = z_j - log(t q_j), so g_j = sigmoid(u_j) and -log(1 - g_j) = softplus(u_j).
  std::vector<double> log_tq(lm.k());
  for (std::size_t j = 0; j < lm.k(); ++j) log_tq[j] = q[j] > 0.0 ? std::log(td * q[j]) : 0.0;

  LossValue out{0.0, Tensor(lm.m(), lm.k())};
  const double clamp = -std::log(kLogFloor);
  // -log(1 - g_j) with 1 - g_j clamped at kLogFloor; returns (value, slope).
  auto noise_term = [&](double u) -> std::pair<double, double> {
    const double v = softplus(u);
    if (v > clamp) {
      out.saturated = true;
      return {clamp, 0.0};
    }
    return {v, sigmoid(u)};
  };

  CounterRng rng(mc_seed);
  const DiscreteSampler sampler(q);
  for (std::size_t i = 0; i < lm.m(); ++i) {
    const auto row = lm.z().row(i);
    const std::size_t y = lm.label(i);
    if (q[y] > 0.0) {
      const double u = row[y] - log_tq[y];
      out.value += inv_m * softplus(-u);
      out.gradient(i, y) -= inv_m * sigmoid(-u);
    }
    if (mode == NceMode::exact) {
      for (std::size_t j = 0; j < lm.k(); ++j) {
        if (q[j] == 0.0) continue;
        const auto [v, slope] = noise_term(row[j] - log_tq[j]);
        out.value += inv_m * td * q[j] * v;
        out.gradient(i, j) += inv_m * td * q[j] * slope;
      }
    } else {
      const double w = inv_m * td / static_cast<double>(mc_samples);
      for (std::uint32_t s = 0; s < mc_samples; ++s) {
        const std::size_t j = sampler(rng);
        const auto [v, slope] = noise_term(row[j] - log_tq[j]);
        out.value += w * v;
        out.gradient(i, j) += w * slope;
      }
    }
  }
  return out;
}

LossValue binary_ce(const LogitMatrix& lm) {
  const double inv_m = 1.0 / static_cast<double>(lm.m());
  LossValue out{0.0, Tensor(lm.m(), lm.k())};
  for (std::size_t i = 0; i < lm.m(); ++i) {
    const auto row = lm.z().row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == lm.label(i)) {
        out.value += inv_m * softplus(-row[j]);
        out.gradient(i, j) = -inv_m * sigmoid(-row[j]);
      } else {
        out.value += inv_m * softplus(row[j]);
        out.gradient(i, j) = inv_m * sigmoid(row[j]);
      }
    }
  }
  return out;
}

LossValue batch_ce(const LogitMatrix& lm) {
  const double m = static_cast<double>(lm.m());
  const double lse = logsumexp(lm.z().data());
  double true_sum = 0.0;
  for (std::size_t i = 0; i < lm.m(); ++i) true_sum += lm.true_logit(i);
  LossValue out{lse - true_sum / m - std::log(m), Tensor(lm.m(), lm.k())};
  for (std::size_t i = 0; i < lm.m(); ++i) {
    for (std::size_t j = 0; j < lm.k(); ++j) out.gradient(i, j) = std::exp(lm.z()(i, j) - lse);
    out.gradient(i, lm.label(i)) -= 1.0 / m;
  }
  // KL is non-negative; clip rounding noise at the optimum.
  out.value = std::max(out.value, 0.0);
  return out;
}

LossValue batch_max_margin(const LogitMatrix& lm, double gamma) {
  require_positive_gamma(gamma, "batch_max_margin");
  require_false_logits(lm, "batch_max_margin");
  const double inv_m = 1.0 / static_cast<double>(lm.m());
  LossValue out{0.0, Tensor(lm.m(), lm.k())};

  std::size_t low_true = 0;
  std::size_t high_row = 0, high_col = max_false_index(lm, 0);
  for (std::size_t i = 1; i < lm.m(); ++i) {
    if (lm.true_logit(i) < lm.true_logit(low_true)) low_true = i;
    const std::size_t j = max_false_index(lm, i);
    if (lm.z()(i, j) > lm.z()(high_row, high_col)) {
      high_row = i;
      high_col = j;
    }
  }
  const double h = gamma - lm.true_logit(low_true) + lm.z()(high_row, high_col);
  if (h > 0.0) {
    out.value += inv_m * h;
    out.gradient(low_true, lm.label(low_true)) -= inv_m;
    out.gradient(high_row, high_col) += inv_m;
  }
  accumulate_hinge(lm, gamma, out);
  return out;
}

LossValue loss_dispatch(const LossConfig& config, const LogitMatrix& lm) {
  switch (config.kind) {
    case LossKind::ce: return ce(lm);
    case LossKind::max_margin: return max_margin(lm, config.gamma);
    case LossKind::self_norm: return self_norm(lm, config.alpha);
    case LossKind::nce: {
      const auto q = config.noise_distribution(lm.k());
      return nce(lm, config.t, q, config.nce_mode, config.mc_samples, config.mc_seed);
    }
    case LossKind::binary_ce: return binary_ce(lm);
    case LossKind::batch_ce: return batch_ce(lm);
    case LossKind::batch_max_margin: return batch_max_margin(lm, config.gamma);
  }
  throw UsageError("loss_dispatch: unknown loss kind");
}

}  // namespace slc
