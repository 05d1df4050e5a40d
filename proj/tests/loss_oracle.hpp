#pragma once

// Direct transcriptions of the seven loss definitions, evaluated naively
// (plain exp/log, explicit probability tables, no shared helpers with the
// library). Suitable for moderate logits only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace slc::oracle {

using Matrix = std::vector<std::vector<double>>;
using Labels = std::vector<std::size_t>;

inline double cross_entropy(const Matrix& z, const Labels& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double denom = 0.0;
    for (double v : z[i]) denom += std::exp(v);
    total += -std::log(std::exp(z[i][y[i]]) / denom);
  }
  return total / static_cast<double>(z.size());
}

inline double max_margin(const Matrix& z, const Labels& y, double gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < z[i].size(); ++j)
      if (j != y[i]) worst = std::max(worst, z[i][j]);
    total += std::max(0.0, gamma - z[i][y[i]] + worst);
  }
  return total / static_cast<double>(z.size());
}

inline double self_norm(const Matrix& z, const Labels& y, double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double denom = 0.0;
    for (double v : z[i]) denom += std::exp(v);
    const double log_z = std::log(denom);
    total += -std::log(std::exp(z[i][y[i]]) / denom) + alpha * log_z * log_z;
  }
  return total / static_cast<double>(z.size());
}

// Exact expectation over the noise distribution q (all classes, including y).
inline double nce(const Matrix& z, const Labels& y, double t, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto g = [&](std::size_t j) { return 1.0 / (1.0 + t * q[j] * std::exp(-z[i][j])); };
    // 1 - g written as a ratio so it does not cancel when g is close to 1.
    auto not_g = [&](std::size_t j) {
      const double r = t * q[j] * std::exp(-z[i][j]);
      return r / (1.0 + r);
    };
    double expectation = 0.0;
    for (std::size_t j = 0; j < z[i].size(); ++j)
      if (q[j] > 0.0) expectation += q[j] * std::log(not_g(j));
    total += -std::log(g(y[i])) - t * expectation;
  }
  return total / static_cast<double>(z.size());
}

inline double binary_cross_entropy(const Matrix& z, const Labels& y) {
  auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double term = -std::log(sigma(z[i][y[i]]));
    for (std::size_t j = 0; j < z[i].size(); ++j)
      if (j != y[i]) term -= std::log(1.0 - sigma(z[i][j]));
    total += term;
  }
  return total / static_cast<double>(z.size());
}

// KL(P || Q) over the m x k cells of the batch.
inline double batch_cross_entropy(const Matrix& z, const Labels& y) {
  const double m = static_cast<double>(z.size());
  double partition = 0.0;
  for (const auto& row : z)
    for (double v : row) partition += std::exp(v);
  double kl = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      const double p = j == y[i] ? 1.0 / m : 0.0;
      const double q = std::exp(z[i][j]) / partition;
      if (p > 0.0) kl += p * std::log(p / q);
    }
  }
  return kl;
}

inline double batch_max_margin(const Matrix& z, const Labels& y, double gamma) {
  double min_true = std::numeric_limits<double>::infinity();
  double max_false = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      if (j == y[i]) min_true = std::min(min_true, z[i][j]);
      else max_false = std::max(max_false, z[i][j]);
    }
  }
  const double m = static_cast<double>(z.size());
  return std::max(0.0, gamma - min_true + max_false) / m + max_margin(z, y, gamma);
}

}  // namespace slc::oracle
