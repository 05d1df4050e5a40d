#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "slc/autodiff.hpp"
#include "slc/rng.hpp"
#include "slc/tensor.hpp"

namespace slc::testing {

inline Tensor random_tensor(CounterRng& rng, std::size_t rows, std::size_t cols, double lo = -3.0,
                            double hi = 3.0) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Relative error with an absolute floor for values near zero.
inline bool gradients_agree(double analytic, double numeric, double rel = 1e-5, double abs = 1e-8) {
  const double diff = std::abs(analytic - numeric);
  return diff < abs || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

// Central finite differences of a scalar function of one tensor.
inline Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               double h = 1e-5) {
  Tensor g(x.rows(), x.cols());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace slc::testing
