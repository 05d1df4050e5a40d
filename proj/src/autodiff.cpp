#include "slc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slc/errors.hpp"
#include "slc/kernels.hpp"

namespace slc {
namespace {

Tensor map(const Tensor& t, auto fn) {
  Tensor out(t.rows(), t.cols());
  const auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fn(src[i]);
  return out;
}

// Broadcast-aware binary map; either side may be 1x1.
Tensor zip(const Tensor& a, const Tensor& b, auto fn, const char* what) {
  if (a.same_shape(b)) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = fn(a.data()[i], b.data()[i]);
    return out;
  }
  if (b.is_scalar()) {
    const double s = b.item();
    return map(a, [&](double x) { return fn(x, s); });
  }
  if (a.is_scalar()) {
    const double s = a.item();
    return map(b, [&](double x) { return fn(s, x); });
  }
  throw DimensionError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                       b.shape_string() + " are not broadcast-compatible");
}

// Collapses an adjoint back onto a broadcast operand's shape.
Tensor unbroadcast(const Tensor& g, const Tensor& like) {
  if (g.same_shape(like)) return g;
  double s = 0.0;
  for (double v : g.data()) s += v;
  return Tensor::scalar(s);
}

Tensor reduce_shape(const Tensor& t, Axis axis) {
  switch (axis) {
    case Axis::rows: return Tensor(1, t.cols());
    case Axis::cols: return Tensor(t.rows(), 1);
    case Axis::all: return Tensor(1, 1);
  }
  return {};
}

// Maps element (r, c) of the input to its slot in the reduced output.
std::size_t reduce_slot(Axis axis, std::size_t r, std::size_t c) {
  switch (axis) {
    case Axis::rows: return c;
    case Axis::cols: return r;
    case Axis::all: return 0;
  }
  return 0;
}

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw DomainError(std::string(what) + ": result overflowed to a non-finite value");
}

}  // namespace

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw DomainError("logsumexp of an empty set");
  const double hi = *std::max_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

Tensor reduce(const Tensor& t, Op op, Axis axis) {
  if (t.empty()) throw DomainError("empty reduction over " + t.shape_string());
  Tensor out = reduce_shape(t, axis);
  if (op == Op::sum) {
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) out.data()[reduce_slot(axis, r, c)] += t(r, c);
    return out;
  }
  std::fill(out.data().begin(), out.data().end(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) {
      double& slot = out.data()[reduce_slot(axis, r, c)];
      slot = std::max(slot, t(r, c));
    }
  if (op == Op::max) return out;
  if (op != Op::logsumexp) throw UsageError("reduce: unsupported reduction op");
  Tensor acc = reduce_shape(t, axis);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const std::size_t s = reduce_slot(axis, r, c);
      acc.data()[s] += std::exp(t(r, c) - out.data()[s]);
    }
  for (std::size_t s = 0; s < out.size(); ++s) out.data()[s] += std::log(acc.data()[s]);
  return out;
}

Var Tape::push(Node n) {
  for (std::size_t i = 0; i < n.arity; ++i) {
    if (n.in[i] >= nodes_.size()) throw UsageError("tape: input refers to a node not on this tape");
    n.requires_grad = n.requires_grad || nodes_[n.in[i]].requires_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw IndexError("tape: unknown node id " + std::to_string(v.id));
  return nodes_[v.id];
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n{.op = Op::matmul, .in = {a.id, b.id}, .arity = 2};
  n.value = kernels::matmul(node(a).value, node(b).value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n{.op = Op::add, .in = {a.id, b.id}, .arity = 2};
  n.value = zip(node(a).value, node(b).value, [](double x, double y) { return x + y; }, "add");
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n{.op = Op::sub, .in = {a.id, b.id}, .arity = 2};
  n.value = zip(node(a).value, node(b).value, [](double x, double y) { return x - y; }, "sub");
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  Node n{.op = Op::mul, .in = {a.id, b.id}, .arity = 2};
  n.value = zip(node(a).value, node(b).value, [](double x, double y) { return x * y; }, "mul");
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  Node n{.op = Op::add_row, .in = {a.id, row.id}, .arity = 2};
  n.value = node(a).value;
  kernels::add_row_inplace(n.value, node(row).value);
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n{.op = Op::scale, .in = {a.id}, .arity = 1, .param = factor};
  n.value = map(node(a).value, [factor](double x) { return factor * x; });
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n{.op = Op::exp, .in = {a.id}, .arity = 1};
  n.value = map(node(a).value, [](double x) { return std::exp(x); });
  check_finite(n.value, "exp");
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n{.op = Op::log, .in = {a.id}, .arity = 1};
  for (double x : node(a).value.data())
    if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
  n.value = map(node(a).value, [](double x) { return std::log(x); });
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n{.op = Op::relu, .in = {a.id}, .arity = 1};
  n.value = map(node(a).value, [](double x) { return x > 0.0 ? x : 0.0; });
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n{.op = Op::sigmoid, .in = {a.id}, .arity = 1};
  n.value = map(node(a).value, [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return push(std::move(n));
}

Var Tape::max_scalar(Var a, double floor) {
  Node n{.op = Op::max_scalar, .in = {a.id}, .arity = 1, .param = floor};
  n.value = map(node(a).value, [floor](double x) { return x > floor ? x : floor; });
  return push(std::move(n));
}

Var Tape::sum(Var a, Axis axis) {
  Node n{.op = Op::sum, .in = {a.id}, .arity = 1, .axis = axis};
  n.value = reduce(node(a).value, Op::sum, axis);
  return push(std::move(n));
}

Var Tape::max(Var a, Axis axis) {
  const Tensor& x = node(a).value;
  Node n{.op = Op::max, .in = {a.id}, .arity = 1, .axis = axis};
  n.value = reduce(x, Op::max, axis);
  // aux holds the flat index of the first maximizer for each output slot.
  n.aux = Tensor(n.value.rows(), n.value.cols(), -1.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const std::size_t s = reduce_slot(axis, r, c);
      if (n.aux.data()[s] < 0.0 && x(r, c) == n.value.data()[s])
        n.aux.data()[s] = static_cast<double>(r * x.cols() + c);
    }
  return push(std::move(n));
}

Var Tape::logsumexp(Var a, Axis axis) {
  Node n{.op = Op::logsumexp, .in = {a.id}, .arity = 1, .axis = axis};
  n.value = reduce(node(a).value, Op::logsumexp, axis);
  return push(std::move(n));
}

Var Tape::batch_norm(Var x, Var scale, Var shift, double epsilon) {
  const Tensor& in = node(x).value;
  const Tensor& gamma = node(scale).value;
  const Tensor& beta = node(shift).value;
  if (gamma.rows() != 1 || gamma.cols() != in.cols() || !gamma.same_shape(beta)) {
    throw DimensionError("batch_norm: scale/shift " + gamma.shape_string() + "/" +
                         beta.shape_string() + " do not match features of " + in.shape_string());
  }
  if (in.rows() == 0) throw DomainError("batch_norm over an empty batch");
  const double inv_m = 1.0 / static_cast<double>(in.rows());
  BatchStats stats{reduce(in, Op::sum, Axis::rows), Tensor(1, in.cols())};
  for (double& v : stats.mean.data()) v *= inv_m;
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t c = 0; c < in.cols(); ++c) {
      const double d = in(r, c) - stats.mean(0, c);
      stats.variance(0, c) += d * d;
    }
  for (double& v : stats.variance.data()) v *= inv_m;

  Node n{.op = Op::batch_norm, .in = {x.id, scale.id, shift.id}, .arity = 3, .param = epsilon};
  n.aux = Tensor(in.rows(), in.cols());
  n.value = Tensor(in.rows(), in.cols());
  for (std::size_t c = 0; c < in.cols(); ++c) {
    const double inv_std = 1.0 / std::sqrt(stats.variance(0, c) + epsilon);
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const double xhat = (in(r, c) - stats.mean(0, c)) * inv_std;
      n.aux(r, c) = xhat;
      n.value(r, c) = xhat * gamma(0, c) + beta(0, c);
    }
  }
  n.stats = std::move(stats);
  return push(std::move(n));
}

const BatchStats& Tape::batch_stats(Var v) const {
  const Node& n = node(v);
  if (!n.stats) throw UsageError("batch_stats: node is not a batch_norm node");
  return *n.stats;
}

Var Tape::external_loss(Var input, double value, Tensor gradient) {
  if (!gradient.same_shape(node(input).value)) {
    throw DimensionError("external_loss: gradient " + gradient.shape_string() +
                         " does not match input " + node(input).value.shape_string());
  }
  Node n{.op = Op::external_loss, .in = {input.id}, .arity = 1};
  n.value = Tensor::scalar(value);
  n.aux = std::move(gradient);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
  node(v);
  if (grads_.size() != nodes_.size()) throw UsageError("grad: backward() has not been run");
  return grads_[v.id];
}

std::vector<std::size_t> Tape::inputs(Var v) const {
  const Node& n = node(v);
  return {n.in, n.in + n.arity};
}

void Tape::accumulate(std::size_t id, const Tensor& delta) {
  if (!nodes_[id].requires_grad) return;
  auto dst = grads_[id].data();
  const auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var root) {
  if (!node(root).value.is_scalar()) {
    throw UsageError("backward: root node must be 1x1, got " + node(root).value.shape_string());
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const auto& n : nodes_) grads_.emplace_back(n.value.rows(), n.value.cols());
  grads_[root.id].data()[0] = 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (nodes_[id].requires_grad && nodes_[id].op != Op::leaf) backprop_node(id);
  }
}

void Tape::backprop_node(std::size_t id) {
  const Node& n = nodes_[id];
  const Tensor& g = grads_[id];
  const auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.in[k]].value; };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::matmul:
      if (nodes_[n.in[0]].requires_grad) accumulate(n.in[0], kernels::matmul_a_bt(g, in_value(1)));
      if (nodes_[n.in[1]].requires_grad) accumulate(n.in[1], kernels::matmul_at_b(in_value(0), g));
      break;
    case Op::add:
    case Op::sub: {
      accumulate(n.in[0], unbroadcast(g, in_value(0)));
      Tensor gb = unbroadcast(g, in_value(1));
      if (n.op == Op::sub)
        for (double& v : gb.data()) v = -v;
      accumulate(n.in[1], gb);
      break;
    }
    case Op::mul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      accumulate(n.in[0], unbroadcast(zip(g, b, [](double x, double y) { return x * y; }, "mul'"), a));
      accumulate(n.in[1], unbroadcast(zip(g, a, [](double x, double y) { return x * y; }, "mul'"), b));
      break;
    }
    case Op::add_row:
      accumulate(n.in[0], g);
      accumulate(n.in[1], reduce(g, Op::sum, Axis::rows));
      break;
    case Op::scale:
      accumulate(n.in[0], map(g, [&](double x) { return n.param * x; }));
      break;
    case Op::exp:
      accumulate(n.in[0], zip(g, n.value, [](double x, double y) { return x * y; }, "exp'"));
      break;
    case Op::log:
      accumulate(n.in[0], zip(g, in_value(0), [](double x, double y) { return x / y; }, "log'"));
      break;
    case Op::relu:
      accumulate(n.in[0], zip(g, in_value(0), [](double x, double y) { return y > 0.0 ? x : 0.0; }, "relu'"));
      break;
    case Op::sigmoid:
      accumulate(n.in[0], zip(g, n.value, [](double x, double s) { return x * s * (1.0 - s); }, "sigmoid'"));
      break;
    case Op::max_scalar:
      accumulate(n.in[0], zip(g, in_value(0), [&](double x, double y) { return y > n.param ? x : 0.0; }, "max'"));
      break;
    case Op::sum: {
      const Tensor& x = in_value(0);
      Tensor d(x.rows(), x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) d(r, c) = g.data()[reduce_slot(n.axis, r, c)];
      accumulate(n.in[0], d);
      break;
    }
    case Op::max: {
      const Tensor& x = in_value(0);
      Tensor d(x.rows(), x.cols());
      for (std::size_t s = 0; s < n.aux.size(); ++s)
        d.data()[static_cast<std::size_t>(n.aux.data()[s])] += g.data()[s];
      accumulate(n.in[0], d);
      break;
    }
    case Op::logsumexp: {
      const Tensor& x = in_value(0);
      Tensor d(x.rows(), x.cols());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const std::size_t s = reduce_slot(n.axis, r, c);
          d(r, c) = g.data()[s] * std::exp(x(r, c) - n.value.data()[s]);
        }
      accumulate(n.in[0], d);
      break;
    }
    case Op::batch_norm: {
      const Tensor& xhat = n.aux;
      const Tensor& gamma = in_value(1);
      const std::size_t m = xhat.rows();
      const double inv_m = 1.0 / static_cast<double>(m);
      Tensor dgamma(1, xhat.cols()), dbeta(1, xhat.cols()), dx(m, xhat.cols());
      for (std::size_t c = 0; c < xhat.cols(); ++c) {
        const double inv_std = 1.0 / std::sqrt(n.stats->variance(0, c) + n.param);
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          sum_g += g(r, c);
          sum_gx += g(r, c) * xhat(r, c);
        }
        dbeta(0, c) = sum_g;
        dgamma(0, c) = sum_gx;
        const double k = gamma(0, c) * inv_std;
        for (std::size_t r = 0; r < m; ++r)
          dx(r, c) = k * (g(r, c) - inv_m * sum_g - xhat(r, c) * inv_m * sum_gx);
      }
      accumulate(n.in[0], dx);
      accumulate(n.in[1], dgamma);
      accumulate(n.in[2], dbeta);
      break;
    }
    case Op::external_loss: {
      const double s = g.item();
      accumulate(n.in[0], map(n.aux, [s](double x) { return s * x; }));
      break;
    }
  }
}

}  // namespace slc
