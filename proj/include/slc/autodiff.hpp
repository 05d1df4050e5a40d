#pragma once

// Reverse-mode automatic differentiation over dense 2-D tensors.
//
// A Tape records operations in execution order; node ids are therefore a
// topological order and backward() is a single descending sweep. Adjoints
// accumulate in ascending consumer order, so repeated sweeps over the same
// tape give bit-identical gradients.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "slc/tensor.hpp"

namespace slc {

struct Var {
  std::size_t id = 0;
};

// Axis a reduction collapses. `rows` reduces over the row index (result is
// 1 x cols); `cols` reduces over the column index (result is rows x 1).
enum class Axis { rows, cols, all };

enum class Op {
  leaf,
  matmul,
  add,
  sub,
  mul,
  add_row,
  scale,
  exp,
  log,
  relu,
  sigmoid,
  max_scalar,
  sum,
  max,
  logsumexp,
  batch_norm,
  external_loss,
};

// Per-feature batch statistics captured by a training-mode batch-norm node.
struct BatchStats {
  Tensor mean;      // 1 x n
  Tensor variance;  // 1 x n, population variance
};

class Tape {
 public:
  Var input(Tensor value);
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  // Elementwise; either operand may be 1x1 and is then broadcast.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // a (r x c) + row (1 x c) broadcast over rows.
  Var add_row(Var a, Var row);
  Var scale(Var a, double factor);
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var max_scalar(Var a, double floor);

  Var sum(Var a, Axis axis);
  // Subgradient routes to the lowest-index maximizer.
  Var max(Var a, Axis axis);
  Var logsumexp(Var a, Axis axis);

  // Training-mode batch normalization over rows: per column, subtract the
  // batch mean, divide by sqrt(var + epsilon), then apply scale and shift.
  Var batch_norm(Var x, Var scale, Var shift, double epsilon);
  // Statistics recorded by a batch_norm node.
  const BatchStats& batch_stats(Var node) const;

  // Scalar node whose value and gradient with respect to `input` were
  // computed outside the tape (a loss evaluated analytically).
  Var external_loss(Var input, double value, Tensor gradient);

  void backward(Var root);

  const Tensor& value(Var v) const;
  // Adjoint of `v` after backward(); zero-filled if `v` was not reached.
  const Tensor& grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::vector<std::size_t> inputs(Var v) const;

 private:
  struct Node {
    Op op = Op::leaf;
    std::size_t in[3] = {0, 0, 0};
    std::size_t arity = 0;
    bool requires_grad = false;
    Tensor value;
    Tensor aux;  // op-specific cache (normalized activations, argmax, gradient)
    double param = 0.0;
    Axis axis = Axis::all;
    std::optional<BatchStats> stats;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void accumulate(std::size_t id, const Tensor& delta);
  void backprop_node(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Pure (tape-free) reductions shared by the losses and the network.
double logsumexp(std::span<const double> values);
Tensor reduce(const Tensor& t, Op op, Axis axis);

}  // namespace slc
