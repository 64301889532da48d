// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over rank-2 tensors.
//
// A Tape records every operation applied to its Vars. Recording tapes keep a
// backward closure per node; non-recording tapes only keep values, which is
// what inference uses. Parameters enter a tape as leaves and are never copied;
// after backward() their gradients are read with parameter_gradients().
//
// A tape belongs to one thread. Parameters are only read during a forward
// pass, so any number of tapes may share one ParameterStore concurrently.
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetstar/params.hpp"
#include "hetstar/tensor.hpp"

namespace hetstar::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Tensor value);
  /// Leaf referring to a parameter's value. Repeated calls with the same
  /// parameter return the same leaf.
  Var param(const Parameter& p);

  /// Propagates d(loss)/d(node) to every node. `loss` must hold one element.
  void backward(Var loss);

  /// (parameter, gradient) for every parameter leaf that received gradient.
  std::vector<std::pair<const Parameter*, const Tensor*>> parameter_gradients() const;

  // Interface used by operation implementations.
  const Tensor& value(std::size_t id) const;
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].grad_ready; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  Var push(std::string_view op, Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool grad_ready = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    const Parameter* param = nullptr;
  };

  bool recording_;
  std::deque<Node> nodes_;  // deque: values stay put while the tape grows
  std::unordered_map<const Parameter*, std::size_t> param_leaves_;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);     // a (m x k) * b (k x n)
Var matmul_nt(Var a, Var b);  // a (m x k) * b^T, b (n x k)
/// x W^T + b for x (r x in), W (out x in), b (1 x out).
Var affine(Var x, Var w, Var b);

// Elementwise; `b` may also be a 1 x c row, an r x 1 column or a 1 x 1 scalar
// broadcast against `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var maximum(Var a, Var b);

Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope = 0.01);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(Var a, const std::vector<std::size_t>& rows);
Var slice_cols(Var a, std::size_t begin, std::size_t count);

/// Softmax along each row. Slots whose mask byte is 0 get weight exactly 0.
/// An empty mask means every slot is live.
Var masked_softmax(Var a, const std::vector<std::uint8_t>& mask = {});
/// Reductions over axis 0 (down columns, result 1 x c) or axis 1 (across rows, result r x 1).
Var logsumexp(Var a, int axis);
Var max_pool(Var a, int axis);
Var mean_pool(Var a, int axis);
Var sum_axis(Var a, int axis);
Var sum(Var a);

}  // namespace hetstar::ad
