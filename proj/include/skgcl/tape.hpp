#pragma once

// Reverse-mode differentiation over DenseArray values.
//
// A Tape records primitive operations in execution order; backward() replays
// them in exact reverse order and accumulates vector-Jacobian products into
// per-node gradient buffers. Every higher-level operation in the library is a
// composition of the primitives declared here.

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skgcl/dense_array.hpp"

namespace skgcl {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;

  const DenseArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient.
  Var constant(DenseArray value);
  /// Leaf whose gradient is accumulated by backward().
  Var parameter(DenseArray value);

  /// Appends an op node. `inputs` decide whether the node needs gradient;
  /// `backward` is dropped when none of them do.
  Var record(std::string_view op, DenseArray value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, DenseArray value, const std::vector<Var>& inputs,
             BackwardFn backward);

  const DenseArray& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, allocated as zeros on first access.
  DenseArray& grad_buffer(std::size_t id);
  /// Gradient after backward(); zeros if the node received none.
  DenseArray grad(Var v) const;

  /// Seeds d(root)/d(root) = 1 and runs every recorded backward in reverse order.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of op nodes (leaves excluded) recorded so far.
  std::size_t op_count() const noexcept { return op_count_; }
  /// Names of recorded ops in execution order.
  std::vector<std::string> op_names() const;

 private:
  struct Node {
    std::string_view op;
    DenseArray value;
    DenseArray grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(std::string_view op, DenseArray value, bool requires_grad, BackwardFn backward);

  std::deque<Node> nodes_;
  std::size_t op_count_ = 0;
};

// ---- primitives ----------------------------------------------------------

/// 2-D product op(a)·op(b); op transposes when the flag is set.
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
/// Elementwise; equal shapes, or either side a single element.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);
/// Softmax along the last axis, max-shifted.
Var softmax_rows(Var x);
Var sum(Var x);
Var mean(Var x);
/// Mean over one axis; the axis is removed from the shape.
Var mean_axis(Var x, std::size_t axis);
/// x: (N, T, C_in), weight: (C_out, C_in, K), K odd. Stride 1, zero padding (K-1)/2.
Var temporal_conv1d(Var x, Var weight);
/// x / ||x||_2 over all elements. Throws ZeroVector below 1e-12.
Var l2_normalize(Var x);
/// out[i] = x.flat[indices[i]], shaped as `shape`.
Var gather(Var x, std::vector<std::size_t> indices, Shape shape);
Var reshape(Var x, Shape shape);
/// Stacks equally shaped arrays along a new leading axis.
Var stack(const std::vector<Var>& parts);

// ---- parameters ----------------------------------------------------------

/// Ordered named arrays. Declaration order is the serialization order.
class ParamSet {
 public:
  void add(std::string name, DenseArray value);
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  DenseArray& operator[](std::string_view name);
  const DenseArray& operator[](std::string_view name) const;
  DenseArray& at(std::size_t i) { return values_[i]; }
  const DenseArray& at(std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;

  bool operator==(const ParamSet& other) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<DenseArray> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// ParamSet entries bound to Vars on one tape.
class Bindings {
 public:
  Bindings(Tape& tape, const ParamSet& params, bool trainable = true);

  Var operator[](std::string_view name) const;
  Var at(std::size_t i) const { return vars_[i]; }
  const ParamSet& params() const noexcept { return *params_; }
  Tape& tape() const noexcept { return *tape_; }

 private:
  Tape* tape_;
  const ParamSet* params_;
  std::vector<Var> vars_;
};

using GraphFn = std::function<Var(Tape&, const Bindings&)>;

struct LossAndGrads {
  double loss = 0.0;
  ParamSet grads;
};

/// Builds the graph on a fresh tape, runs backward and collects per-parameter
/// gradients with the same names and shapes as `params`.
LossAndGrads forward_backward(const GraphFn& graph_fn, const ParamSet& params);

/// Loss value only, without gradient bookkeeping.
double evaluate_loss(const GraphFn& graph_fn, const ParamSet& params);

}  // namespace skgcl
