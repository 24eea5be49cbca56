#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctsynth/tensor.hpp"

namespace ctsynth {

enum class ParamRole { weight, bias, bn_gamma, bn_beta };

std::string_view to_string(ParamRole role);

/// A trainable tensor. `grad` is meaningful only while `has_grad` is set.
struct Parameter {
  std::string name;
  ParamRole role = ParamRole::weight;
  Tensor value;
  Tensor grad;
  bool has_grad = false;
};

enum class OpKind {
  constant,
  variable,
  parameter,
  conv2d,
  conv2d_transpose,
  dense,
  leaky_relu,
  sigmoid,
  batch_norm,
  dropout,
  reshape,
  add,
  scale,
  mul,
  sum,
  mean_log,
  mean_log1m,
};

std::string_view to_string(OpKind kind);

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
};

class Tape;

/// Receives the gradient of the loss w.r.t. the node output and accumulates into inputs.
using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

/// Records a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so node ids are a topological order. A tape is
/// single-use: backward() consumes it. Parameters are referenced by address and must outlive
/// the tape; a parameter used several times maps to a single leaf, so its gradient sums over
/// every use.
class Tape {
 public:
  struct Node {
    OpKind kind = OpKind::constant;
    std::vector<std::size_t> inputs;
    Parameter* param = nullptr;
    Tensor value;
    std::optional<Tensor> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is retained and readable through grad().
  Var variable(Tensor value);
  /// Leaf bound to a parameter; backward() writes the parameter's gradient.
  Var parameter(Parameter& p);

  /// Appends an op node. requires_grad is inferred from the inputs.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const;
  const std::optional<Tensor>& grad(Var v) const;
  bool requires_grad(Var v) const;
  const Node& node(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Adds `g` into the gradient slot of `v` (no-op when v does not require a gradient).
  void accumulate(Var v, const Tensor& g);
  void accumulate(Var v, Tensor&& g);

  /// Reverse sweep from a one-element loss node. Afterwards every parameter bound to this
  /// tape holds d(loss)/d(value) (zero if unreachable) and the tape is consumed.
  void backward(Var loss);

 private:
  Node& at(Var v);
  const Node& at(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool consumed_ = false;
};

}  // namespace ctsynth
