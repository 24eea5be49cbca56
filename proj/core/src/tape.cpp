#include "ctsynth/tape.hpp"

#include <string>

#include "ctsynth/error.hpp"

namespace ctsynth {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::weight: return "weight";
    case ParamRole::bias: return "bias";
    case ParamRole::bn_gamma: return "bn_gamma";
    case ParamRole::bn_beta: return "bn_beta";
  }
  return "unknown";
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::variable: return "variable";
    case OpKind::parameter: return "parameter";
    case OpKind::conv2d: return "conv2d";
    case OpKind::conv2d_transpose: return "conv2d_transpose";
    case OpKind::dense: return "dense";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::batch_norm: return "batch_norm";
    case OpKind::dropout: return "dropout";
    case OpKind::reshape: return "reshape";
    case OpKind::add: return "add";
    case OpKind::scale: return "scale";
    case OpKind::mul: return "mul";
    case OpKind::sum: return "sum";
    case OpKind::mean_log: return "mean_log";
    case OpKind::mean_log1m: return "mean_log1m";
  }
  return "unknown";
}

Tape::Node& Tape::at(Var v) {
  if (v.id >= nodes_.size()) throw ContractError("tape node " + std::to_string(v.id) + " does not exist");
  return nodes_[v.id];
}

const Tape::Node& Tape::at(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("tape node " + std::to_string(v.id) + " does not exist");
  return nodes_[v.id];
}

Var Tape::constant(Tensor value) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  require_finite(value, "constant");
  Node n;
  n.kind = OpKind::constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().kind = OpKind::variable;
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::parameter(Parameter& p) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {it->second};
  require_finite(p.value, "parameter " + p.name);
  Node n;
  n.kind = OpKind::parameter;
  n.param = &p;
  n.value = p.value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {nodes_.size() - 1};
}

Var Tape::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  if (consumed_) throw StateError("tape already consumed by backward()");
  require_finite(value, std::string(to_string(kind)));
  Node n;
  n.kind = kind;
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw ContractError("op input refers to a node not on this tape");
    n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  }
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return at(v).value; }
const std::optional<Tensor>& Tape::grad(Var v) const { return at(v).grad; }
bool Tape::requires_grad(Var v) const { return at(v).requires_grad; }
const Tape::Node& Tape::node(Var v) const { return at(v); }

void Tape::accumulate(Var v, const Tensor& g) { accumulate(v, Tensor(g)); }

void Tape::accumulate(Var v, Tensor&& g) {
  Node& n = at(v);
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape()) {
    throw DimensionError("gradient " + shape_to_string(g.shape()) + " for node of shape " +
                         shape_to_string(n.value.shape()));
  }
  if (!n.grad) {
    n.grad = std::move(g);
    return;
  }
  auto dst = n.grad->data();
  const auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (consumed_) throw StateError("backward() on a consumed tape");
  Node& root = at(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_to_string(root.value.shape()));
  }
  consumed_ = true;
  if (root.requires_grad) root.grad = Tensor(root.value.shape(), 1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.grad || !n.backward) continue;
    // The closure may append to other nodes' grads but never reallocates nodes_.
    n.backward(*this, *n.grad);
  }
  for (auto& n : nodes_) {
    if (n.kind != OpKind::parameter) continue;
    Parameter& p = *n.param;
    p.grad = n.grad ? *n.grad : Tensor(p.value.shape());
    p.has_grad = true;
  }
}

}  // namespace ctsynth
