#include "ctsynth/network.hpp"

#include <algorithm>

#include "ctsynth/error.hpp"
#include "ctsynth/optim.hpp"

namespace ctsynth {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::tconv: return "tconv";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
    case LayerKind::reshape: return "reshape";
  }
  return "unknown";
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::linear: return "linear";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

namespace {

Shape layer_output(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::conv:
      return {(in[0] + l.stride - 1) / l.stride, (in[1] + l.stride - 1) / l.stride, l.filters};
    case LayerKind::tconv:
      return {in[0] * l.stride, in[1] * l.stride, l.filters};
    case LayerKind::dense:
      return {l.filters};
    case LayerKind::flatten:
      return {element_count(in)};
    case LayerKind::reshape:
      return l.target;
  }
  return in;
}

std::size_t scaled(std::size_t filters, int divisor) {
  return std::max<std::size_t>(1, filters / static_cast<std::size_t>(divisor));
}

// Appends the parameter registry entries of `l` given its input shape.
void register_params(NetworkSpec& spec, const LayerSpec& l, const Shape& in) {
  const std::string prefix = spec.name + "." + l.name;
  switch (l.kind) {
    case LayerKind::conv:
      spec.parameters.push_back({prefix + ".w", {l.kernel, l.kernel, in[2], l.filters}, ParamRole::weight});
      break;
    case LayerKind::tconv:
      spec.parameters.push_back({prefix + ".w", {l.kernel, l.kernel, l.filters, in[2]}, ParamRole::weight});
      break;
    case LayerKind::dense:
      spec.parameters.push_back({prefix + ".w", {in[0], l.filters}, ParamRole::weight});
      break;
    default:
      return;
  }
  if (l.has_bias) spec.parameters.push_back({prefix + ".b", {l.filters}, ParamRole::bias});
  if (l.has_bn) {
    spec.parameters.push_back({prefix + ".gamma", {l.filters}, ParamRole::bn_gamma});
    spec.parameters.push_back({prefix + ".beta", {l.filters}, ParamRole::bn_beta});
  }
}

LayerSpec make_layer(LayerKind kind, std::string name, std::size_t filters = 0) {
  LayerSpec l;
  l.kind = kind;
  l.name = std::move(name);
  l.filters = filters;
  return l;
}

void finalize(NetworkSpec& spec) {
  Shape shape = spec.input_shape;
  for (const auto& l : spec.layers) {
    register_params(spec, l, shape);
    shape = layer_output(l, shape);
  }
}

}  // namespace

std::vector<Shape> NetworkSpec::output_shapes(std::size_t batch) const {
  std::vector<Shape> out;
  Shape shape = input_shape;
  for (const auto& l : layers) {
    shape = layer_output(l, shape);
    Shape with_batch{batch};
    with_batch.insert(with_batch.end(), shape.begin(), shape.end());
    out.push_back(std::move(with_batch));
  }
  return out;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += element_count(p.shape);
  return n;
}

NetworkSpec build_discriminator(const GanConfig& cfg) {
  cfg.validate();
  NetworkSpec spec;
  spec.name = "d";
  spec.leaky_slope = cfg.leaky_slope;
  spec.bn_momentum = cfg.bn_momentum;
  spec.bn_epsilon = cfg.bn_epsilon;
  const auto s = static_cast<std::size_t>(cfg.image_size);
  spec.input_shape = {s, s, static_cast<std::size_t>(cfg.channels)};
  const std::size_t filters[] = {256, 128, 64, 32};
  for (std::size_t i = 0; i < 4; ++i) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.name = "conv" + std::to_string(i + 1);
    l.filters = scaled(filters[i], cfg.width_divisor);
    l.kernel = static_cast<std::size_t>(cfg.kernel_size);
    l.stride = static_cast<std::size_t>(cfg.d_strides[i]);
    l.activation = Activation::leaky_relu;
    l.dropout_p = cfg.dropout_p;
    spec.layers.push_back(l);
  }
  spec.layers.push_back(make_layer(LayerKind::flatten, "flatten"));
  LayerSpec fc1 = make_layer(LayerKind::dense, "dense1", scaled(128, cfg.width_divisor));
  fc1.activation = Activation::leaky_relu;
  spec.layers.push_back(fc1);
  LayerSpec fc2 = make_layer(LayerKind::dense, "dense2", 1);
  fc2.activation = Activation::sigmoid;
  spec.layers.push_back(fc2);
  finalize(spec);
  return spec;
}

NetworkSpec build_generator(const GanConfig& cfg) {
  cfg.validate();
  NetworkSpec spec;
  spec.name = "g";
  spec.leaky_slope = cfg.leaky_slope;
  spec.bn_momentum = cfg.bn_momentum;
  spec.bn_epsilon = cfg.bn_epsilon;
  spec.input_shape = {static_cast<std::size_t>(cfg.noise_dim)};
  const auto side = static_cast<std::size_t>(cfg.noise_side());
  LayerSpec bridge = make_layer(LayerKind::reshape, "reshape");
  bridge.target = {side, side, 1};
  spec.layers.push_back(bridge);
  const std::size_t filters[] = {256, 128, 64, 32, 16};
  for (std::size_t i = 0; i < 6; ++i) {
    LayerSpec l;
    l.kind = LayerKind::tconv;
    l.name = "tconv" + std::to_string(i + 1);
    l.kernel = static_cast<std::size_t>(cfg.kernel_size);
    l.stride = static_cast<std::size_t>(cfg.g_strides[i]);
    if (i < 5) {
      l.filters = scaled(filters[i], cfg.width_divisor);
      l.has_bn = true;
      l.has_bias = false;
      l.activation = Activation::leaky_relu;
    } else {
      l.filters = static_cast<std::size_t>(cfg.channels);
      l.activation = Activation::linear;
    }
    spec.layers.push_back(l);
  }
  finalize(spec);
  return spec;
}

Network::Network(NetworkSpec spec, Rng& init_rng, double init_std) : spec_(std::move(spec)) {
  params_.reserve(spec_.parameters.size());
  for (const auto& ps : spec_.parameters) {
    Parameter p;
    p.name = ps.name;
    p.role = ps.role;
    switch (ps.role) {
      case ParamRole::weight: p.value = init_gaussian(ps.shape, init_std, init_rng); break;
      case ParamRole::bn_gamma: p.value = Tensor(ps.shape, 1.0); break;
      default: p.value = Tensor(ps.shape, 0.0); break;
    }
    params_.push_back(std::move(p));
  }
  std::size_t cursor = 0;
  for (const auto& l : spec_.layers) {
    Slots s;
    if (l.kind == LayerKind::conv || l.kind == LayerKind::tconv || l.kind == LayerKind::dense) {
      s.weight = static_cast<int>(cursor++);
      if (l.has_bias) s.bias = static_cast<int>(cursor++);
      if (l.has_bn) {
        s.gamma = static_cast<int>(cursor++);
        s.beta = static_cast<int>(cursor++);
        s.bn = static_cast<int>(bn_.size());
        bn_.emplace_back(l.filters, spec_.bn_momentum, spec_.bn_epsilon);
        bn_names_.push_back(spec_.name + "." + l.name);
      }
    }
    slots_.push_back(s);
  }
}

Parameter& Network::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ContractError("no parameter named " + std::string(name));
}

Var Network::forward(Tape& tape, Var input, Mode mode, Rng& rng, std::vector<Var>* layer_outputs) {
  const Shape& in = tape.value(input).shape();
  Shape expected{in.empty() ? 0 : in[0]};
  expected.insert(expected.end(), spec_.input_shape.begin(), spec_.input_shape.end());
  if (in != expected) {
    throw DimensionError(spec_.name + " network expects input " + shape_to_string(expected) + ", got " +
                         shape_to_string(in));
  }
  Var x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const Slots& s = slots_[i];
    auto param = [&](int idx) { return tape.parameter(params_[static_cast<std::size_t>(idx)]); };
    std::optional<Var> bias;
    if (s.bias >= 0) bias = param(s.bias);
    switch (l.kind) {
      case LayerKind::conv: x = conv2d(tape, x, param(s.weight), bias, l.stride); break;
      case LayerKind::tconv: x = conv2d_transpose(tape, x, param(s.weight), bias, l.stride); break;
      case LayerKind::dense: x = dense(tape, x, param(s.weight), bias); break;
      case LayerKind::flatten: x = flatten(tape, x); break;
      case LayerKind::reshape: {
        Shape target{tape.value(x).dim(0)};
        target.insert(target.end(), l.target.begin(), l.target.end());
        x = reshape(tape, x, std::move(target));
        break;
      }
    }
    if (l.has_bn) {
      x = batch_norm(tape, x, param(s.gamma), param(s.beta), bn_[static_cast<std::size_t>(s.bn)], mode);
    }
    switch (l.activation) {
      case Activation::leaky_relu: x = leaky_relu(tape, x, spec_.leaky_slope); break;
      case Activation::sigmoid: x = sigmoid(tape, x); break;
      case Activation::linear: break;
    }
    if (l.dropout_p > 0.0) x = dropout(tape, x, l.dropout_p, mode, rng);
    if (layer_outputs) layer_outputs->push_back(x);
  }
  return x;
}

Tensor Network::predict(const Tensor& input, Mode mode, Rng& rng) {
  Tape tape;
  Var out = forward(tape, tape.constant(input), mode, rng);
  return tape.value(out);
}

}  // namespace ctsynth
