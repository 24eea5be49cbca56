#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctsynth/gan_config.hpp"
#include "ctsynth/ops.hpp"
#include "ctsynth/rng.hpp"
#include "ctsynth/tape.hpp"

namespace ctsynth {

enum class LayerKind { conv, tconv, dense, flatten, reshape };
enum class Activation { linear, leaky_relu, sigmoid };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation act);

/// One stage of a network: linear map, then optional batch norm, activation, dropout.
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::string name;
  std::size_t filters = 0;  // output channels (conv/tconv) or units (dense)
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Activation activation = Activation::linear;
  bool has_bn = false;
  bool has_bias = true;
  double dropout_p = 0.0;
  Shape target;  // reshape only, without the batch axis
};

struct ParamSpec {
  std::string name;
  Shape shape;
  ParamRole role = ParamRole::weight;
};

struct NetworkSpec {
  std::string name;
  Shape input_shape;  // without the batch axis
  std::vector<LayerSpec> layers;
  std::vector<ParamSpec> parameters;
  double leaky_slope = 0.2;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;

  /// Output shape after each layer for a given batch size.
  std::vector<Shape> output_shapes(std::size_t batch) const;
  std::size_t parameter_count() const;
};

/// Four same-padded convs (LeakyReLU + dropout each), flatten, dense (LeakyReLU), dense (sigmoid).
NetworkSpec build_discriminator(const GanConfig& cfg);

/// Noise reshape to a single-channel map, then six transposed convs; the first five carry
/// batch norm + LeakyReLU, the last is linear with `channels` filters.
NetworkSpec build_generator(const GanConfig& cfg);

/// A NetworkSpec with materialized parameters and batch-norm state.
class Network {
 public:
  /// Weights ~ N(0, init_std^2); biases and BN shifts 0; BN scales 1.
  Network(NetworkSpec spec, Rng& init_rng, double init_std);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::span<Parameter> parameters() noexcept { return params_; }
  std::span<const Parameter> parameters() const noexcept { return params_; }
  Parameter& parameter(std::string_view name);

  /// Batch-norm states in layer order, named "<layer>.running_mean|running_var".
  std::vector<BatchNormState>& bn_states() noexcept { return bn_; }
  const std::vector<BatchNormState>& bn_states() const noexcept { return bn_; }
  const std::vector<std::string>& bn_names() const noexcept { return bn_names_; }

  /// Records the forward pass; `layer_outputs` receives one node per LayerSpec.
  Var forward(Tape& tape, Var input, Mode mode, Rng& rng, std::vector<Var>* layer_outputs = nullptr);

  /// Forward pass on a throwaway tape.
  Tensor predict(const Tensor& input, Mode mode, Rng& rng);

 private:
  struct Slots {
    int weight = -1;
    int bias = -1;
    int gamma = -1;
    int beta = -1;
    int bn = -1;
  };

  NetworkSpec spec_;
  std::vector<Parameter> params_;
  std::vector<Slots> slots_;
  std::vector<BatchNormState> bn_;
  std::vector<std::string> bn_names_;
};

}  // namespace ctsynth
