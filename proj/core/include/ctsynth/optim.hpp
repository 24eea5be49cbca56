#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctsynth/rng.hpp"
#include "ctsynth/tape.hpp"
#include "ctsynth/tensor.hpp"

namespace ctsynth {

/// i.i.d. N(0, std^2) samples, deterministic for a given engine state.
Tensor init_gaussian(const Shape& shape, double stddev, Rng& rng);

enum class OptimizerKind { rmsprop, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

struct RmsPropHyper {
  double lr = 1e-3;
  double rho = 0.9;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Elementwise RMSProp with L2 folded into the gradient:
///   g = grad + wd * value; cache = rho * cache + (1 - rho) * g^2;
///   value -= lr * (g / (sqrt(cache) + eps)).
/// Returns the amount subtracted from `value`.
double rmsprop_update(double& value, double grad, double& cache, const RmsPropHyper& hp);

/// Elementwise bias-corrected ADAM for step number `t` (1-based). Returns the amount subtracted.
double adam_update(double& value, double grad, double& m, double& v, std::uint64_t t, const AdamHyper& hp);

struct RmsPropSlot {
  Tensor cache;
};

struct AdamSlot {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
};

/// Applies one step to a parameter. Throws StateError if the parameter has no gradient.
void rmsprop_step(Parameter& p, RmsPropSlot& slot, const RmsPropHyper& hp);
void adam_step(Parameter& p, AdamSlot& slot, const AdamHyper& hp);

/// Weight decay applies to weights and batch-norm scales; biases and shifts are not decayed.
bool decays(ParamRole role);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double lr = 1e-4;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

/// Named optimizer-state tensor, used for checkpointing.
struct SlotTensor {
  std::string name;
  Tensor* tensor;
};

/// Optimizer over a fixed, ordered list of parameters (one slot per parameter).
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::span<Parameter> params);

  /// Steps every parameter in the list it was built for. `params` must be that same list.
  void step(std::span<Parameter> params);

  const OptimizerConfig& config() const noexcept { return config_; }
  std::size_t slot_count() const noexcept;

  /// Accumulator tensors named "<param>/cache", "<param>/m", "<param>/v".
  std::vector<SlotTensor> slot_tensors(std::span<Parameter> params);
  /// ADAM step counters in parameter order (empty for RMSProp).
  std::vector<std::uint64_t> step_counters() const;
  void set_step_counters(const std::vector<std::uint64_t>& counters);

 private:
  OptimizerConfig config_;
  std::vector<RmsPropSlot> rms_;
  std::vector<AdamSlot> adam_;
};

}  // namespace ctsynth
