#pragma once

#include <cstddef>
#include <optional>

#include "ctsynth/rng.hpp"
#include "ctsynth/tape.hpp"
#include "ctsynth/tensor.hpp"

namespace ctsynth {

enum class Mode { train, infer };

/// Running statistics of one batch-norm layer.
///
/// Train mode normalizes with the batch statistics and folds them into the running ones as
/// ema <- momentum * ema + (1 - momentum) * batch_stat (biased batch variance). Infer mode
/// normalizes with the running statistics only.
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels, double momentum = 0.9, double epsilon = 1e-5);
};

/// Inverted dropout. `mask` holds 0 for dropped elements and 1/(1-p) for survivors.
struct DropoutResult {
  Tensor output;
  Tensor mask;
};

DropoutResult dropout_forward(const Tensor& x, double p, Mode mode, Rng& rng);

/// Logistic function clamped to [DBL_MIN, 1 - 2^-53] so it is strictly inside (0, 1).
double stable_sigmoid(double x);

Var conv2d(Tape& t, Var x, Var w, std::optional<Var> b, std::size_t stride);
Var conv2d_transpose(Tape& t, Var x, Var w, std::optional<Var> b, std::size_t stride);
Var dense(Tape& t, Var x, Var w, std::optional<Var> b);
Var leaky_relu(Tape& t, Var x, double slope);
Var sigmoid(Tape& t, Var x);
Var batch_norm(Tape& t, Var x, Var gamma, Var beta, BatchNormState& state, Mode mode);
Var dropout(Tape& t, Var x, double p, Mode mode, Rng& rng);
Var reshape(Tape& t, Var x, Shape new_shape);
/// [N, ...] -> [N, F].
Var flatten(Tape& t, Var x);

Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);
Var mul(Tape& t, Var a, Var b);
Var sum(Tape& t, Var a);
/// mean(log p); every element must lie in (0, 1). If p comes straight from sigmoid(), the
/// value and gradient are computed from the logits (log-sigmoid), which stays accurate when
/// the sigmoid saturates.
Var mean_log(Tape& t, Var p);
/// mean(log(1 - p)); same contract and logit fusion as mean_log.
Var mean_log1m(Tape& t, Var p);

}  // namespace ctsynth
