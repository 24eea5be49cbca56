#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "ctsynth/dataset.hpp"
#include "ctsynth/gan_config.hpp"
#include "ctsynth/network.hpp"
#include "ctsynth/optim.hpp"
#include "ctsynth/rng.hpp"

namespace ctsynth {

/// i.i.d. Uniform[-1, 1] noise of shape [n, dim].
Tensor sample_noise(std::size_t n, std::size_t dim, Rng& rng);

struct StepMetrics {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  double wall_ms = 0.0;
};

struct DiscriminatorTerms {
  Var loss;
  Var d_real;
  Var d_fake;
};

/// d_loss of D on a real batch and a fixed (constant) fake batch.
DiscriminatorTerms discriminator_objective(Tape& tape, Network& d, const Tensor& real, const Tensor& fake, Mode mode,
                                           Rng& rng);

struct GeneratorTerms {
  Var loss;
  Var fake;
  Var d_fake;
};

/// g_loss of the composed path noise -> G -> D.
GeneratorTerms generator_objective(Tape& tape, Network& g, Network& d, const Tensor& noise, GLossMode mode,
                                   Mode g_mode, Mode d_mode, Rng& rng);

/// Owns the complete training state: both networks, their optimizers, the PRNG, the step
/// counter and the metric history. One logical thread of control.
class Trainer {
 public:
  explicit Trainer(const GanConfig& cfg);

  const GanConfig& config() const noexcept { return cfg_; }
  /// Replaces the run-length knob after a resume; architecture fields must not change.
  void set_total_steps(std::int64_t steps) noexcept { cfg_.steps = steps; }

  Network& discriminator() noexcept { return d_; }
  Network& generator() noexcept { return g_; }
  const Network& discriminator() const noexcept { return d_; }
  const Network& generator() const noexcept { return g_; }
  Optimizer& d_optimizer() noexcept { return d_opt_; }
  Optimizer& g_optimizer() noexcept { return g_opt_; }
  Rng& rng() noexcept { return rng_; }
  const Rng& rng() const noexcept { return rng_; }

  std::int64_t step() const noexcept { return step_; }
  void set_step(std::int64_t step) noexcept { step_ = step; }
  const std::vector<StepMetrics>& history() const noexcept { return history_; }

  /// One alternating iteration: a D update on real vs. detached fakes, then a G update
  /// through a frozen D on fresh noise. Throws NumericError naming the step on NaN/Inf.
  StepMetrics train_step(const Tensor& real_batch);

  /// Inference-mode samples [n, S, S, C] (BN running statistics, no dropout).
  Tensor generate(std::size_t n, Rng& rng);
  Tensor generate_from_noise(const Tensor& noise);

 private:
  Trainer(const GanConfig& cfg, std::pair<Network, Network> nets);

  GanConfig cfg_;
  Network d_;
  Network g_;
  Optimizer d_opt_;
  Optimizer g_opt_;
  Rng rng_;
  std::int64_t step_ = 0;
  std::vector<StepMetrics> history_;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: nothing written to disk
  std::int64_t checkpoint_interval = 0;
  std::int64_t sample_interval = 0;
  std::int64_t log_interval = 1;
  std::size_t sample_count = 16;
  std::size_t sample_cols = 4;
  std::function<void(const StepMetrics&)> on_step;
};

/// Seed of the data-order stream for a config; shared by fresh and resumed runs.
std::uint64_t data_seed(const GanConfig& cfg);

/// Runs train_step until trainer.step() == config().steps, drawing shuffled batches from
/// `ds`. With an out_dir it appends to metrics.tsv, writes checkpoints/step-NNNNNNNN and
/// samples/step-NNNNNNNN.pgm at their intervals, and the final state to final/.
std::vector<StepMetrics> train(Trainer& trainer, const ImageDataset& ds, const TrainOptions& opts);

}  // namespace ctsynth
