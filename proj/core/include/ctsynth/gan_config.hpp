#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ctsynth/optim.hpp"

namespace ctsynth {

enum class GLossMode { nonsaturating, minimax };

std::string_view to_string(GLossMode mode);
GLossMode parse_g_loss_mode(std::string_view text);

/// Every knob of the training recipe. Defaults reproduce the published setup.
struct GanConfig {
  int image_size = 40;
  int channels = 3;
  int noise_dim = 100;
  int kernel_size = 3;
  int batch_size = 16;
  double lr_d = 1e-4;
  double lr_g = 2e-4;
  OptimizerKind optimizer = OptimizerKind::rmsprop;
  double leaky_slope = 0.2;
  double dropout_p = 0.6;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  double weight_decay = 1e-5;
  double init_std = 0.02;
  GLossMode g_loss_mode = GLossMode::nonsaturating;
  std::int64_t steps = 30000;
  std::uint64_t seed = 1;
  /// Divides every hidden filter/unit count (min 1). 16 gives the reduced-width test networks.
  int width_divisor = 1;
  std::vector<int> d_strides{2, 1, 1, 1};
  std::vector<int> g_strides{2, 2, 1, 1, 1, 1};

  /// Side of the square map the noise vector is reshaped to: image_size / prod(g_strides).
  int noise_side() const;
  /// noise_side()^2, the only noise dimension compatible with the generator.
  int required_noise_dim() const;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;

  OptimizerConfig d_optimizer() const;
  OptimizerConfig g_optimizer() const;

  friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

}  // namespace ctsynth
