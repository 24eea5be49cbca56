#include "ctsynth/gan_config.hpp"

#include <string>

#include "ctsynth/error.hpp"

namespace ctsynth {

std::string_view to_string(GLossMode mode) { return mode == GLossMode::nonsaturating ? "nonsaturating" : "minimax"; }

GLossMode parse_g_loss_mode(std::string_view text) {
  if (text == "nonsaturating") return GLossMode::nonsaturating;
  if (text == "minimax") return GLossMode::minimax;
  throw ConfigError("unknown g_loss_mode '" + std::string(text) + "' (expected nonsaturating or minimax)");
}

namespace {

int stride_product(const std::vector<int>& strides) {
  int p = 1;
  for (int s : strides) p *= s;
  return p;
}

void check_strides(const std::vector<int>& strides, std::size_t expected, const char* what) {
  if (strides.size() != expected) {
    throw ConfigError(std::string(what) + " needs " + std::to_string(expected) + " entries");
  }
  for (int s : strides) {
    if (s < 1) throw ConfigError(std::string(what) + " entries must be positive");
  }
}

}  // namespace

int GanConfig::noise_side() const {
  const int p = stride_product(g_strides);
  return p > 0 ? image_size / p : 0;
}

int GanConfig::required_noise_dim() const { return noise_side() * noise_side(); }

void GanConfig::validate() const {
  if (image_size <= 0) throw ConfigError("image_size must be positive");
  if (image_size % 4 != 0) throw ConfigError("image_size must be divisible by 4, got " + std::to_string(image_size));
  if (channels <= 0) throw ConfigError("channels must be positive");
  if (kernel_size <= 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size must be odd and positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr_d > 0.0) || !(lr_g > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in [0, 1)");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must lie in [0, 1)");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) throw ConfigError("bn_momentum must lie in (0, 1)");
  if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (width_divisor < 1) throw ConfigError("width_divisor must be at least 1");
  check_strides(d_strides, 4, "d_strides");
  check_strides(g_strides, 6, "g_strides");
  const int p = stride_product(g_strides);
  if (image_size % p != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by the generator upsampling factor " +
                      std::to_string(p));
  }
  if (noise_dim != required_noise_dim()) {
    throw ConfigError("noise_dim must equal (image_size/" + std::to_string(p) + ")^2 = " +
                      std::to_string(required_noise_dim()) + ", got " + std::to_string(noise_dim));
  }
}

OptimizerConfig GanConfig::d_optimizer() const {
  OptimizerConfig c;
  c.kind = optimizer;
  c.lr = lr_d;
  c.weight_decay = weight_decay;
  return c;
}

OptimizerConfig GanConfig::g_optimizer() const {
  OptimizerConfig c = d_optimizer();
  c.lr = lr_g;
  return c;
}

}  // namespace ctsynth
