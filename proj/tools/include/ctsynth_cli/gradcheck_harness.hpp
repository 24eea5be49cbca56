#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctsynth/gan_config.hpp"
#include "ctsynth/gradcheck.hpp"

namespace ctsynth::cli {

struct GradcheckOptions {
  int size = 8;
  int kernel = 3;
  double tol = 1e-5;
  double h = 1e-4;
  int width_divisor = 16;
  int batch = 2;
  int channels = 3;
  double init_std = 0.2;
  // Weights that feed batch norm are redrawn at this std. Batch norm makes the loss invariant
  // to their scale, so this leaves the function unchanged while shrinking the curvature the
  // central difference sees (truncation error falls with the square of the scale).
  double bn_weight_std = 2.0;
  // A fixture whose +-h evaluations cross no leaky_relu kink for kernel sizes 3 and 5.
  std::uint64_t seed = 16;
};

/// Worst error over the parameters of one layer.
struct LayerError {
  std::string path;  // "d_loss" or "g_loss"
  std::string layer;
  std::string parameter;
  double max_rel_err = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t kink_crossings = 0;
  double max_rel_err_smooth = 0.0;
};

struct GradcheckOutcome {
  GanConfig config;
  std::vector<LayerError> layers;
  double max_rel_err = 0.0;
  double max_rel_err_smooth = 0.0;
  std::size_t kink_crossings = 0;
  const LayerError& worst() const;
  bool passed(double tol) const { return max_rel_err <= tol; }
};

/// Reduced-width configuration with both networks intact (every layer type present).
GanConfig gradcheck_config(const GradcheckOptions& opts);

/// Checks d_loss over every discriminator parameter and g_loss (through D) over every
/// generator parameter, in train mode with fixed dropout masks.
GradcheckOutcome run_gradcheck(const GradcheckOptions& opts);

}  // namespace ctsynth::cli
