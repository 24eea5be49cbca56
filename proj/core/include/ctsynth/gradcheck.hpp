#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ctsynth/tape.hpp"

namespace ctsynth {

/// Worst disagreement found within one parameter tensor.
struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  /// Elements whose +h or -h evaluation flipped the branch of some leaky_relu input. The
  /// central difference of such an element straddles a kink and is not a derivative oracle.
  std::size_t kink_crossings = 0;
  /// Worst error among elements that crossed no kink.
  double max_rel_err_smooth = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_rel_err_smooth = 0.0;
  std::size_t kink_crossings = 0;
  std::vector<GradCheckEntry> entries;

  const GradCheckEntry& worst() const;
  bool passed(double tol) const { return max_rel_err <= tol; }
};

/// Builds the scalar loss on a fresh tape, reading parameters through Tape::parameter.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares tape gradients against central differences (f(θ+h) - f(θ-h)) / 2h.
///
/// Relative error per element is |a - n| / max(|a|, |n|, 1e-8). `f` must be deterministic;
/// it is evaluated twice up front and a bitwise mismatch raises ContractError.
GradCheckReport grad_check(const LossBuilder& f, const std::vector<Parameter*>& params, double h = 1e-4);

}  // namespace ctsynth
