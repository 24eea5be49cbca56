#pragma once

#include "ctsynth/gan_config.hpp"
#include "ctsynth/tape.hpp"
#include "ctsynth/tensor.hpp"

namespace ctsynth {

// Batch-mean estimators of the adversarial objective
//   V(D, G) = E[log D(x)] + E[log(1 - D(G(z)))].
// All probabilities must lie strictly inside (0, 1); anything else raises DomainError.

/// mean(log d_real) + mean(log(1 - d_fake)). Always <= 0; equals -2 ln 2 at d == 0.5.
double gan_value(const Tensor& d_real, const Tensor& d_fake);

/// Discriminator cross-entropy, exactly -gan_value.
double d_loss(const Tensor& d_real, const Tensor& d_fake);

/// minimax: mean(log(1 - d_fake)); nonsaturating: -mean(log d_fake).
double g_loss(const Tensor& d_fake, GLossMode mode);

// Differentiable versions recorded on a tape; values match the plain functions bit for bit.
Var gan_value(Tape& t, Var d_real, Var d_fake);
Var d_loss(Tape& t, Var d_real, Var d_fake);
Var g_loss(Tape& t, Var d_fake, GLossMode mode);

}  // namespace ctsynth
