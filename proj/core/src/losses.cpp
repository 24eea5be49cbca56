#include "ctsynth/losses.hpp"

#include "ctsynth/ops.hpp"

namespace ctsynth {

// The plain functions run the same ops on a scratch tape so both paths share arithmetic.

double gan_value(const Tensor& d_real, const Tensor& d_fake) {
  Tape t;
  return t.value(gan_value(t, t.constant(d_real), t.constant(d_fake))).item();
}

double d_loss(const Tensor& d_real, const Tensor& d_fake) { return -gan_value(d_real, d_fake); }

double g_loss(const Tensor& d_fake, GLossMode mode) {
  Tape t;
  return t.value(g_loss(t, t.constant(d_fake), mode)).item();
}

Var gan_value(Tape& t, Var d_real, Var d_fake) { return add(t, mean_log(t, d_real), mean_log1m(t, d_fake)); }

Var d_loss(Tape& t, Var d_real, Var d_fake) { return scale(t, gan_value(t, d_real, d_fake), -1.0); }

Var g_loss(Tape& t, Var d_fake, GLossMode mode) {
  if (mode == GLossMode::minimax) return mean_log1m(t, d_fake);
  return scale(t, mean_log(t, d_fake), -1.0);
}

}  // namespace ctsynth
