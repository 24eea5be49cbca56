#include "ctsynth/ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ctsynth/conv.hpp"
#include "ctsynth/error.hpp"

namespace ctsynth {

namespace {

constexpr double kSigmoidCeiling = 1.0 - 0x1p-53;

std::vector<std::size_t> ids(std::initializer_list<Var> vars) {
  std::vector<std::size_t> out;
  out.reserve(vars.size());
  for (auto v : vars) out.push_back(v.id);
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
}

void require_probabilities(const Tensor& p, const char* op) {
  for (double v : p.data()) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DomainError(std::string(op) + ": input " + std::to_string(v) + " outside (0, 1)");
    }
  }
}

}  // namespace

BatchNormState::BatchNormState(std::size_t channels, double momentum_, double epsilon_)
    : running_mean({channels}, 0.0), running_var({channels}, 1.0), momentum(momentum_), epsilon(epsilon_) {
  if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
}

double stable_sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  return std::clamp(y, std::numeric_limits<double>::min(), kSigmoidCeiling);
}

DropoutResult dropout_forward(const Tensor& x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  if (mode == Mode::infer || p == 0.0) return {x, Tensor(x.shape(), 1.0)};
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool drop = std::generate_canonical<double, 53>(rng) < p;
    mask[i] = drop ? 0.0 : keep_scale;
    out[i] = x[i] * mask[i];
  }
  return {std::move(out), std::move(mask)};
}

Var conv2d(Tape& t, Var x, Var w, std::optional<Var> b, std::size_t stride) {
  const Tensor* bias = b ? &t.value(*b) : nullptr;
  Tensor y = kernels::conv2d(t.value(x), t.value(w), bias, stride);
  auto inputs = b ? ids({x, w, *b}) : ids({x, w});
  return t.record(OpKind::conv2d, std::move(inputs), std::move(y), [x, w, b, stride](Tape& tp, const Tensor& dy) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    if (tp.requires_grad(x)) tp.accumulate(x, kernels::conv2d_grad_input(dy, wv, xv.shape(), stride));
    if (tp.requires_grad(w)) tp.accumulate(w, kernels::conv2d_grad_weight(xv, dy, wv.dim(0), stride));
    if (b && tp.requires_grad(*b)) tp.accumulate(*b, kernels::reduce_to_channels(dy));
  });
}

Var conv2d_transpose(Tape& t, Var x, Var w, std::optional<Var> b, std::size_t stride) {
  const Tensor* bias = b ? &t.value(*b) : nullptr;
  Tensor y = kernels::conv2d_transpose(t.value(x), t.value(w), bias, stride);
  auto inputs = b ? ids({x, w, *b}) : ids({x, w});
  return t.record(OpKind::conv2d_transpose, std::move(inputs), std::move(y),
                  [x, w, b, stride](Tape& tp, const Tensor& dy) {
                    const Tensor& wv = tp.value(w);
                    if (tp.requires_grad(x)) tp.accumulate(x, kernels::conv2d_transpose_grad_input(dy, wv, stride));
                    if (tp.requires_grad(w)) {
                      tp.accumulate(w, kernels::conv2d_transpose_grad_weight(tp.value(x), dy, wv.dim(0), stride));
                    }
                    if (b && tp.requires_grad(*b)) tp.accumulate(*b, kernels::reduce_to_channels(dy));
                  });
}

Var dense(Tape& t, Var x, Var w, std::optional<Var> b) {
  const Tensor* bias = b ? &t.value(*b) : nullptr;
  Tensor y = kernels::dense(t.value(x), t.value(w), bias);
  auto inputs = b ? ids({x, w, *b}) : ids({x, w});
  return t.record(OpKind::dense, std::move(inputs), std::move(y), [x, w, b](Tape& tp, const Tensor& dy) {
    if (tp.requires_grad(x)) tp.accumulate(x, kernels::dense_grad_input(dy, tp.value(w)));
    if (tp.requires_grad(w)) tp.accumulate(w, kernels::dense_grad_weight(tp.value(x), dy));
    if (b && tp.requires_grad(*b)) tp.accumulate(*b, kernels::reduce_to_channels(dy));
  });
}

Var leaky_relu(Tape& t, Var x, double slope) {
  if (!(slope >= 0.0 && slope < 1.0)) throw ConfigError("leaky_relu slope must lie in [0, 1)");
  const Tensor& xv = t.value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  return t.record(OpKind::leaky_relu, ids({x}), std::move(y), [x, slope](Tape& tp, const Tensor& dy) {
    const Tensor& xv = tp.value(x);
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = xv[i] > 0.0 ? dy[i] : slope * dy[i];
    tp.accumulate(x, std::move(dx));
  });
}

Var sigmoid(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = stable_sigmoid(xv[i]);
  Var out{t.size()};
  return t.record(OpKind::sigmoid, ids({x}), std::move(y), [x, out](Tape& tp, const Tensor& dy) {
    const Tensor& yv = tp.value(out);
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * yv[i] * (1.0 - yv[i]);
    tp.accumulate(x, std::move(dx));
  });
}

Var batch_norm(Tape& t, Var x, Var gamma, Var beta, BatchNormState& state, Mode mode) {
  const Tensor& xv = t.value(x);
  if (xv.rank() != 2 && xv.rank() != 4) {
    throw DimensionError("batch_norm expects [N,C] or [N,H,W,C], got " + shape_to_string(xv.shape()));
  }
  const std::size_t c = xv.shape().back();
  const std::size_t count = xv.size() / c;
  if (t.value(gamma).shape() != Shape{c} || t.value(beta).shape() != Shape{c} ||
      state.running_mean.shape() != Shape{c} || state.running_var.shape() != Shape{c}) {
    throw DimensionError("batch_norm parameters do not match " + std::to_string(c) + " channels");
  }
  if (mode == Mode::train && xv.dim(0) < 2) {
    throw ContractError("batch_norm in train mode needs a batch of at least 2 (variance is degenerate)");
  }

  Tensor mu({c});
  Tensor var({c});
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < xv.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) mu[j] += xv[i + j];
    }
    for (std::size_t j = 0; j < c; ++j) mu[j] /= static_cast<double>(count);
    for (std::size_t i = 0; i < xv.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv[i + j] - mu[j];
        var[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<double>(count);
    const double m = state.momentum;
    for (std::size_t j = 0; j < c; ++j) {
      state.running_mean[j] = m * state.running_mean[j] + (1.0 - m) * mu[j];
      state.running_var[j] = m * state.running_var[j] + (1.0 - m) * var[j];
    }
  } else {
    mu = state.running_mean;
    var = state.running_var;
  }

  Tensor inv_std({c});
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + state.epsilon);
  const Tensor& g = t.value(gamma);
  const Tensor& bt = t.value(beta);
  Tensor xhat(xv.shape());
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i + j] = (xv[i + j] - mu[j]) * inv_std[j];
      y[i + j] = g[j] * xhat[i + j] + bt[j];
    }
  }

  return t.record(
      OpKind::batch_norm, ids({x, gamma, beta}), std::move(y),
      [x, gamma, beta, mode, c, count, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                                              const Tensor& dy) {
        Tensor dgamma({c});
        Tensor dbeta({c});
        for (std::size_t i = 0; i < dy.size(); i += c) {
          for (std::size_t j = 0; j < c; ++j) {
            dgamma[j] += dy[i + j] * xhat[i + j];
            dbeta[j] += dy[i + j];
          }
        }
        if (tp.requires_grad(x)) {
          const Tensor& g = tp.value(gamma);
          Tensor dx(dy.shape());
          if (mode == Mode::train) {
            const double inv_count = 1.0 / static_cast<double>(count);
            for (std::size_t i = 0; i < dy.size(); i += c) {
              for (std::size_t j = 0; j < c; ++j) {
                dx[i + j] = g[j] * inv_std[j] * (dy[i + j] - inv_count * (dbeta[j] + xhat[i + j] * dgamma[j]));
              }
            }
          } else {
            for (std::size_t i = 0; i < dy.size(); i += c) {
              for (std::size_t j = 0; j < c; ++j) dx[i + j] = g[j] * inv_std[j] * dy[i + j];
            }
          }
          tp.accumulate(x, std::move(dx));
        }
        tp.accumulate(gamma, std::move(dgamma));
        tp.accumulate(beta, std::move(dbeta));
      });
}

Var dropout(Tape& t, Var x, double p, Mode mode, Rng& rng) {
  auto [out, mask] = dropout_forward(t.value(x), p, mode, rng);
  return t.record(OpKind::dropout, ids({x}), std::move(out), [x, mask = std::move(mask)](Tape& tp, const Tensor& dy) {
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
    tp.accumulate(x, std::move(dx));
  });
}

Var reshape(Tape& t, Var x, Shape new_shape) {
  Tensor y = t.value(x).reshaped(std::move(new_shape));
  return t.record(OpKind::reshape, ids({x}), std::move(y), [x](Tape& tp, const Tensor& dy) {
    tp.accumulate(x, dy.reshaped(tp.value(x).shape()));
  });
}

Var flatten(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  if (xv.rank() < 2) throw DimensionError("flatten needs a batch axis, got " + shape_to_string(xv.shape()));
  return reshape(t, x, {xv.dim(0), xv.size() / xv.dim(0)});
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return t.record(OpKind::add, ids({a, b}), std::move(y), [a, b](Tape& tp, const Tensor& dy) {
    tp.accumulate(a, dy);
    tp.accumulate(b, dy);
  });
}

Var scale(Tape& t, Var a, double factor) {
  Tensor y = t.value(a);
  for (auto& v : y.data()) v *= factor;
  return t.record(OpKind::scale, ids({a}), std::move(y), [a, factor](Tape& tp, const Tensor& dy) {
    Tensor dx = dy;
    for (auto& v : dx.data()) v *= factor;
    tp.accumulate(a, std::move(dx));
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return t.record(OpKind::mul, ids({a, b}), std::move(y), [a, b](Tape& tp, const Tensor& dy) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor da(dy.shape());
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] = dy[i] * bv[i];
      tp.accumulate(a, std::move(da));
    }
    if (tp.requires_grad(b)) {
      Tensor db(dy.shape());
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] = dy[i] * av[i];
      tp.accumulate(b, std::move(db));
    }
  });
}

Var sum(Tape& t, Var a) {
  return t.record(OpKind::sum, ids({a}), Tensor::scalar(ctsynth::sum(t.value(a))), [a](Tape& tp, const Tensor& dy) {
    tp.accumulate(a, Tensor(tp.value(a).shape(), dy[0]));
  });
}

namespace {

// log(sigmoid(z)) without forming sigmoid(z), exact in both tails.
double log_sigmoid(double z) { return z < 0.0 ? z - std::log1p(std::exp(z)) : -std::log1p(std::exp(-z)); }

double unclamped_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// When p is a sigmoid node the mean is taken over log(sigmoid(sign * z)) of its logits.
// Rounding sigmoid(z) to a probability first turns the loss into a staircase once D saturates.
Var mean_log_sigmoid(Tape& t, Var p, double sign, OpKind kind) {
  const Var z{t.node(p).inputs.front()};
  const Tensor& zv = t.value(z);
  double s = 0.0;
  for (double v : zv.data()) s += log_sigmoid(sign * v);
  const double n = static_cast<double>(zv.size());
  return t.record(kind, ids({z}), Tensor::scalar(s / n), [z, n, sign](Tape& tp, const Tensor& dy) {
    const Tensor& zv = tp.value(z);
    Tensor dz(zv.shape());
    for (std::size_t i = 0; i < zv.size(); ++i) dz[i] = sign * dy[0] * unclamped_sigmoid(-sign * zv[i]) / n;
    tp.accumulate(z, std::move(dz));
  });
}

}  // namespace

Var mean_log(Tape& t, Var p) {
  const Tensor& pv = t.value(p);
  require_probabilities(pv, "mean_log");
  if (t.node(p).kind == OpKind::sigmoid) return mean_log_sigmoid(t, p, 1.0, OpKind::mean_log);
  double s = 0.0;
  for (double v : pv.data()) s += std::log(v);
  const double n = static_cast<double>(pv.size());
  return t.record(OpKind::mean_log, ids({p}), Tensor::scalar(s / n), [p, n](Tape& tp, const Tensor& dy) {
    const Tensor& pv = tp.value(p);
    Tensor dp(pv.shape());
    for (std::size_t i = 0; i < pv.size(); ++i) dp[i] = dy[0] / (n * pv[i]);
    tp.accumulate(p, std::move(dp));
  });
}

Var mean_log1m(Tape& t, Var p) {
  const Tensor& pv = t.value(p);
  require_probabilities(pv, "mean_log1m");
  if (t.node(p).kind == OpKind::sigmoid) return mean_log_sigmoid(t, p, -1.0, OpKind::mean_log1m);
  double s = 0.0;
  for (double v : pv.data()) s += std::log1p(-v);
  const double n = static_cast<double>(pv.size());
  return t.record(OpKind::mean_log1m, ids({p}), Tensor::scalar(s / n), [p, n](Tape& tp, const Tensor& dy) {
    const Tensor& pv = tp.value(p);
    Tensor dp(pv.shape());
    for (std::size_t i = 0; i < pv.size(); ++i) dp[i] = -dy[0] / (n * (1.0 - pv[i]));
    tp.accumulate(p, std::move(dp));
  });
}

}  // namespace ctsynth
