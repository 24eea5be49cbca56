#pragma once

// Independent reference implementations used only by tests. Nothing here calls into the
// kernels under test except where a function says so explicitly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ctsynth/tensor.hpp"

namespace oracle {

using ctsynth::Shape;
using ctsynth::Tensor;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

/// "Same" convolution by direct summation. Output size ceil(in/stride); total padding
/// max((out-1)*stride + k - in, 0) with the smaller half before.
inline Tensor conv2d_direct(const Tensor& x, const Tensor& w, const Tensor* b, std::size_t stride) {
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
  const std::size_t k = w.dim(0), cout = w.dim(3);
  const std::size_t oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;
  const long pad_h = static_cast<long>(std::max<long>(static_cast<long>((oh - 1) * stride + k) - static_cast<long>(h), 0) / 2);
  const long pad_w = static_cast<long>(std::max<long>(static_cast<long>((ow - 1) * stride + k) - static_cast<long>(wd), 0) / 2);
  Tensor y({n, oh, ow, cout});
  for (std::size_t b_ = 0; b_ < n; ++b_)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t co = 0; co < cout; ++co) {
          double s = b ? (*b)[co] : 0.0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - pad_h;
              const long ix = static_cast<long>(ox * stride + kx) - pad_w;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              for (std::size_t ci = 0; ci < cin; ++ci) {
                s += x.at({b_, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ci}) * w.at({ky, kx, ci, co});
              }
            }
          y.at({b_, oy, ox, co}) = s;
        }
  return y;
}

/// Dense matrix (rows = output elements, cols = input elements) of a linear map, built by
/// probing it with every basis vector.
inline std::vector<std::vector<double>> linear_map_matrix(const std::function<Tensor(const Tensor&)>& f,
                                                          const Shape& in_shape) {
  const std::size_t cols = ctsynth::element_count(in_shape);
  std::vector<std::vector<double>> m;
  for (std::size_t j = 0; j < cols; ++j) {
    Tensor e(in_shape);
    e[j] = 1.0;
    const Tensor y = f(e);
    if (m.empty()) m.assign(y.size(), std::vector<double>(cols, 0.0));
    for (std::size_t i = 0; i < y.size(); ++i) m[i][j] = y[i];
  }
  return m;
}

/// Straight-line RMSProp on plain vectors, written from the update formulas.
struct RmsPropOracle {
  double lr, rho, eps, wd;
  void step(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& cache) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double ge = g[i] + wd * w[i];
      cache[i] = rho * cache[i] + (1 - rho) * ge * ge;
      w[i] = w[i] - lr * ge / (std::sqrt(cache[i]) + eps);
    }
  }
};

/// Straight-line bias-corrected ADAM on plain vectors.
struct AdamOracle {
  double lr, b1, b2, eps, wd;
  void step(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v,
            int t) const {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double ge = g[i] + wd * w[i];
      m[i] = b1 * m[i] + (1 - b1) * ge;
      v[i] = b2 * v[i] + (1 - b2) * ge * ge;
      double b1t = 1, b2t = 1;
      for (int s = 0; s < t; ++s) {
        b1t *= b1;
        b2t *= b2;
      }
      const double mh = m[i] / (1 - b1t);
      const double vh = v[i] / (1 - b2t);
      w[i] = w[i] - lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace oracle
