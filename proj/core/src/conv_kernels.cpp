#include "ctsynth/conv.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "ctsynth/error.hpp"
#include "ctsynth/gemm.hpp"

namespace ctsynth::kernels {

namespace {

std::size_t same_padding(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride) {
  const std::size_t needed = (out - 1) * stride + kernel;
  return needed > in ? (needed - in) / 2 : 0;
}

void check_stride_kernel(std::size_t kernel, std::size_t stride) {
  if (stride == 0) throw ConfigError("convolution stride must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("convolution kernel must be odd, got " + std::to_string(kernel));
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
  }
}

void require_square_filter(const Tensor& w) {
  require_rank(w, 4, "filter");
  if (w.dim(0) != w.dim(1)) throw DimensionError("filter must be square, got " + shape_to_string(w.shape()));
}

void add_bias(Tensor& y, const Tensor* bias) {
  if (!bias) return;
  const std::size_t c = y.shape().back();
  if (bias->size() != c) {
    throw DimensionError("bias of shape " + shape_to_string(bias->shape()) + " for " + std::to_string(c) + " channels");
  }
  auto out = y.data();
  const auto b = bias->data();
  for (std::size_t i = 0; i < out.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) out[i + j] += b[j];
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1; }

}  // namespace

ConvGeometry ConvGeometry::same(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                                std::size_t out_c, std::size_t kernel, std::size_t stride) {
  check_stride_kernel(kernel, stride);
  ConvGeometry g;
  g.batch = batch;
  g.in_h = in_h;
  g.in_w = in_w;
  g.in_c = in_c;
  g.out_c = out_c;
  g.kernel = kernel;
  g.stride = stride;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  g.pad_top = same_padding(in_h, g.out_h, kernel, stride);
  g.pad_left = same_padding(in_w, g.out_w, kernel, stride);
  return g;
}

void im2col(const double* image, const ConvGeometry& g, double* cols) {
  const std::size_t row_len = g.patch_size();
  const std::size_t span = g.kernel * g.in_c;
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      double* row = cols + (oy * g.out_w + ox) * row_len;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        double* dst = row + ky * span;
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
          std::fill_n(dst, span, 0.0);
          continue;
        }
        const double* src_row = image + static_cast<std::size_t>(iy) * g.in_w * g.in_c;
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
            std::fill_n(dst + kx * g.in_c, g.in_c, 0.0);
          } else {
            std::memcpy(dst + kx * g.in_c, src_row + static_cast<std::size_t>(ix) * g.in_c, g.in_c * sizeof(double));
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* image) {
  const std::size_t row_len = g.patch_size();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const double* row = cols + (oy * g.out_w + ox) * row_len;
      for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
          const double* src = row + (ky * g.kernel + kx) * g.in_c;
          double* dst = image + (static_cast<std::size_t>(iy) * g.in_w + static_cast<std::size_t>(ix)) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride) {
  require_rank(x, 4, "conv2d input");
  require_square_filter(w);
  if (x.dim(3) != w.dim(2)) {
    throw DimensionError("conv2d input channels " + std::to_string(x.dim(3)) + " do not match filter " +
                         shape_to_string(w.shape()));
  }
  const auto g = ConvGeometry::same(x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(3), w.dim(0), stride);
  Tensor y({g.batch, g.out_h, g.out_w, g.out_c});
  const std::size_t in_stride = g.in_h * g.in_w * g.in_c;
  const std::size_t out_stride = g.out_pixels() * g.out_c;
  std::vector<double> cols(is_pointwise(g) ? 0 : g.out_pixels() * g.patch_size());
  for (std::size_t n = 0; n < g.batch; ++n) {
    const double* a = x.data().data() + n * in_stride;
    if (!is_pointwise(g)) {
      im2col(a, g, cols.data());
      a = cols.data();
    }
    gemm(Trans::no, Trans::no, g.out_pixels(), g.out_c, g.patch_size(), a, g.patch_size(), w.data().data(), g.out_c,
         y.data().data() + n * out_stride, g.out_c, false);
  }
  add_bias(y, bias);
  return y;
}

Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, const Shape& input_shape, std::size_t stride) {
  require_rank(dy, 4, "conv2d output gradient");
  require_square_filter(w);
  if (input_shape.size() != 4 || input_shape[3] != w.dim(2)) {
    throw DimensionError("conv2d input shape " + shape_to_string(input_shape) + " does not match filter " +
                         shape_to_string(w.shape()));
  }
  const auto g =
      ConvGeometry::same(input_shape[0], input_shape[1], input_shape[2], input_shape[3], w.dim(3), w.dim(0), stride);
  if (dy.shape() != Shape{g.batch, g.out_h, g.out_w, g.out_c}) {
    throw DimensionError("conv2d output gradient " + shape_to_string(dy.shape()) + " does not match input " +
                         shape_to_string(input_shape));
  }
  Tensor dx(input_shape);
  const std::size_t in_stride = g.in_h * g.in_w * g.in_c;
  const std::size_t out_stride = g.out_pixels() * g.out_c;
  std::vector<double> cols(is_pointwise(g) ? 0 : g.out_pixels() * g.patch_size());
  for (std::size_t n = 0; n < g.batch; ++n) {
    double* dst = dx.data().data() + n * in_stride;
    double* c = is_pointwise(g) ? dst : cols.data();
    gemm(Trans::no, Trans::yes, g.out_pixels(), g.patch_size(), g.out_c, dy.data().data() + n * out_stride, g.out_c,
         w.data().data(), g.out_c, c, g.patch_size(), false);
    if (!is_pointwise(g)) col2im_add(cols.data(), g, dst);
  }
  return dx;
}

Tensor conv2d_grad_weight(const Tensor& x, const Tensor& dy, std::size_t kernel, std::size_t stride) {
  require_rank(x, 4, "conv2d input");
  require_rank(dy, 4, "conv2d output gradient");
  const auto g = ConvGeometry::same(x.dim(0), x.dim(1), x.dim(2), x.dim(3), dy.dim(3), kernel, stride);
  if (dy.shape() != Shape{g.batch, g.out_h, g.out_w, g.out_c}) {
    throw DimensionError("conv2d output gradient " + shape_to_string(dy.shape()) + " does not match input " +
                         shape_to_string(x.shape()));
  }
  Tensor dw({kernel, kernel, g.in_c, g.out_c});
  const std::size_t in_stride = g.in_h * g.in_w * g.in_c;
  const std::size_t out_stride = g.out_pixels() * g.out_c;
  std::vector<double> cols(is_pointwise(g) ? 0 : g.out_pixels() * g.patch_size());
  for (std::size_t n = 0; n < g.batch; ++n) {
    const double* a = x.data().data() + n * in_stride;
    if (!is_pointwise(g)) {
      im2col(a, g, cols.data());
      a = cols.data();
    }
    gemm(Trans::yes, Trans::no, g.patch_size(), g.out_c, g.out_pixels(), a, g.patch_size(),
         dy.data().data() + n * out_stride, g.out_c, dw.data().data(), g.out_c, n > 0);
  }
  return dw;
}

Tensor conv2d_transpose(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride) {
  require_rank(x, 4, "conv2d_transpose input");
  require_square_filter(w);
  if (x.dim(3) != w.dim(3)) {
    throw DimensionError("conv2d_transpose input channels " + std::to_string(x.dim(3)) + " do not match filter " +
                         shape_to_string(w.shape()));
  }
  if (stride == 0) throw ConfigError("convolution stride must be positive");
  Tensor y = conv2d_grad_input(x, w, {x.dim(0), x.dim(1) * stride, x.dim(2) * stride, w.dim(2)}, stride);
  add_bias(y, bias);
  return y;
}

Tensor conv2d_transpose_grad_input(const Tensor& dy, const Tensor& w, std::size_t stride) {
  return conv2d(dy, w, nullptr, stride);
}

Tensor conv2d_transpose_grad_weight(const Tensor& x, const Tensor& dy, std::size_t kernel, std::size_t stride) {
  return conv2d_grad_weight(dy, x, kernel, stride);
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor* bias) {
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weight");
  if (x.dim(1) != w.dim(0)) {
    throw DimensionError("dense input " + shape_to_string(x.shape()) + " does not match weight " +
                         shape_to_string(w.shape()));
  }
  Tensor y({x.dim(0), w.dim(1)});
  gemm(Trans::no, Trans::no, x.dim(0), w.dim(1), x.dim(1), x.data().data(), x.dim(1), w.data().data(), w.dim(1),
       y.data().data(), w.dim(1), false);
  add_bias(y, bias);
  return y;
}

Tensor dense_grad_input(const Tensor& dy, const Tensor& w) {
  Tensor dx({dy.dim(0), w.dim(0)});
  gemm(Trans::no, Trans::yes, dy.dim(0), w.dim(0), w.dim(1), dy.data().data(), dy.dim(1), w.data().data(), w.dim(1),
       dx.data().data(), w.dim(0), false);
  return dx;
}

Tensor dense_grad_weight(const Tensor& x, const Tensor& dy) {
  Tensor dw({x.dim(1), dy.dim(1)});
  gemm(Trans::yes, Trans::no, x.dim(1), dy.dim(1), x.dim(0), x.data().data(), x.dim(1), dy.data().data(), dy.dim(1),
       dw.data().data(), dy.dim(1), false);
  return dw;
}

Tensor reduce_to_channels(const Tensor& dy) {
  const std::size_t c = dy.shape().back();
  Tensor db({c});
  const auto src = dy.data();
  auto dst = db.data();
  for (std::size_t i = 0; i < src.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) dst[j] += src[i + j];
  }
  return db;
}

}  // namespace ctsynth::kernels
