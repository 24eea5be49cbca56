#pragma once

#include <cstddef>

#include "ctsynth/tensor.hpp"

namespace ctsynth::kernels {

/// Geometry of one "same"-padded 2-D convolution over NHWC input.
///
/// Output spatial size is ceil(in / stride). The total padding along an axis is
/// max((out - 1) * stride + kernel - in, 0), split with the smaller half on the top/left.
/// For stride 1 and odd kernels this is (kernel - 1) / 2 on each side.
struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t in_c = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  std::size_t out_c = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad_top = 0;
  std::size_t pad_left = 0;

  static ConvGeometry same(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                           std::size_t out_c, std::size_t kernel, std::size_t stride);

  std::size_t patch_size() const noexcept { return kernel * kernel * in_c; }
  std::size_t out_pixels() const noexcept { return out_h * out_w; }
};

/// Unfolds one image [in_h, in_w, in_c] into a [out_pixels, patch_size] matrix.
/// Column order is (ky, kx, c), matching a [k, k, in_c, out_c] filter viewed as [patch_size, out_c].
void im2col(const double* image, const ConvGeometry& g, double* cols);

/// Adjoint of im2col: scatters-and-adds a [out_pixels, patch_size] matrix into one image.
void col2im_add(const double* cols, const ConvGeometry& g, double* image);

// Convolution: x [N,H,W,Cin], w [k,k,Cin,Cout], bias [Cout] or null.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride);
Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, const Shape& input_shape, std::size_t stride);
Tensor conv2d_grad_weight(const Tensor& x, const Tensor& dy, std::size_t kernel, std::size_t stride);

// Transposed convolution: x [N,H,W,Cin], w [k,k,Cout,Cin] -> [N,H*s,W*s,Cout].
// Defined as the adjoint of conv2d (with the same filter) from [N,H*s,W*s,Cout] to [N,H,W,Cin].
Tensor conv2d_transpose(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride);
Tensor conv2d_transpose_grad_input(const Tensor& dy, const Tensor& w, std::size_t stride);
Tensor conv2d_transpose_grad_weight(const Tensor& x, const Tensor& dy, std::size_t kernel, std::size_t stride);

// Fully connected: x [N,F], w [F,U], bias [U] or null.
Tensor dense(const Tensor& x, const Tensor& w, const Tensor* bias);
Tensor dense_grad_input(const Tensor& dy, const Tensor& w);
Tensor dense_grad_weight(const Tensor& x, const Tensor& dy);

/// Sum over every axis but the last: the bias gradient of conv/dense layers.
Tensor reduce_to_channels(const Tensor& dy);

}  // namespace ctsynth::kernels
