#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ctsynth/tensor.hpp"

namespace ctsynth {

/// Grayscale raster, row-major, one binary64 intensity per pixel.
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h, double fill = 0.0);
  ImageBuffer(std::size_t w, std::size_t h, std::vector<double> px);

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

/// Reads binary PGM (P5, 8/16-bit) or grayscale non-interlaced PNG; pixels are value / maxval.
ImageBuffer load_grayscale_image(const std::filesystem::path& path);

/// Exact box (area-weighted) resampling to target x target; axes scale independently.
ImageBuffer area_downsample(const ImageBuffer& img, std::size_t target);
ImageBuffer area_resample(const ImageBuffer& img, std::size_t out_width, std::size_t out_height);

/// Per-image min-max map to [0, 2]. Constant images map to all zeros.
ImageBuffer scale_intensity(const ImageBuffer& img);
/// Same map with externally supplied bounds (dataset-wide scaling).
ImageBuffer scale_intensity(const ImageBuffer& img, double lo, double hi);

/// Clamp to [0, 2] and map linearly to a byte: floor(v * 127.5).
std::uint8_t intensity_to_byte(double v);

/// Writes binary PGM, maxval 255.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> bytes);

/// Channel-averaged tiles of samples [n,S,S,C], row-major with 1-pixel black separators.
void write_sample_grid(const Tensor& samples, std::size_t cols, const std::filesystem::path& path);

}  // namespace ctsynth
