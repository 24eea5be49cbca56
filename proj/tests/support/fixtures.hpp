#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ctsynth/dataset.hpp"
#include "ctsynth/gan_config.hpp"

namespace fixture {

/// Reduced-width networks on 8x8 inputs; everything else at the defaults.
inline ctsynth::GanConfig small_config(std::int64_t steps = 0, std::uint64_t seed = 1) {
  ctsynth::GanConfig cfg;
  cfg.image_size = 8;
  cfg.noise_dim = 4;
  cfg.width_divisor = 16;
  cfg.batch_size = 4;
  cfg.steps = steps;
  cfg.seed = seed;
  return cfg;
}

/// Two Gaussian blobs near (2,2) and (5,5) with +-1 pixel jitter, replicated to 3 channels,
/// values in [0, 2].
inline ctsynth::ImageDataset two_blob_dataset(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> jitter(-1, 1);
  ctsynth::ImageDataset ds;
  ds.fingerprint = "two-blob";
  const double scale = static_cast<double>(size) / 8.0;
  for (std::size_t n = 0; n < count; ++n) {
    const double cx[2] = {(2.0 + jitter(rng)) * scale, (5.0 + jitter(rng)) * scale};
    const double cy[2] = {(2.0 + jitter(rng)) * scale, (5.0 + jitter(rng)) * scale};
    const double sigma = 1.0 * scale;
    ctsynth::Tensor t({size, size, 3});
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        double v = 0.0;
        for (int b = 0; b < 2; ++b) {
          const double dx = static_cast<double>(x) - cx[b], dy = static_cast<double>(y) - cy[b];
          v += 2.0 * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        }
        v = std::min(v, 2.0);
        for (std::size_t c = 0; c < 3; ++c) t[(y * size + x) * 3 + c] = v;
      }
    ds.items.push_back(std::move(t));
  }
  return ds;
}

/// Uniform [0, 2] items.
inline ctsynth::ImageDataset random_dataset(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  ctsynth::ImageDataset ds;
  ds.fingerprint = "random";
  for (std::size_t n = 0; n < count; ++n) {
    ctsynth::Tensor t({size, size, 3});
    for (auto& v : t.data()) v = u(rng);
    ds.items.push_back(std::move(t));
  }
  return ds;
}

}  // namespace fixture
