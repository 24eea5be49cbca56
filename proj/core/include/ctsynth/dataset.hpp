#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctsynth/image.hpp"
#include "ctsynth/tensor.hpp"

namespace ctsynth {

enum class ScalingMode { per_image, global };

std::string_view to_string(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view text);

struct PreprocessOptions {
  std::size_t size = 40;
  std::size_t channels = 3;
  ScalingMode scaling = ScalingMode::per_image;
};

/// Identifies how a dataset was produced; datasets with different fingerprints never mix.
std::string fingerprint(const PreprocessOptions& opts);

/// Replicates an S x S grayscale plane into a [S, S, channels] tensor.
Tensor to_training_tensor(const ImageBuffer& img, std::size_t channels, std::size_t expected_size);

/// Area downsample to `size`, then per-image scaling to [0, 2].
ImageBuffer preprocess_image(const ImageBuffer& img, std::size_t size);

/// Immutable collection of preprocessed [S, S, C] tensors with values in [0, 2].
struct ImageDataset {
  std::vector<Tensor> items;
  std::vector<std::string> sources;
  std::string fingerprint;

  std::size_t size() const noexcept { return items.size(); }
  Shape item_shape() const;
  /// Throws if items disagree in shape or leave [0, 2].
  void validate() const;
};

/// Preprocesses already-decoded images (the order is kept).
ImageDataset build_dataset(const std::vector<ImageBuffer>& images, std::vector<std::string> sources,
                           const PreprocessOptions& opts);

struct DirectoryImport {
  ImageDataset dataset;
  std::vector<std::pair<std::string, std::string>> rejected;  // path, reason
};

/// Loads every regular file in `dir` (sorted by name); unreadable files land in `rejected`.
DirectoryImport import_directory(const std::filesystem::path& dir, const PreprocessOptions& opts);

/// Cache = text manifest at `manifest` plus a sibling "<manifest>.bin" blob of binary64 LE values.
void save_dataset_cache(const ImageDataset& ds, const std::filesystem::path& manifest);
ImageDataset load_dataset_cache(const std::filesystem::path& manifest);

/// Deterministic mini-batches: pass p visits a permutation drawn from (seed, p); a trailing
/// remainder smaller than the batch is dropped. Batch b of the stream lives in pass
/// b / batches_per_pass(), so any position can be reproduced without replay.
class BatchIterator {
 public:
  BatchIterator(const ImageDataset& ds, std::size_t batch, std::uint64_t seed, bool shuffle);

  std::size_t batches_per_pass() const noexcept { return per_pass_; }
  std::vector<std::size_t> indices(std::uint64_t stream_batch);
  Tensor batch(std::uint64_t stream_batch);

  Tensor next() { return batch(cursor_++); }
  std::uint64_t position() const noexcept { return cursor_; }
  void seek(std::uint64_t stream_batch) noexcept { cursor_ = stream_batch; }

 private:
  const std::vector<std::size_t>& order(std::uint64_t pass);

  const ImageDataset* ds_;
  std::size_t batch_;
  std::uint64_t seed_;
  bool shuffle_;
  std::size_t per_pass_;
  std::uint64_t cursor_ = 0;
  std::uint64_t cached_pass_ = ~std::uint64_t{0};
  std::vector<std::size_t> cached_order_;
};

}  // namespace ctsynth
