#include "ctsynth/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ctsynth/error.hpp"
#include "ctsynth/rng.hpp"
#include "io_util.hpp"

namespace ctsynth {

std::string_view to_string(ScalingMode mode) { return mode == ScalingMode::per_image ? "per-image" : "global"; }

ScalingMode parse_scaling_mode(std::string_view text) {
  if (text == "per-image") return ScalingMode::per_image;
  if (text == "global") return ScalingMode::global;
  throw ConfigError("unknown scaling mode '" + std::string(text) + "' (expected per-image or global)");
}

std::string fingerprint(const PreprocessOptions& opts) {
  return "area-resample;size=" + std::to_string(opts.size) + ";channels=" + std::to_string(opts.channels) +
         ";scaling=" + std::string(to_string(opts.scaling)) + ";range=0-2";
}

Tensor to_training_tensor(const ImageBuffer& img, std::size_t channels, std::size_t expected_size) {
  if (channels == 0) throw ConfigError("channels must be positive");
  if (img.width != expected_size || img.height != expected_size) {
    throw DimensionError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) + ", expected " +
                         std::to_string(expected_size) + "x" + std::to_string(expected_size));
  }
  Tensor t({expected_size, expected_size, channels});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) t[i * channels + c] = img.pixels[i];
  }
  return t;
}

ImageBuffer preprocess_image(const ImageBuffer& img, std::size_t size) {
  return scale_intensity(area_downsample(img, size));
}

Shape ImageDataset::item_shape() const {
  if (items.empty()) throw StateError("empty dataset has no item shape");
  return items.front().shape();
}

void ImageDataset::validate() const {
  if (!sources.empty() && sources.size() != items.size()) throw FormatError("dataset sources do not match items");
  for (const auto& t : items) {
    if (t.shape() != items.front().shape()) throw DimensionError("dataset items differ in shape");
    for (double v : t.data()) {
      if (!(v >= 0.0 && v <= 2.0)) throw DomainError("dataset value " + std::to_string(v) + " outside [0, 2]");
    }
  }
}

ImageDataset build_dataset(const std::vector<ImageBuffer>& images, std::vector<std::string> sources,
                           const PreprocessOptions& opts) {
  if (opts.size == 0) throw ConfigError("target size must be positive");
  std::vector<ImageBuffer> small;
  small.reserve(images.size());
  for (const auto& img : images) small.push_back(area_downsample(img, opts.size));

  double lo = 0.0;
  double hi = 0.0;
  if (opts.scaling == ScalingMode::global && !small.empty()) {
    lo = small.front().pixels.front();
    hi = lo;
    for (const auto& img : small) {
      const auto [a, b] = std::minmax_element(img.pixels.begin(), img.pixels.end());
      lo = std::min(lo, *a);
      hi = std::max(hi, *b);
    }
  }

  ImageDataset ds;
  ds.fingerprint = fingerprint(opts);
  ds.sources = std::move(sources);
  for (const auto& img : small) {
    const ImageBuffer scaled = opts.scaling == ScalingMode::global ? scale_intensity(img, lo, hi) : scale_intensity(img);
    ds.items.push_back(to_training_tensor(scaled, opts.channels, opts.size));
  }
  return ds;
}

DirectoryImport import_directory(const std::filesystem::path& dir, const PreprocessOptions& opts) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  DirectoryImport out;
  std::vector<ImageBuffer> images;
  std::vector<std::string> sources;
  for (const auto& f : files) {
    try {
      ImageBuffer img = load_grayscale_image(f);
      if (img.width < opts.size || img.height < opts.size) {
        throw DimensionError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                             " smaller than target " + std::to_string(opts.size));
      }
      images.push_back(std::move(img));
      sources.push_back(f.string());
    } catch (const Error& e) {
      out.rejected.emplace_back(f.string(), e.what());
    }
  }
  out.dataset = build_dataset(images, std::move(sources), opts);
  return out;
}

namespace {

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p += ".bin";
  return p;
}

}  // namespace

void save_dataset_cache(const ImageDataset& ds, const std::filesystem::path& manifest) {
  ds.validate();
  if (ds.items.empty()) throw StateError("refusing to write an empty dataset cache");
  const Shape shape = ds.item_shape();
  if (shape.size() != 3 || shape[0] != shape[1]) throw DimensionError("dataset items must be [S,S,C]");

  std::string blob;
  blob.reserve(ds.size() * ds.items.front().size() * 8);
  for (const auto& t : ds.items) detail::append_f64_le(blob, t.data());
  const auto bin = blob_path(manifest);
  detail::atomic_write(bin, blob);

  std::ostringstream os;
  os << "# ctsynth preprocessed dataset\n"
     << "format=ctsynth-dataset-v1\n"
     << "count=" << ds.size() << "\n"
     << "size=" << shape[0] << "\n"
     << "channels=" << shape[2] << "\n"
     << "fingerprint=" << ds.fingerprint << "\n"
     << "blob=" << bin.filename().string() << "\n";
  for (const auto& s : ds.sources) os << "source=" << s << "\n";
  detail::atomic_write(manifest, os.str());
}

ImageDataset load_dataset_cache(const std::filesystem::path& manifest) {
  std::istringstream is(detail::read_file(manifest));
  std::string line;
  std::size_t count = 0;
  std::size_t size = 0;
  std::size_t channels = 0;
  std::string format;
  std::string blob_name;
  ImageDataset ds;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(manifest.string() + ": malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "format") format = value;
      else if (key == "count") count = std::stoul(value);
      else if (key == "size") size = std::stoul(value);
      else if (key == "channels") channels = std::stoul(value);
      else if (key == "fingerprint") ds.fingerprint = value;
      else if (key == "blob") blob_name = value;
      else if (key == "source") ds.sources.push_back(value);
      else throw FormatError(manifest.string() + ": unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError(manifest.string() + ": bad value for '" + key + "'");
    }
  }
  if (format != "ctsynth-dataset-v1") throw FormatError(manifest.string() + ": not a ctsynth dataset manifest");
  if (count == 0 || size == 0 || channels == 0 || blob_name.empty()) {
    throw FormatError(manifest.string() + ": incomplete dataset manifest");
  }
  const std::string blob = detail::read_file(manifest.parent_path() / blob_name);
  const std::size_t per_item = size * size * channels;
  if (blob.size() != count * per_item * 8) throw IoError(manifest.string() + ": dataset blob has the wrong length");
  for (std::size_t i = 0; i < count; ++i) {
    Tensor t({size, size, channels});
    detail::read_f64_le(std::string_view(blob).substr(i * per_item * 8, per_item * 8), t.data());
    ds.items.push_back(std::move(t));
  }
  ds.validate();
  return ds;
}

BatchIterator::BatchIterator(const ImageDataset& ds, std::size_t batch, std::uint64_t seed, bool shuffle)
    : ds_(&ds), batch_(batch), seed_(seed), shuffle_(shuffle) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (ds.size() < batch) {
    throw ConfigError("dataset of " + std::to_string(ds.size()) + " items is smaller than batch size " +
                      std::to_string(batch));
  }
  per_pass_ = ds.size() / batch;
}

const std::vector<std::size_t>& BatchIterator::order(std::uint64_t pass) {
  if (pass != cached_pass_) {
    cached_order_.resize(ds_->size());
    std::iota(cached_order_.begin(), cached_order_.end(), std::size_t{0});
    if (shuffle_) {
      Rng rng = derive_rng(seed_, pass);
      std::shuffle(cached_order_.begin(), cached_order_.end(), rng);
    }
    cached_pass_ = pass;
  }
  return cached_order_;
}

std::vector<std::size_t> BatchIterator::indices(std::uint64_t stream_batch) {
  const auto& ord = order(stream_batch / per_pass_);
  const std::size_t start = (stream_batch % per_pass_) * batch_;
  return {ord.begin() + static_cast<std::ptrdiff_t>(start), ord.begin() + static_cast<std::ptrdiff_t>(start + batch_)};
}

Tensor BatchIterator::batch(std::uint64_t stream_batch) {
  const auto idx = indices(stream_batch);
  Shape shape{batch_};
  const Shape item = ds_->item_shape();
  shape.insert(shape.end(), item.begin(), item.end());
  Tensor out(shape);
  const std::size_t per = element_count(item);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds_->items[idx[i]].data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

}  // namespace ctsynth
