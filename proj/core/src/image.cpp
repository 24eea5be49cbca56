#include "ctsynth/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>

#include "ctsynth/error.hpp"
#include "io_util.hpp"

namespace ctsynth {

ImageBuffer::ImageBuffer(std::size_t w, std::size_t h, double fill) : width(w), height(h), pixels(w * h, fill) {
  if (w == 0 || h == 0) throw DimensionError("image dimensions must be positive");
}

ImageBuffer::ImageBuffer(std::size_t w, std::size_t h, std::vector<double> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (w == 0 || h == 0) throw DimensionError("image dimensions must be positive");
  if (pixels.size() != w * h) throw DimensionError("pixel count does not match image dimensions");
}

namespace {

std::string header_hex(std::string_view bytes) {
  std::ostringstream os;
  os << "header bytes:";
  for (std::size_t i = 0; i < std::min<std::size_t>(bytes.size(), 8); ++i) {
    char buf[4];
    std::snprintf(buf, sizeof buf, " %02x", static_cast<unsigned char>(bytes[i]));
    os << buf;
  }
  return os.str();
}

class PgmHeaderReader {
 public:
  PgmHeaderReader(std::string_view data, const std::string& path) : data_(data), path_(path) {}

  std::size_t next_number() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '9') {
      value = value * 10 + static_cast<std::size_t>(data_[pos_] - '0');
      if (value > (1u << 30)) throw FormatError(path_ + ": PGM header value too large");
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= data_.size()) throw IoError(path_ + ": truncated PGM header");
      throw FormatError(path_ + ": malformed PGM header, " + header_hex(data_));
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= data_.size()) throw IoError(path_ + ": truncated PGM header");
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

ImageBuffer decode_pgm(std::string_view data, const std::string& path) {
  PgmHeaderReader header(data, path);
  header.skip(2);
  const std::size_t width = header.next_number();
  const std::size_t height = header.next_number();
  const std::size_t maxval = header.next_number();
  if (width == 0 || height == 0) throw FormatError(path + ": PGM with zero dimension");
  if (maxval == 0 || maxval > 65535) throw FormatError(path + ": PGM maxval " + std::to_string(maxval) + " out of range");
  const std::size_t offset = header.raster_offset();
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  const std::size_t needed = width * height * bytes_per;
  if (data.size() < offset + needed) {
    throw IoError(path + ": truncated PGM raster (" + std::to_string(data.size() - std::min(data.size(), offset)) +
                  " of " + std::to_string(needed) + " bytes)");
  }
  const auto* raster = reinterpret_cast<const unsigned char*>(data.data() + offset);
  ImageBuffer img(width, height);
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    const std::size_t v = bytes_per == 1 ? raster[i] : (std::size_t{raster[2 * i]} << 8) | raster[2 * i + 1];
    if (v > maxval) throw FormatError(path + ": pixel value exceeds maxval");
    img.pixels[i] = static_cast<double>(v) / scale;
  }
  return img;
}

struct PngReadState {
  std::string_view data;
  std::size_t pos = 0;
  std::string error;
};

void png_read_from_buffer(png_structp png, png_bytep out, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->data.size()) {
    st->error = "truncated";
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, st->data.data() + st->pos, len);
  st->pos += len;
}

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st && st->error.empty()) st->error = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

ImageBuffer decode_png(std::string_view data, const std::string& path) {
  PngReadState st;
  st.data = data;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw IoError(path + ": cannot allocate PNG decoder");
  png_infop info = png_create_info_struct(png);
  struct Cleanup {
    png_structp* png;
    png_infop* info;
    ~Cleanup() { png_destroy_read_struct(png, info, nullptr); }
  } cleanup{&png, &info};

  std::vector<png_bytep> rows;
  std::vector<unsigned char> raster;
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 0;
  std::string reject;

  png_set_read_fn(png, &st, png_read_from_buffer);
  if (setjmp(png_jmpbuf(png))) {
    if (st.error == "truncated") throw IoError(path + ": truncated PNG");
    throw FormatError(path + ": PNG decode error: " + st.error);
  }
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const int interlace = png_get_interlace_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    reject = "unsupported PNG color type " + std::to_string(color) + " (only grayscale), " + header_hex(data);
  } else if (interlace != PNG_INTERLACE_NONE) {
    reject = "interlaced PNG not supported, " + header_hex(data);
  } else {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * height);
    rows.resize(height);
    for (std::size_t y = 0; y < height; ++y) rows[y] = raster.data() + y * rowbytes;
    png_read_image(png, rows.data());
  }
  if (!reject.empty()) throw FormatError(path + ": " + reject);

  ImageBuffer img(width, height);
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < width * height; ++i) {
      const unsigned v = (unsigned{raster[2 * i]} << 8) | raster[2 * i + 1];
      img.pixels[i] = static_cast<double>(v) / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < width * height; ++i) img.pixels[i] = static_cast<double>(raster[i]) / 255.0;
  }
  return img;
}

// Integer overlap weights of a 1-D box resample from `src` to `dst` samples.
// Output i spans [i*src, (i+1)*src) and input j spans [j*dst, (j+1)*dst) on a common grid.
struct AxisWeights {
  std::vector<std::size_t> first;
  std::vector<std::vector<double>> weights;
};

AxisWeights axis_weights(std::size_t src, std::size_t dst) {
  AxisWeights aw;
  aw.first.resize(dst);
  aw.weights.resize(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    const std::size_t lo = i * src;
    const std::size_t hi = (i + 1) * src;
    const std::size_t j0 = lo / dst;
    const std::size_t j1 = (hi + dst - 1) / dst;
    aw.first[i] = j0;
    for (std::size_t j = j0; j < j1; ++j) {
      const std::size_t overlap = std::min(hi, (j + 1) * dst) - std::max(lo, j * dst);
      aw.weights[i].push_back(static_cast<double>(overlap) / static_cast<double>(src));
    }
  }
  return aw;
}

}  // namespace

ImageBuffer load_grayscale_image(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  if (data.size() >= 2 && data[0] == 'P' && data[1] == '5') return decode_pgm(data, path.string());
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (data.size() >= 8 && std::memcmp(data.data(), kPngMagic, 8) == 0) return decode_png(data, path.string());
  if (data.size() < 2) throw IoError(path.string() + ": file too short to identify");
  throw FormatError(path.string() + ": unsupported image format, " + header_hex(data));
}

ImageBuffer area_resample(const ImageBuffer& img, std::size_t out_width, std::size_t out_height) {
  if (out_width == 0 || out_height == 0) throw ConfigError("resample target must be positive");
  if (out_width > img.width || out_height > img.height) {
    throw ConfigError("area resampling only downsamples (" + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + " to " + std::to_string(out_width) + "x" +
                      std::to_string(out_height) + ")");
  }
  const AxisWeights wx = axis_weights(img.width, out_width);
  const AxisWeights wy = axis_weights(img.height, out_height);
  ImageBuffer rows(out_width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t i = 0; i < out_width; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < wx.weights[i].size(); ++k) s += wx.weights[i][k] * img.at(wx.first[i] + k, y);
      rows.at(i, y) = s;
    }
  }
  ImageBuffer out(out_width, out_height);
  for (std::size_t j = 0; j < out_height; ++j) {
    for (std::size_t k = 0; k < wy.weights[j].size(); ++k) {
      const double w = wy.weights[j][k];
      const std::size_t y = wy.first[j] + k;
      for (std::size_t i = 0; i < out_width; ++i) out.at(i, j) += w * rows.at(i, y);
    }
  }
  return out;
}

ImageBuffer area_downsample(const ImageBuffer& img, std::size_t target) { return area_resample(img, target, target); }

ImageBuffer scale_intensity(const ImageBuffer& img) {
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  return scale_intensity(img, *lo, *hi);
}

ImageBuffer scale_intensity(const ImageBuffer& img, double lo, double hi) {
  ImageBuffer out(img.width, img.height);
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[i] = std::clamp(2.0 * ((img.pixels[i] - lo) / range), 0.0, 2.0);
  }
  return out;
}

std::uint8_t intensity_to_byte(double v) {
  const double c = std::clamp(v, 0.0, 2.0);
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(c * 127.5)));
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> bytes) {
  if (bytes.size() != width * height) throw DimensionError("PGM byte count does not match dimensions");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  detail::atomic_write(path, out);
}

void write_sample_grid(const Tensor& samples, std::size_t cols, const std::filesystem::path& path) {
  if (samples.rank() != 4) throw DimensionError("sample grid expects [n,H,W,C], got " + shape_to_string(samples.shape()));
  if (cols == 0) throw ConfigError("sample grid needs at least one column");
  const std::size_t n = samples.dim(0);
  const std::size_t h = samples.dim(1);
  const std::size_t w = samples.dim(2);
  const std::size_t c = samples.dim(3);
  const std::size_t grid_cols = std::min(cols, n);
  const std::size_t grid_rows = (n + grid_cols - 1) / grid_cols;
  const std::size_t width = grid_cols * w + (grid_cols - 1);
  const std::size_t height = grid_rows * h + (grid_rows - 1);
  std::vector<std::uint8_t> bytes(width * height, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t ox = (s % grid_cols) * (w + 1);
    const std::size_t oy = (s / grid_cols) * (h + 1);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c; ++k) acc += samples[((s * h + y) * w + x) * c + k];
        bytes[(oy + y) * width + ox + x] = intensity_to_byte(acc / static_cast<double>(c));
      }
    }
  }
  write_pgm(path, width, height, bytes);
}

}  // namespace ctsynth
