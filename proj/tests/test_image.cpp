#include <doctest.h>

#include <png.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "ctsynth/error.hpp"
#include "ctsynth/image.hpp"
#include "support/tempdir.hpp"

using namespace ctsynth;

namespace {

std::string pgm(std::size_t w, std::size_t h, unsigned maxval, const std::string& raster) {
  return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n" + raster;
}

// Minimal libpng writer for test inputs.
void write_png(const std::filesystem::path& path, std::size_t w, std::size_t h, int color_type, int bit_depth,
               const std::vector<unsigned char>& raster) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row = raster.size() / h;
  for (std::size_t y = 0; y < h; ++y) png_write_row(png, const_cast<unsigned char*>(raster.data() + y * row));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

double image_mean(const ImageBuffer& img) {
  long double s = 0;
  for (double v : img.pixels) s += v;
  return static_cast<double>(s / static_cast<long double>(img.pixels.size()));
}

}  // namespace

TEST_SUITE("image") {
  TEST_CASE("8-bit PGM decodes to value / 255") {
    fixture::TempDir dir;
    fixture::write_bytes(dir / "a.pgm", pgm(2, 2, 255, std::string("\x00\xff\x80\x40", 4)));
    const ImageBuffer img = load_grayscale_image(dir / "a.pgm");
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.pixels[0] == 0.0);
    CHECK(img.pixels[1] == 1.0);
    CHECK(img.pixels[2] == doctest::Approx(0.50196078431).epsilon(1e-10));
    CHECK(img.pixels[3] == doctest::Approx(0.25098039216).epsilon(1e-10));
  }

  TEST_CASE("16-bit PGM is big-endian and reaches 1.0 at full scale") {
    fixture::TempDir dir;
    fixture::write_bytes(dir / "b.pgm", pgm(2, 1, 65535, std::string("\xff\xff\x01\x00", 4)));
    const ImageBuffer img = load_grayscale_image(dir / "b.pgm");
    CHECK(img.pixels[0] == 1.0);
    CHECK(img.pixels[1] == 256.0 / 65535.0);
  }

  TEST_CASE("PGM header comments are skipped") {
    fixture::TempDir dir;
    fixture::write_bytes(dir / "c.pgm", "P5\n# made by hand\n1 1\n# max\n255\n\x80");
    CHECK(load_grayscale_image(dir / "c.pgm").pixels[0] == 128.0 / 255.0);
  }

  TEST_CASE("grayscale PNG decodes, colour PNG is rejected") {
    fixture::TempDir dir;
    write_png(dir / "g.png", 3, 2, PNG_COLOR_TYPE_GRAY, 8, {0, 51, 255, 102, 204, 17});
    const ImageBuffer img = load_grayscale_image(dir / "g.png");
    CHECK(img.width == 3);
    CHECK(img.height == 2);
    CHECK(img.pixels[1] == 51.0 / 255.0);
    CHECK(img.pixels[5] == 17.0 / 255.0);

    write_png(dir / "g16.png", 1, 1, PNG_COLOR_TYPE_GRAY, 16, {0xff, 0xff});
    CHECK(load_grayscale_image(dir / "g16.png").pixels[0] == 1.0);

    write_png(dir / "rgb.png", 1, 1, PNG_COLOR_TYPE_RGB, 8, {1, 2, 3});
    CHECK_THROWS_AS(load_grayscale_image(dir / "rgb.png"), FormatError);
  }

  TEST_CASE("malformed and truncated files") {
    fixture::TempDir dir;
    fixture::write_bytes(dir / "trunc.pgm", pgm(4, 4, 255, "abc"));
    CHECK_THROWS_AS(load_grayscale_image(dir / "trunc.pgm"), IoError);
    fixture::write_bytes(dir / "p2.pgm", "P2\n1 1\n255\n7\n");
    CHECK_THROWS_AS(load_grayscale_image(dir / "p2.pgm"), FormatError);
    fixture::write_bytes(dir / "gif", "GIF89a....");
    try {
      load_grayscale_image(dir / "gif");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("47 49 46") != std::string::npos);  // offending header bytes
    }
    CHECK_THROWS_AS(load_grayscale_image(dir / "missing.pgm"), IoError);

    write_png(dir / "full.png", 8, 8, PNG_COLOR_TYPE_GRAY, 8, std::vector<unsigned char>(64, 9));
    const std::string bytes = fixture::read_bytes(dir / "full.png");
    fixture::write_bytes(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_grayscale_image(dir / "cut.png"), IoError);
  }

  TEST_CASE("area_downsample examples") {
    ImageBuffer c(7, 5, 0.3);
    for (double v : area_downsample(c, 3).pixels) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

    ImageBuffer q(4, 4);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) q.at(x, y) = (y < 2 ? (x < 2 ? 1.0 : 2.0) : (x < 2 ? 3.0 : 4.0));
    const ImageBuffer d = area_downsample(q, 2);
    CHECK(d.pixels == std::vector<double>{1.0, 2.0, 3.0, 4.0});

    // 3 -> 2: the middle source pixel is split between both outputs.
    const ImageBuffer row = area_resample(ImageBuffer(3, 1, std::vector<double>{0.0, 3.0, 6.0}), 2, 1);
    CHECK(row.pixels[0] == doctest::Approx(1.0));
    CHECK(row.pixels[1] == doctest::Approx(5.0));

    CHECK_THROWS_AS(area_downsample(q, 0), ConfigError);
    CHECK_THROWS_AS(area_downsample(q, 5), ConfigError);
    CHECK(area_downsample(ImageBuffer(6, 4, 1.0), 2).width == 2);
  }

  TEST_CASE("area_downsample conserves the mean") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t target : {40u, 37u, 64u}) {
      ImageBuffer img(512, 512);
      for (auto& v : img.pixels) v = u(rng);
      const double src = image_mean(img), dst = image_mean(area_downsample(img, target));
      CHECK(std::abs(src - dst) / src <= 1e-12);
    }
  }

  TEST_CASE("scale_intensity") {
    CHECK(scale_intensity(ImageBuffer(3, 1, std::vector<double>{0.0, 0.5, 1.0})).pixels ==
          std::vector<double>{0.0, 1.0, 2.0});
    const auto s = scale_intensity(ImageBuffer(3, 1, std::vector<double>{0.2, 0.4, 0.6})).pixels;
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s[2] == 2.0);
    CHECK(scale_intensity(ImageBuffer(2, 2, 0.7)).pixels == std::vector<double>(4, 0.0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 5.0);
    for (int i = 0; i < 50; ++i) {
      ImageBuffer img(6, 6);
      for (auto& v : img.pixels) v = n(rng);
      const auto out = scale_intensity(img).pixels;
      CHECK(*std::min_element(out.begin(), out.end()) == 0.0);
      CHECK(*std::max_element(out.begin(), out.end()) == 2.0);
    }
    // Dataset-wide bounds.
    CHECK(scale_intensity(ImageBuffer(1, 1, 0.5), 0.0, 2.0).pixels[0] == 0.5);
  }

  TEST_CASE("byte mapping") {
    CHECK(intensity_to_byte(2.0) == 255);
    CHECK(intensity_to_byte(0.0) == 0);
    CHECK(intensity_to_byte(1.0) == 127);
    CHECK(intensity_to_byte(-3.0) == 0);
    CHECK(intensity_to_byte(9.0) == 255);
  }

  TEST_CASE("sample grid geometry and byte round-trip") {
    fixture::TempDir dir;
    Tensor one({1, 40, 40, 3}, 1.0);
    write_sample_grid(one, 4, dir / "one.pgm");
    const ImageBuffer a = load_grayscale_image(dir / "one.pgm");
    CHECK(a.width == 40);
    CHECK(a.height == 40);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Tensor many({16, 40, 40, 3});
    for (auto& v : many.data()) v = u(rng);
    write_sample_grid(many, 4, dir / "grid.pgm");
    const ImageBuffer g = load_grayscale_image(dir / "grid.pgm");
    CHECK(g.width == 163);
    CHECK(g.height == 163);
    CHECK(g.at(40, 0) == 0.0);  // separator column
    // Tile (row 1, col 2) pixel (3, 4): channel mean of sample 6.
    const std::size_t s = 6, y = 4, x = 3;
    double avg = 0;
    for (std::size_t c = 0; c < 3; ++c) avg += many.at({s, y, x, c});
    avg /= 3.0;
    CHECK(g.at(2 * 41 + x, 1 * 41 + y) == intensity_to_byte(avg) / 255.0);

    // Byte-exact PGM round trip.
    std::vector<std::uint8_t> bytes(5 * 3);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 17);
    write_pgm(dir / "rt.pgm", 5, 3, bytes);
    const ImageBuffer rt = load_grayscale_image(dir / "rt.pgm");
    for (std::size_t i = 0; i < bytes.size(); ++i) CHECK(std::lround(rt.pixels[i] * 255.0) == bytes[i]);
    CHECK(fixture::read_bytes(dir / "rt.pgm").substr(0, 3) == "P5\n");

    CHECK_THROWS_AS(write_sample_grid(Tensor({2, 2, 2}), 1, dir / "x.pgm"), DimensionError);
    CHECK_THROWS_AS(write_pgm(dir / "rt.pgm" / "under-a-file.pgm", 5, 3, bytes), IoError);
  }
}
