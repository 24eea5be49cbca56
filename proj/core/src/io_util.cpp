#include "io_util.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ctsynth/error.hpp"

namespace ctsynth::detail {

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  if (path.has_parent_path()) {
    std::error_code mk;
    std::filesystem::create_directories(path.parent_path(), mk);
    if (mk) throw IoError("cannot create directory " + path.parent_path().string() + ": " + mk.message());
  }
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  if (is.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void append_f64_le(std::string& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 8);
  char* dst = out.data() + start;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      *dst++ = static_cast<char>(bits & 0xffu);
      bits >>= 8;
    }
  }
}

void read_f64_le(std::string_view bytes, std::span<double> out) {
  if (bytes.size() != out.size() * 8) throw IoError("binary64 blob has unexpected length");
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data());
  for (auto& v : out) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | src[b];
    v = std::bit_cast<double>(bits);
    src += 8;
  }
}

}  // namespace ctsynth::detail
