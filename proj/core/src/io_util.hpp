#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctsynth::detail {

/// Writes via a sibling temp file and rename, so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// binary64 values as little-endian bytes, independent of host order.
void append_f64_le(std::string& out, std::span<const double> values);
void read_f64_le(std::string_view bytes, std::span<double> out);

}  // namespace ctsynth::detail
