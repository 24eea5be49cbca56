#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ctsynth/error.hpp"
#include "ctsynth/gan_config.hpp"

namespace ctsynth::cli {

/// Everything `train` needs: the model recipe plus where data comes from and what is written.
struct RunConfig {
  GanConfig gan;
  std::filesystem::path data_dir;  // dataset manifest, or a directory holding exactly one
  std::filesystem::path out_dir;
  std::int64_t checkpoint_interval = 1000;
  std::int64_t sample_interval = 1000;
  std::int64_t log_interval = 1;
  std::int64_t sample_count = 16;
  std::int64_t sample_cols = 4;
};

/// Parse failure pointing at a line (1-based, 0 when the whole document is at fault) and key.
class RunConfigError : public ConfigError {
 public:
  RunConfigError(std::string source, int line, std::string key, const std::string& reason);
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  std::string key_;
};

/// Flat `key = value` text, one pair per line, `#` starts a comment. Unknown or repeated keys
/// are errors. A missing noise_dim is derived from the generator geometry. Relative paths are
/// resolved against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>",
                           const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& cfg);

}  // namespace ctsynth::cli
