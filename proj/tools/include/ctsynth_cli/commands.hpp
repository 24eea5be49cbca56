#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ctsynth_cli/gradcheck_harness.hpp"

namespace ctsynth::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerification = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct PreprocessArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  int size = 40;
  int channels = 3;
  std::string scaling = "per-image";
};

struct TrainArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> resume;
};

struct GenerateArgs {
  std::filesystem::path checkpoint;
  int count = 16;
  int cols = 4;
  std::filesystem::path out;
  std::uint64_t seed = 0;
};

int cmd_preprocess(const PreprocessArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err);

/// Finds the dataset manifest named by `data_dir` (the file itself, or the only manifest
/// inside a directory).
std::filesystem::path resolve_dataset_manifest(const std::filesystem::path& data_dir);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctsynth::cli
