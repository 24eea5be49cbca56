#include "ctsynth_cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "ctsynth/checkpoint.hpp"
#include "ctsynth/dataset.hpp"
#include "ctsynth/error.hpp"
#include "ctsynth/image.hpp"
#include "ctsynth/trainer.hpp"
#include "ctsynth_cli/run_config.hpp"

namespace ctsynth::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool is_dataset_manifest(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line == "format=ctsynth-dataset-v1";
  }
  return false;
}

}  // namespace

fs::path resolve_dataset_manifest(const fs::path& data_dir) {
  if (data_dir.empty()) throw ConfigError("data_dir is not set");
  if (fs::is_regular_file(data_dir)) return data_dir;
  if (!fs::is_directory(data_dir)) throw IoError("data_dir " + data_dir.string() + " does not exist");
  std::vector<fs::path> found;
  for (const auto& e : fs::directory_iterator(data_dir)) {
    if (e.is_regular_file() && is_dataset_manifest(e.path())) found.push_back(e.path());
  }
  if (found.size() != 1) {
    throw ConfigError("data_dir " + data_dir.string() + " holds " + std::to_string(found.size()) +
                      " dataset manifests; name the manifest file directly");
  }
  return found.front();
}

int cmd_preprocess(const PreprocessArgs& args, std::ostream& out, std::ostream& err) {
  if (args.size < 1) {
    err << "error: --size must be >= 1\n";
    return kExitUsage;
  }
  if (args.channels < 1) {
    err << "error: --channels must be >= 1\n";
    return kExitUsage;
  }
  PreprocessOptions opts;
  opts.size = static_cast<std::size_t>(args.size);
  opts.channels = static_cast<std::size_t>(args.channels);
  try {
    opts.scaling = parse_scaling_mode(args.scaling);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!fs::is_directory(args.input)) {
    err << "error: input " << args.input.string() << " is not a directory\n";
    return kExitUsage;
  }

  DirectoryImport imported = import_directory(args.input, opts);
  for (const auto& [path, reason] : imported.rejected) err << "skipped " << path << ": " << reason << "\n";
  if (imported.dataset.size() == 0) {
    err << "error: no valid images in " << args.input.string() << "\n";
    return kExitUsage;
  }
  save_dataset_cache(imported.dataset, args.output);
  out << "images " << imported.dataset.size() << "\n"
      << "shape " << shape_to_string(imported.dataset.item_shape()) << "\n"
      << "fingerprint " << imported.dataset.fingerprint << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(args.config);
  } catch (const RunConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (cfg.out_dir.empty()) {
    err << "config error: " << args.config.string() << ": key 'out_dir' is required\n";
    return kExitUsage;
  }

  ImageDataset ds;
  try {
    ds = load_dataset_cache(resolve_dataset_manifest(cfg.data_dir));
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitUsage;
  }
  const auto s = static_cast<std::size_t>(cfg.gan.image_size);
  const Shape expected{s, s, static_cast<std::size_t>(cfg.gan.channels)};
  if (ds.item_shape() != expected) {
    err << "data error: dataset items are " << shape_to_string(ds.item_shape()) << " but the config expects "
        << shape_to_string(expected) << "\n";
    return kExitUsage;
  }
  if (ds.size() < static_cast<std::size_t>(cfg.gan.batch_size)) {
    err << "data error: dataset has " << ds.size() << " images, fewer than batch_size " << cfg.gan.batch_size << "\n";
    return kExitUsage;
  }

  Trainer trainer(cfg.gan);
  if (args.resume) {
    try {
      const Checkpoint ckpt = read_checkpoint(*args.resume);
      GanConfig a = ckpt.config;
      GanConfig b = cfg.gan;
      a.steps = b.steps = 0;
      if (!(a == b)) {
        err << "resume error: checkpoint " << args.resume->string()
            << " was written with a different configuration (only 'steps' may change)\n";
        return kExitUsage;
      }
      restore_checkpoint(trainer, ckpt);
    } catch (const Error& e) {
      err << "resume error: " << e.what() << "\n";
      return kExitUsage;
    }
    if (trainer.step() > cfg.gan.steps) {
      err << "resume error: checkpoint is at step " << trainer.step() << ", beyond steps = " << cfg.gan.steps << "\n";
      return kExitUsage;
    }
    out << "resumed at step " << trainer.step() << "\n";
  }

  TrainOptions opts;
  opts.out_dir = cfg.out_dir;
  opts.checkpoint_interval = cfg.checkpoint_interval;
  opts.sample_interval = cfg.sample_interval;
  opts.log_interval = cfg.log_interval;
  opts.sample_count = static_cast<std::size_t>(cfg.sample_count);
  opts.sample_cols = static_cast<std::size_t>(cfg.sample_cols);
  opts.on_step = [&](const StepMetrics& m) {
    if (cfg.log_interval > 0 && m.step % cfg.log_interval == 0) {
      out << "step " << m.step << " d_loss " << fmt("%.6f", m.d_loss) << " g_loss " << fmt("%.6f", m.g_loss)
          << " D(x) " << fmt("%.4f", m.mean_d_real) << " D(G(z)) " << fmt("%.4f", m.mean_d_fake) << "\n";
    }
  };
  try {
    train(trainer, ds, opts);
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  out << "finished at step " << trainer.step() << "; final state in " << (cfg.out_dir / "final").string() << "\n";
  return kExitOk;
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  if (args.count < 1 || args.cols < 1) {
    err << "error: --count and --cols must be >= 1\n";
    return kExitUsage;
  }
  try {
    Trainer trainer = load_trainer(args.checkpoint);
    Rng rng = derive_rng(args.seed, 3);
    const Tensor samples = trainer.generate(static_cast<std::size_t>(args.count), rng);
    write_sample_grid(samples, static_cast<std::size_t>(args.cols), args.out);
    out << "wrote " << args.count << " samples to " << args.out.string() << "\n";
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err) {
  GradcheckOutcome result;
  try {
    result = run_gradcheck(opts);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  out << "gradcheck size " << opts.size << " kernel " << opts.kernel << " width/" << opts.width_divisor << " h "
      << fmt("%g", opts.h) << " tol " << fmt("%g", opts.tol) << "\n";
  for (const auto& l : result.layers) {
    out << "  " << l.path << "  " << l.layer << "  max_rel_err " << fmt("%.3e", l.max_rel_err)
        << "  kink_crossings " << l.kink_crossings << (l.max_rel_err <= opts.tol ? "  ok" : "  FAIL") << "\n";
  }
  if (result.passed(opts.tol)) {
    out << "all layers within tolerance (max " << fmt("%.3e", result.max_rel_err) << ")\n";
    return kExitOk;
  }
  const LayerError& w = result.worst();
  err << "gradient check failed: " << w.path << " layer " << w.layer << " parameter " << w.parameter << " rel_err "
      << fmt("%.3e", w.max_rel_err) << " analytic " << fmt("%.12e", w.analytic) << " numeric "
      << fmt("%.12e", w.numeric) << "\n";
  if (w.kink_crossings > 0) {
    err << "note: " << w.kink_crossings << " element(s) of " << w.layer
        << " straddle a leaky_relu kink at this step size; their central differences are not derivatives\n";
  }
  return kExitVerification;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic CT slice generation with a convolutional GAN"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Build a training dataset cache from a directory of images");
  pre_cmd->add_option("--input", pre.input, "Directory of PGM/PNG images")->required();
  pre_cmd->add_option("--output", pre.output, "Dataset manifest to write (blob goes to <output>.bin)")->required();
  pre_cmd->add_option("--size", pre.size, "Output side length")->required();
  pre_cmd->add_option("--channels", pre.channels, "Channels per training tensor")->capture_default_str();
  pre_cmd->add_option("--scaling", pre.scaling, "Intensity scaling: per-image or global")->capture_default_str();

  TrainArgs tr;
  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "Train from a run configuration");
  train_cmd->add_option("--config", tr.config, "Run configuration file")->required();
  train_cmd->add_option("--resume", resume, "Checkpoint directory to continue from");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Render generator samples from a checkpoint");
  gen_cmd->add_option("--checkpoint", gen.checkpoint, "Checkpoint directory")->required();
  gen_cmd->add_option("--count", gen.count, "Number of samples")->required();
  gen_cmd->add_option("--cols", gen.cols, "Grid columns")->required();
  gen_cmd->add_option("--out", gen.out, "Output PGM path")->required();
  gen_cmd->add_option("--seed", gen.seed, "Noise seed")->capture_default_str();

  GradcheckOptions gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Verify analytic gradients against finite differences");
  gc_cmd->add_option("--size", gc.size, "Input side length")->capture_default_str();
  gc_cmd->add_option("--kernel", gc.kernel, "Kernel size")->capture_default_str();
  gc_cmd->add_option("--tol", gc.tol, "Maximum relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pre_cmd->parsed()) return cmd_preprocess(pre, out, err);
    if (train_cmd->parsed()) {
      if (!resume.empty()) tr.resume = resume;
      return cmd_train(tr, out, err);
    }
    if (gen_cmd->parsed()) return cmd_generate(gen, out, err);
    return cmd_gradcheck(gc, out, err);
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ctsynth::cli
