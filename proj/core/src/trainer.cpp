#include "ctsynth/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "ctsynth/checkpoint.hpp"
#include "ctsynth/error.hpp"
#include "ctsynth/losses.hpp"

namespace ctsynth {

Tensor sample_noise(std::size_t n, std::size_t dim, Rng& rng) {
  if (n == 0 || dim == 0) throw ConfigError("noise shape must be positive");
  Tensor z({n, dim});
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : z.data()) v = dist(rng);
  return z;
}

DiscriminatorTerms discriminator_objective(Tape& tape, Network& d, const Tensor& real, const Tensor& fake, Mode mode,
                                           Rng& rng) {
  DiscriminatorTerms terms;
  terms.d_real = d.forward(tape, tape.constant(real), mode, rng);
  terms.d_fake = d.forward(tape, tape.constant(fake), mode, rng);
  terms.loss = d_loss(tape, terms.d_real, terms.d_fake);
  return terms;
}

GeneratorTerms generator_objective(Tape& tape, Network& g, Network& d, const Tensor& noise, GLossMode mode,
                                   Mode g_mode, Mode d_mode, Rng& rng) {
  GeneratorTerms terms;
  terms.fake = g.forward(tape, tape.constant(noise), g_mode, rng);
  terms.d_fake = d.forward(tape, terms.fake, d_mode, rng);
  terms.loss = g_loss(tape, terms.d_fake, mode);
  return terms;
}

namespace {

std::pair<Network, Network> build_networks(const GanConfig& cfg) {
  cfg.validate();
  Rng init = derive_rng(cfg.seed, 0);
  Network d(build_discriminator(cfg), init, cfg.init_std);
  Network g(build_generator(cfg), init, cfg.init_std);
  return {std::move(d), std::move(g)};
}

}  // namespace

Trainer::Trainer(const GanConfig& cfg) : Trainer(cfg, build_networks(cfg)) {}

Trainer::Trainer(const GanConfig& cfg, std::pair<Network, Network> nets)
    : cfg_(cfg),
      d_(std::move(nets.first)),
      g_(std::move(nets.second)),
      d_opt_(cfg.d_optimizer(), d_.parameters()),
      g_opt_(cfg.g_optimizer(), g_.parameters()),
      rng_(derive_rng(cfg.seed, 1)) {}

StepMetrics Trainer::train_step(const Tensor& real_batch) {
  const auto s = static_cast<std::size_t>(cfg_.image_size);
  const Shape expected{static_cast<std::size_t>(cfg_.batch_size), s, s, static_cast<std::size_t>(cfg_.channels)};
  if (real_batch.shape() != expected) {
    throw DimensionError("real batch " + shape_to_string(real_batch.shape()) + ", expected " + shape_to_string(expected));
  }
  for (double v : real_batch.data()) {
    if (!(v >= 0.0 && v <= 2.0)) throw DomainError("real batch value " + std::to_string(v) + " outside [0, 2]");
  }

  const auto start = std::chrono::steady_clock::now();
  const auto batch = static_cast<std::size_t>(cfg_.batch_size);
  const auto noise_dim = static_cast<std::size_t>(cfg_.noise_dim);
  StepMetrics m;
  try {
    Tensor fake;
    {
      Tape tape;
      Tensor z = sample_noise(batch, noise_dim, rng_);
      fake = tape.value(g_.forward(tape, tape.constant(z), Mode::train, rng_));
    }
    {
      Tape tape;
      auto terms = discriminator_objective(tape, d_, real_batch, fake, Mode::train, rng_);
      m.d_loss = tape.value(terms.loss).item();
      m.mean_d_real = mean(tape.value(terms.d_real));
      m.mean_d_fake = mean(tape.value(terms.d_fake));
      tape.backward(terms.loss);
      d_opt_.step(d_.parameters());
    }
    {
      Tape tape;
      Tensor z = sample_noise(batch, noise_dim, rng_);
      auto terms = generator_objective(tape, g_, d_, z, cfg_.g_loss_mode, Mode::train, Mode::train, rng_);
      m.g_loss = tape.value(terms.loss).item();
      tape.backward(terms.loss);
      g_opt_.step(g_.parameters());
    }
  } catch (const NumericError& e) {
    throw NumericError("step " + std::to_string(step_ + 1) + ": " + e.what());
  } catch (const DomainError& e) {
    throw NumericError("step " + std::to_string(step_ + 1) + ": " + e.what());
  }
  if (!std::isfinite(m.d_loss)) throw NumericError("step " + std::to_string(step_ + 1) + ": d_loss is not finite");
  if (!std::isfinite(m.g_loss)) throw NumericError("step " + std::to_string(step_ + 1) + ": g_loss is not finite");
  for (const auto& p : d_.parameters()) require_finite(p.value, "step " + std::to_string(step_ + 1) + ": " + p.name);
  for (const auto& p : g_.parameters()) require_finite(p.value, "step " + std::to_string(step_ + 1) + ": " + p.name);

  ++step_;
  m.step = step_;
  m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  history_.push_back(m);
  return m;
}

Tensor Trainer::generate(std::size_t n, Rng& rng) {
  return generate_from_noise(sample_noise(n, static_cast<std::size_t>(cfg_.noise_dim), rng));
}

Tensor Trainer::generate_from_noise(const Tensor& noise) {
  Rng unused(0);
  return g_.predict(noise, Mode::infer, unused);
}

std::uint64_t data_seed(const GanConfig& cfg) { return cfg.seed ^ 0x9e3779b97f4a7c15ull; }

namespace {

std::string step_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%08lld", static_cast<long long>(step));
  return buf;
}

std::string metric_line(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld\t%.10g\t%.10g\t%.10g\t%.10g\t%.3f\n", static_cast<long long>(m.step), m.d_loss,
                m.g_loss, m.mean_d_real, m.mean_d_fake, m.wall_ms);
  return buf;
}

bool due(std::int64_t step, std::int64_t interval) { return interval > 0 && step % interval == 0; }

}  // namespace

std::vector<StepMetrics> train(Trainer& trainer, const ImageDataset& ds, const TrainOptions& opts) {
  const GanConfig& cfg = trainer.config();
  if (ds.size() == 0) throw ConfigError("training dataset is empty");
  const auto s = static_cast<std::size_t>(cfg.image_size);
  const Shape item{s, s, static_cast<std::size_t>(cfg.channels)};
  if (ds.item_shape() != item) {
    throw DimensionError("dataset items are " + shape_to_string(ds.item_shape()) + " but the model expects " +
                         shape_to_string(item));
  }
  BatchIterator batches(ds, static_cast<std::size_t>(cfg.batch_size), data_seed(cfg), true);

  const bool to_disk = !opts.out_dir.empty();
  std::ofstream log_file;
  Tensor preview_noise;
  if (to_disk) {
    std::filesystem::create_directories(opts.out_dir);
    const auto log_path = opts.out_dir / "metrics.tsv";
    const bool fresh = !std::filesystem::exists(log_path);
    log_file.open(log_path, std::ios::app);
    if (!log_file) throw IoError("cannot open " + log_path.string());
    if (fresh) log_file << "# step\td_loss\tg_loss\tmean_d_real\tmean_d_fake\twall_ms\n";
    if (opts.checkpoint_interval > 0) std::filesystem::create_directories(opts.out_dir / "checkpoints");
    if (opts.sample_interval > 0) {
      std::filesystem::create_directories(opts.out_dir / "samples");
      Rng preview = derive_rng(cfg.seed, 2);
      preview_noise = sample_noise(opts.sample_count, static_cast<std::size_t>(cfg.noise_dim), preview);
    }
  }

  std::vector<StepMetrics> metrics;
  while (trainer.step() < cfg.steps) {
    const Tensor real = batches.batch(static_cast<std::uint64_t>(trainer.step()));
    const StepMetrics m = trainer.train_step(real);
    metrics.push_back(m);
    if (opts.on_step) opts.on_step(m);
    if (!to_disk) continue;
    if (due(m.step, opts.log_interval)) {
      log_file << metric_line(m);
      log_file.flush();
    }
    if (due(m.step, opts.checkpoint_interval)) save_checkpoint(trainer, opts.out_dir / "checkpoints" / step_name(m.step));
    if (due(m.step, opts.sample_interval)) {
      write_sample_grid(trainer.generate_from_noise(preview_noise), opts.sample_cols,
                        opts.out_dir / "samples" / (step_name(m.step) + ".pgm"));
    }
  }
  if (to_disk) save_checkpoint(trainer, opts.out_dir / "final");
  return metrics;
}

}  // namespace ctsynth
