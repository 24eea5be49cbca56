#include "ctsynth_cli/gradcheck_harness.hpp"

#include <algorithm>
#include <map>

#include "ctsynth/error.hpp"
#include "ctsynth/network.hpp"
#include "ctsynth/trainer.hpp"

namespace ctsynth::cli {

const LayerError& GradcheckOutcome::worst() const {
  if (layers.empty()) throw StateError("empty gradient-check outcome");
  return *std::max_element(layers.begin(), layers.end(),
                           [](const auto& a, const auto& b) { return a.max_rel_err < b.max_rel_err; });
}

GanConfig gradcheck_config(const GradcheckOptions& opts) {
  GanConfig cfg;
  cfg.image_size = opts.size;
  cfg.kernel_size = opts.kernel;
  cfg.width_divisor = opts.width_divisor;
  cfg.batch_size = opts.batch;
  cfg.channels = opts.channels;
  cfg.init_std = opts.init_std;
  cfg.seed = opts.seed;
  cfg.noise_dim = cfg.required_noise_dim();
  cfg.validate();
  return cfg;
}

namespace {

std::string layer_of(const std::string& param) {
  const auto dot = param.rfind('.');
  return dot == std::string::npos ? param : param.substr(0, dot);
}

void collect(const std::string& path, const GradCheckReport& report, GradcheckOutcome& out) {
  std::map<std::string, LayerError> by_layer;
  std::vector<std::string> order;
  for (const auto& e : report.entries) {
    const std::string layer = layer_of(e.name);
    auto [it, fresh] = by_layer.try_emplace(layer);
    if (fresh) {
      order.push_back(layer);
      it->second.path = path;
      it->second.layer = layer;
    }
    it->second.kink_crossings += e.kink_crossings;
    it->second.max_rel_err_smooth = std::max(it->second.max_rel_err_smooth, e.max_rel_err_smooth);
    if (fresh || e.max_rel_err > it->second.max_rel_err) {
      it->second.parameter = e.name;
      it->second.max_rel_err = e.max_rel_err;
      it->second.analytic = e.analytic;
      it->second.numeric = e.numeric;
    }
  }
  for (const auto& l : order) out.layers.push_back(by_layer[l]);
  out.max_rel_err = std::max(out.max_rel_err, report.max_rel_err);
  out.max_rel_err_smooth = std::max(out.max_rel_err_smooth, report.max_rel_err_smooth);
  out.kink_crossings += report.kink_crossings;
}

void rescale_bn_inputs(Network& net, double from_std, double to_std) {
  for (const auto& layer : net.spec().layers) {
    if (!layer.has_bn) continue;
    auto& w = net.parameter(net.spec().name + "." + layer.name + ".w").value;
    for (auto& v : w.data()) v *= to_std / from_std;
  }
}

std::vector<Parameter*> pointers(Network& net) {
  std::vector<Parameter*> out;
  for (auto& p : net.parameters()) out.push_back(&p);
  return out;
}

}  // namespace

GradcheckOutcome run_gradcheck(const GradcheckOptions& opts) {
  GradcheckOutcome out;
  out.config = gradcheck_config(opts);
  const GanConfig& cfg = out.config;
  Trainer trainer(cfg);
  Network& d = trainer.discriminator();
  Network& g = trainer.generator();
  rescale_bn_inputs(d, cfg.init_std, opts.bn_weight_std);
  rescale_bn_inputs(g, cfg.init_std, opts.bn_weight_std);

  const auto n = static_cast<std::size_t>(cfg.batch_size);
  const auto s = static_cast<std::size_t>(cfg.image_size);
  const auto c = static_cast<std::size_t>(cfg.channels);
  Rng data_rng = derive_rng(cfg.seed, 11);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  Tensor real({n, s, s, c});
  Tensor fake({n, s, s, c});
  for (auto& v : real.data()) v = unit(data_rng);
  for (auto& v : fake.data()) v = unit(data_rng);
  const Tensor noise = sample_noise(n, static_cast<std::size_t>(cfg.noise_dim), data_rng);

  // Each evaluation restarts the dropout stream so every pass sees the same masks.
  const std::string mask_state = save_rng_state(derive_rng(cfg.seed, 12));

  const LossBuilder d_path = [&](Tape& tape) {
    Rng rng = load_rng_state(mask_state);
    return discriminator_objective(tape, d, real, fake, Mode::train, rng).loss;
  };
  collect("d_loss", grad_check(d_path, pointers(d), opts.h), out);

  const LossBuilder g_path = [&](Tape& tape) {
    Rng rng = load_rng_state(mask_state);
    return generator_objective(tape, g, d, noise, cfg.g_loss_mode, Mode::train, Mode::train, rng).loss;
  };
  collect("g_loss", grad_check(g_path, pointers(g), opts.h), out);
  return out;
}

}  // namespace ctsynth::cli
