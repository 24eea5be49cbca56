#include "ctsynth/optim.hpp"

#include <cmath>
#include <string>

#include "ctsynth/error.hpp"

namespace ctsynth {

Tensor init_gaussian(const Shape& shape, double stddev, Rng& rng) {
  if (!(stddev > 0.0)) throw ConfigError("initialization stddev must be positive");
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::rmsprop ? "rmsprop" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view text) {
  if (text == "rmsprop") return OptimizerKind::rmsprop;
  if (text == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected rmsprop or adam)");
}

double rmsprop_update(double& value, double grad, double& cache, const RmsPropHyper& hp) {
  const double g = grad + hp.weight_decay * value;
  cache = hp.rho * cache + (1.0 - hp.rho) * g * g;
  const double delta = hp.lr * (g / (std::sqrt(cache) + hp.eps));
  value -= delta;
  return delta;
}

double adam_update(double& value, double grad, double& m, double& v, std::uint64_t t, const AdamHyper& hp) {
  const double g = grad + hp.weight_decay * value;
  m = hp.beta1 * m + (1.0 - hp.beta1) * g;
  v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
  const double td = static_cast<double>(t);
  const double m_hat = m / (1.0 - std::pow(hp.beta1, td));
  const double v_hat = v / (1.0 - std::pow(hp.beta2, td));
  const double delta = hp.lr * (m_hat / (std::sqrt(v_hat) + hp.eps));
  value -= delta;
  return delta;
}

namespace {

void require_grad(const Parameter& p) {
  if (!p.has_grad) throw StateError("parameter " + p.name + " has no gradient");
  if (p.grad.shape() != p.value.shape()) throw DimensionError("gradient shape differs from parameter " + p.name);
}

void ensure_slot(Tensor& slot, const Tensor& like) {
  if (slot.shape() != like.shape()) slot = Tensor(like.shape());
}

}  // namespace

void rmsprop_step(Parameter& p, RmsPropSlot& slot, const RmsPropHyper& hp) {
  require_grad(p);
  ensure_slot(slot.cache, p.value);
  for (std::size_t i = 0; i < p.value.size(); ++i) rmsprop_update(p.value[i], p.grad[i], slot.cache[i], hp);
}

void adam_step(Parameter& p, AdamSlot& slot, const AdamHyper& hp) {
  require_grad(p);
  ensure_slot(slot.m, p.value);
  ensure_slot(slot.v, p.value);
  ++slot.t;
  for (std::size_t i = 0; i < p.value.size(); ++i) adam_update(p.value[i], p.grad[i], slot.m[i], slot.v[i], slot.t, hp);
}

bool decays(ParamRole role) { return role == ParamRole::weight || role == ParamRole::bn_gamma; }

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

Optimizer::Optimizer(OptimizerConfig config, std::span<Parameter> params) : config_(config) {
  config_.validate();
  if (config_.kind == OptimizerKind::rmsprop) {
    for (const auto& p : params) rms_.push_back({Tensor(p.value.shape())});
  } else {
    for (const auto& p : params) adam_.push_back({Tensor(p.value.shape()), Tensor(p.value.shape()), 0});
  }
}

std::size_t Optimizer::slot_count() const noexcept {
  return config_.kind == OptimizerKind::rmsprop ? rms_.size() : adam_.size();
}

void Optimizer::step(std::span<Parameter> params) {
  if (params.size() != slot_count()) throw ContractError("optimizer stepped with a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double wd = decays(params[i].role) ? config_.weight_decay : 0.0;
    if (config_.kind == OptimizerKind::rmsprop) {
      rmsprop_step(params[i], rms_[i], {config_.lr, config_.rho, config_.eps, wd});
    } else {
      adam_step(params[i], adam_[i], {config_.lr, config_.beta1, config_.beta2, config_.eps, wd});
    }
  }
}

std::vector<SlotTensor> Optimizer::slot_tensors(std::span<Parameter> params) {
  if (params.size() != slot_count()) throw ContractError("optimizer queried with a different parameter list");
  std::vector<SlotTensor> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (config_.kind == OptimizerKind::rmsprop) {
      out.push_back({params[i].name + "/cache", &rms_[i].cache});
    } else {
      out.push_back({params[i].name + "/m", &adam_[i].m});
      out.push_back({params[i].name + "/v", &adam_[i].v});
    }
  }
  return out;
}

std::vector<std::uint64_t> Optimizer::step_counters() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : adam_) out.push_back(s.t);
  return out;
}

void Optimizer::set_step_counters(const std::vector<std::uint64_t>& counters) {
  if (counters.size() != adam_.size()) throw FormatError("optimizer step counters do not match parameter count");
  for (std::size_t i = 0; i < counters.size(); ++i) adam_[i].t = counters[i];
}

}  // namespace ctsynth
