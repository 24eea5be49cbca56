#include "ctsynth/checkpoint.hpp"

#include <json.hpp>

#include "ctsynth/error.hpp"
#include "io_util.hpp"

namespace ctsynth {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "ctsynth-checkpoint-v1";
constexpr const char* kBlobName = "tensors.bin";

// Every tensor that makes up the training state, addressed by its stable name.
std::vector<std::pair<std::string, Tensor*>> state_tensors(Trainer& tr) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (Network* net : {&tr.discriminator(), &tr.generator()}) {
    for (auto& p : net->parameters()) out.emplace_back(p.name, &p.value);
    for (std::size_t i = 0; i < net->bn_states().size(); ++i) {
      out.emplace_back(net->bn_names()[i] + ".running_mean", &net->bn_states()[i].running_mean);
      out.emplace_back(net->bn_names()[i] + ".running_var", &net->bn_states()[i].running_var);
    }
  }
  for (auto& s : tr.d_optimizer().slot_tensors(tr.discriminator().parameters())) out.emplace_back(s.name, s.tensor);
  for (auto& s : tr.g_optimizer().slot_tensors(tr.generator().parameters())) out.emplace_back(s.name, s.tensor);
  return out;
}

std::string entry_kind(const std::string& name) {
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("/cache") || ends_with("/m") || ends_with("/v")) return "optimizer_slot";
  if (ends_with(".running_mean")) return "bn_running_mean";
  if (ends_with(".running_var")) return "bn_running_var";
  return "parameter";
}

json config_json(const GanConfig& c) {
  return json{{"image_size", c.image_size},
              {"channels", c.channels},
              {"noise_dim", c.noise_dim},
              {"kernel_size", c.kernel_size},
              {"batch_size", c.batch_size},
              {"lr_d", c.lr_d},
              {"lr_g", c.lr_g},
              {"optimizer", std::string(to_string(c.optimizer))},
              {"leaky_slope", c.leaky_slope},
              {"dropout_p", c.dropout_p},
              {"bn_momentum", c.bn_momentum},
              {"bn_epsilon", c.bn_epsilon},
              {"weight_decay", c.weight_decay},
              {"init_std", c.init_std},
              {"g_loss_mode", std::string(to_string(c.g_loss_mode))},
              {"steps", c.steps},
              {"seed", c.seed},
              {"width_divisor", c.width_divisor},
              {"d_strides", c.d_strides},
              {"g_strides", c.g_strides}};
}

GanConfig config_of(const json& j) {
  GanConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "image_size") value.get_to(c.image_size);
    else if (key == "channels") value.get_to(c.channels);
    else if (key == "noise_dim") value.get_to(c.noise_dim);
    else if (key == "kernel_size") value.get_to(c.kernel_size);
    else if (key == "batch_size") value.get_to(c.batch_size);
    else if (key == "lr_d") value.get_to(c.lr_d);
    else if (key == "lr_g") value.get_to(c.lr_g);
    else if (key == "optimizer") c.optimizer = parse_optimizer_kind(value.get<std::string>());
    else if (key == "leaky_slope") value.get_to(c.leaky_slope);
    else if (key == "dropout_p") value.get_to(c.dropout_p);
    else if (key == "bn_momentum") value.get_to(c.bn_momentum);
    else if (key == "bn_epsilon") value.get_to(c.bn_epsilon);
    else if (key == "weight_decay") value.get_to(c.weight_decay);
    else if (key == "init_std") value.get_to(c.init_std);
    else if (key == "g_loss_mode") c.g_loss_mode = parse_g_loss_mode(value.get<std::string>());
    else if (key == "steps") value.get_to(c.steps);
    else if (key == "seed") value.get_to(c.seed);
    else if (key == "width_divisor") value.get_to(c.width_divisor);
    else if (key == "d_strides") value.get_to(c.d_strides);
    else if (key == "g_strides") value.get_to(c.g_strides);
    else throw FormatError("unknown config key '" + key + "' in checkpoint");
  }
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json(const GanConfig& cfg) { return config_json(cfg).dump(2); }

GanConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed config JSON: ") + e.what());
  }
}

bool same_architecture(const GanConfig& a, const GanConfig& b) {
  return a.image_size == b.image_size && a.channels == b.channels && a.noise_dim == b.noise_dim &&
         a.kernel_size == b.kernel_size && a.width_divisor == b.width_divisor && a.d_strides == b.d_strides &&
         a.g_strides == b.g_strides && a.optimizer == b.optimizer;
}

Checkpoint capture_checkpoint(Trainer& trainer) {
  Checkpoint ckpt;
  ckpt.config = trainer.config();
  ckpt.step = trainer.step();
  ckpt.rng_state = save_rng_state(trainer.rng());
  ckpt.d_adam_steps = trainer.d_optimizer().step_counters();
  ckpt.g_adam_steps = trainer.g_optimizer().step_counters();
  for (auto& [name, tensor] : state_tensors(trainer)) ckpt.tensors.emplace(name, *tensor);
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string blob;
  json entries = json::array();
  for (const auto& [name, tensor] : ckpt.tensors) {
    const std::size_t offset = blob.size();
    detail::append_f64_le(blob, tensor.data());
    entries.push_back(json{{"name", name},
                           {"kind", entry_kind(name)},
                           {"shape", tensor.shape()},
                           {"offset", offset},
                           {"length", blob.size() - offset}});
  }
  json manifest{{"format", kFormat},
                {"config", config_json(ckpt.config)},
                {"step", ckpt.step},
                {"rng_state", ckpt.rng_state},
                {"adam_steps", json{{"d", ckpt.d_adam_steps}, {"g", ckpt.g_adam_steps}}},
                {"blob", kBlobName},
                {"entries", entries}};
  detail::atomic_write(dir / kBlobName, blob);
  detail::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::filesystem::path& dir) {
  const std::string text = detail::read_file(dir / "manifest.json");
  Checkpoint ckpt;
  try {
    const json m = json::parse(text);
    if (m.at("format") != kFormat) throw FormatError(dir.string() + ": not a ctsynth checkpoint");
    ckpt.config = config_of(m.at("config"));
    ckpt.step = m.at("step").get<std::int64_t>();
    ckpt.rng_state = m.at("rng_state").get<std::string>();
    ckpt.d_adam_steps = m.at("adam_steps").at("d").get<std::vector<std::uint64_t>>();
    ckpt.g_adam_steps = m.at("adam_steps").at("g").get<std::vector<std::uint64_t>>();
    const std::string blob = detail::read_file(dir / m.at("blob").get<std::string>());
    for (const auto& e : m.at("entries")) {
      const auto shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto length = e.at("length").get<std::size_t>();
      if (length != element_count(shape) * 8 || offset + length > blob.size()) {
        throw IoError(dir.string() + ": entry " + e.at("name").get<std::string>() + " exceeds the tensor blob");
      }
      Tensor t(shape);
      detail::read_f64_le(std::string_view(blob).substr(offset, length), t.data());
      ckpt.tensors.emplace(e.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + ": malformed checkpoint manifest: " + e.what());
  }
  return ckpt;
}

void restore_checkpoint(Trainer& trainer, const Checkpoint& ckpt) {
  if (!same_architecture(trainer.config(), ckpt.config)) {
    throw DimensionError("checkpoint architecture does not match the configured model");
  }
  auto targets = state_tensors(trainer);
  if (targets.size() != ckpt.tensors.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model needs " +
                         std::to_string(targets.size()));
  }
  for (auto& [name, tensor] : targets) {
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw DimensionError("checkpoint lacks tensor " + name);
    if (it->second.shape() != tensor->shape()) {
      throw DimensionError("checkpoint tensor " + name + " has shape " + shape_to_string(it->second.shape()) +
                           ", model expects " + shape_to_string(tensor->shape()));
    }
    *tensor = it->second;
  }
  trainer.d_optimizer().set_step_counters(ckpt.d_adam_steps);
  trainer.g_optimizer().set_step_counters(ckpt.g_adam_steps);
  trainer.rng() = load_rng_state(ckpt.rng_state);
  trainer.set_step(ckpt.step);
}

Trainer load_trainer(const std::filesystem::path& dir) {
  const Checkpoint ckpt = read_checkpoint(dir);
  Trainer trainer(ckpt.config);
  restore_checkpoint(trainer, ckpt);
  return trainer;
}

}  // namespace ctsynth
