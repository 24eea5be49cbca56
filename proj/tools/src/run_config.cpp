#include "ctsynth_cli/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ctsynth::cli {

RunConfigError::RunConfigError(std::string source, int line, std::string key, const std::string& reason)
    : ConfigError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                  (key.empty() ? std::string() : ": key '" + key + "'") + ": " + reason),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

int parse_int(const std::string& v) { return parse_number<int>(v); }

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item)));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list of integers");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"image_size", [](RunConfig& c, const std::string& v) { c.gan.image_size = parse_int(v); }},
      {"channels", [](RunConfig& c, const std::string& v) { c.gan.channels = parse_int(v); }},
      {"noise_dim", [](RunConfig& c, const std::string& v) { c.gan.noise_dim = parse_int(v); }},
      {"kernel_size", [](RunConfig& c, const std::string& v) { c.gan.kernel_size = parse_int(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.gan.batch_size = parse_int(v); }},
      {"lr_d", [](RunConfig& c, const std::string& v) { c.gan.lr_d = parse_number<double>(v); }},
      {"lr_g", [](RunConfig& c, const std::string& v) { c.gan.lr_g = parse_number<double>(v); }},
      {"optimizer", [](RunConfig& c, const std::string& v) { c.gan.optimizer = parse_optimizer_kind(v); }},
      {"leaky_slope", [](RunConfig& c, const std::string& v) { c.gan.leaky_slope = parse_number<double>(v); }},
      {"dropout_p", [](RunConfig& c, const std::string& v) { c.gan.dropout_p = parse_number<double>(v); }},
      {"bn_momentum", [](RunConfig& c, const std::string& v) { c.gan.bn_momentum = parse_number<double>(v); }},
      {"bn_epsilon", [](RunConfig& c, const std::string& v) { c.gan.bn_epsilon = parse_number<double>(v); }},
      {"weight_decay", [](RunConfig& c, const std::string& v) { c.gan.weight_decay = parse_number<double>(v); }},
      {"init_std", [](RunConfig& c, const std::string& v) { c.gan.init_std = parse_number<double>(v); }},
      {"g_loss_mode", [](RunConfig& c, const std::string& v) { c.gan.g_loss_mode = parse_g_loss_mode(v); }},
      {"steps", [](RunConfig& c, const std::string& v) { c.gan.steps = parse_number<std::int64_t>(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.gan.seed = parse_number<std::uint64_t>(v); }},
      {"width_divisor", [](RunConfig& c, const std::string& v) { c.gan.width_divisor = parse_int(v); }},
      {"d_strides", [](RunConfig& c, const std::string& v) { c.gan.d_strides = parse_int_list(v); }},
      {"g_strides", [](RunConfig& c, const std::string& v) { c.gan.g_strides = parse_int_list(v); }},
      {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      {"checkpoint_interval",
       [](RunConfig& c, const std::string& v) { c.checkpoint_interval = parse_number<std::int64_t>(v); }},
      {"sample_interval",
       [](RunConfig& c, const std::string& v) { c.sample_interval = parse_number<std::int64_t>(v); }},
      {"log_interval", [](RunConfig& c, const std::string& v) { c.log_interval = parse_number<std::int64_t>(v); }},
      {"sample_count", [](RunConfig& c, const std::string& v) { c.sample_count = parse_number<std::int64_t>(v); }},
      {"sample_cols", [](RunConfig& c, const std::string& v) { c.sample_cols = parse_number<std::int64_t>(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source,
                           const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::map<std::string, int> line_of;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw RunConfigError(source, line_no, "", "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw RunConfigError(source, line_no, key, "unknown key");
    if (!seen.insert(key).second) throw RunConfigError(source, line_no, key, "given more than once");
    if (value.empty()) throw RunConfigError(source, line_no, key, "missing value");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw RunConfigError(source, line_no, key, e.what());
    }
    line_of[key] = line_no;
  }

  if (!seen.count("noise_dim")) {
    try {
      cfg.gan.noise_dim = cfg.gan.required_noise_dim();
    } catch (const std::exception& e) {
      throw RunConfigError(source, 0, "", e.what());
    }
  }
  try {
    cfg.gan.validate();
  } catch (const std::exception& e) {
    throw RunConfigError(source, 0, "", e.what());
  }
  const auto check_nonneg = [&](const char* key, std::int64_t v) {
    if (v < 0) throw RunConfigError(source, line_of[key], key, "must be >= 0");
  };
  check_nonneg("checkpoint_interval", cfg.checkpoint_interval);
  check_nonneg("sample_interval", cfg.sample_interval);
  check_nonneg("log_interval", cfg.log_interval);
  if (cfg.sample_count < 1) throw RunConfigError(source, line_of["sample_count"], "sample_count", "must be >= 1");
  if (cfg.sample_cols < 1) throw RunConfigError(source, line_of["sample_cols"], "sample_cols", "must be >= 1");

  if (!cfg.data_dir.empty() && cfg.data_dir.is_relative()) cfg.data_dir = base_dir / cfg.data_dir;
  if (!cfg.out_dir.empty() && cfg.out_dir.is_relative()) cfg.out_dir = base_dir / cfg.out_dir;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunConfigError(path.string(), 0, "", "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string(), path.parent_path());
}

std::string format_run_config(const RunConfig& c) {
  const GanConfig& g = c.gan;
  std::ostringstream os;
  os << "image_size = " << g.image_size << "\n"
     << "channels = " << g.channels << "\n"
     << "noise_dim = " << g.noise_dim << "\n"
     << "kernel_size = " << g.kernel_size << "\n"
     << "batch_size = " << g.batch_size << "\n"
     << "lr_d = " << fmt_double(g.lr_d) << "\n"
     << "lr_g = " << fmt_double(g.lr_g) << "\n"
     << "optimizer = " << to_string(g.optimizer) << "\n"
     << "leaky_slope = " << fmt_double(g.leaky_slope) << "\n"
     << "dropout_p = " << fmt_double(g.dropout_p) << "\n"
     << "bn_momentum = " << fmt_double(g.bn_momentum) << "\n"
     << "bn_epsilon = " << fmt_double(g.bn_epsilon) << "\n"
     << "weight_decay = " << fmt_double(g.weight_decay) << "\n"
     << "init_std = " << fmt_double(g.init_std) << "\n"
     << "g_loss_mode = " << to_string(g.g_loss_mode) << "\n"
     << "steps = " << g.steps << "\n"
     << "seed = " << g.seed << "\n"
     << "width_divisor = " << g.width_divisor << "\n"
     << "d_strides = " << join(g.d_strides) << "\n"
     << "g_strides = " << join(g.g_strides) << "\n";
  if (!c.data_dir.empty()) os << "data_dir = " << c.data_dir.string() << "\n";
  if (!c.out_dir.empty()) os << "out_dir = " << c.out_dir.string() << "\n";
  os << "checkpoint_interval = " << c.checkpoint_interval << "\n"
     << "sample_interval = " << c.sample_interval << "\n"
     << "log_interval = " << c.log_interval << "\n"
     << "sample_count = " << c.sample_count << "\n"
     << "sample_cols = " << c.sample_cols << "\n";
  return os.str();
}

}  // namespace ctsynth::cli
