#include "pagsr/config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <string>

namespace pagsr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  if constexpr (std::is_floating_point_v<N>) {
    std::size_t used = 0;
    try {
      out = static_cast<N>(std::stod(v, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw ConfigError("config key '" + key + "': not a number: " + v);
  } else {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key '" + key + "': not an integer: " + v);
    }
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + v);
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  bool scale_given = false;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto int_field = [](int& f) -> Setter {
    return [&f](const std::string& k, const std::string& v) { f = parse_number<int>(k, v); };
  };
  auto real_field = [](double& f) -> Setter {
    return [&f](const std::string& k, const std::string& v) { f = parse_number<double>(k, v); };
  };
  const std::map<std::string, Setter> fields = {
      {"upsample_exponent", int_field(cfg.model.upsample_exponent)},
      {"base_channels", int_field(cfg.model.base_channels)},
      {"rdb_layers", int_field(cfg.model.rdb_layers)},
      {"growth_rate", int_field(cfg.model.growth_rate)},
      {"guidance_channels", int_field(cfg.model.guidance_channels)},
      {"seed",
       [&](const std::string& k, const std::string& v) {
         cfg.model.seed = parse_number<std::uint64_t>(k, v);
         cfg.train.seed = cfg.model.seed;
       }},
      {"global_residual",
       [&](const std::string& k, const std::string& v) { cfg.model.global_residual = parse_bool(k, v); }},
      {"batch_size", int_field(cfg.train.batch_size)},
      {"learning_rate", real_field(cfg.train.learning_rate)},
      {"epochs", int_field(cfg.train.epochs)},
      {"beta1", real_field(cfg.train.beta1)},
      {"beta2", real_field(cfg.train.beta2)},
      {"epsilon", real_field(cfg.train.epsilon)},
      {"scale",
       [&](const std::string& k, const std::string& v) {
         cfg.train.scale = parse_number<int>(k, v);
         scale_given = true;
       }},
      {"checkpoint_every", int_field(cfg.train.checkpoint_every)},
      {"checkpoint_path",
       [&](const std::string&, const std::string& v) { cfg.train.checkpoint_path = v; }},
      {"max_steps", int_field(cfg.train.max_steps)},
      {"patch_size", int_field(cfg.patch_size)},
      {"patch_stride", int_field(cfg.patch_stride)},
      {"augment", [&](const std::string& k, const std::string& v) { cfg.augment = parse_bool(k, v); }},
      {"noise_sigma", real_field(cfg.noise_sigma)},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // tolerate TOML section headers
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second(key, value);
  }
  cfg.model.validate();
  if (!scale_given) cfg.train.scale = cfg.model.factor();
  if (cfg.train.scale != cfg.model.factor()) {
    throw ConfigError("config scale " + std::to_string(cfg.train.scale) +
                      " disagrees with upsample_exponent " +
                      std::to_string(cfg.model.upsample_exponent));
  }
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config");
  return parse_run_config(in);
}

}  // namespace pagsr
