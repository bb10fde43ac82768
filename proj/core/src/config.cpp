#include "viewgen/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>

#include "viewgen/errors.hpp"

namespace viewgen {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw InvalidArgument("config: bad value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw InvalidArgument("config: bad boolean for " + key + ": '" + value + "'");
}

RotationMode parse_mode(const std::string& key, const std::string& value) {
  if (value == "continuous") return RotationMode::Continuous;
  if (value == "discrete") return RotationMode::Discrete;
  throw InvalidArgument("config: " + key + " must be continuous or discrete");
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  return parse(in);
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void apply_config(const Config& config, ExperimentConfig& cfg) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size = [](std::size_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<std::size_t>(k, v); };
  };
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_number<double>(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"n_train_clips", size(cfg.n_train_clips)},
      {"rotation_range_deg", real(cfg.rotation_range_deg)},
      {"rotation_mode", [&](const std::string& k, const std::string& v) { cfg.rotation_mode = parse_mode(k, v); }},
      {"locations_range_deg", real(cfg.locations_range_deg)},
      {"locations_mode", [&](const std::string& k, const std::string& v) { cfg.locations_mode = parse_mode(k, v); }},
      {"encoder", [&](const std::string&, const std::string& v) { cfg.encoder = parse_feature_kind(v); }},
      {"grid_extent", real(cfg.grid.extent)},
      {"grid_resolution",
       [&](const std::string& k, const std::string& v) { cfg.grid.resolution = parse_number<std::uint32_t>(k, v); }},
      {"n_trials", size(cfg.n_trials)},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed.value = parse_number<std::uint64_t>(k, v); }},
      {"method", [&](const std::string&, const std::string& v) { cfg.method = v; }},
      {"train_pairs", size(cfg.train_pairs)},
      {"fo_pairs", size(cfg.fo_pairs)},
      {"alpha", real(cfg.alpha)},
      {"epochs", size(cfg.mlp.epochs)},
      {"batch_size", size(cfg.mlp.batch_size)},
      {"learning_rate", real(cfg.mlp.learning_rate)},
      {"hidden_units", size(cfg.mlp.hidden_units)},
      {"validation_fraction", real(cfg.mlp.validation_fraction)},
      {"patience", size(cfg.mlp.patience)},
      {"workers", size(cfg.workers)},
      {"wall_time", [&](const std::string& k, const std::string& v) { cfg.record_wall_time = parse_bool(k, v); }},
      {"coil_dir", [&](const std::string&, const std::string& v) { cfg.coil_dir = v; }},
      {"cache_dir", [&](const std::string&, const std::string& v) { cfg.cache_dir = v; }},
      {"eigen_k", size(cfg.eigen_k)},
      {"coil_pairs", size(cfg.coil_train.n_pairs)},
      {"coil_epochs", size(cfg.coil_train.train.epochs)},
      {"coil_hidden_units", size(cfg.coil_train.train.hidden_units)},
  };
  for (const auto& [key, value] : config.entries()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InvalidArgument("config: unknown key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace viewgen
