#pragma once

// Plain-text experiment configuration: one `key = value` per line, '#'
// starts a comment.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "viewgen/bench.hpp"

namespace viewgen {

class Config {
 public:
  static Config parse(std::istream& in);
  static Config load(const std::string& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Copies recognized keys into `cfg`. Throws InvalidArgument on an unknown
/// key or a value that does not parse.
void apply_config(const Config& config, ExperimentConfig& cfg);

}  // namespace viewgen
