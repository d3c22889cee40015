#pragma once

// Reader for the TOML subset used by the CLI: [table] headers, dotted
// table names, `key = value` with strings, integers, floats, booleans and
// flat arrays of numbers, and # comments. Keys are stored flattened as
// "table.key".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace btf {

class Config {
 public:
  using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<double> number(const std::string& key) const;
  std::optional<std::int64_t> integer(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::string> string(const std::string& key) const;
  std::optional<std::vector<double>> numbers(const std::string& key) const;

  /// Throws Configuration naming the first key not in `known`.
  void reject_unknown(const std::vector<std::string>& known) const;

  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;
};

struct SyntheticBtfSpec;
struct TrainConfig;

/// Reads [synthetic] keys over the defaults in `spec`.
void apply_config(const Config& config, SyntheticBtfSpec& spec);
/// Reads [train] and [model] keys over the defaults in `train`.
void apply_config(const Config& config, TrainConfig& train);

}  // namespace btf
