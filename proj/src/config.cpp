#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "btfsyn/btf_data.hpp"
#include "btfsyn/config.hpp"
#include "btfsyn/error.hpp"
#include "btfsyn/trainer.hpp"

namespace btf {

namespace {

[[noreturn]] void fail(int line, const std::string& message) {
  throw Error(ErrorKind::Configuration, "config line " + std::to_string(line) + ": " + message);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k, bool dotted) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [&](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || (dotted && c == '.');
  });
}

// Drops a trailing comment, respecting string literals.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::optional<double> parse_number(std::string_view s, bool& is_integer) {
  std::string clean;
  for (char c : s) {
    if (c != '_') clean.push_back(c);
  }
  if (clean.empty()) return std::nullopt;
  if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
  if (clean == "-inf") return -std::numeric_limits<double>::infinity();
  if (clean == "nan" || clean == "+nan" || clean == "-nan") return std::numeric_limits<double>::quiet_NaN();
  is_integer = clean.find_first_of(".eE") == std::string::npos;
  const char* begin = clean.data() + (clean.front() == '+' ? 1 : 0);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, clean.data() + clean.size(), v);
  if (ec != std::errc() || ptr != clean.data() + clean.size()) return std::nullopt;
  return v;
}

Config::Value parse_value(std::string_view text, int line) {
  if (text.empty()) fail(line, "missing value");
  if (text.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < text.size() && text[i] != '"'; ++i) {
      if (text[i] == '\\' && i + 1 < text.size()) {
        const char e = text[++i];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(line, std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(text[i]);
      }
    }
    if (i >= text.size() || !trim(text.substr(i + 1)).empty()) fail(line, "unterminated or trailing string");
    return out;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated array");
    std::vector<double> values;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      if (!item.empty()) {
        bool is_int = false;
        const auto v = parse_number(item, is_int);
        if (!v) fail(line, "arrays may only hold numbers");
        values.push_back(*v);
      } else if (comma != std::string_view::npos) {
        fail(line, "empty array element");
      }
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return values;
  }
  bool is_int = false;
  const auto v = parse_number(text, is_int);
  if (!v) fail(line, "cannot parse value '" + std::string(text) + "'");
  if (is_int) {
    if (std::abs(*v) > 9.007199254740992e15) fail(line, "integer out of range");
    return std::int64_t(*v);
  }
  return *v;
}

template <typename T>
std::optional<T> read(const std::map<std::string, Config::Value>& values, const std::string& key) {
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  if (const T* v = std::get_if<T>(&it->second)) return *v;
  throw Error(ErrorKind::Configuration, "config key '" + key + "' has the wrong type");
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config config;
  std::string table;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string statement(trim(strip_comment(raw)));
    // Arrays may continue over several lines.
    const auto eq = statement.find('=');
    if (eq != std::string::npos) {
      const auto value = trim(std::string_view(statement).substr(eq + 1));
      if (!value.empty() && value.front() == '[') {
        while (std::count(statement.begin(), statement.end(), '[') > std::count(statement.begin(), statement.end(), ']')) {
          if (!std::getline(in, raw)) fail(line, "unterminated array");
          ++line;
          statement += ' ';
          statement += trim(strip_comment(raw));
        }
      }
    }
    const std::string_view s = statement;
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) fail(line, "malformed table header");
      const auto name = trim(s.substr(1, s.size() - 2));
      if (!valid_key(name, true)) fail(line, "invalid table name");
      table = std::string(name);
      continue;
    }
    if (eq == std::string::npos) fail(line, "expected key = value");
    const auto key = trim(s.substr(0, eq));
    if (!valid_key(key, false)) fail(line, "invalid key '" + std::string(key) + "'");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (config.values_.count(full)) fail(line, "duplicate key '" + full + "'");
    config.values_[full] = parse_value(trim(s.substr(eq + 1)), line);
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<double> Config::number(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return double(*i);
  return read<double>(values_, key);
}

std::optional<std::int64_t> Config::integer(const std::string& key) const { return read<std::int64_t>(values_, key); }
std::optional<bool> Config::boolean(const std::string& key) const { return read<bool>(values_, key); }
std::optional<std::string> Config::string(const std::string& key) const { return read<std::string>(values_, key); }
std::optional<std::vector<double>> Config::numbers(const std::string& key) const {
  return read<std::vector<double>>(values_, key);
}

void Config::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorKind::Configuration, "unknown config key '" + key + "'");
    }
  }
}

namespace {

Eigen::Vector3f rgb(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 3) throw Error(ErrorKind::Configuration, "config key '" + key + "' needs three values");
  return Eigen::Vector3d(v[0], v[1], v[2]).cast<float>();
}

// Keys under an owned table must be known; other tables are left alone.
void reject_unknown_in(const Config& c, const std::vector<std::string>& tables, const std::vector<std::string>& known) {
  for (const auto& [key, value] : c.values()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const auto table = key.substr(0, dot);
    if (std::find(tables.begin(), tables.end(), table) == tables.end()) continue;
    if (std::find(known.begin(), known.end(), key.substr(dot + 1)) == known.end()) {
      throw Error(ErrorKind::Configuration, "unknown config key '" + key + "'");
    }
  }
}

}  // namespace

void apply_config(const Config& c, SyntheticBtfSpec& spec) {
  reject_unknown_in(c, {"synthetic"},
                    {"width", "height", "n_theta", "n_phi", "theta_max_deg", "albedo", "albedo_seed", "albedo_min",
                     "albedo_max", "roughness_seed", "roughness_min", "roughness_max", "ior", "specular_weight",
                     "noise_cells", "noise_octaves"});
  const std::string t = "synthetic.";
  if (auto v = c.integer(t + "width")) spec.width = std::uint32_t(std::max<std::int64_t>(0, *v));
  if (auto v = c.integer(t + "height")) spec.height = std::uint32_t(std::max<std::int64_t>(0, *v));
  if (auto v = c.integer(t + "n_theta")) spec.n_theta = int(*v);
  if (auto v = c.integer(t + "n_phi")) spec.n_phi = int(*v);
  if (auto v = c.number(t + "theta_max_deg")) spec.theta_max_deg = *v;
  if (auto v = c.numbers(t + "albedo")) spec.albedo_constant = rgb(*v, t + "albedo");
  if (auto v = c.integer(t + "albedo_seed")) spec.albedo_seed = std::uint64_t(*v);
  if (auto v = c.numbers(t + "albedo_min")) spec.albedo_min = rgb(*v, t + "albedo_min");
  if (auto v = c.numbers(t + "albedo_max")) spec.albedo_max = rgb(*v, t + "albedo_max");
  if (auto v = c.integer(t + "roughness_seed")) spec.roughness_seed = std::uint64_t(*v);
  if (auto v = c.number(t + "roughness_min")) spec.roughness_min = *v;
  if (auto v = c.number(t + "roughness_max")) spec.roughness_max = *v;
  if (auto v = c.number(t + "ior")) spec.ior = *v;
  if (auto v = c.number(t + "specular_weight")) spec.specular_weight = *v;
  if (auto v = c.integer(t + "noise_cells")) spec.noise_cells = int(*v);
  if (auto v = c.integer(t + "noise_octaves")) spec.noise_octaves = int(*v);
}

void apply_config(const Config& c, TrainConfig& train) {
  reject_unknown_in(c, {"train", "model"},
                    {"lr_planes", "lr_mlp", "epochs", "lr_decay_per_epoch", "images_per_batch", "seed", "loss_space",
                     "weight_decay", "decay_planes", "leaky_slope", "output_activation", "threads", "chunk",
                     "checkpoint_every", "u_width", "u_height", "u_channels", "dir_width", "dir_height",
                     "dir_channels", "hidden"});
  const std::string t = "train.";
  if (auto v = c.number(t + "lr_planes")) train.lr_planes = *v;
  if (auto v = c.number(t + "lr_mlp")) train.lr_mlp = *v;
  if (auto v = c.integer(t + "epochs")) train.epochs = int(*v);
  if (auto v = c.number(t + "lr_decay_per_epoch")) train.lr_decay_per_epoch = *v;
  if (auto v = c.integer(t + "images_per_batch")) train.images_per_batch = int(*v);
  if (auto v = c.integer(t + "seed")) train.seed = std::uint64_t(*v);
  if (auto v = c.string(t + "loss_space")) {
    if (*v == "linear") {
      train.loss_space = LossSpace::Linear;
    } else if (*v == "log1p") {
      train.loss_space = LossSpace::Log1p;
    } else {
      throw Error(ErrorKind::Configuration, "train.loss_space must be \"linear\" or \"log1p\"");
    }
  }
  if (auto v = c.number(t + "weight_decay")) train.weight_decay = *v;
  if (auto v = c.boolean(t + "decay_planes")) train.decay_planes = *v;
  if (auto v = c.number(t + "leaky_slope")) train.leaky_slope = *v;
  if (auto v = c.boolean(t + "output_activation")) train.output_activation = *v;
  if (auto v = c.integer(t + "threads")) train.threads = int(*v);
  if (auto v = c.integer(t + "chunk")) train.chunk = Index(*v);
  if (auto v = c.integer(t + "checkpoint_every")) train.checkpoint_every = int(*v);

  const std::string m = "model.";
  auto& s = train.shape;
  if (auto v = c.integer(m + "u_width")) s.u_width = Index(*v);
  if (auto v = c.integer(m + "u_height")) s.u_height = Index(*v);
  if (auto v = c.integer(m + "u_channels")) s.u_channels = Index(*v);
  if (auto v = c.integer(m + "dir_width")) s.dir_width = Index(*v);
  if (auto v = c.integer(m + "dir_height")) s.dir_height = Index(*v);
  if (auto v = c.integer(m + "dir_channels")) s.dir_channels = Index(*v);
  if (auto v = c.numbers(m + "hidden")) {
    s.hidden.clear();
    for (double h : *v) s.hidden.push_back(Index(h));
  }
}

}  // namespace btf
