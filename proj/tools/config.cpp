// Copyright 2026 The specguard Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "specguard/regularize.hpp"

namespace specguard::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& s) {
  const long long v = to_int(s);
  if (v < 0) throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::string fmt(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

std::string init_name(InitOptions::Scheme s) {
  switch (s) {
    case InitOptions::Scheme::fan_in: return "fan_in";
    case InitOptions::Scheme::uniform: return "uniform";
    case InitOptions::Scheme::gaussian: return "gaussian";
  }
  return "?";
}

InitOptions::Scheme parse_init(const std::string& s) {
  if (s == "fan_in") return InitOptions::Scheme::fan_in;
  if (s == "uniform") return InitOptions::Scheme::uniform;
  if (s == "gaussian") return InitOptions::Scheme::gaussian;
  throw std::invalid_argument("expected fan_in, uniform or gaussian, got '" + s + "'");
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SG_DOUBLE(key, field) \
  Key{key, [](ExperimentConfig& c, const std::string& v) { c.field = to_double(v); }, \
      [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.field)); }}
#define SG_INT(key, field) \
  Key{key, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<decltype(c.field)>(to_int(v)); }, \
      [](const ExperimentConfig& c) { return std::to_string(c.field); }}
#define SG_UINT(key, field) \
  Key{key, [](ExperimentConfig& c, const std::string& v) { c.field = to_uint(v); }, \
      [](const ExperimentConfig& c) { return std::to_string(c.field); }}
#define SG_BOOL(key, field) \
  Key{key, [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(v); }, \
      [](const ExperimentConfig& c) { return fmt(c.field); }}
#define SG_STRING(key, field) \
  Key{key, [](ExperimentConfig& c, const std::string& v) { c.field = v; }, \
      [](const ExperimentConfig& c) { return std::string(c.field); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      SG_STRING("run.name", name),
      Key{"run.seeds",
          [](ExperimentConfig& c, const std::string& v) {
            c.seeds.clear();
            for (const std::string& s : split_list(v)) c.seeds.push_back(to_uint(s));
          },
          [](const ExperimentConfig& c) { return join(c.seeds); }},
      Key{"output.dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
          [](const ExperimentConfig& c) { return c.out_dir.string(); }},

      SG_STRING("data.source", data.source),
      SG_INT("data.points_per_cluster", data.points_per_cluster),
      SG_DOUBLE("data.noise_std", data.noise_std),
      SG_UINT("data.seed", data.data_seed),
      SG_STRING("data.dir", data.dir),
      SG_INT("data.train_size", data.train_size),
      SG_BOOL("data.stratified", data.stratified),
      SG_BOOL("data.center", data.center),

      Key{"model.hidden",
          [](ExperimentConfig& c, const std::string& v) {
            c.model.hidden.clear();
            for (const std::string& s : split_list(v)) c.model.hidden.push_back(to_int(s));
          },
          [](const ExperimentConfig& c) { return join(c.model.hidden); }},
      Key{"model.activation",
          [](ExperimentConfig& c, const std::string& v) { c.model.activation = parse_activation(v); },
          [](const ExperimentConfig& c) { return to_string(c.model.activation); }},
      SG_BOOL("model.readout_bias", model.readout_bias),
      Key{"model.init",
          [](ExperimentConfig& c, const std::string& v) { c.model.init.scheme = parse_init(v); },
          [](const ExperimentConfig& c) { return init_name(c.model.init.scheme); }},
      SG_DOUBLE("model.init_std", model.init.std),

      SG_INT("train.epochs", train.epochs),
      SG_INT("train.batch_size", train.batch_size),
      SG_DOUBLE("train.lr", train.lr),
      SG_DOUBLE("train.momentum", train.momentum),
      SG_DOUBLE("train.weight_decay", train.weight_decay),
      Key{"train.track",
          [](ExperimentConfig& c, const std::string& v) {
            c.train.track_samples.clear();
            for (const std::string& s : split_list(v)) c.train.track_samples.push_back(to_int(s));
          },
          [](const ExperimentConfig& c) { return join(c.train.track_samples); }},
      SG_BOOL("train.log_sigma2", train.log_sigma2),

      Key{"reg.mode", [](ExperimentConfig& c, const std::string& v) { c.train.reg.mode = parse_reg_mode(v); },
          [](const ExperimentConfig& c) { return to_string(c.train.reg.mode); }},
      SG_DOUBLE("reg.gamma", train.reg.gamma),
      SG_INT("reg.burn_in", train.reg.burn_in_epoch),
      SG_INT("reg.refresh_period", train.reg.refresh_period),
      SG_INT("reg.iters", train.reg.iters_per_refresh),

      SG_INT("attack.iterations", attack.cfg.iterations),
      SG_INT("attack.init_draws", attack.cfg.init_draws),
      SG_DOUBLE("attack.init_std", attack.cfg.init_std),
      SG_DOUBLE("attack.input_range", attack.cfg.input_range),
      SG_INT("attack.normal_probes", attack.cfg.normal_probes),
      SG_DOUBLE("attack.hemisphere_ratio", attack.cfg.hemisphere_ratio),
      SG_INT("attack.tangent_halvings", attack.cfg.tangent_halvings),
      SG_INT("attack.normal_retries", attack.cfg.normal_retries),
      SG_DOUBLE("attack.bisect_tol", attack.cfg.bisect_tol),
      SG_STRING("attack.split", attack.split),
      SG_INT("attack.samples", attack.samples),
      SG_STRING("attack.model", attack.model),
      Key{"attack.checkpoints",
          [](ExperimentConfig& c, const std::string& v) { c.attack.checkpoints = split_list(v); },
          [](const ExperimentConfig& c) { return join(c.attack.checkpoints); }},
      Key{"attack.thresholds",
          [](ExperimentConfig& c, const std::string& v) {
            c.attack.thresholds.clear();
            for (const std::string& s : split_list(v)) c.attack.thresholds.push_back(to_double(s));
          },
          [](const ExperimentConfig& c) { return join(c.attack.thresholds); }},

      SG_DOUBLE("geometry.x_min", geometry.rect.x_min),
      SG_DOUBLE("geometry.x_max", geometry.rect.x_max),
      SG_DOUBLE("geometry.y_min", geometry.rect.y_min),
      SG_DOUBLE("geometry.y_max", geometry.rect.y_max),
      SG_INT("geometry.resolution", geometry.resolution),
      SG_DOUBLE("geometry.radius", geometry.radius),
      SG_INT("geometry.samples", geometry.samples),

      SG_INT("etf.classes", etf.classes),
      SG_INT("etf.dim", etf.dim),
      SG_DOUBLE("etf.init_std", etf.init_std),
      SG_DOUBLE("etf.lr", etf.lr),
      SG_INT("etf.steps", etf.steps),
      SG_INT("etf.log_every", etf.log_every),

      SG_DOUBLE("retrain.l2", retrain.l2),
      SG_INT("retrain.max_iters", retrain.max_iters),
      SG_DOUBLE("retrain.grad_tol", retrain.grad_tol),
  };
  return table;
}

#undef SG_DOUBLE
#undef SG_INT
#undef SG_UINT
#undef SG_BOOL
#undef SG_STRING

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (seeds.empty()) fail("run.seeds: at least one seed is required");
  if (data.source != "xor" && data.source != "xor-noisy" && data.source != "mnist")
    fail("data.source: expected xor, xor-noisy or mnist, got '" + data.source + "'");
  if (data.points_per_cluster < 1) fail("data.points_per_cluster: must be >= 1");
  if (data.noise_std < 0.0) fail("data.noise_std: must be >= 0");
  if (data.train_size < 0) fail("data.train_size: must be >= 0");
  for (Index h : model.hidden)
    if (h < 1) fail("model.hidden: widths must be >= 1");
  if (!(model.init.std > 0.0)) fail("model.init_std: must be > 0");
  if (attack.split != "train" && attack.split != "test")
    fail("attack.split: expected train or test, got '" + attack.split + "'");
  if (attack.samples < 0) fail("attack.samples: must be >= 0");
  if (geometry.resolution < 1) fail("geometry.resolution: must be >= 1");
  if (!(geometry.rect.x_max > geometry.rect.x_min) || !(geometry.rect.y_max > geometry.rect.y_min))
    fail("geometry: empty rectangle");
  if (geometry.radius < 0.0) fail("geometry.radius: must be >= 0");
  if (etf.classes < 2 || etf.dim < etf.classes - 1) fail("etf: need classes >= 2 and dim >= classes - 1");
  if (etf.steps < 0 || etf.log_every < 1) fail("etf: steps >= 0 and log_every >= 1 required");
  if (!(retrain.l2 >= 0.0)) fail("retrain.l2: must be >= 0");
  for (const std::string& p : attack.checkpoints)
    if (!std::filesystem::exists(p)) fail("attack.checkpoints: no such file '" + p + "'");
  try {
    train.validate();
    attack.cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_burn_in_percent = false;
  double burn_in_percent = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'section.key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    // A trailing '%' on reg.burn_in means a share of train.epochs.
    if (key == "reg.burn_in" && !value.empty() && value.back() == '%') {
      try {
        burn_in_percent = to_double(trim(std::string_view(value).substr(0, value.size() - 1)));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + key + ": " + e.what());
      }
      have_burn_in_percent = true;
      continue;
    }
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    }
    if (key == "reg.burn_in") have_burn_in_percent = false;
  }
  if (have_burn_in_percent) {
    cfg.train.reg.burn_in_epoch =
        static_cast<int>(std::lround(cfg.train.epochs * burn_in_percent / 100.0));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.get(cfg));
  return out;
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace specguard::cli
