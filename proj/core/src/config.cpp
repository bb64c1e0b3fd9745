// Copyright 2026 The nullwm Authors
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


#include "nullwm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"

namespace nullwm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v) {
  const auto u = to_uint(v);
  if (u > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    throw ConfigError("value '" + v + "' is too large");
  }
  return static_cast<int>(u);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(s));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"learning_rate",
       {[](RunConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); },
        [](const RunConfig& c) { return num(c.train.learning_rate); }}},
      {"decay",
       {[](RunConfig& c, const std::string& v) { c.train.decay = to_double(v); },
        [](const RunConfig& c) { return num(c.train.decay); }}},
      {"optimizer",
       {[](RunConfig& c, const std::string& v) { c.train.optimizer = optimizer_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.train.optimizer)); }}},
      {"momentum",
       {[](RunConfig& c, const std::string& v) { c.train.momentum = to_double(v); },
        [](const RunConfig& c) { return num(c.train.momentum); }}},
      {"batch_size",
       {[](RunConfig& c, const std::string& v) { c.train.batch_size = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); }}},
      {"max_epochs",
       {[](RunConfig& c, const std::string& v) { c.train.max_epochs = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.train.max_epochs); }}},
      {"injection_ratio",
       {[](RunConfig& c, const std::string& v) { c.train.injection_ratio = to_double(v); },
        [](const RunConfig& c) { return num(c.train.injection_ratio); }}},
      {"seed",
       {[](RunConfig& c, const std::string& v) { c.train.seed = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      {"clip_norm",
       {[](RunConfig& c, const std::string& v) { c.train.clip_norm = to_double(v); },
        [](const RunConfig& c) { return num(c.train.clip_norm); }}},
      {"trainable_layers",
       {[](RunConfig& c, const std::string& v) { c.train.trainable_layers = split_list(v); },
        [](const RunConfig& c) { return join(c.train.trainable_layers); }}},
      {"eval_samples",
       {[](RunConfig& c, const std::string& v) { c.train.eval_samples = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.train.eval_samples); }}},
      {"patience",
       {[](RunConfig& c, const std::string& v) { c.train.patience = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.train.patience); }}},
      {"min_delta",
       {[](RunConfig& c, const std::string& v) { c.train.min_delta = to_double(v); },
        [](const RunConfig& c) { return num(c.train.min_delta); }}},
      {"block_size",
       {[](RunConfig& c, const std::string& v) { c.block_size = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.block_size); }}},
      {"extreme_value",
       {[](RunConfig& c, const std::string& v) { c.extreme_value = to_double(v); },
        [](const RunConfig& c) { return num(c.extreme_value); }}},
      {"verify_samples",
       {[](RunConfig& c, const std::string& v) { c.verify_samples = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.verify_samples); }}},
      {"threshold",
       {[](RunConfig& c, const std::string& v) { c.threshold = to_double(v); },
        [](const RunConfig& c) { return num(c.threshold); }}},
      {"train_limit",
       {[](RunConfig& c, const std::string& v) { c.train_limit = to_uint(v); },
        [](const RunConfig& c) {
          return c.train_limit ? std::to_string(*c.train_limit) : std::string();
        }}},
      {"test_limit",
       {[](RunConfig& c, const std::string& v) { c.test_limit = to_uint(v); },
        [](const RunConfig& c) {
          return c.test_limit ? std::to_string(*c.test_limit) : std::string();
        }}},
      {"attack_epochs",
       {[](RunConfig& c, const std::string& v) { c.attack.attack_epochs = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.attack_epochs); }}},
      {"attacker_samples",
       {[](RunConfig& c, const std::string& v) { c.attack.attacker_samples = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.attacker_samples); }}},
      {"attack_learning_rate",
       {[](RunConfig& c, const std::string& v) { c.attack.recipe.learning_rate = to_double(v); },
        [](const RunConfig& c) {
          return c.attack.recipe.learning_rate ? num(*c.attack.recipe.learning_rate)
                                               : std::string();
        }}},
      {"attack_optimizer",
       {[](RunConfig& c, const std::string& v) {
          c.attack.recipe.optimizer = optimizer_from_string(v);
        },
        [](const RunConfig& c) { return std::string(to_string(c.attack.recipe.optimizer)); }}},
      {"attack_clip_norm",
       {[](RunConfig& c, const std::string& v) { c.attack.recipe.clip_norm = to_double(v); },
        [](const RunConfig& c) { return num(c.attack.recipe.clip_norm); }}},
      {"prune_ratios",
       {[](RunConfig& c, const std::string& v) { c.attack.prune_ratios = to_doubles(v); },
        [](const RunConfig& c) { return join(c.attack.prune_ratios); }}},
      {"fineprune_ratios",
       {[](RunConfig& c, const std::string& v) { c.attack.fineprune_ratios = to_doubles(v); },
        [](const RunConfig& c) { return join(c.attack.fineprune_ratios); }}},
      {"fineprune_epochs",
       {[](RunConfig& c, const std::string& v) { c.attack.fineprune_epochs = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.fineprune_epochs); }}},
      {"calibration_samples",
       {[](RunConfig& c, const std::string& v) { c.attack.calibration_samples = to_uint(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.calibration_samples); }}},
      {"transfer_scope",
       {[](RunConfig& c, const std::string& v) { c.attack.transfer_scope = v; },
        [](const RunConfig& c) { return c.attack.transfer_scope; }}},
      {"transfer_epochs",
       {[](RunConfig& c, const std::string& v) { c.attack.transfer_epochs = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.transfer_epochs); }}},
      {"recover_epochs",
       {[](RunConfig& c, const std::string& v) { c.attack.recover_epochs = to_int(v); },
        [](const RunConfig& c) { return std::to_string(c.attack.recover_epochs); }}},
      {"student_dataset",
       {[](RunConfig& c, const std::string& v) { c.attack.student_dataset = v; },
        [](const RunConfig& c) { return c.attack.student_dataset; }}},
  };
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

void set_config_value(RunConfig& config, const std::string& key,
                      const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError(key + ": unknown key");
  try {
    it->second.set(config, value);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    // optimizer_from_string already names its field.
    if (what.rfind(key + ":", 0) == 0) throw;
    throw ConfigError(key + ": " + what);
  }
}

void validate(const RunConfig& config) {
  std::vector<std::string> problems;
  try {
    config.train.validate();
  } catch (const ConfigError& e) {
    std::stringstream ss(e.what());
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) problems.push_back(trim(line));
  }
  if (config.block_size < 1 || config.block_size > 8) {
    problems.push_back("block_size: must be in [1, 8]");
  }
  if (!(config.extreme_value > 0.0)) problems.push_back("extreme_value: must be > 0");
  if (config.verify_samples == 0) problems.push_back("verify_samples: must be > 0");
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    problems.push_back("threshold: must be in [0, 1]");
  }
  if (config.attack.attack_epochs < 0) problems.push_back("attack_epochs: must be >= 0");
  if (config.attack.attacker_samples == 0) {
    problems.push_back("attacker_samples: must be > 0");
  }
  if (config.attack.recipe.learning_rate && !(*config.attack.recipe.learning_rate > 0.0)) {
    problems.push_back("attack_learning_rate: must be > 0");
  }
  if (!(config.attack.recipe.clip_norm >= 0.0)) {
    problems.push_back("attack_clip_norm: must be >= 0");
  }
  for (double r : config.attack.prune_ratios) {
    if (!(r >= 0.0 && r <= 1.0)) {
      problems.push_back("prune_ratios: " + num(r) + " is outside [0, 1]");
    }
  }
  for (double r : config.attack.fineprune_ratios) {
    if (!(r >= 0.0 && r <= 1.0)) {
      problems.push_back("fineprune_ratios: " + num(r) + " is outside [0, 1]");
    }
  }
  if (config.attack.fineprune_epochs < 0) {
    problems.push_back("fineprune_epochs: must be >= 0");
  }
  if (config.attack.calibration_samples == 0) {
    problems.push_back("calibration_samples: must be > 0");
  }
  const auto& scope = config.attack.transfer_scope;
  if (scope != "added_layer" && scope != "last_two" && scope != "all_dense" &&
      scope != "all") {
    problems.push_back("transfer_scope: must be added_layer, last_two, all_dense or all");
  }
  if (config.attack.transfer_epochs < 0) problems.push_back("transfer_epochs: must be >= 0");
  if (config.attack.recover_epochs < 0) problems.push_back("recover_epochs: must be >= 0");
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::vector<std::string> problems;
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) {
      problems.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      set_config_value(config, key, value);
    } catch (const ConfigError& e) {
      problems.push_back(where + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    const std::string v = field.get(config);
    if (v.empty()) continue;
    out += key + " = " + v + "\n";
  }
  return out;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, field] : fields()) {
    const std::string v = field.get(config);
    if (!v.empty()) j[key] = v;
  }
  return j;
}

}  // namespace nullwm
