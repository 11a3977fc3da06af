#include "idsc/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config: key '" + key + "' expects " + expected + ", got '" + value + "'");
}

long long to_int(const std::string& key, const std::string& value) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (used != value.size()) bad_value(key, value, "an integer");
  return v;
}

unsigned long long to_uint(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') bad_value(key, value, "a non-negative integer");
  size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a non-negative integer");
  }
  if (used != value.size()) bad_value(key, value, "a non-negative integer");
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != value.size()) bad_value(key, value, "a number");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt(bool v) { return v ? "true" : "false"; }

struct KeyDef {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = {
      {"model.height",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.height = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.height); }},
      {"model.width",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.width = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.width); }},
      {"model.channels",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.channels = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.channels); }},
      {"model.n_idrs",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.n_idrs = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.n_idrs); }},
      {"model.head",
       [](RunConfig& c, const std::string&, const std::string& v) { c.model.head = v; },
       [](const RunConfig& c) { return c.model.head; }},
      {"model.output",
       [](RunConfig& c, const std::string&, const std::string& v) { c.model.output = v; },
       [](const RunConfig& c) { return c.model.output; }},
      {"model.use_afp",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.use_afp = to_bool(k, v);
       },
       [](const RunConfig& c) { return fmt(c.model.use_afp); }},
      {"model.use_msda",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.use_msda = to_bool(k, v);
       },
       [](const RunConfig& c) { return fmt(c.model.use_msda); }},
      {"model.depth_min",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.depth_min = static_cast<float>(to_double(k, v));
       },
       [](const RunConfig& c) { return fmt(c.model.depth_min); }},
      {"model.depth_max",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.depth_max = static_cast<float>(to_double(k, v));
       },
       [](const RunConfig& c) { return fmt(c.model.depth_max); }},
      {"model.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.seed = to_uint(k, v);
       },
       [](const RunConfig& c) { return std::to_string(c.model.seed); }},
      {"afp.iters",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.afp_iters = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.afp_iters); }},
      {"afp.scale_logits",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.afp_scale_logits = to_bool(k, v);
       },
       [](const RunConfig& c) { return fmt(c.model.afp_scale_logits); }},
      {"isd.layers",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.isd_layers = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.model.isd_layers); }},
      {"edd.temperature",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.model.edd_temperature = static_cast<float>(to_double(k, v));
       },
       [](const RunConfig& c) { return fmt(c.model.edd_temperature); }},
      {"train.steps",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.total_steps = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.optim.total_steps); }},
      {"train.batch",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train_batch = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.train_batch); }},
      {"train.lr",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.lr = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.lr); }},
      {"train.lr_final",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.lr_final = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.lr_final); }},
      {"train.beta1",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.beta1 = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.beta1); }},
      {"train.beta2",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.beta2 = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.beta2); }},
      {"train.weight_decay",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.weight_decay = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.weight_decay); }},
      {"train.warm_frac",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.warm_frac = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.warm_frac); }},
      {"train.clip_norm",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.optim.clip_norm = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.optim.clip_norm); }},
      {"data.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.data_seed = to_uint(k, v);
       },
       [](const RunConfig& c) { return std::to_string(c.data_seed); }},
      {"data.scenes",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.data_scenes = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.data_scenes); }},
      {"data.test_scenes",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.data_test_scenes = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.data_test_scenes); }},
      {"eval.depth_cap",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.eval_depth_cap = static_cast<float>(to_double(k, v));
       },
       [](const RunConfig& c) { return fmt(c.eval_depth_cap); }},
      {"split.train_thresh",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.train_thresh = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.split.train_thresh); }},
      {"split.test_thresh",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.test_thresh = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.split.test_thresh); }},
      {"split.max_occlusion",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.max_occlusion = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.split.max_occlusion); }},
      {"split.crop_width",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.crop_width = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.split.crop_width); }},
      {"split.crop_height",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.crop_height = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.split.crop_height); }},
      {"split.top_crop",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.top_crop = static_cast<int>(to_int(k, v));
       },
       [](const RunConfig& c) { return std::to_string(c.split.top_crop); }},
      {"split.depth_cap",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.depth_cap = to_double(k, v);
       },
       [](const RunConfig& c) { return fmt(c.split.depth_cap); }},
      {"split.shared_gate",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.split.shared_gate = to_bool(k, v);
       },
       [](const RunConfig& c) { return fmt(c.split.shared_gate); }},
  };
  return defs;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (optim.total_steps < 0) throw ConfigError("train.steps must be >= 0");
  if (train_batch < 1) throw ConfigError("train.batch must be positive");
  if (!(optim.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (optim.lr_final < 0.0 || optim.lr_final > optim.lr) {
    throw ConfigError("train.lr_final must lie in [0, train.lr]");
  }
  if (optim.beta1 < 0.0 || optim.beta1 >= 1.0 || optim.beta2 < 0.0 || optim.beta2 >= 1.0) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (optim.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (optim.warm_frac < 0.0 || optim.warm_frac > 1.0) {
    throw ConfigError("train.warm_frac must lie in [0, 1]");
  }
  if (data_scenes < 1) throw ConfigError("data.scenes must be positive");
  if (data_test_scenes < 1) throw ConfigError("data.test_scenes must be positive");
  if (!(eval_depth_cap > 0.0f)) throw ConfigError("eval.depth_cap must be positive");
  if (!(split.train_thresh > 0.0) || !(split.test_thresh > 0.0)) {
    throw ConfigError("split thresholds must be positive");
  }
  if (split.test_thresh < split.train_thresh) {
    throw ConfigError("split.test_thresh must be >= split.train_thresh");
  }
  if (split.max_occlusion < 0.0 || split.max_occlusion > 1.0) {
    throw ConfigError("split.max_occlusion must lie in [0, 1]");
  }
  if (split.crop_width < 1 || split.crop_height < 1 || split.top_crop < 0) {
    throw ConfigError("split crop sizes must be positive and split.top_crop >= 0");
  }
  if (!(split.depth_cap > 0.0)) throw ConfigError("split.depth_cap must be positive");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "'");
    }
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const KeyDef& def : registry()) {
    if (key == def.key) {
      def.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) apply_config_entry(cfg, key, value);
}

std::string config_echo(const RunConfig& cfg) {
  std::string out;
  for (const KeyDef& def : registry()) {
    out += def.key;
    out += " = ";
    out += def.get(cfg);
    out += "\n";
  }
  return out;
}

}  // namespace idsc
