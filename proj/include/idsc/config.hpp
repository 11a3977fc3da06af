#pragma once

#include <map>
#include <string>

#include "idsc/model.hpp"
#include "idsc/optim.hpp"
#include "idsc/split.hpp"

namespace idsc {

// Every knob of a run, addressable by flat dotted key. The optimizer's step
// budget doubles as train.steps; train.steps = 0 means initialize only.
struct RunConfig {
  ModelConfig model;
  AdamWConfig optim;
  int train_batch = 4;
  uint64_t data_seed = 42;
  int data_scenes = 16;
  int data_test_scenes = 4;
  float eval_depth_cap = 10.0f;
  SplitSpec split;

  void validate() const;  // ConfigError on any out-of-contract value
};

// `key = value` per line, '#' starts a comment, blank lines ignored.
// ConfigError names the line for malformed or duplicated entries.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

// Applies entries onto cfg. Unknown keys and unparsable values raise
// ConfigError naming the key.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Every knob as `key = value`, one per line, in registry order. This is the
// run-log echo; each configurable value appears exactly once.
std::string config_echo(const RunConfig& cfg);

}  // namespace idsc
