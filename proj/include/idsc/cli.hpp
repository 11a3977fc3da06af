#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "idsc/checkpoint.hpp"
#include "idsc/config.hpp"
#include "idsc/metrics.hpp"

namespace idsc {

// Command implementations behind the executable. Each returns a process
// exit code (0 success, 4 gradcheck failure); everything else is reported
// by throwing, which the binary maps via exit_code_for.
//   1  usage or configuration
//   2  data, format, parse, domain, shape, contract
//   3  numeric
int exit_code_for(const std::exception& e);

// Relative paths nest under $IDSC_OUT_DIR when it is set.
std::string resolve_out_path(const std::string& path);

struct TrainOutcome {
  std::vector<double> losses;  // one entry per optimization step
  DepthEvalReport depth;       // aggregate over held-out scenes (depth output)
  NormalEvalReport normals;    // aggregate (normals output)
  NamedTensors state;          // final parameters
};

// Shared train-then-evaluate path behind cmd_train, cmd_ablate, and the
// acceptance suite: synthesizes data.scenes + data.test_scenes scenes,
// trains train.steps steps on the first group, evaluates on the second.
// csv, when given, receives the "step,lr,loss" log.
TrainOutcome train_and_eval(const RunConfig& cfg, std::ostream* csv);

int cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

int cmd_eval_pairs(const std::vector<std::string>& pred_paths,
                   const std::vector<std::string>& gt_paths, float depth_cap, std::ostream& log);
int cmd_eval_checkpoint(const RunConfig& cfg, const std::string& ckpt_path, std::ostream& log);

enum class AblateMode { kSingle, kFlagGrid, kIdrSweep };
int cmd_ablate(const RunConfig& cfg, AblateMode mode, const std::vector<int>& idr_sweep,
               const std::string& out_dir, std::ostream& log);

int cmd_gradcheck(const std::string& which, uint32_t seed, double tolerance, bool corrupt,
                  std::ostream& log);

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

int cmd_split(const RunConfig& cfg, const std::string& poses_path,
              const std::vector<std::string>& test_scenes, const std::string& out_dir,
              std::ostream& log);

}  // namespace idsc
