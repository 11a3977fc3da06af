#include "idsc/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <utility>

#include "idsc/errors.hpp"
#include "idsc/gradcheck.hpp"
#include "idsc/raster.hpp"
#include "idsc/split.hpp"
#include "idsc/synth.hpp"

namespace idsc {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

std::string scene_stem(const std::string& dir, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", index);
  return dir + "/" + buf;
}

struct Dataset {
  std::vector<TrainSample> train;
  std::vector<TrainSample> test;
};

Dataset make_dataset(const RunConfig& cfg) {
  const int total = cfg.data_scenes + cfg.data_test_scenes;
  std::vector<SyntheticScene> scenes =
      gen_synthetic(cfg.data_seed, total, cfg.model.height, cfg.model.width,
                    cfg.model.depth_min, cfg.model.depth_max);
  const bool normals = cfg.model.output == "normals";
  Dataset ds;
  for (int i = 0; i < total; ++i) {
    TrainSample s;
    s.image = std::move(scenes[i].image);
    s.target = normals ? std::move(scenes[i].normals) : std::move(scenes[i].depth);
    s.mask = std::move(scenes[i].mask);
    (i < cfg.data_scenes ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

EvalMask eval_mask_for(const RunConfig& cfg) {
  EvalMask m;
  m.depth_cap = cfg.eval_depth_cap;
  return m;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 2;
}

std::string resolve_out_path(const std::string& path) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  const char* root = std::getenv("IDSC_OUT_DIR");
  if (root == nullptr || *root == '\0') return path;
  return (std::filesystem::path(root) / path).string();
}

TrainOutcome train_and_eval(const RunConfig& cfg, std::ostream* csv) {
  cfg.validate();
  Dataset ds = make_dataset(cfg);
  const bool normals = cfg.model.output == "normals";

  Model model(cfg.model);
  if (cfg.model.head == "isd" && !normals) {
    model.set_output_scale(median_valid_depth(ds.train));
  }

  TrainOutcome out;
  if (csv) *csv << "step,lr,loss\n";
  if (cfg.optim.total_steps > 0) {
    Trainer trainer(model, cfg.optim);
    for (int step = 0; step < cfg.optim.total_steps; ++step) {
      std::vector<TrainSample> batch;
      batch.reserve(cfg.train_batch);
      for (int j = 0; j < cfg.train_batch; ++j) {
        batch.push_back(ds.train[(static_cast<size_t>(step) * cfg.train_batch + j) %
                                 ds.train.size()]);
      }
      TrainStepResult r = trainer.step(batch);
      out.losses.push_back(r.loss);
      if (csv) *csv << step << ',' << fmt6(r.lr) << ',' << fmt6(r.loss) << '\n';
    }
  }

  const EvalMask mask = eval_mask_for(cfg);
  std::vector<DepthEvalReport> dreps;
  std::vector<NormalEvalReport> nreps;
  for (const TrainSample& s : ds.test) {
    Tensor pred = model.predict(s.image);
    if (normals) {
      nreps.push_back(normal_metrics(pred, s.target, mask));
    } else {
      dreps.push_back(depth_metrics(pred, s.target, mask));
    }
  }
  if (normals) {
    out.normals = aggregate(nreps);
  } else {
    out.depth = aggregate(dreps);
  }
  out.state = model.state();
  return out;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv = open_out(out_dir + "/loss.csv");
  TrainOutcome out = train_and_eval(cfg, &csv);
  write_checkpoint(out.state, out_dir + "/model.ckpt");
  log << "# trained " << out.losses.size() << " steps, evaluated on " << cfg.data_test_scenes
      << " held-out scenes\n";
  log << (cfg.model.output == "normals" ? kv_record(out.normals) : kv_record(out.depth));
  return 0;
}

int cmd_eval_pairs(const std::vector<std::string>& pred_paths,
                   const std::vector<std::string>& gt_paths, float depth_cap,
                   std::ostream& log) {
  if (pred_paths.empty() || pred_paths.size() != gt_paths.size()) {
    throw UsageError("eval: each --pred needs a matching --gt");
  }
  EvalMask mask;
  mask.depth_cap = depth_cap;
  std::vector<DepthEvalReport> dreps;
  std::vector<NormalEvalReport> nreps;
  for (size_t i = 0; i < pred_paths.size(); ++i) {
    Tensor pred = read_raster(pred_paths[i]);
    Tensor gt = read_raster(gt_paths[i]);
    if (!pred.same_shape(gt)) {
      throw DataError("eval: dimension mismatch between '" + pred_paths[i] + "' " +
                      shape_str(pred.shape()) + " and '" + gt_paths[i] + "' " +
                      shape_str(gt.shape()));
    }
    log << "# pair " << pred_paths[i] << " vs " << gt_paths[i] << '\n';
    if (pred.rank() == 3 && pred.dim(0) == 3) {
      nreps.push_back(normal_metrics(pred, gt, EvalMask{}));
      log << kv_record(nreps.back());
    } else {
      dreps.push_back(depth_metrics(pred, gt, mask));
      log << kv_record(dreps.back());
    }
  }
  if (!dreps.empty() && !nreps.empty()) {
    throw DataError("eval: cannot mix depth and normal rasters in one aggregate");
  }
  log << "# aggregate\n";
  log << (nreps.empty() ? kv_record(aggregate(dreps)) : kv_record(aggregate(nreps)));
  return 0;
}

int cmd_eval_checkpoint(const RunConfig& cfg, const std::string& ckpt_path, std::ostream& log) {
  cfg.validate();
  Model model(cfg.model);
  model.load_state(read_checkpoint(ckpt_path));
  Dataset ds = make_dataset(cfg);
  const bool normals = cfg.model.output == "normals";
  const EvalMask mask = eval_mask_for(cfg);

  std::vector<DepthEvalReport> dreps;
  std::vector<NormalEvalReport> nreps;
  for (size_t i = 0; i < ds.test.size(); ++i) {
    Tensor pred = model.predict(ds.test[i].image);
    log << "# sample " << i << '\n';
    if (normals) {
      nreps.push_back(normal_metrics(pred, ds.test[i].target, mask));
      log << kv_record(nreps.back());
    } else {
      dreps.push_back(depth_metrics(pred, ds.test[i].target, mask));
      log << kv_record(dreps.back());
    }
  }
  log << "# aggregate\n";
  log << (normals ? kv_record(aggregate(nreps)) : kv_record(aggregate(dreps)));
  return 0;
}

int cmd_ablate(const RunConfig& cfg, AblateMode mode, const std::vector<int>& idr_sweep,
               const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  if (cfg.model.output != "depth") {
    throw ConfigError("ablate: the grid reports depth metrics; set model.output = depth");
  }
  std::vector<RunConfig> rows;
  switch (mode) {
    case AblateMode::kSingle:
      rows.push_back(cfg);
      break;
    case AblateMode::kFlagGrid:
      for (const char* head : {"isd", "edd"}) {
        for (bool afp : {false, true}) {
          for (bool msda : {false, true}) {
            RunConfig r = cfg;
            r.model.head = head;
            r.model.use_afp = afp;
            r.model.use_msda = msda;
            rows.push_back(std::move(r));
          }
        }
      }
      break;
    case AblateMode::kIdrSweep:
      for (int n : idr_sweep) {
        RunConfig r = cfg;
        r.model.n_idrs = n;
        rows.push_back(std::move(r));
      }
      break;
  }
  if (rows.empty()) throw UsageError("ablate: empty grid");

  std::filesystem::create_directories(out_dir);
  std::ofstream csv = open_out(out_dir + "/ablate.csv");
  const char* header = "head,use_afp,use_msda,n_idrs,d1,rms,a_rel";
  csv << header << '\n';
  log << header << '\n';
  for (const RunConfig& r : rows) {
    TrainOutcome out = train_and_eval(r, nullptr);
    const std::string line = r.model.head + "," + (r.model.use_afp ? "1" : "0") + "," +
                             (r.model.use_msda ? "1" : "0") + "," +
                             std::to_string(r.model.n_idrs) + "," + fmt6(out.depth.d1) + "," +
                             fmt6(out.depth.rms) + "," + fmt6(out.depth.a_rel);
    csv << line << '\n';
    log << line << '\n';
  }
  return 0;
}

int cmd_gradcheck(const std::string& which, uint32_t seed, double tolerance, bool corrupt,
                  std::ostream& log) {
  std::vector<GradBlockResult> results = run_gradient_blocks(which, seed, tolerance, corrupt);
  bool all_pass = true;
  for (const GradBlockResult& r : results) {
    char err[32];
    std::snprintf(err, sizeof(err), "%.3e", r.max_err);
    log << "block " << r.name << ": max rel err " << err << (r.pass ? "  [pass]" : "  [FAIL]")
        << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 4;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  std::vector<SyntheticScene> scenes =
      gen_synthetic(cfg.data_seed, cfg.data_scenes, cfg.model.height, cfg.model.width,
                    cfg.model.depth_min, cfg.model.depth_max);
  for (size_t i = 0; i < scenes.size(); ++i) {
    const std::string stem = scene_stem(out_dir, static_cast<int>(i));
    write_raster(scenes[i].image, stem + "_image.idsc");
    write_raster(scenes[i].depth, stem + "_depth.idsc");
    write_raster(scenes[i].normals, stem + "_normals.idsc");
  }
  log << "# wrote " << scenes.size() << " scenes (image, depth, normals rasters) to "
      << out_dir << '\n';
  return 0;
}

int cmd_split(const RunConfig& cfg, const std::string& poses_path,
              const std::vector<std::string>& test_scenes, const std::string& out_dir,
              std::ostream& log) {
  cfg.validate();
  std::vector<FrameRecord> records = read_pose_log(poses_path);
  ScenePartition partition;
  partition.test = test_scenes;
  SplitResult result = make_split(records, cfg.split, partition);
  std::filesystem::create_directories(out_dir);
  write_manifest(cfg.split, "train", result.train, out_dir + "/train.txt");
  write_manifest(cfg.split, "test", result.test, out_dir + "/test.txt");
  log << "# train frames: " << result.train.size() << '\n';
  log << "# test frames: " << result.test.size() << '\n';
  return 0;
}

}  // namespace idsc
