// End-to-end acceptance gate: one pass/fail line per criterion, exit 4 on any
// failure. Each criterion is independent; an exception inside one is reported
// as its failure and the rest still run.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "idsc/afp.hpp"
#include "idsc/checkpoint.hpp"
#include "idsc/cli.hpp"
#include "idsc/config.hpp"
#include "idsc/gradcheck.hpp"
#include "idsc/isd.hpp"
#include "idsc/metrics.hpp"
#include "idsc/model.hpp"
#include "idsc/ops.hpp"
#include "idsc/raster.hpp"
#include "idsc/rng.hpp"
#include "idsc/split.hpp"
#include "idsc/synth.hpp"

using namespace idsc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      if (!detail.str().empty()) detail << "; ";
      detail << what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Tensor affine_val(const Tensor& x, const Affine& a) {
  Tensor y = ops::matmul(x, a.w);
  for (int64_t r = 0; r < y.dim(0); ++r) {
    for (int64_t c = 0; c < y.dim(1); ++c) y.at2(r, c) += a.b[c];
  }
  return y;
}

Tensor tilted_normals(int h, int w, const std::vector<double>& deg_per_pixel) {
  Tensor out({3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = deg_per_pixel[static_cast<size_t>(y * w + x)] * M_PI / 180.0;
      out.at3(0, y, x) = static_cast<float>(std::sin(a));
      out.at3(1, y, x) = 0.0f;
      out.at3(2, y, x) = static_cast<float>(std::cos(a));
    }
  }
  return out;
}

Tensor selector(int in, const std::vector<int>& rows, float gain = 1.0f) {
  Tensor w({in, static_cast<int>(rows.size())});
  for (size_t j = 0; j < rows.size(); ++j) w.at2(rows[j], static_cast<int>(j)) = gain;
  return w;
}

IsdLayerParams selector_layer(int c, float inv_temp, Rng& rng) {
  IsdLayerParams p;
  std::vector<int> repr(static_cast<size_t>(c - 1));
  for (int i = 0; i < c - 1; ++i) repr[static_cast<size_t>(i)] = i;
  p.q.w = selector(c, repr, inv_temp);
  p.q.b = Tensor({c - 1});
  p.k.w = selector(c, repr);
  p.v.w = selector(c, {c - 1});
  p.v.b = Tensor({1});
  p.ffn = ResidFfn::init(1, rng);
  return p;
}

std::vector<TrainSample> depth_samples(uint64_t seed, int count, int h, int w) {
  std::vector<TrainSample> out;
  for (SyntheticScene& s : gen_synthetic(seed, count, h, w, 1.0f, 10.0f)) {
    TrainSample ts;
    ts.image = std::move(s.image);
    ts.target = std::move(s.depth);
    ts.mask = std::move(s.mask);
    out.push_back(std::move(ts));
  }
  return out;
}

// Round-robin training matching the CLI loop, stopping early once the loss
// crosses `bound` (negative bound disables the early stop).
struct ToyRun {
  std::vector<float> losses;
  int steps = 0;
};

// stop_frac > 0 ends the run once the loss drops below that fraction of the
// step-0 value; 0 disables the early exit.
ToyRun train_toy(const ModelConfig& mc, const AdamWConfig& oc,
                 const std::vector<TrainSample>& train, int batch, int max_steps,
                 double stop_frac) {
  Model model(mc);
  model.set_output_scale(median_valid_depth(train));
  Trainer trainer(model, oc);
  ToyRun run;
  for (int step = 0; step < max_steps; ++step) {
    std::vector<TrainSample> b;
    b.reserve(batch);
    for (int j = 0; j < batch; ++j) {
      b.push_back(train[(static_cast<size_t>(step) * batch + j) % train.size()]);
    }
    run.losses.push_back(trainer.step(b).loss);
    run.steps = step + 1;
    if (stop_frac > 0.0 && run.losses.back() < stop_frac * run.losses.front()) break;
  }
  return run;
}

bool finite_csv_metrics(const std::string& path, size_t expect_rows, std::string* why) {
  std::ifstream in(path);
  if (!in) {
    *why = "missing " + path;
    return false;
  }
  std::string line;
  std::getline(in, line);  // header
  size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= 4 && !std::isfinite(std::stod(cell))) {
        *why = "non-finite cell in row " + std::to_string(rows);
        return false;
      }
      ++col;
    }
  }
  if (rows != expect_rows) {
    *why = "expected " + std::to_string(expect_rows) + " rows, found " + std::to_string(rows);
    return false;
  }
  return true;
}

using CriterionFn = std::function<void(Check&)>;

// 1. Analytic vs central-difference gradients on the miniature blocks.
void criterion_gradients(Check& c) {
  const auto t0 = Clock::now();
  const std::vector<GradBlockResult> rs = run_gradient_blocks("all", 1234, 2e-3, false);
  const double secs = seconds_since(t0);
  c.expect(rs.size() == 4, "expected 4 blocks");
  for (const GradBlockResult& r : rs) {
    c.expect(r.pass, r.name + " max rel err " + fmt(r.max_err));
    c.detail << r.name << "=" << fmt(r.max_err) << " ";
  }
  c.expect(secs < 120.0, "runtime " + fmt(secs) + " s over 120 s budget");
  c.detail << "in " << fmt(secs) << " s";
}

// 2. Partition rows are stochastic; sharper logits mean lower row entropy.
void criterion_partitions(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(4202);
  double worst_row_gap = 0.0;
  int64_t entropy_rows = 0;
  for (int inst = 0; inst < 1000 && c.pass; ++inst) {
    const int m = rng.uniform_int(2, 24);
    const int n = rng.uniform_int(2, 6);
    const int ch = rng.uniform_int(2, 10);
    AfpParams p = AfpParams::init(n, ch, rng);
    Tensor f = rng.normal_tensor({m, ch}, 1.0);
    const AfpEval ev = afp_run_eval(f, p, rng.uniform_int(1, 3), 1, rng.uniform() < 0.5);
    for (int64_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += ev.w.at2(i, j);
      worst_row_gap = std::max(worst_row_gap, std::abs(sum - 1.0));
      if (std::abs(sum - 1.0) > 1e-5) {
        c.expect(false, "row sum off by " + fmt(std::abs(sum - 1.0)) + " at instance " +
                            std::to_string(inst));
        break;
      }
    }

    // Entropy sweep in 64-bit arithmetic: strictness is an exact-real-number
    // property, and 32-bit entropies of adjacent scales can round to a tie on
    // rows with a small logit spread.
    const Tensor logits =
        ops::matmul(affine_val(f, p.k), ops::transpose2d(affine_val(p.h_prior, p.q)));
    const double scales[4] = {0.5, 1.0, 2.0, 4.0};
    auto row_entropy = [&](int64_t i, double s) {
      double hi = -1e300;
      for (int j = 0; j < n; ++j) hi = std::max(hi, s * logits.at2(i, j));
      double z = 0.0;
      for (int j = 0; j < n; ++j) z += std::exp(s * logits.at2(i, j) - hi);
      double ent = 0.0;
      for (int j = 0; j < n; ++j) {
        const double prob = std::exp(s * logits.at2(i, j) - hi) / z;
        if (prob > 0.0) ent -= prob * std::log(prob);
      }
      return ent;
    };
    for (int64_t i = 0; i < m; ++i) {
      float lo = logits.at2(i, 0), hi = logits.at2(i, 0);
      for (int j = 1; j < n; ++j) {
        lo = std::min(lo, logits.at2(i, j));
        hi = std::max(hi, logits.at2(i, j));
      }
      if (hi - lo < 1e-3f) continue;  // constant row: entropy stays at log n
      ++entropy_rows;
      for (int s = 1; s < 4; ++s) {
        if (!(row_entropy(i, scales[s]) < row_entropy(i, scales[s - 1]))) {
          c.expect(false, "entropy not strictly decreasing at instance " +
                              std::to_string(inst) + " row " + std::to_string(i));
          break;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(entropy_rows > 5000, "too few non-constant rows exercised");
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s over 30 s budget");
  c.detail << "worst row-sum gap " << fmt(worst_row_gap) << ", " << entropy_rows
           << " rows swept, in " << fmt(secs) << " s";
}

// 3. The selector-configured decode layer reproduces the explicit head.
void criterion_degenerate(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(97);
  double worst = 0.0;
  for (int inst = 0; inst < 100 && c.pass; ++inst) {
    const int m = rng.uniform_int(2, 20);
    const int n = rng.uniform_int(1, 6);
    const int ch = rng.uniform_int(2, 8);
    const float temp = inst % 2 == 0 ? 1.0f : static_cast<float>(rng.uniform(0.25, 4.0));

    Tensor pv = rng.normal_tensor({m, ch}, 1.0);
    EddHead head = EddHead::init(n, ch, rng);
    head.r_repr = rng.normal_tensor({n, ch - 1}, 1.0);
    Tensor stacked({n, ch});
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < ch - 1; ++k) stacked.at2(j, k) = head.r_repr.at2(j, k);
      stacked.at2(j, ch - 1) = head.v.at2(j, 0);
    }

    Graph g;
    Var p = g.input(pv);
    Var edd = edd_head(g, p, bind_params(g, head, "edd"), temp);
    IsdLayerParams lp = selector_layer(ch, 1.0f / temp, rng);
    Var isd = isd_layer(g, p, g.input(stacked), g.input(Tensor({m, 1})),
                        bind_params(g, lp, "isd"));
    const Tensor& a = g.value(edd);
    const Tensor& b = g.value(isd);
    c.expect(a.same_shape(b), "shape mismatch at instance " + std::to_string(inst));
    for (int64_t i = 0; i < a.numel() && c.pass; ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(a[i] - b[i])));
      if (std::abs(a[i] - b[i]) >= 1e-6f) {
        c.expect(false, "divergence " + fmt(std::abs(a[i] - b[i])) + " at instance " +
                            std::to_string(inst));
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt(secs) + " s over 10 s budget");
  c.detail << "100 instances, worst |isd - edd| " << fmt(worst) << ", in " << fmt(secs) << " s";
}

// 4. Closed forms of the scale-invariant log loss and metric.
void criterion_si_log_forms(Check& c) {
  Rng rng(4404);
  const Tensor gt = rng.uniform_tensor({6, 7}, 0.5, 9.0);
  c.expect(si_log_loss(gt, gt, EvalMask{}) == 0.0f, "loss at pred == gt not exactly zero");

  Tensor doubled = gt;
  for (int64_t i = 0; i < doubled.numel(); ++i) doubled[i] *= 2.0f;
  const double expected = 10.0 * std::sqrt(0.15) * std::log(2.0);
  const double got = si_log_loss(doubled, gt, EvalMask{});
  c.expect(std::abs(got - expected) < 1e-4,
           "doubling gave " + fmt(got) + ", expected " + fmt(expected));

  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    Tensor g0 = rng.uniform_tensor({5, 5}, 0.3, 9.0);
    Tensor pred = rng.uniform_tensor({5, 5}, 0.3, 9.0);
    Tensor scaled = pred;
    const float s = static_cast<float>(rng.uniform(0.1, 10.0));
    for (int64_t i = 0; i < scaled.numel(); ++i) scaled[i] *= s;
    const DepthEvalReport a = depth_metrics(pred, g0, EvalMask{});
    const DepthEvalReport b = depth_metrics(scaled, g0, EvalMask{});
    const double rel = std::abs(a.si_log - b.si_log) / std::max(std::abs(a.si_log), 1e-12);
    worst = std::max(worst, rel);
  }
  c.expect(worst < 1e-4, "metric drift " + fmt(worst) + " under uniform scaling");
  c.detail << "doubling |err| " << fmt(std::abs(got - expected)) << ", scale drift " << fmt(worst);
}

// 5. Depth and normal metric hand oracles plus delta monotonicity.
void criterion_metric_suite(Check& c) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)); };

  Rng rng(4505);
  const Tensor gt = rng.uniform_tensor({4, 7}, 1.0, 8.0);
  const DepthEvalReport perfect = depth_metrics(gt, gt, EvalMask{});
  c.expect(perfect.rms == 0.0 && perfect.a_rel == 0.0 && perfect.si_log == 0.0 &&
               perfect.d05 == 1.0 && perfect.d3 == 1.0,
           "perfect prediction oracle");

  Tensor scaled = gt;
  for (int64_t i = 0; i < scaled.numel(); ++i) scaled[i] *= 1.3f;
  const DepthEvalReport r13 = depth_metrics(scaled, gt, EvalMask{});
  c.expect(close(r13.a_rel, 0.3) && close(r13.rms_log, std::log(1.3)) &&
               close(r13.log10, std::log10(1.3)) && r13.d05 == 0.0 && r13.d1 == 0.0 &&
               r13.d2 == 1.0 && r13.d3 == 1.0 && r13.si_log < 1e-4,
           "uniform 1.3x oracle");

  const DepthEvalReport two =
      depth_metrics(Tensor({1, 2}, {2.0f, 4.0f}), Tensor({1, 2}, {1.0f, 4.0f}), EvalMask{});
  c.expect(close(two.rms, std::sqrt(0.5)) && close(two.a_rel, 0.5) && close(two.s_rel, 0.5) &&
               two.d05 == 0.5 && two.d1 == 0.5 && two.d2 == 0.5 && two.d3 == 0.5 &&
               close(two.rms_log, std::log(2.0) / std::sqrt(2.0)) &&
               close(two.log10, std::log10(2.0) / 2.0) &&
               close(two.si_log, 50.0 * std::log(2.0)) && two.n_valid == 2,
           "two-pixel oracle");

  const Tensor flat = tilted_normals(2, 4, std::vector<double>(8, 0.0));
  const NormalEvalReport same = normal_metrics(flat, flat, EvalMask{});
  c.expect(same.mean_deg == 0.0 && same.in_11_5 == 1.0, "identical normals oracle");
  std::vector<double> split_deg(8);
  for (int i = 0; i < 8; ++i) split_deg[static_cast<size_t>(i)] = i < 4 ? 10.0 : 25.0;
  const NormalEvalReport mixed = normal_metrics(tilted_normals(2, 4, split_deg), flat, EvalMask{});
  c.expect(close(mixed.mean_deg, 17.5) && close(mixed.median_deg, 10.0) &&
               close(mixed.rms_deg, std::sqrt((100.0 + 625.0) / 2.0)) && mixed.in_11_5 == 0.5 &&
               mixed.in_22_5 == 0.5 && mixed.in_30 == 1.0,
           "tilted normals oracle");

  int violations = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    Tensor g0 = rng.uniform_tensor({4, 4}, 0.2, 9.0);
    Tensor pred = rng.uniform_tensor({4, 4}, 0.2, 9.0);
    const DepthEvalReport r = depth_metrics(pred, g0, EvalMask{});
    if (!(r.d05 <= r.d1 && r.d1 <= r.d2 && r.d2 <= r.d3)) ++violations;
  }
  c.expect(violations == 0, std::to_string(violations) + " delta monotonicity violations");
  c.detail << "hand oracles within 1e-6, delta chain monotone on 1000 instances";
}

// 6. The default toy model trains to well below its initial loss; a single
// representation cannot keep up.
void criterion_trainability(Check& c) {
  const auto t0 = Clock::now();
  const RunConfig defaults;
  const std::vector<TrainSample> all =
      depth_samples(defaults.data_seed, defaults.data_scenes, defaults.model.height,
                    defaults.model.width);

  ModelConfig mc = defaults.model;  // 48x64, C=32, N=8, 2 afp iters, 2 isd layers
  ToyRun n8 = train_toy(mc, defaults.optim, all, defaults.train_batch,
                        defaults.optim.total_steps, 0.05);
  const double bound = 0.05 * n8.losses.front();
  const bool crossed = n8.losses.back() < bound;
  const double n8_secs = seconds_since(t0);
  c.expect(crossed, "loss never fell below 5% of step 0 (last " + fmt(n8.losses.back()) +
                        " vs bound " + fmt(bound) + " after " + std::to_string(n8.steps) +
                        " steps)");
  c.expect(n8_secs < 900.0, "runtime " + fmt(n8_secs) + " s over 900 s budget");

  ModelConfig m1 = mc;
  m1.n_idrs = 1;
  ToyRun n1 = train_toy(m1, defaults.optim, all, defaults.train_batch, n8.steps, 0.0);
  c.expect(n8.losses.back() < n1.losses.back(),
           "N=8 final " + fmt(n8.losses.back()) + " not below N=1 final " + fmt(n1.losses.back()));
  c.detail << "step0 " << fmt(n8.losses.front()) << ", bound " << fmt(bound) << " reached at step "
           << n8.steps - 1 << ", N8 final " << fmt(n8.losses.back()) << " vs N1 final "
           << fmt(n1.losses.back()) << ", N8 run " << fmt(n8_secs) << " s";
}

// 7. Every ablation-grid cell and the representation-count sweep finish with
// finite metrics.
void criterion_ablation(Check& c) {
  RunConfig cfg;
  cfg.model.height = 16;
  cfg.model.width = 16;
  cfg.model.channels = 8;
  cfg.model.n_idrs = 2;
  cfg.optim.total_steps = 5;
  cfg.train_batch = 2;
  cfg.data_scenes = 2;
  cfg.data_test_scenes = 1;

  const fs::path dir = fs::temp_directory_path() / "idsc_acceptance_ablate";
  fs::remove_all(dir);
  std::ostringstream sink;
  cmd_ablate(cfg, AblateMode::kFlagGrid, {}, (dir / "grid").string(), sink);
  cmd_ablate(cfg, AblateMode::kIdrSweep, {2, 4, 8, 16, 32, 64, 128}, (dir / "sweep").string(),
             sink);
  std::string why;
  c.expect(finite_csv_metrics((dir / "grid" / "ablate.csv").string(), 8, &why), "grid: " + why);
  c.expect(finite_csv_metrics((dir / "sweep" / "ablate.csv").string(), 7, &why), "sweep: " + why);
  c.detail << "8 flag combinations and 7-point representation sweep all finite";
}

// 8. Displacement-threshold split generator invariants.
void criterion_split(Check& c) {
  const SplitSpec spec;

  // 1 m spaced line: the 2 m train threshold selects every other frame.
  std::vector<FrameRecord> line;
  for (int t = 0; t < 11; ++t) line.push_back({"line", "cam", t, static_cast<float>(t), 0, 0, 0.0f});
  const SplitResult line_split = make_split(line, spec, ScenePartition{});
  bool line_ok = line_split.train.size() == 6;
  for (size_t i = 0; line_ok && i < line_split.train.size(); ++i) {
    line_ok = line_split.train[i].timestamp == static_cast<int>(2 * i);
  }
  c.expect(line_ok, "line oracle selection is not 0,2,4,...");

  // Random walks on both sides of the partition: consecutive kept frames
  // move at least the per-side threshold.
  Rng rng(4808);
  std::vector<FrameRecord> walk;
  float ax = 0, ay = 0, bx = 0, by = 0;
  for (int t = 0; t < 400; ++t) {
    walk.push_back({"wtrain", "cam", t, ax, ay, 0, 0.1f});
    walk.push_back({"wtest", "cam", t, bx, by, 0, 0.1f});
    ax += static_cast<float>(rng.uniform(-1.5, 1.5));
    ay += static_cast<float>(rng.uniform(-1.5, 1.5));
    bx += static_cast<float>(rng.uniform(-9.0, 9.0));
    by += static_cast<float>(rng.uniform(-9.0, 9.0));
  }
  ScenePartition part;
  part.test = {"wtest"};
  const SplitResult ws = make_split(walk, spec, part);
  auto displacement_ok = [](const std::vector<FrameRecord>& frames, float thresh) {
    for (size_t i = 1; i < frames.size(); ++i) {
      const float dx = frames[i].x - frames[i - 1].x;
      const float dy = frames[i].y - frames[i - 1].y;
      const float dz = frames[i].z - frames[i - 1].z;
      if (std::sqrt(dx * dx + dy * dy + dz * dz) < thresh) return false;
    }
    return true;
  };
  c.expect(!ws.train.empty() && displacement_ok(ws.train, spec.train_thresh),
           "train-side displacement below 2");
  c.expect(!ws.test.empty() && displacement_ok(ws.test, spec.test_thresh),
           "test-side displacement below 50");

  // A camera over the occlusion limit contributes nothing.
  std::vector<FrameRecord> occ;
  for (int t = 0; t < 5; ++t) occ.push_back({"occ", "cam", t, static_cast<float>(3 * t), 0, 0, 0.31f});
  c.expect(make_split(occ, spec, ScenePartition{}).train.empty(),
           "occlusion-0.31 camera produced frames");

  const std::string once = manifest_text(spec, "train", ws.train);
  const std::string twice = manifest_text(spec, "train", make_split(walk, spec, part).train);
  c.expect(once == twice, "manifests not byte-deterministic");
  c.detail << "line oracle 0,2,..,10; walk kept " << ws.train.size() << "/" << ws.test.size()
           << " frames; occluded camera empty; manifests byte-stable";
}

// 9. Raster and checkpoint serialization round-trips, plus the exact
// single-value raster layout.
void criterion_serialization(Check& c) {
  const fs::path dir = fs::temp_directory_path() / "idsc_acceptance_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(4909);

  const Tensor t = rng.normal_tensor({3, 5, 4}, 1.0);
  write_raster(t, (dir / "t.idsc").string());
  const Tensor back = read_raster((dir / "t.idsc").string());
  c.expect(back.same_shape(t) &&
               std::memcmp(back.vec().data(), t.vec().data(), sizeof(float) * t.numel()) == 0,
           "raster round-trip not bit-identical");

  NamedTensors entries;
  entries.emplace_back("alpha", rng.normal_tensor({2, 3}, 1.0));
  entries.emplace_back("beta", rng.normal_tensor({4}, 1.0));
  write_checkpoint(entries, (dir / "c.ckpt").string());
  const NamedTensors loaded = read_checkpoint((dir / "c.ckpt").string());
  bool ckpt_ok = loaded.size() == entries.size();
  for (size_t i = 0; ckpt_ok && i < entries.size(); ++i) {
    ckpt_ok = loaded[i].first == entries[i].first &&
              loaded[i].second.same_shape(entries[i].second) &&
              std::memcmp(loaded[i].second.vec().data(), entries[i].second.vec().data(),
                          sizeof(float) * entries[i].second.numel()) == 0;
  }
  c.expect(ckpt_ok, "checkpoint round-trip not bit-identical");
  c.expect(checkpoint_bytes(entries) ==
               checkpoint_bytes(parse_checkpoint(checkpoint_bytes(entries))),
           "in-memory checkpoint round-trip drifted");

  // Single-value raster: magic, version, c, h, w as little-endian u32, then
  // 3.5f. The field list fixes the byte string exactly.
  write_raster(Tensor({1, 1, 1}, {3.5f}), (dir / "one.idsc").string());
  std::ifstream in((dir / "one.idsc").string(), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const unsigned char expect[24] = {'I', 'D', 'S', 'C', 1, 0, 0, 0, 1, 0, 0, 0,
                                    1,   0,   0,   0,  1, 0, 0, 0, 0, 0, 0x60, 0x40};
  c.expect(bytes.size() == 24 &&
               std::memcmp(bytes.data(), expect, 24) == 0,
           "single-value raster layout mismatch (" + std::to_string(bytes.size()) + " bytes)");
  c.detail << "raster+checkpoint bitwise stable; 1x1x1 raster is the exact 24-byte field layout";
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* label;
    CriterionFn fn;
  };
  const Entry entries[] = {
      {1, "gradient fidelity", criterion_gradients},
      {2, "partition invariants", criterion_partitions},
      {3, "degenerate equivalence", criterion_degenerate},
      {4, "si-log closed forms", criterion_si_log_forms},
      {5, "metric suite", criterion_metric_suite},
      {6, "desk-scale trainability", criterion_trainability},
      {7, "ablation grid", criterion_ablation},
      {8, "split generator", criterion_split},
      {9, "serialization round-trips", criterion_serialization},
  };

  // Optional arguments restrict the run to the listed criterion numbers.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  bool all_pass = true;
  for (const Entry& e : entries) {
    if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end()) continue;
    Check c;
    try {
      e.fn(c);
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail << "exception: " << ex.what();
    }
    all_pass = all_pass && c.pass;
    std::cout << (c.pass ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": " << e.label
              << " (" << c.detail.str() << ")" << std::endl;
  }
  return all_pass ? 0 : 4;
}
