#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "idsc/checkpoint.hpp"
#include "idsc/cli.hpp"
#include "idsc/errors.hpp"
#include "idsc/model.hpp"
#include "idsc/raster.hpp"
#include "idsc/split.hpp"
#include "idsc/synth.hpp"

using namespace idsc;
namespace fs = std::filesystem;

namespace {

// Runs the installed binary through the shell, merging stderr into the
// captured output. Returns the process exit code.
int run_cli(const std::string& args, std::string* output) {
  const std::string cmd = std::string(IDSC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, got);
  const int status = pclose(pipe);
  if (output) *output = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("idsc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Flags for a 16x16 miniature so every subprocess finishes in well under a
// second.
std::string mini_flags(int steps, int scenes = 2, int test_scenes = 1, int batch = 2) {
  std::ostringstream ss;
  ss << "--set model.height=16 --set model.width=16 --set model.channels=8"
     << " --set model.n_idrs=2 --set data.scenes=" << scenes
     << " --set data.test_scenes=" << test_scenes << " --set train.batch=" << batch
     << " --set train.steps=" << steps;
  return ss.str();
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

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.vec().data(), b.vec().data(), sizeof(float) * a.numel()) == 0;
}

// Last occurrence of "key = ", i.e. the aggregate block of an eval report.
double grab(const std::string& text, const std::string& key) {
  const std::string tag = key + " = ";
  const size_t pos = text.rfind(tag);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + tag.size()));
}

int count_lines_with_prefix(const std::string& text, const std::string& prefix) {
  int n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) ++n;
  }
  return n;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("zero-step training writes the initialized state and an empty loss log") {
  const std::string dir = fresh_dir("steps0");
  std::string out;
  const int code = run_cli("train " + mini_flags(0) + " --out " + dir + "/run", &out);
  CHECK(code == 0);
  CHECK(read_file(dir + "/run/loss.csv") == "step,lr,loss\n");

  // The setup phase anchors the output scale at the median training depth;
  // everything else must match a freshly constructed model bit for bit.
  ModelConfig mc;
  mc.height = 16;
  mc.width = 16;
  mc.channels = 8;
  mc.n_idrs = 2;
  Model expected(mc);
  expected.set_output_scale(median_valid_depth(depth_samples(42, 3, 16, 16)));

  const NamedTensors got = read_checkpoint(dir + "/run/model.ckpt");
  const NamedTensors want = expected.state();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].first == want[i].first);
    CHECK(same_bits(got[i].second, want[i].second));
  }

  Model raw(mc);
  const NamedTensors init = raw.state();
  int diffs = 0;
  for (size_t i = 0; i < got.size(); ++i) {
    if (!same_bits(got[i].second, init[i].second)) {
      ++diffs;
      CHECK(got[i].first == "out.scale");
    }
  }
  CHECK(diffs == 1);
}

TEST_CASE("seeded training runs are byte-for-byte reproducible") {
  const std::string dir = fresh_dir("repro");
  const std::string flags = mini_flags(3, 3) + " --seed 7";
  CHECK(run_cli("train " + flags + " --out " + dir + "/a", nullptr) == 0);
  CHECK(run_cli("train " + flags + " --out " + dir + "/b", nullptr) == 0);
  CHECK(read_file(dir + "/a/loss.csv") == read_file(dir + "/b/loss.csv"));
  CHECK(read_file(dir + "/a/model.ckpt") == read_file(dir + "/b/model.ckpt"));

  const auto rows = read_csv(dir + "/a/loss.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"step", "lr", "loss"});
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 3);
    CHECK(rows[i][0] == std::to_string(i - 1));
    CHECK(std::isfinite(std::stod(rows[i][1])));
    CHECK(std::isfinite(std::stod(rows[i][2])));
  }
}

TEST_CASE("every effective config value is echoed exactly once") {
  const std::string dir = fresh_dir("echo");
  std::string out;
  REQUIRE(run_cli("train " + mini_flags(0) + " --out " + dir + "/run", &out) == 0);
  const char* keys[] = {
      "model.height",      "model.width",      "model.channels",    "model.n_idrs",
      "model.head",        "model.output",     "model.use_afp",     "model.use_msda",
      "model.depth_min",   "model.depth_max",  "model.seed",        "afp.iters",
      "afp.scale_logits",  "isd.layers",       "edd.temperature",   "train.steps",
      "train.batch",       "train.lr",         "train.lr_final",    "train.beta1",
      "train.beta2",       "train.weight_decay", "train.warm_frac", "train.clip_norm",
      "data.seed",         "data.scenes",      "data.test_scenes",  "eval.depth_cap",
      "split.train_thresh", "split.test_thresh", "split.max_occlusion", "split.crop_width",
      "split.crop_height", "split.top_crop",   "split.depth_cap",   "split.shared_gate"};
  for (const char* key : keys) {
    CAPTURE(key);
    CHECK(count_lines_with_prefix(out, std::string(key) + " = ") == 1);
  }
  CHECK(count_lines_with_prefix(out, "model.height = 16") == 1);
  CHECK(count_lines_with_prefix(out, "train.steps = 0") == 1);
}

TEST_CASE("evaluating a raster against itself reports a perfect score") {
  const std::string dir = fresh_dir("evalself");
  REQUIRE(run_cli("synth --set model.height=8 --set model.width=8 --set data.scenes=1 --out " +
                      dir + "/sd",
                  nullptr) == 0);
  const std::string depth = dir + "/sd/scene_000_depth.idsc";
  std::string out;
  CHECK(run_cli("eval --pred " + depth + " --gt " + depth, &out) == 0);
  CHECK(grab(out, "d1") == doctest::Approx(1.0));
  CHECK(grab(out, "rms") == doctest::Approx(0.0));
  CHECK(grab(out, "a_rel") == doctest::Approx(0.0));

  const std::string normals = dir + "/sd/scene_000_normals.idsc";
  CHECK(run_cli("eval --pred " + normals + " --gt " + normals, &out) == 0);
  CHECK(grab(out, "in_30") == doctest::Approx(1.0));
  CHECK(grab(out, "mean") == doctest::Approx(0.0));
}

TEST_CASE("eval failure paths map to the documented exit codes") {
  const std::string dir = fresh_dir("evalerr");
  REQUIRE(run_cli("synth --set model.height=8 --set model.width=8 --set data.scenes=1 --out " +
                      dir + "/sd",
                  nullptr) == 0);
  const std::string depth = dir + "/sd/scene_000_depth.idsc";
  const std::string image = dir + "/sd/scene_000_image.idsc";

  std::string out;
  SUBCASE("depth cap below every pixel leaves nothing to score") {
    CHECK(run_cli("eval --pred " + depth + " --gt " + depth + " --cap 0.5", &out) == 2);
    CHECK(out.find("no valid pixels") != std::string::npos);
  }
  SUBCASE("shape mismatch names both offending files") {
    CHECK(run_cli("eval --pred " + depth + " --gt " + image, &out) == 2);
    CHECK(out.find("dimension mismatch") != std::string::npos);
    CHECK(out.find("scene_000_depth.idsc") != std::string::npos);
    CHECK(out.find("scene_000_image.idsc") != std::string::npos);
  }
  SUBCASE("unpaired rasters are a usage error") {
    CHECK(run_cli("eval --pred " + depth, &out) == 1);
  }
  SUBCASE("mixed depth and normal pairs refuse to aggregate") {
    const std::string normals = dir + "/sd/scene_000_normals.idsc";
    CHECK(run_cli("eval --pred " + depth + " --gt " + depth + " --pred " + normals + " --gt " +
                      normals,
                  &out) == 2);
    CHECK(out.find("cannot mix") != std::string::npos);
  }
}

TEST_CASE("two-pixel eval pair reproduces the hand-computed metrics") {
  const std::string dir = fresh_dir("twopixel");
  write_raster(Tensor({1, 1, 2}, {2.0f, 4.0f}), dir + "/pred.idsc");
  write_raster(Tensor({1, 1, 2}, {1.0f, 4.0f}), dir + "/gt.idsc");
  std::string out;
  CHECK(run_cli("eval --pred " + dir + "/pred.idsc --gt " + dir + "/gt.idsc", &out) == 0);
  CHECK(grab(out, "rms") == doctest::Approx(std::sqrt(0.5)).epsilon(1e-5));
  CHECK(grab(out, "rms_log") == doctest::Approx(std::log(2.0) / std::sqrt(2.0)).epsilon(1e-5));
  CHECK(grab(out, "log10") == doctest::Approx(std::log10(2.0) / 2.0).epsilon(1e-5));
  CHECK(grab(out, "a_rel") == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(grab(out, "s_rel") == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(grab(out, "d05") == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(grab(out, "d1") == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(grab(out, "si_log") == doctest::Approx(50.0 * std::log(2.0)).epsilon(1e-5));
  CHECK(grab(out, "n_valid") == doctest::Approx(2.0));
}

TEST_CASE("checkpoint eval reproduces the aggregate reported by train") {
  const std::string dir = fresh_dir("ckpteval");
  const std::string flags = mini_flags(2);
  std::string train_out;
  REQUIRE(run_cli("train " + flags + " --out " + dir + "/run", &train_out) == 0);
  std::string eval_out;
  CHECK(run_cli("eval " + mini_flags(2) + " --checkpoint " + dir + "/run/model.ckpt",
                &eval_out) == 0);
  for (const char* key : {"rms", "a_rel", "d1", "si_log", "n_valid"}) {
    CAPTURE(key);
    CHECK(grab(eval_out, key) == doctest::Approx(grab(train_out, key)).epsilon(1e-9));
  }
}

TEST_CASE("ablate sweep writes one CSV row per representation count") {
  const std::string dir = fresh_dir("sweep");
  std::string out;
  CHECK(run_cli("ablate " + mini_flags(1, 2, 1, 1) + " --idr-sweep 2,4 --out " + dir + "/ab",
                &out) == 0);
  const auto rows = read_csv(dir + "/ab/ablate.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"head", "use_afp", "use_msda", "n_idrs", "d1", "rms",
                                            "a_rel"});
  CHECK(rows[1][3] == "2");
  CHECK(rows[2][3] == "4");
  for (size_t r = 1; r < rows.size(); ++r) {
    for (size_t c = 4; c < 7; ++c) CHECK(std::isfinite(std::stod(rows[r][c])));
  }
}

TEST_CASE("ablate flags grid covers all eight configurations") {
  const std::string dir = fresh_dir("grid");
  const std::string flags =
      "--set model.height=8 --set model.width=8 --set model.channels=8 --set model.n_idrs=2"
      " --set data.scenes=1 --set data.test_scenes=1 --set train.batch=1 --set train.steps=1";
  std::string out;
  CHECK(run_cli("ablate " + flags + " --flags-grid --out " + dir + "/ab", &out) == 0);
  const auto rows = read_csv(dir + "/ab/ablate.csv");
  REQUIRE(rows.size() == 9);
  int idx = 1;
  for (const char* head : {"isd", "edd"}) {
    for (const char* afp : {"0", "1"}) {
      for (const char* msda : {"0", "1"}) {
        CHECK(rows[idx][0] == head);
        CHECK(rows[idx][1] == afp);
        CHECK(rows[idx][2] == msda);
        for (size_t c = 4; c < 7; ++c) CHECK(std::isfinite(std::stod(rows[idx][c])));
        ++idx;
      }
    }
  }
}

TEST_CASE("ablate argument validation") {
  std::string out;
  CHECK(run_cli("ablate --idr-sweep ''", &out) == 1);
  CHECK(run_cli("ablate --idr-sweep 2,x", &out) == 1);
  CHECK(out.find("bad IDR count") != std::string::npos);
  CHECK(run_cli("ablate --flags-grid --idr-sweep 2", &out) == 1);
  CHECK(run_cli("ablate --set model.output=normals --idr-sweep 2", &out) == 1);
  CHECK(out.find("model.output = depth") != std::string::npos);
}

TEST_CASE("gradcheck command reports per-block errors and honors the corrupt hook") {
  std::string out;
  CHECK(run_cli("gradcheck", &out) == 0);
  for (const char* block : {"afp", "isd", "edd", "si_log"}) {
    CAPTURE(block);
    CHECK(out.find(std::string("block ") + block + ": max rel err") != std::string::npos);
  }
  CHECK(count_lines_with_prefix(out, "block ") == 4);
  CHECK(out.find("[FAIL]") == std::string::npos);

  CHECK(run_cli("gradcheck --which afp", &out) == 0);
  CHECK(count_lines_with_prefix(out, "block ") == 1);

  CHECK(run_cli("gradcheck --which isd --corrupt", &out) == 4);
  CHECK(out.find("[FAIL]") != std::string::npos);

  CHECK(run_cli("gradcheck --which bogus", &out) != 0);
}

TEST_CASE("split command emits the library's manifests byte for byte") {
  const std::string dir = fresh_dir("split");
  std::vector<FrameRecord> records;
  for (int t = 0; t < 6; ++t) {
    records.push_back({"sA", "c0", t, 1.1f * t, 0.0f, 0.0f, 0.05f});
  }
  records.push_back({"sB", "c0", 0, 0.0f, 0.0f, 0.0f, 0.5f});
  write_pose_log(records, dir + "/poses.tsv");

  std::string out;
  CHECK(run_cli("split --poses " + dir + "/poses.tsv --out " + dir + "/m", &out) == 0);
  const SplitSpec spec;
  const SplitResult expected = make_split(records, spec, ScenePartition{});
  CHECK(read_file(dir + "/m/train.txt") == manifest_text(spec, "train", expected.train));
  CHECK(read_file(dir + "/m/test.txt") == manifest_text(spec, "test", expected.test));
  CHECK(out.find("# train frames: " + std::to_string(expected.train.size())) !=
        std::string::npos);

  // Same poses with sA routed to the test side: the 50 m threshold admits
  // only the first frame.
  CHECK(run_cli("split --poses " + dir + "/poses.tsv --test-scenes sA --out " + dir + "/mt",
                &out) == 0);
  ScenePartition part;
  part.test = {"sA"};
  const SplitResult routed = make_split(records, spec, part);
  CHECK(read_file(dir + "/mt/test.txt") == manifest_text(spec, "test", routed.test));
  CHECK(routed.test.size() == 1);
}

TEST_CASE("split handles empty and malformed pose logs") {
  const std::string dir = fresh_dir("splitedge");
  std::ofstream(dir + "/empty.tsv").close();
  std::string out;
  CHECK(run_cli("split --poses " + dir + "/empty.tsv --out " + dir + "/m", &out) == 0);
  CHECK(out.find("# train frames: 0") != std::string::npos);
  CHECK(read_file(dir + "/m/train.txt").find("# split=train") == 0);
  CHECK(count_lines_with_prefix(read_file(dir + "/m/train.txt"), "s") == 0);

  std::ofstream(dir + "/bad.tsv") << "not a pose line\n";
  CHECK(run_cli("split --poses " + dir + "/bad.tsv --out " + dir + "/mb", &out) == 2);
  CHECK(out.find("line 1") != std::string::npos);
}

TEST_CASE("synth rasters round-trip the generator bitwise") {
  const std::string dir = fresh_dir("synth");
  REQUIRE(run_cli("synth --set model.height=8 --set model.width=8 --set data.scenes=2 --out " +
                      dir + "/sd",
                  nullptr) == 0);
  const std::vector<SyntheticScene> scenes = gen_synthetic(42, 2, 8, 8, 1.0f, 10.0f);
  for (int i = 0; i < 2; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "/sd/scene_%03d", i);
    CHECK(same_bits(read_raster(dir + stem + "_image.idsc"), scenes[i].image));
    CHECK(same_bits(read_raster(dir + stem + "_depth.idsc"), scenes[i].depth));
    CHECK(same_bits(read_raster(dir + stem + "_normals.idsc"), scenes[i].normals));
  }
}

TEST_CASE("config errors surface with exit code 1 and a clear message") {
  const std::string dir = fresh_dir("cfgerr");
  std::string out;
  CHECK(run_cli("train --set bogus.key=1", &out) == 1);
  CHECK(out.find("unknown key 'bogus.key'") != std::string::npos);
  CHECK(run_cli("train --set model.channels=abc", &out) == 1);
  CHECK(run_cli("train --set model.channels", &out) == 1);

  std::ofstream(dir + "/dup.cfg") << "model.channels = 8\nmodel.channels = 9\n";
  CHECK(run_cli("train --config " + dir + "/dup.cfg", &out) == 1);
  CHECK(out.find("line 2") != std::string::npos);

  std::ofstream(dir + "/cmt.cfg") << "# comment only\n\nmodel.channels = 8 # trailing note\n";
  CHECK(run_cli("train " + mini_flags(0) + " --config " + dir + "/cmt.cfg --out " + dir + "/run", &out) ==
        0);
  CHECK(count_lines_with_prefix(out, "model.channels = 8") == 1);
}

TEST_CASE("IDSC_OUT_DIR prefixes relative output paths only") {
  const std::string dir = fresh_dir("envdir");
  const std::string env = "IDSC_OUT_DIR=" + dir + " ";
  const std::string cmd =
      "synth --set model.height=8 --set model.width=8 --set data.scenes=1 --out nested/sd";
  FILE* pipe = popen((env + IDSC_CLI_PATH + " " + cmd + " > /dev/null 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  CHECK(WEXITSTATUS(pclose(pipe)) == 0);
  CHECK(fs::exists(dir + "/nested/sd/scene_000_image.idsc"));

  // An absolute --out ignores the environment root.
  FILE* pipe2 = popen((env + IDSC_CLI_PATH + " synth --set model.height=8 --set model.width=8" +
                       " --set data.scenes=1 --out " + dir + "/abs > /dev/null 2>&1")
                          .c_str(),
                      "r");
  REQUIRE(pipe2 != nullptr);
  CHECK(WEXITSTATUS(pclose(pipe2)) == 0);
  CHECK(fs::exists(dir + "/abs/scene_000_image.idsc"));
  CHECK(!fs::exists(dir + dir + "/abs"));
}

TEST_CASE("exit codes map exception families as documented") {
  CHECK(exit_code_for(UsageError("u")) == 1);
  CHECK(exit_code_for(ConfigError("c")) == 1);
  CHECK(exit_code_for(NumericError("n")) == 3);
  CHECK(exit_code_for(DataError("d")) == 2);
  CHECK(exit_code_for(ShapeError("s")) == 2);
  CHECK(exit_code_for(ParseError("p")) == 2);
}

TEST_CASE("resolve_out_path honors the environment root") {
  unsetenv("IDSC_OUT_DIR");
  CHECK(resolve_out_path("runs/a") == "runs/a");
  CHECK(resolve_out_path("/abs/a") == "/abs/a");
  setenv("IDSC_OUT_DIR", "/roots", 1);
  CHECK(resolve_out_path("runs/a") == "/roots/runs/a");
  CHECK(resolve_out_path("/abs/a") == "/abs/a");
  unsetenv("IDSC_OUT_DIR");
}
