#include "idsc/split.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "idsc/errors.hpp"

namespace idsc {

namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string num(int64_t v) { return std::to_string(v); }

double parse_double(const std::string& field, int line, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("pose log line " + std::to_string(line) + ": bad " + what + " '" + field +
                     "'");
  }
  return v;
}

int64_t parse_i64(const std::string& field, int line, const char* what) {
  int64_t v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("pose log line " + std::to_string(line) + ": bad " + what + " '" + field +
                     "'");
  }
  return v;
}

double displacement(const FrameRecord& a, const FrameRecord& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

SplitResult make_split(const std::vector<FrameRecord>& records, const SplitSpec& spec,
                       const ScenePartition& partition) {
  if (spec.train_thresh <= 0.0 || spec.test_thresh <= 0.0) {
    throw ContractError("make_split: displacement thresholds must be positive");
  }
  if (spec.test_thresh < spec.train_thresh) {
    throw ContractError("make_split: test threshold below train threshold");
  }
  const std::set<std::string> train_scenes(partition.train.begin(), partition.train.end());
  const std::set<std::string> test_scenes(partition.test.begin(), partition.test.end());
  for (const std::string& s : test_scenes) {
    if (train_scenes.count(s)) {
      throw ContractError("make_split: scene '" + s + "' listed as both train and test");
    }
  }

  std::map<std::pair<std::string, std::string>, std::vector<const FrameRecord*>> groups;
  for (const FrameRecord& r : records) {
    if (r.occlusion < 0.0 || r.occlusion > 1.0) {
      throw ContractError("make_split: occlusion outside [0, 1] in scene '" + r.scene_id + "'");
    }
    auto& g = groups[{r.scene_id, r.camera_id}];
    if (!g.empty() && r.timestamp < g.back()->timestamp) {
      throw ContractError("make_split: timestamps regress for scene '" + r.scene_id +
                          "' camera '" + r.camera_id + "'");
    }
    g.push_back(&r);
  }

  SplitResult out;
  // Gate state per scene when selection is shared across cameras.
  std::map<std::string, const FrameRecord*> scene_gate;
  for (const auto& [key, frames] : groups) {
    const bool is_test = test_scenes.count(key.first) > 0;
    const double thresh = is_test ? spec.test_thresh : spec.train_thresh;
    std::vector<FrameRecord>& sink = is_test ? out.test : out.train;

    double worst = 0.0;
    for (const FrameRecord* f : frames) worst = std::max(worst, f->occlusion);
    if (worst > spec.max_occlusion) continue;

    const FrameRecord* last = spec.shared_gate ? scene_gate[key.first] : nullptr;
    for (const FrameRecord* f : frames) {
      if (last != nullptr && displacement(*f, *last) < thresh) continue;
      sink.push_back(*f);
      last = f;
      if (spec.shared_gate) scene_gate[key.first] = f;
    }
  }
  return out;
}

std::vector<FrameRecord> read_pose_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_pose_log: cannot open " + path);
  std::vector<FrameRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 7) {
      throw ParseError("pose log line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(fields.size()));
    }
    FrameRecord r;
    r.scene_id = fields[0];
    r.camera_id = fields[1];
    r.timestamp = parse_i64(fields[2], line_no, "timestamp");
    r.x = parse_double(fields[3], line_no, "x");
    r.y = parse_double(fields[4], line_no, "y");
    r.z = parse_double(fields[5], line_no, "z");
    r.occlusion = parse_double(fields[6], line_no, "occlusion");
    if (r.occlusion < 0.0 || r.occlusion > 1.0) {
      throw ParseError("pose log line " + std::to_string(line_no) + ": occlusion outside [0, 1]");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_pose_log(const std::vector<FrameRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("write_pose_log: cannot open " + path);
  for (const FrameRecord& r : records) {
    out << r.scene_id << '\t' << r.camera_id << '\t' << num(r.timestamp) << '\t' << num(r.x)
        << '\t' << num(r.y) << '\t' << num(r.z) << '\t' << num(r.occlusion) << '\n';
  }
  if (!out) throw DataError("write_pose_log: short write to " + path);
}

std::string manifest_text(const SplitSpec& spec, const std::string& name,
                          const std::vector<FrameRecord>& frames) {
  std::string out = "# split=" + name + " train_thresh=" + num(spec.train_thresh) +
                    " test_thresh=" + num(spec.test_thresh) +
                    " max_occlusion=" + num(spec.max_occlusion) +
                    " crop_width=" + std::to_string(spec.crop_width) +
                    " crop_height=" + std::to_string(spec.crop_height) +
                    " top_crop=" + std::to_string(spec.top_crop) +
                    " depth_cap=" + num(spec.depth_cap) +
                    " shared_gate=" + (spec.shared_gate ? "1" : "0") + "\n";
  for (const FrameRecord& f : frames) {
    out += f.scene_id + "\t" + f.camera_id + "\t" + num(f.timestamp) + "\n";
  }
  return out;
}

void write_manifest(const SplitSpec& spec, const std::string& name,
                    const std::vector<FrameRecord>& frames, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_manifest: cannot open " + path);
  const std::string text = manifest_text(spec, name, frames);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write_manifest: short write to " + path);
}

}  // namespace idsc
