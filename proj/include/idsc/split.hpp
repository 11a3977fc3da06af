#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace idsc {

struct FrameRecord {
  std::string scene_id;
  std::string camera_id;
  int64_t timestamp = 0;  // microseconds
  double x = 0.0, y = 0.0, z = 0.0;
  double occlusion = 0.0;  // fraction of pixels blocked by the capture rig
};

struct SplitSpec {
  double train_thresh = 2.0;   // meters of ego displacement between train samples
  double test_thresh = 50.0;   // meters between test samples
  double max_occlusion = 0.30;
  int crop_width = 1920;
  int crop_height = 870;
  int top_crop = 180;
  double depth_cap = 150.0;
  // Gate displacement per scene instead of per (scene, camera).
  bool shared_gate = false;
};

struct ScenePartition {
  std::vector<std::string> train;
  std::vector<std::string> test;  // scenes absent from both lists count as train
};

struct SplitResult {
  std::vector<FrameRecord> train;
  std::vector<FrameRecord> test;
};

// Greedy displacement subsampling: per (scene, camera), keep the first frame
// and every later frame at least the partition's threshold away from the
// previously kept one. Cameras whose worst occlusion exceeds the limit are
// dropped whole. Output order is (scene, camera, timestamp).
SplitResult make_split(const std::vector<FrameRecord>& records, const SplitSpec& spec,
                       const ScenePartition& partition);

// Tab-separated, one record per line, fields in FrameRecord order.
std::vector<FrameRecord> read_pose_log(const std::string& path);
void write_pose_log(const std::vector<FrameRecord>& records, const std::string& path);

// Manifest: one '#' header carrying the SplitSpec, then scene/camera/timestamp
// per kept frame. Byte-deterministic for identical inputs.
std::string manifest_text(const SplitSpec& spec, const std::string& name,
                          const std::vector<FrameRecord>& frames);
void write_manifest(const SplitSpec& spec, const std::string& name,
                    const std::vector<FrameRecord>& frames, const std::string& path);

}  // namespace idsc
