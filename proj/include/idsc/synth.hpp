#pragma once

#include <cstdint>
#include <vector>

#include "idsc/metrics.hpp"
#include "idsc/tensor.hpp"

namespace idsc {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 normalized(Vec3 a);

// Pinhole with +z forward, x right, y down; square pixels.
struct Camera {
  double f = 0.0;
  double cx = 0.0, cy = 0.0;
};

Camera synth_camera(int h, int w);  // f = 0.75*w, principal point centered

// A planar patch: base point, unit normal, in-plane axes and half-extents.
// Non-positive extents mean an unbounded plane (floor, backdrop).
struct Panel {
  Vec3 base;
  Vec3 normal;
  Vec3 e1, e2;
  double half_a = 0.0, half_b = 0.0;
  float albedo[3] = {0.7f, 0.7f, 0.7f};
  double tex_fu = 0.0, tex_fv = 0.0, tex_phase = 0.0;
};

struct Lighting {
  Vec3 direction{0.2, 0.6, 0.75};  // direction the light travels, unit length
  double ambient = 0.35;
};

struct SyntheticScene {
  Tensor image;    // [3 x h x w], shaded, in [0, 1]
  Tensor depth;    // [1 x h x w], meters (z distance)
  Tensor normals;  // [3 x h x w], unit, oriented toward the camera
  EvalMask mask;
};

// Ray-casts the panels; nearest hit wins. Every pixel must be covered
// (ContractError otherwise), so scene builders add a backdrop.
SyntheticScene render_scene(const std::vector<Panel>& panels, const Lighting& light, int h,
                            int w);

// Deterministic piecewise-planar scenes: floor, backdrop, and 2-6 random
// panels, with depth confined to [depth_min, depth_max] by construction.
// Scene i derives its generator state from seed^i.
std::vector<SyntheticScene> gen_synthetic(uint64_t seed, int count, int h, int w,
                                          float depth_min, float depth_max);

}  // namespace idsc
