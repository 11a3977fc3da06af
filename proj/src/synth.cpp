#include "idsc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "idsc/errors.hpp"
#include "idsc/rng.hpp"

namespace idsc {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Hit {
  double t = 0.0;  // ray parameter; equals depth because rays have dz == 1
  double u = 0.0, v = 0.0;
  const Panel* panel = nullptr;
};

bool intersect(const Panel& p, Vec3 dir, Hit* out) {
  double denom = dot(dir, p.normal);
  if (std::abs(denom) < 1e-12) return false;
  double t = dot(p.base, p.normal) / denom;
  if (t <= 1e-9) return false;
  Vec3 point = t * dir;
  Vec3 rel = point - p.base;
  double u = dot(rel, p.e1);
  double v = dot(rel, p.e2);
  if (p.half_a > 0.0 && std::abs(u) > p.half_a) return false;
  if (p.half_b > 0.0 && std::abs(v) > p.half_b) return false;
  out->t = t;
  out->u = u;
  out->v = v;
  out->panel = &p;
  return true;
}

// Rodrigues rotation of v about unit axis a.
Vec3 rotate(Vec3 v, Vec3 a, double cos_t, double sin_t) {
  return cos_t * v + sin_t * cross(a, v) + ((1.0 - cos_t) * dot(a, v)) * a;
}

void randomize_surface(Panel* p, Rng& rng) {
  for (float& a : p->albedo) a = static_cast<float>(rng.uniform(0.25, 0.95));
  p->tex_fu = rng.uniform(1.5, 9.0);
  p->tex_fv = rng.uniform(1.5, 9.0);
  p->tex_phase = rng.uniform(0.0, 2.0 * kPi);
}

void tilt_panel(Panel* p, double sin_t, Rng& rng) {
  double cos_t = std::sqrt(1.0 - sin_t * sin_t);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  Vec3 axis = normalized(std::cos(phi) * p->e1 + std::sin(phi) * p->e2);
  p->normal = rotate(p->normal, axis, cos_t, sin_t);
  p->e1 = rotate(p->e1, axis, cos_t, sin_t);
  p->e2 = rotate(p->e2, axis, cos_t, sin_t);
}

}  // namespace

Vec3 normalized(Vec3 a) {
  double n = std::sqrt(dot(a, a));
  if (n < 1e-12) throw ContractError("cannot normalize a near-zero vector");
  return (1.0 / n) * a;
}

Camera synth_camera(int h, int w) {
  Camera cam;
  cam.f = 0.75 * static_cast<double>(w);
  cam.cx = 0.5 * static_cast<double>(w - 1);
  cam.cy = 0.5 * static_cast<double>(h - 1);
  return cam;
}

SyntheticScene render_scene(const std::vector<Panel>& panels, const Lighting& light, int h,
                            int w) {
  if (panels.empty()) throw ContractError("render_scene needs at least one panel");
  if (h < 1 || w < 1) throw ContractError("render_scene needs a positive raster size");
  Camera cam = synth_camera(h, w);
  Vec3 l = normalized(light.direction);

  SyntheticScene scene;
  scene.image = Tensor({3, h, w});
  scene.depth = Tensor({1, h, w});
  scene.normals = Tensor({3, h, w});

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Vec3 dir{(static_cast<double>(x) - cam.cx) / cam.f,
               (static_cast<double>(y) - cam.cy) / cam.f, 1.0};
      Hit best;
      bool found = false;
      for (const Panel& p : panels) {
        Hit hit;
        if (intersect(p, dir, &hit) && (!found || hit.t < best.t)) {
          best = hit;
          found = true;
        }
      }
      if (!found) {
        throw ContractError("uncovered pixel (" + std::to_string(y) + ", " +
                            std::to_string(x) + "); scenes must include a backdrop");
      }

      Vec3 n = best.panel->normal;
      if (dot(n, dir) > 0.0) n = -1.0 * n;
      double diffuse = std::max(0.0, -dot(n, l));
      double shade = light.ambient + (1.0 - light.ambient) * diffuse;
      double texture = 0.72 + 0.28 * std::sin(best.panel->tex_fu * best.u +
                                              best.panel->tex_fv * best.v +
                                              best.panel->tex_phase);

      scene.depth.at3(0, y, x) = static_cast<float>(best.t);
      scene.normals.at3(0, y, x) = static_cast<float>(n.x);
      scene.normals.at3(1, y, x) = static_cast<float>(n.y);
      scene.normals.at3(2, y, x) = static_cast<float>(n.z);
      for (int c = 0; c < 3; ++c) {
        double value = static_cast<double>(best.panel->albedo[c]) * texture * shade;
        scene.image.at3(c, y, x) = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return scene;
}

std::vector<SyntheticScene> gen_synthetic(uint64_t seed, int count, int h, int w,
                                          float depth_min, float depth_max) {
  if (count < 1) throw ConfigError("scene count must be positive");
  if (h < 8 || w < 8 || h % 8 != 0 || w % 8 != 0) {
    throw ConfigError("raster size must be a positive multiple of 8, got " +
                      std::to_string(h) + "x" + std::to_string(w));
  }
  if (!(depth_min > 0.0f) || !(depth_max > depth_min)) {
    throw ConfigError("depth range must satisfy 0 < min < max");
  }

  Camera cam = synth_camera(h, w);
  double d_min = static_cast<double>(depth_min);
  double span = static_cast<double>(depth_max) - d_min;

  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<size_t>(count));
  for (int index = 0; index < count; ++index) {
    Rng rng(seed ^ static_cast<uint64_t>(index));
    std::vector<Panel> panels;

    // Backdrop: fronto-parallel, closes every ray at 93% of the span.
    double z_back = d_min + 0.93 * span;
    Panel back;
    back.base = {0.0, 0.0, z_back};
    back.normal = {0.0, 0.0, -1.0};
    back.e1 = {1.0, 0.0, 0.0};
    back.e2 = {0.0, 1.0, 0.0};
    randomize_surface(&back, rng);
    panels.push_back(back);

    // Floor below the camera; its nearest visible point sits at 1.15 * d_min.
    Panel floor;
    floor.base = {0.0, 1.15 * d_min * cam.cy / cam.f, 0.0};
    floor.normal = {0.0, -1.0, 0.0};
    floor.e1 = {1.0, 0.0, 0.0};
    floor.e2 = {0.0, 0.0, 1.0};
    randomize_surface(&floor, rng);
    panels.push_back(floor);

    // Objects live close to whatever surface sits behind them, so occlusion
    // silhouettes step the depth by a bounded ratio rather than a large gap.
    int objects = rng.uniform_int(2, 6);
    for (int k = 0; k < objects; ++k) {
      Panel obj;
      if (rng.uniform_int(0, 1) == 1) {
        // Wall patch: fronto-parallel, slightly in front of the backdrop.
        double z0 = d_min + span * rng.uniform(0.75, 0.89);
        double px = rng.uniform(0.1, 0.9) * static_cast<double>(w);
        double py = rng.uniform(0.08, 0.55) * static_cast<double>(h);
        obj.base = {(px - cam.cx) / cam.f * z0, (py - cam.cy) / cam.f * z0, z0};
        obj.normal = {0.0, 0.0, -1.0};
        obj.e1 = {1.0, 0.0, 0.0};
        obj.e2 = {0.0, 1.0, 0.0};
        obj.half_a = rng.uniform(0.10, 0.38) * z0 * cam.cx / cam.f;
        obj.half_b = rng.uniform(0.10, 0.38) * z0 * cam.cy / cam.f;
        // Tilt budget: z excursion sin(theta) * diag stays within 3% of the
        // span, keeping the patch between d_min and the backdrop.
        double diag = std::sqrt(obj.half_a * obj.half_a + obj.half_b * obj.half_b);
        tilt_panel(&obj, rng.uniform(0.2, 1.0) * std::min(0.35, 0.03 * span / diag), rng);
      } else {
        // Floor rug: floor-aligned, lifted toward the camera by a few percent
        // of the floor height. Every covered ray shortens by the lift factor,
        // so the silhouette step is the same mild ratio everywhere.
        double lift = rng.uniform(0.03, 0.09);
        double zc = rng.uniform(1.35 * d_min, 0.8 * z_back);
        obj.base = {rng.uniform(-0.6, 0.6) * zc * cam.cx / cam.f,
                    (1.0 - lift) * floor.base.y, zc};
        obj.normal = {0.0, -1.0, 0.0};
        obj.e1 = {1.0, 0.0, 0.0};
        obj.e2 = {0.0, 0.0, 1.0};
        obj.half_a = rng.uniform(0.10, 0.35) * zc * cam.cx / cam.f;
        obj.half_b = rng.uniform(0.10, 0.40) * zc;
        // Tilt budget: lift plus tilt never shortens a visible ray below
        // d_min (the nearest visible floor point sits at 1.15 * d_min).
        double diag = std::sqrt(obj.half_a * obj.half_a + obj.half_b * obj.half_b);
        tilt_panel(&obj,
                   rng.uniform(0.2, 1.0) *
                       std::min(0.3, (0.125 - lift) * floor.base.y / diag),
                   rng);
      }
      if (dot(obj.normal, obj.base) > 0.0) obj.normal = -1.0 * obj.normal;
      randomize_surface(&obj, rng);
      panels.push_back(obj);
    }

    Lighting light;
    light.direction = normalized(
        {rng.uniform(-0.4, 0.4), rng.uniform(0.2, 0.8), rng.uniform(0.3, 0.9)});
    scenes.push_back(render_scene(panels, light, h, w));
  }
  return scenes;
}

}  // namespace idsc
