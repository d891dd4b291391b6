#include "npr/scene.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace npr {

using nlohmann::json;

void SceneSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(room_min[a] < room_max[a])) raise(Errc::invalid_spec, "degenerate room");
  }
  for (const ScenePrimitive& p : primitives) {
    if (p.kind == ScenePrimitive::Kind::box) {
      for (int a = 0; a < 3; ++a) {
        if (!(p.box_min[a] < p.box_max[a]) || p.box_min[a] < room_min[a] ||
            p.box_max[a] > room_max[a]) {
          raise(Errc::invalid_spec, "box primitive outside room");
        }
      }
    } else {
      if (!(p.radius > 0.0)) raise(Errc::invalid_spec, "sphere radius must be positive");
      for (int a = 0; a < 3; ++a) {
        if (p.center[a] - p.radius < room_min[a] || p.center[a] + p.radius > room_max[a]) {
          raise(Errc::invalid_spec, "sphere primitive outside room");
        }
      }
    }
  }
  if (trajectory.empty()) raise(Errc::invalid_spec, "trajectory is empty");
  for (const TrajectoryStep& s : trajectory) {
    for (int a = 0; a < 3; ++a) {
      if (s.position[a] <= room_min[a] || s.position[a] >= room_max[a]) {
        raise(Errc::invalid_spec, "trajectory leaves the room");
      }
    }
  }
  if (resolution < 2) raise(Errc::invalid_spec, "resolution must be >= 2");
  if (grid_h < 1 || grid_w < 1) raise(Errc::invalid_spec, "feature grid must be >= 1x1");
}

namespace {

json vec_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

Vec3 vec_from(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

}  // namespace

SceneSpec SceneSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  SceneSpec s;
  s.room_min = vec_from(j.at("room").at("min"));
  s.room_max = vec_from(j.at("room").at("max"));
  const auto& walls = j.at("room").at("wall_albedo");
  for (int i = 0; i < 6; ++i) s.wall_albedo[i] = vec_from(walls.at(i));
  for (const auto& p : j.value("primitives", json::array())) {
    ScenePrimitive prim;
    const std::string kind = p.at("type");
    if (kind == "box") {
      prim.kind = ScenePrimitive::Kind::box;
      prim.box_min = vec_from(p.at("min"));
      prim.box_max = vec_from(p.at("max"));
    } else if (kind == "sphere") {
      prim.kind = ScenePrimitive::Kind::sphere;
      prim.center = vec_from(p.at("center"));
      prim.radius = p.at("radius");
    } else {
      raise(Errc::invalid_spec, "unknown primitive type " + kind);
    }
    prim.albedo = vec_from(p.at("albedo"));
    s.primitives.push_back(prim);
  }
  for (const auto& t : j.at("trajectory")) {
    s.trajectory.push_back({vec_from(t.at("position")), t.value("yaw", 0.0)});
  }
  s.resolution = j.value("resolution", 64);
  s.grid_h = j.value("grid_h", 14);
  s.grid_w = j.value("grid_w", 14);
  s.seed = j.value("seed", 0ull);
  s.validate();
  return s;
}

std::string SceneSpec::to_json() const {
  json walls = json::array();
  for (const Vec3& w : wall_albedo) walls.push_back(vec_json(w));
  json prims = json::array();
  for (const ScenePrimitive& p : primitives) {
    if (p.kind == ScenePrimitive::Kind::box) {
      prims.push_back(json{{"type", "box"},
                           {"min", vec_json(p.box_min)},
                           {"max", vec_json(p.box_max)},
                           {"albedo", vec_json(p.albedo)}});
    } else {
      prims.push_back(json{{"type", "sphere"},
                           {"center", vec_json(p.center)},
                           {"radius", p.radius},
                           {"albedo", vec_json(p.albedo)}});
    }
  }
  json traj = json::array();
  for (const TrajectoryStep& t : trajectory) {
    traj.push_back(json{{"position", vec_json(t.position)}, {"yaw", t.base_yaw}});
  }
  json j{{"room", {{"min", vec_json(room_min)}, {"max", vec_json(room_max)}, {"wall_albedo", walls}}},
         {"primitives", prims},
         {"trajectory", traj},
         {"resolution", resolution},
         {"grid_h", grid_h},
         {"grid_w", grid_w},
         {"seed", seed}};
  return j.dump(2);
}

SceneSpec make_default_scene(std::uint64_t seed, int steps, int resolution) {
  SceneSpec s;
  s.seed = seed;
  s.resolution = resolution;
  s.room_min = Vec3(0.0, 0.0, 0.0);
  s.room_max = Vec3(6.0, 3.0, 5.0);
  s.wall_albedo = {Vec3(0.85, 0.30, 0.25), Vec3(0.25, 0.55, 0.85), Vec3(0.90, 0.85, 0.75),
                   Vec3(0.35, 0.35, 0.40), Vec3(0.30, 0.70, 0.35), Vec3(0.80, 0.65, 0.25)};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    ScenePrimitive box;
    box.kind = ScenePrimitive::Kind::box;
    const Vec3 size(0.4 + 0.6 * u01(rng), 0.4 + 0.8 * u01(rng), 0.4 + 0.6 * u01(rng));
    const Vec3 corner(0.4 + u01(rng) * (6.0 - size.x() - 0.8), 0.0,
                      0.4 + u01(rng) * (5.0 - size.z() - 0.8));
    box.box_min = corner;
    box.box_max = corner + size;
    box.albedo = Vec3(0.2 + 0.7 * u01(rng), 0.2 + 0.7 * u01(rng), 0.2 + 0.7 * u01(rng));
    s.primitives.push_back(box);
  }
  ScenePrimitive ball;
  ball.kind = ScenePrimitive::Kind::sphere;
  ball.radius = 0.35;
  ball.center = Vec3(1.2 + 3.6 * u01(rng), 0.5 + 1.5 * u01(rng), 1.2 + 2.6 * u01(rng));
  ball.albedo = Vec3(0.9, 0.6, 0.2);
  s.primitives.push_back(ball);

  for (int i = 0; i < steps; ++i) {
    const double a = steps > 1 ? static_cast<double>(i) / (steps - 1) : 0.5;
    s.trajectory.push_back({Vec3(2.0 + 2.0 * a, 1.5, 1.8 + 1.4 * a), 0.0});
  }
  s.validate();
  return s;
}

namespace {

constexpr double kRayEps = 1e-9;

// Exit point of a ray starting inside the room; returns (t, face index).
bool room_exit(const SceneSpec& s, const Ray& r, double& t_out, int& face_out) {
  double best = 1e300;
  int face = -1;
  for (int a = 0; a < 3; ++a) {
    const double d = r.direction[a];
    if (std::abs(d) < 1e-15) continue;
    const double bound = d > 0.0 ? s.room_max[a] : s.room_min[a];
    const double t = (bound - r.origin[a]) / d;
    if (t > kRayEps && t < best) {
      best = t;
      face = 2 * a + (d > 0.0 ? 1 : 0);
    }
  }
  t_out = best;
  face_out = face;
  return face >= 0;
}

bool box_entry(const ScenePrimitive& b, const Ray& r, double& t_out) {
  double t_near = -1e300, t_far = 1e300;
  for (int a = 0; a < 3; ++a) {
    const double d = r.direction[a];
    if (std::abs(d) < 1e-15) {
      if (r.origin[a] < b.box_min[a] || r.origin[a] > b.box_max[a]) return false;
      continue;
    }
    double t0 = (b.box_min[a] - r.origin[a]) / d;
    double t1 = (b.box_max[a] - r.origin[a]) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_far < kRayEps) return false;
  t_out = t_near > kRayEps ? t_near : t_far;
  return true;
}

bool sphere_entry(const ScenePrimitive& sp, const Ray& r, double& t_out) {
  const Vec3 oc = r.origin - sp.center;
  const double b = oc.dot(r.direction);
  const double c = oc.squaredNorm() - sp.radius * sp.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t < kRayEps) t = -b + sq;
  if (t < kRayEps) return false;
  t_out = t;
  return true;
}

}  // namespace

RayHit raycast_scene(const SceneSpec& scene, const Ray& ray) {
  RayHit hit;
  double t_room = 0.0;
  int face = -1;
  if (room_exit(scene, ray, t_room, face)) {
    hit.hit = true;
    hit.t = t_room;
    hit.albedo = scene.wall_albedo[face];
  }
  for (const ScenePrimitive& p : scene.primitives) {
    double t = 0.0;
    const bool ok = p.kind == ScenePrimitive::Kind::box ? box_entry(p, ray, t)
                                                        : sphere_entry(p, ray, t);
    if (ok && (!hit.hit || t < hit.t)) {
      hit.hit = true;
      hit.t = t;
      hit.albedo = p.albedo;
    }
  }
  return hit;
}

void render_ground_truth(const SceneSpec& scene, const CameraIntrinsics& intr, const Pose& pose,
                         Image& rgb, Image& depth) {
  rgb = Image(intr.height, intr.width, 3);
  depth = Image(intr.height, intr.width, 1);
  for (int h = 0; h < intr.height; ++h) {
    for (int w = 0; w < intr.width; ++w) {
      const Ray ray = pixel_ray(intr, pose, {h + 0.5, w + 0.5});
      const RayHit hit = raycast_scene(scene, ray);
      if (!hit.hit) continue;  // depth 0 marks invalid
      const Vec3 p_cam = pose.camera_from_world(ray.origin + hit.t * ray.direction);
      depth.at(h, w) = static_cast<float>(p_cam.z());
      for (int c = 0; c < 3; ++c) rgb.at(h, w, c) = static_cast<float>(hit.albedo[c]);
    }
  }
}

GridFeatureEncoder GridFeatureEncoder::make(std::uint64_t seed, int dim) {
  GridFeatureEncoder e;
  e.dim = dim;
  e.proj.resize(static_cast<size_t>(dim) * 4);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.5);
  for (float& v : e.proj) v = static_cast<float>(dist(rng));
  return e;
}

Image GridFeatureEncoder::encode(const Image& rgb, const Image& depth, int grid_h, int grid_w,
                                 double far) const {
  Image out(grid_h, grid_w, dim);
  const double ph = static_cast<double>(rgb.height) / grid_h;
  const double pw = static_cast<double>(rgb.width) / grid_w;
  for (int gy = 0; gy < grid_h; ++gy) {
    for (int gx = 0; gx < grid_w; ++gx) {
      const int h0 = static_cast<int>(std::floor(gy * ph));
      const int h1 = std::min(rgb.height, static_cast<int>(std::ceil((gy + 1) * ph)));
      const int w0 = static_cast<int>(std::floor(gx * pw));
      const int w1 = std::min(rgb.width, static_cast<int>(std::ceil((gx + 1) * pw)));
      double mean[4] = {0, 0, 0, 0};
      int count = 0;
      for (int h = h0; h < h1; ++h) {
        for (int w = w0; w < w1; ++w) {
          for (int c = 0; c < 3; ++c) mean[c] += rgb.at(h, w, c);
          mean[3] += std::min(static_cast<double>(depth.at(h, w)), far) / far;
          ++count;
        }
      }
      if (count == 0) continue;
      for (double& m : mean) m /= count;
      for (int c = 0; c < dim; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += proj[static_cast<size_t>(c) * 4 + k] * mean[k];
        out.at(gy, gx, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

StepObservation make_step_observation(const SceneSpec& scene, const CameraIntrinsics& intr,
                                      const TrajectoryStep& step,
                                      const GridFeatureEncoder* encoder) {
  StepObservation obs;
  obs.rgb.resize(kPanoramaViews);
  obs.depth.resize(kPanoramaViews);
  obs.poses.resize(kPanoramaViews);
  if (encoder) obs.features.emplace(kPanoramaViews);
  for (int v = 0; v < kPanoramaViews; ++v) {
    obs.poses[v] = Pose::from_position_yaw(step.position, step.base_yaw + v * kPanoramaStepRad);
    render_ground_truth(scene, intr, obs.poses[v], obs.rgb[v], obs.depth[v]);
    if (encoder) {
      (*obs.features)[v] = encoder->encode(obs.rgb[v], obs.depth[v], scene.grid_h, scene.grid_w);
    }
  }
  obs.validate();
  return obs;
}

}  // namespace npr
