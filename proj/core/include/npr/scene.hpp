#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "npr/clouds.hpp"

namespace npr {

struct ScenePrimitive {
  enum class Kind { box, sphere };
  Kind kind = Kind::box;
  Vec3 box_min{0, 0, 0}, box_max{0, 0, 0};
  Vec3 center{0, 0, 0};
  double radius = 0.0;
  Vec3 albedo{0.5, 0.5, 0.5};
};

struct TrajectoryStep {
  Vec3 position{0, 0, 0};
  double base_yaw = 0.0;
};

/// Deterministic synthetic room: six flat-colored walls plus axis-aligned
/// boxes and spheres, ray-cast analytically for exact RGB-D ground truth.
struct SceneSpec {
  Vec3 room_min{0, 0, 0};
  Vec3 room_max{6, 3, 5};
  std::array<Vec3, 6> wall_albedo;  // -x, +x, -y, +y, -z, +z faces
  std::vector<ScenePrimitive> primitives;
  std::vector<TrajectoryStep> trajectory;
  int resolution = 64;  // square ingest views
  int grid_h = 14, grid_w = 14;
  std::uint64_t seed = 0;

  void validate() const;
  static SceneSpec from_json(const std::string& text);
  std::string to_json() const;
};

/// Room with a seeded arrangement of colored boxes and spheres and a
/// `steps`-pose straight-line trajectory through the middle.
SceneSpec make_default_scene(std::uint64_t seed, int steps = 5, int resolution = 64);

struct RayHit {
  bool hit = false;
  double t = 0.0;
  Vec3 albedo{0, 0, 0};
};

/// Nearest surface along the ray; the camera is assumed inside the room,
/// so the room walls always terminate the ray.
RayHit raycast_scene(const SceneSpec& scene, const Ray& ray);

/// Exact RGB + z-depth through the pixel centers.
void render_ground_truth(const SceneSpec& scene, const CameraIntrinsics& intr, const Pose& pose,
                         Image& rgb, Image& depth);

/// Random-projection grid features standing in for a pretrained image
/// encoder: each grid cell projects its mean color and depth through a
/// fixed seeded matrix.
struct GridFeatureEncoder {
  int dim = 0;
  std::vector<float> proj;  // dim x 4

  static GridFeatureEncoder make(std::uint64_t seed, int dim);
  Image encode(const Image& rgb, const Image& depth, int grid_h, int grid_w,
               double far = kDefaultFarPlane) const;
};

/// Observation for one trajectory step: 12 posed views 30 degrees apart.
StepObservation make_step_observation(const SceneSpec& scene, const CameraIntrinsics& intr,
                                      const TrajectoryStep& step,
                                      const GridFeatureEncoder* encoder = nullptr);

}  // namespace npr
