#include "npr/clouds.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace npr {

void StepObservation::validate() const {
  if (rgb.size() != kPanoramaViews || depth.size() != kPanoramaViews ||
      poses.size() != kPanoramaViews) {
    raise(Errc::wrong_view_count, "a step carries exactly 12 views");
  }
  for (int i = 0; i < kPanoramaViews; ++i) {
    if (rgb[i].channels != 3 || depth[i].channels != 1 ||
        rgb[i].height != depth[i].height || rgb[i].width != depth[i].width ||
        rgb[i].height != rgb[0].height || rgb[i].width != rgb[0].width) {
      raise(Errc::dimension_mismatch, "rgb/depth dimensions disagree");
    }
  }
  for (int i = 1; i < kPanoramaViews; ++i) {
    const double sep = wrap_angle(poses[i].yaw() - poses[i - 1].yaw());
    if (std::abs(sep - kPanoramaStepRad) > 1e-6) {
      raise(Errc::invalid_spec, "consecutive view yaws must be 30 degrees apart");
    }
  }
  if (features) {
    if (features->size() != kPanoramaViews) {
      raise(Errc::wrong_view_count, "feature maps must cover all 12 views");
    }
    for (int i = 1; i < kPanoramaViews; ++i) {
      if ((*features)[i].height != (*features)[0].height ||
          (*features)[i].width != (*features)[0].width ||
          (*features)[i].channels != (*features)[0].channels) {
        raise(Errc::dimension_mismatch, "feature grid dimensions disagree");
      }
    }
  }
}

void integrate_step_points(PointCloudB& cloud, const StepObservation& obs,
                           const CameraIntrinsics& intr, double far) {
  obs.validate();
  for (int v = 0; v < kPanoramaViews; ++v) {
    const Image& rgb = obs.rgb[v];
    const Image& dep = obs.depth[v];
    if (rgb.height != intr.height || rgb.width != intr.width) {
      raise(Errc::dimension_mismatch, "observation resolution disagrees with intrinsics");
    }
    const Pose& pose = obs.poses[v];
    for (int h = 0; h < rgb.height; ++h) {
      for (int w = 0; w < rgb.width; ++w) {
        const double d = dep.at(h, w);
        if (!(d > 0.0) || d > far) continue;
        const Vec3 p = unproject_pixel(intr, pose, {h + 0.5, w + 0.5}, d);
        cloud.positions.push_back(static_cast<float>(p.x()));
        cloud.positions.push_back(static_cast<float>(p.y()));
        cloud.positions.push_back(static_cast<float>(p.z()));
        cloud.colors.push_back(rgb.at(h, w, 0));
        cloud.colors.push_back(rgb.at(h, w, 1));
        cloud.colors.push_back(rgb.at(h, w, 2));
      }
    }
  }
}

double feature_scale(const CameraIntrinsics& intr, double depth, int grid_width) {
  if (!(depth > 0.0)) raise(Errc::non_positive_depth, "feature scale needs depth > 0");
  if (grid_width < 1) raise(Errc::invalid_spec, "grid width must be >= 1");
  return (1.0 / grid_width) * std::tan(intr.hfov / 2.0) * depth;
}

void integrate_step_features(FeatureCloudM& cloud, const StepObservation& obs,
                             const CameraIntrinsics& intr, double far) {
  obs.validate();
  if (!obs.features) raise(Errc::missing_features, "step carries no feature maps");
  const std::vector<Image>& maps = *obs.features;
  const int gh = maps[0].height;
  const int gw = maps[0].width;
  const int dim = maps[0].channels;
  if (cloud.dim == 0 && cloud.size() == 0) cloud.dim = dim;
  if (cloud.dim != dim) raise(Errc::dimension_mismatch, "feature dimension differs from cloud");

  for (int v = 0; v < kPanoramaViews; ++v) {
    const Image& dep = obs.depth[v];
    const Pose& pose = obs.poses[v];
    const double yaw = pose.yaw();
    const double ph = static_cast<double>(dep.height) / gh;  // patch extent in pixels
    const double pw = static_cast<double>(dep.width) / gw;
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        // mean of valid depths over the image patch behind this cell
        const int h0 = static_cast<int>(std::floor(gy * ph));
        const int h1 = static_cast<int>(std::ceil((gy + 1) * ph));
        const int w0 = static_cast<int>(std::floor(gx * pw));
        const int w1 = static_cast<int>(std::ceil((gx + 1) * pw));
        double sum = 0.0;
        int count = 0;
        for (int h = h0; h < h1 && h < dep.height; ++h) {
          for (int w = w0; w < w1 && w < dep.width; ++w) {
            const double d = dep.at(h, w);
            if (d > 0.0 && d <= far) {
              sum += d;
              ++count;
            }
          }
        }
        if (count == 0) continue;
        const double depth = sum / count;
        const Vec3 q = unproject_pixel(intr, pose, {(gy + 0.5) * ph, (gx + 0.5) * pw}, depth);
        cloud.positions.push_back(static_cast<float>(q.x()));
        cloud.positions.push_back(static_cast<float>(q.y()));
        cloud.positions.push_back(static_cast<float>(q.z()));
        for (int c = 0; c < dim; ++c) cloud.features.push_back(maps[v].at(gy, gx, c));
        cloud.directions.push_back(static_cast<float>(yaw));
        cloud.scales.push_back(static_cast<float>(feature_scale(intr, depth, gw)));
      }
    }
  }
}

namespace {

constexpr char kMagic[4] = {'N', 'P', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

struct Header {
  std::uint8_t kind = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

void write_header(std::ostream& os, const Header& h) {
  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&kVersion), 4);
  os.write(reinterpret_cast<const char*>(&h.kind), 1);
  os.write(reinterpret_cast<const char*>(&h.dim), 4);
  os.write(reinterpret_cast<const char*>(&h.count), 8);
}

Header read_header(std::istream& is, const std::string& path, std::uint8_t expect_kind) {
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    raise(Errc::bad_magic, "not an NPCD file: " + path);
  }
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (!is || version != kVersion) raise(Errc::version_unsupported, "NPCD version: " + path);
  Header h;
  is.read(reinterpret_cast<char*>(&h.kind), 1);
  is.read(reinterpret_cast<char*>(&h.dim), 4);
  is.read(reinterpret_cast<char*>(&h.count), 8);
  if (!is) raise(Errc::corrupt_length, "NPCD header truncated: " + path);
  if (h.kind != expect_kind) raise(Errc::invalid_spec, "NPCD kind mismatch: " + path);
  return h;
}

void write_f32(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_f32(std::istream& is, std::vector<float>& v, std::uint64_t n, const std::string& path) {
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
    raise(Errc::corrupt_length, "NPCD data truncated: " + path);
  }
}

void expect_eof(std::istream& is, const std::string& path) {
  char extra = 0;
  is.read(&extra, 1);
  if (is.gcount() != 0) raise(Errc::corrupt_length, "NPCD trailing bytes: " + path);
}

}  // namespace

void save_cloud(const std::string& path, const PointCloudB& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  write_header(os, Header{0, 3, cloud.size()});
  write_f32(os, cloud.positions);
  write_f32(os, cloud.colors);
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

void save_cloud(const std::string& path, const FeatureCloudM& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  write_header(os, Header{1, static_cast<std::uint32_t>(cloud.dim), cloud.size()});
  write_f32(os, cloud.positions);
  write_f32(os, cloud.features);
  write_f32(os, cloud.directions);
  write_f32(os, cloud.scales);
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

PointCloudB load_point_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  const Header h = read_header(is, path, 0);
  if (h.dim != 3) raise(Errc::corrupt_length, "point cloud dim must be 3: " + path);
  PointCloudB cloud;
  read_f32(is, cloud.positions, h.count * 3, path);
  read_f32(is, cloud.colors, h.count * 3, path);
  expect_eof(is, path);
  return cloud;
}

FeatureCloudM load_feature_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  const Header h = read_header(is, path, 1);
  FeatureCloudM cloud;
  cloud.dim = static_cast<int>(h.dim);
  read_f32(is, cloud.positions, h.count * 3, path);
  read_f32(is, cloud.features, h.count * h.dim, path);
  read_f32(is, cloud.directions, h.count, path);
  read_f32(is, cloud.scales, h.count, path);
  expect_eof(is, path);
  return cloud;
}

}  // namespace npr
