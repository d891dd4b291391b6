#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "npr/raster.hpp"
#include "npr/stq.hpp"

namespace npr {

/// Minimal TOML subset: [section] headers, key = value pairs with bool,
/// integer, float and quoted-string values, # comments.
struct TomlValue {
  enum class Kind { boolean, integer, floating, string };
  Kind kind = Kind::integer;
  bool b = false;
  std::int64_t i = 0;
  double f = 0.0;
  std::string s;

  double as_number() const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);
std::string write_toml(const TomlTable& table);

/// Full engine configuration; defaults are the standard run settings
/// (12-view 90-degree panoramas at 224x224, K=16 within 1 m, 256 ray
/// samples over 0-10 m).
struct EngineConfig {
  int width = 224;
  int height = 224;
  double hfov_deg = 90.0;

  int grid_h = 14;
  int grid_w = 14;
  int feature_dim = 16;
  int descriptor_dim = 16;

  SamplingConfig sampling;

  int embed_dim = 768;
  int attn_heads = 8;
  int patch = 16;

  RasterOptions raster;

  int bench_warmup = 3;
  int bench_runs = 10;

  int threads = 0;
  std::uint64_t seed = 7;

  CameraIntrinsics intrinsics() const {
    return CameraIntrinsics::from_hfov(width, height, hfov_deg * M_PI / 180.0);
  }
  CameraIntrinsics grid_intrinsics() const {
    return CameraIntrinsics::from_hfov(grid_w, grid_h, hfov_deg * M_PI / 180.0);
  }

  void apply(const TomlTable& table);
  TomlTable to_table() const;
  std::string to_toml() const { return write_toml(to_table()); }

  static EngineConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace npr
