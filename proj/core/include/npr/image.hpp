#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npr/error.hpp"

namespace npr {

/// Dense H x W x C float image, row-major, channel-interleaved.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int h, int w, int c = 0) {
    return data[(static_cast<size_t>(h) * width + w) * channels + c];
  }
  float at(int h, int w, int c = 0) const {
    return data[(static_cast<size_t>(h) * width + w) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// Writes a 3-channel image as binary PPM (P6), values clamped to [0,1]
/// and quantized to 8 bits.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

/// FMAP binary feature map: magic "FMAP", u32 height, width, channels,
/// then f32 data row-major, little-endian.
void write_fmap(const std::string& path, const Image& img);
Image read_fmap(const std::string& path);

}  // namespace npr
