#include "npr/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace npr {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
  if (img.channels != 3) raise(Errc::shape_mismatch, "PPM requires 3 channels");
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(img.width) * 3);
  for (int h = 0; h < img.height; ++h) {
    for (int w = 0; w < img.width; ++w) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(h, w, c), 0.0f, 1.0f);
        row[static_cast<size_t>(w) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  std::string magic;
  is >> magic;
  if (magic != "P6") raise(Errc::bad_magic, "not a P6 PPM: " + path);
  int w = 0, h = 0, maxval = 0;
  is >> w >> h >> maxval;
  is.get();  // single whitespace after header
  if (w < 1 || h < 1 || maxval != 255) raise(Errc::corrupt_length, "bad PPM header: " + path);
  Image img(h, w, 3);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    raise(Errc::corrupt_length, "truncated PPM: " + path);
  }
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0f;
  return img;
}

void write_fmap(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  os.write("FMAP", 4);
  write_u32(os, static_cast<std::uint32_t>(img.height));
  write_u32(os, static_cast<std::uint32_t>(img.width));
  write_u32(os, static_cast<std::uint32_t>(img.channels));
  os.write(reinterpret_cast<const char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

Image read_fmap(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "FMAP", 4) != 0) {
    raise(Errc::bad_magic, "not an FMAP file: " + path);
  }
  const std::uint32_t h = read_u32(is);
  const std::uint32_t w = read_u32(is);
  const std::uint32_t c = read_u32(is);
  if (!is || h == 0 || w == 0 || c == 0) raise(Errc::corrupt_length, "bad FMAP header: " + path);
  Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  is.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(img.data.size() * sizeof(float))) {
    raise(Errc::corrupt_length, "truncated FMAP: " + path);
  }
  return img;
}

}  // namespace npr
