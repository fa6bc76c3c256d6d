#pragma once

#include "lsepose/common.hpp"

#include <filesystem>
#include <limits>

namespace lsepose {

// Per-pixel embedding image. Values are normalized embeddings (the space the
// per-model indices live in); background pixels carry a quiet-NaN sentinel in
// every channel. Stored as float32, matching the on-disk format.
struct LseMap {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;  // row-major, pixel-interleaved

  LseMap() = default;
  LseMap(int w, int h, int c)
      : width(w),
        height(h),
        channels(c),
        data(static_cast<std::size_t>(w) * h * c, std::numeric_limits<float>::quiet_NaN()) {}

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * channels;
  }
  float* pixel(int x, int y) { return data.data() + offset(x, y); }
  const float* pixel(int x, int y) const { return data.data() + offset(x, y); }
  bool valid(int x, int y) const { return !std::isnan(data[offset(x, y)]); }
  void invalidate(int x, int y) {
    float* p = pixel(x, y);
    for (int c = 0; c < channels; ++c) p[c] = std::numeric_limits<float>::quiet_NaN();
  }
};

// magic LSEM, u32 version, u32 width, u32 height, u32 channels, then
// float32 little-endian pixel-interleaved samples
void write_lse_map(const std::filesystem::path& path, const LseMap& map);
LseMap read_lse_map(const std::filesystem::path& path);

}  // namespace lsepose
