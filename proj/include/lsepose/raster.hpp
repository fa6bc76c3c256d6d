#pragma once

#include "lsepose/camera.hpp"
#include "lsepose/mesh.hpp"

#include <filesystem>

namespace lsepose {

// Binary pixel mask.
struct Mask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, std::uint8_t v) { data[static_cast<std::size_t>(y) * width + x] = v; }
  std::size_t count() const;
};

// Dense per-pixel render targets. Depth is camera-z in model units with +inf
// for background; instance id 0 means background; object points are in the
// object frame of the instance that won the depth test.
struct SceneMaps {
  int width = 0, height = 0;
  std::vector<float> depth;
  std::vector<std::int32_t> instance;
  std::vector<Vec3> object_point;
  std::vector<std::int32_t> triangle;  // source triangle of the winning fragment

  SceneMaps() = default;
  SceneMaps(int w, int h);
  void clear();
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool foreground(int x, int y) const { return instance[idx(x, y)] != 0; }
};

struct RenderOptions {
  double near_plane = 1e-6;
};

// Rasterizes the mesh under `pose` into `target` with a z-buffer. Pixel
// centers are the sample points; shared edges follow the top-left fill rule;
// triangles are clipped against the near plane. No back-face culling, so
// thin shells render from both sides. Deterministic for identical inputs.
void render(const SurfaceMesh& mesh, const Pose& pose, const CameraIntrinsics& cam,
            int instance_id, SceneMaps& target, const RenderOptions& opts = {});

Mask mask_of(const SceneMaps& maps, int instance_id);

// |a ∩ b| / |a ∪ b|, zero when both masks are empty.
double iou(const Mask& a, const Mask& b);

// Morphological erosion (pixels < 0) or dilation (> 0) with a square
// structuring element of the given radius.
Mask morph(const Mask& mask, int pixels);

// Raw float32 depth map with a 16-byte header (magic DPTH, u32 width,
// u32 height, u32 reserved), little endian.
void write_depth(const std::filesystem::path& path, const std::vector<float>& depth, int width,
                 int height);
std::vector<float> read_depth(const std::filesystem::path& path, int& width, int& height);

// 8-bit grayscale PNG; value 0 is background, anything else is the instance
// id the mask belongs to.
void write_mask_png(const std::filesystem::path& path, const Mask& mask, std::uint8_t value);
Mask read_mask_png(const std::filesystem::path& path, std::uint8_t& value);

}  // namespace lsepose
