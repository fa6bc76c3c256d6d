#include "lsepose/raster.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace lsepose {

namespace {

struct ClipVertex {
  Vec3 camera;
  Vec3 object;
};

// Sutherland-Hodgman clip of a triangle against z >= near. Produces 0, 3 or 4
// vertices; interpolation is linear in camera space, which carries the object
// coordinates exactly.
int clip_near(const ClipVertex in[3], double near_z, ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.camera.z() >= near_z;
    const bool b_in = b.camera.z() >= near_z;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (near_z - a.camera.z()) / (b.camera.z() - a.camera.z());
      ClipVertex v;
      v.camera = a.camera + t * (b.camera - a.camera);
      v.object = a.object + t * (b.object - a.object);
      out[n++] = v;
    }
  }
  return n;
}

inline double edge_fn(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Top-left fill rule for the positive-orientation convention used below.
inline bool edge_counts_boundary(const Vec2& a, const Vec2& b) {
  const double dy = b.y() - a.y();
  return dy < 0 || (dy == 0 && b.x() - a.x() > 0);
}

void raster_triangle(const ClipVertex v[3], const CameraIntrinsics& cam, int instance_id,
                     int triangle_id, SceneMaps& target) {
  Vec2 p[3];
  for (int i = 0; i < 3; ++i) p[i] = project(v[i].camera, cam);

  double area2 = edge_fn(p[0], p[1], p[2].x(), p[2].y());
  ClipVertex verts[3] = {v[0], v[1], v[2]};
  Vec2 q[3] = {p[0], p[1], p[2]};
  if (area2 < 0) {  // normalize orientation so edge functions are >= 0 inside
    std::swap(verts[1], verts[2]);
    std::swap(q[1], q[2]);
    area2 = -area2;
  }
  if (area2 == 0) return;

  const double minx = std::min({q[0].x(), q[1].x(), q[2].x()});
  const double maxx = std::max({q[0].x(), q[1].x(), q[2].x()});
  const double miny = std::min({q[0].y(), q[1].y(), q[2].y()});
  const double maxy = std::max({q[0].y(), q[1].y(), q[2].y()});
  const int x0 = std::max(0, static_cast<int>(std::ceil(minx - 0.5)));
  const int x1 = std::min(target.width - 1, static_cast<int>(std::floor(maxx - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(miny - 0.5)));
  const int y1 = std::min(target.height - 1, static_cast<int>(std::floor(maxy - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const bool tl0 = edge_counts_boundary(q[1], q[2]);
  const bool tl1 = edge_counts_boundary(q[2], q[0]);
  const bool tl2 = edge_counts_boundary(q[0], q[1]);

  const double invz[3] = {1.0 / verts[0].camera.z(), 1.0 / verts[1].camera.z(),
                          1.0 / verts[2].camera.z()};
  const Vec3 obj_over_z[3] = {verts[0].object * invz[0], verts[1].object * invz[1],
                              verts[2].object * invz[2]};

  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double e0 = edge_fn(q[1], q[2], px, py);
      const double e1 = edge_fn(q[2], q[0], px, py);
      const double e2 = edge_fn(q[0], q[1], px, py);
      const bool in0 = e0 > 0 || (e0 == 0 && tl0);
      const bool in1 = e1 > 0 || (e1 == 0 && tl1);
      const bool in2 = e2 > 0 || (e2 == 0 && tl2);
      if (!(in0 && in1 && in2)) continue;
      const double l0 = e0 / area2, l1 = e1 / area2, l2 = e2 / area2;
      const double izp = l0 * invz[0] + l1 * invz[1] + l2 * invz[2];
      const double z = 1.0 / izp;
      const float zf = static_cast<float>(z);
      const std::size_t at = target.idx(x, y);
      if (zf < target.depth[at]) {
        target.depth[at] = zf;
        target.instance[at] = instance_id;
        target.triangle[at] = triangle_id;
        target.object_point[at] =
            (l0 * obj_over_z[0] + l1 * obj_over_z[1] + l2 * obj_over_z[2]) * z;
      }
    }
  }
}

}  // namespace

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto v : data) n += v != 0;
  return n;
}

SceneMaps::SceneMaps(int w, int h) : width(w), height(h) {
  depth.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity());
  instance.assign(static_cast<std::size_t>(w) * h, 0);
  object_point.assign(static_cast<std::size_t>(w) * h, Vec3::Zero());
  triangle.assign(static_cast<std::size_t>(w) * h, -1);
}

void SceneMaps::clear() {
  std::fill(depth.begin(), depth.end(), std::numeric_limits<float>::infinity());
  std::fill(instance.begin(), instance.end(), 0);
  std::fill(triangle.begin(), triangle.end(), -1);
}

void render(const SurfaceMesh& mesh, const Pose& pose, const CameraIntrinsics& cam,
            int instance_id, SceneMaps& target, const RenderOptions& opts) {
  if (target.width != cam.width || target.height != cam.height)
    throw DimensionError("render: target size does not match camera");
  if (!pose.is_valid(1e-6)) throw Error("render: pose rotation is not orthonormal");

  std::vector<Vec3> cam_verts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam_verts[i] = pose.apply(mesh.vertices[i]);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    ClipVertex in[3];
    for (int i = 0; i < 3; ++i) {
      in[i].camera = cam_verts[tri[i]];
      in[i].object = mesh.vertices[tri[i]];
    }
    if (in[0].camera.z() >= opts.near_plane && in[1].camera.z() >= opts.near_plane &&
        in[2].camera.z() >= opts.near_plane) {
      raster_triangle(in, cam, instance_id, static_cast<int>(t), target);
      continue;
    }
    ClipVertex clipped[4];
    const int n = clip_near(in, opts.near_plane, clipped);
    for (int i = 2; i < n; ++i) {
      ClipVertex fan[3] = {clipped[0], clipped[i - 1], clipped[i]};
      raster_triangle(fan, cam, instance_id, static_cast<int>(t), target);
    }
  }
}

Mask mask_of(const SceneMaps& maps, int instance_id) {
  if (instance_id < 1) throw Error("mask_of: instance ids start at 1");
  Mask m(maps.width, maps.height);
  for (std::size_t i = 0; i < maps.instance.size(); ++i)
    m.data[i] = maps.instance[i] == instance_id ? 1 : 0;
  return m;
}

double iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError("iou: mask dimensions differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Mask morph(const Mask& mask, int pixels) {
  if (pixels == 0) return mask;
  const bool dilate = pixels > 0;
  const int r = std::abs(pixels);
  Mask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool any = false, all = true;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx, ny = y + dy;
          const bool v = nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height &&
                         mask.at(nx, ny) != 0;
          any = any || v;
          all = all && v;
        }
      }
      out.set(x, y, dilate ? (any ? 1 : 0) : (all ? 1 : 0));
    }
  }
  return out;
}

void write_depth(const std::filesystem::path& path, const std::vector<float>& depth, int width,
                 int height) {
  if (depth.size() != static_cast<std::size_t>(width) * height)
    throw DimensionError("write_depth: buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const char magic[4] = {'D', 'P', 'T', 'H'};
  const std::uint32_t w = width, h = height, reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  out.write(reinterpret_cast<const char*>(depth.data()),
            static_cast<std::streamsize>(depth.size() * sizeof(float)));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<float> read_depth(const std::filesystem::path& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  std::uint32_t w = 0, h = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, "DPTH", 4) != 0)
    throw IoError(path.string() + ": bad depth map header");
  std::vector<float> depth(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(depth.data()),
          static_cast<std::streamsize>(depth.size() * sizeof(float)));
  if (!in) throw IoError(path.string() + ": truncated depth map");
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  return depth;
}

}  // namespace lsepose
