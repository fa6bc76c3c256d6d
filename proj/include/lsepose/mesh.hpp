#pragma once

#include "lsepose/common.hpp"

#include <array>
#include <filesystem>

namespace lsepose {

// Triangle mesh in the units of the input file. Vertex normals are either
// read from the file or computed by area-weighted averaging of triangle
// normals; after load_mesh they are always present and unit length.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;  // per vertex
  int dropped_degenerate = 0; // zero-area triangles removed at load

  Vec3 triangle_normal(int t) const;
  double triangle_area(int t) const;
};

// Oriented point on the mesh surface.
struct PointSample {
  Vec3 position;
  Vec3 normal;   // unit length
  int triangle;  // source triangle id
};

struct ModelStats {
  double diameter = 0.0;
  int sample_count = 0;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Zero();
};

enum class MeshFormat { Ply, Obj };

// Reads ASCII/binary-little-endian PLY (vertex/face elements) or ASCII OBJ
// (v/vn/f records). Degenerate zero-area triangles are dropped and counted.
// Throws ParseError on malformed input or out-of-range indices.
SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
SurfaceMesh load_mesh(const std::filesystem::path& path);  // format from extension

// Recomputes per-vertex normals by area-weighted triangle-normal averaging.
void compute_vertex_normals(SurfaceMesh& mesh);

// Area-uniform surface sampling: triangle chosen proportionally to area,
// point by uniform barycentric coordinates, normal interpolated from vertex
// normals and renormalized. Deterministic for a fixed seed.
std::vector<PointSample> sample_surface(const SurfaceMesh& mesh, int count, std::uint64_t seed);

// Exactly the samples with |position - center| <= radius, in index order.
std::vector<PointSample> radius_neighbors(const std::vector<PointSample>& samples,
                                          const Vec3& center, double radius);

// Maximum pairwise distance over the samples (exact).
double model_diameter(const std::vector<PointSample>& samples);

ModelStats compute_stats(const std::vector<PointSample>& samples);

// Uniform grid over sample positions for exact radius queries; results are
// identical to radius_neighbors (same order). Used on hot paths.
class SampleGrid {
 public:
  SampleGrid(const std::vector<PointSample>& samples, double cell_size);

  // indices of samples within radius of center, ascending
  void query(const Vec3& center, double radius, std::vector<int>& out) const;

  // index of the nearest sample to p (-1 if empty); exact
  int nearest(const Vec3& p) const;

 private:
  struct Cell {
    int begin = 0;
    int end = 0;
  };
  std::array<int, 3> cell_of(const Vec3& p) const;
  int flat(int x, int y, int z) const { return (z * ny_ + y) * nx_ + x; }

  const std::vector<PointSample>& samples_;
  double cell_;
  Vec3 origin_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<Cell> cells_;
  std::vector<int> order_;  // sample indices grouped by cell, ascending in each
};

}  // namespace lsepose
