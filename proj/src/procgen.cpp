#include "lsepose/procgen.hpp"

#include <algorithm>

namespace lsepose {

namespace {

double polygon_area2(const std::vector<Vec2>& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return acc;
}

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d1 = cross2(a, b, p);
  const double d2 = cross2(b, c, p);
  const double d3 = cross2(c, a, p);
  return d1 >= 0 && d2 >= 0 && d3 >= 0;
}

// Ear clipping for simple CCW polygons.
std::vector<std::array<int, 3>> triangulate(const std::vector<Vec2>& poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> tris;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int ip = idx[(i + idx.size() - 1) % idx.size()];
      const int ic = idx[i];
      const int in = idx[(i + 1) % idx.size()];
      if (cross2(poly[ip], poly[ic], poly[in]) <= 0) continue;  // reflex corner
      bool blocked = false;
      for (int other : idx) {
        if (other == ip || other == ic || other == in) continue;
        if (point_in_triangle(poly[other], poly[ip], poly[ic], poly[in])) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({ip, ic, in});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw Error("triangulate: polygon is not simple");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

SurfaceMesh make_prism(const std::vector<Vec2>& profile_in, double height) {
  if (profile_in.size() < 3) throw Error("make_prism: need at least 3 profile points");
  std::vector<Vec2> profile = profile_in;
  if (polygon_area2(profile) < 0) std::reverse(profile.begin(), profile.end());

  const int n = static_cast<int>(profile.size());
  const double hz = height / 2.0;
  SurfaceMesh mesh;
  mesh.vertices.reserve(2 * n);
  for (const auto& p : profile) mesh.vertices.emplace_back(p.x(), p.y(), -hz);
  for (const auto& p : profile) mesh.vertices.emplace_back(p.x(), p.y(), hz);

  const auto cap = triangulate(profile);
  for (const auto& t : cap) {
    mesh.triangles.push_back({t[0], t[2], t[1]});              // bottom, normal -z
    mesh.triangles.push_back({n + t[0], n + t[1], n + t[2]});  // top, normal +z
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    mesh.triangles.push_back({i, j, n + j});
    mesh.triangles.push_back({i, n + j, n + i});
  }
  compute_vertex_normals(mesh);
  return mesh;
}

SurfaceMesh make_box(double sx, double sy, double sz) {
  return make_prism({{-sx / 2, -sy / 2}, {sx / 2, -sy / 2}, {sx / 2, sy / 2}, {-sx / 2, sy / 2}},
                    sz);
}

SurfaceMesh make_lblock(double scale) {
  // unequal arms and widths: no mirror line, so flipped poses cannot shadow
  // the true silhouette
  const double s = scale;
  return make_prism({{0, 0},
                     {14 * s, 0},
                     {14 * s, 3.5 * s},
                     {5 * s, 3.5 * s},
                     {5 * s, 8.5 * s},
                     {0, 8.5 * s}},
                    5 * s);
}

SurfaceMesh make_wedge(double scale) {
  const double s = scale;
  return make_prism(
      {{0, 0}, {13 * s, 0}, {13 * s, 3.5 * s}, {6 * s, 9.5 * s}, {0, 3 * s}}, 5.5 * s);
}

SurfaceMesh make_cross_prism(double scale) {
  const double a = 2.0 * scale;  // arm half width
  const double l = 7.0 * scale;  // arm half length
  return make_prism({{l, -a},
                     {l, a},
                     {a, a},
                     {a, l},
                     {-a, l},
                     {-a, a},
                     {-l, a},
                     {-l, -a},
                     {-a, -a},
                     {-a, -l},
                     {a, -l},
                     {a, -a}},
                    4.0 * scale);
}

SurfaceMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw Error("make_cylinder: need at least 3 segments");
  SurfaceMesh mesh;
  const double hz = height / 2.0;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -hz);
  }
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), hz);
  }
  const int bc = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0, 0, -hz);
  const int tc = bc + 1;
  mesh.vertices.emplace_back(0, 0, hz);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mesh.triangles.push_back({i, j, segments + j});
    mesh.triangles.push_back({i, segments + j, segments + i});
    mesh.triangles.push_back({bc, j, i});
    mesh.triangles.push_back({tc, segments + i, segments + j});
  }
  compute_vertex_normals(mesh);
  return mesh;
}

SurfaceMesh make_uv_sphere(double radius, int rings, int segments) {
  if (rings < 2 || segments < 3) throw Error("make_uv_sphere: too few rings or segments");
  SurfaceMesh mesh;
  mesh.vertices.emplace_back(0, 0, radius);  // north pole
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * M_PI * s / segments;
      mesh.vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                                 radius * std::sin(phi) * std::sin(theta),
                                 radius * std::cos(phi));
    }
  }
  const int south = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0, 0, -radius);

  auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  }
  for (int s = 0; s < segments; ++s)
    mesh.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  compute_vertex_normals(mesh);
  return mesh;
}

SurfaceMesh subdivide(const SurfaceMesh& mesh) {
  SurfaceMesh out;
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 ab = (a + b) / 2, bc = (b + c) / 2, ca = (c + a) / 2;
    const int base = static_cast<int>(out.vertices.size());
    for (const Vec3& v : {a, b, c, ab, bc, ca}) out.vertices.push_back(v);
    out.triangles.push_back({base + 0, base + 3, base + 5});
    out.triangles.push_back({base + 3, base + 1, base + 4});
    out.triangles.push_back({base + 5, base + 4, base + 2});
    out.triangles.push_back({base + 3, base + 4, base + 5});
  }
  compute_vertex_normals(out);
  return out;
}

}  // namespace lsepose
