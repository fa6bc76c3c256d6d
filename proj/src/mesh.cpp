#include "lsepose/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lsepose {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

// ---- PLY ----------------------------------------------------------------

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8:
      return 1;
    case PlyType::I16:
    case PlyType::U16:
      return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32:
      return 4;
    case PlyType::F64:
      return 8;
  }
  return 0;
}

PlyType ply_type_from(const std::string& s) {
  static const std::map<std::string, PlyType> names = {
      {"char", PlyType::I8},     {"int8", PlyType::I8},     {"uchar", PlyType::U8},
      {"uint8", PlyType::U8},    {"short", PlyType::I16},   {"int16", PlyType::I16},
      {"ushort", PlyType::U16},  {"uint16", PlyType::U16},  {"int", PlyType::I32},
      {"int32", PlyType::I32},   {"uint", PlyType::U32},    {"uint32", PlyType::U32},
      {"float", PlyType::F32},   {"float32", PlyType::F32}, {"double", PlyType::F64},
      {"float64", PlyType::F64},
  };
  auto it = names.find(s);
  if (it == names.end()) throw ParseError("ply: unknown property type '" + s + "'");
  return it->second;
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
  PlyType type = PlyType::F32;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

double ply_read_binary(const char*& p, const char* end, PlyType t) {
  const std::size_t n = ply_type_size(t);
  if (p + n > end) throw ParseError("ply: truncated binary payload");
  double v = 0;
  switch (t) {
    case PlyType::I8: {
      std::int8_t x;
      std::memcpy(&x, p, 1);
      v = x;
    } break;
    case PlyType::U8: {
      std::uint8_t x;
      std::memcpy(&x, p, 1);
      v = x;
    } break;
    case PlyType::I16: {
      std::int16_t x;
      std::memcpy(&x, p, 2);
      v = x;
    } break;
    case PlyType::U16: {
      std::uint16_t x;
      std::memcpy(&x, p, 2);
      v = x;
    } break;
    case PlyType::I32: {
      std::int32_t x;
      std::memcpy(&x, p, 4);
      v = x;
    } break;
    case PlyType::U32: {
      std::uint32_t x;
      std::memcpy(&x, p, 4);
      v = x;
    } break;
    case PlyType::F32: {
      float x;
      std::memcpy(&x, p, 4);
      v = x;
    } break;
    case PlyType::F64: {
      double x;
      std::memcpy(&x, p, 8);
      v = x;
    } break;
  }
  p += n;
  return v;
}

class AsciiTokens {
 public:
  AsciiTokens(const char* p, const char* end) : p_(p), end_(end) {}

  double next() {
    skip_ws();
    if (p_ >= end_) throw ParseError("ply: truncated ascii payload");
    char* after = nullptr;
    const double v = std::strtod(p_, &after);
    if (after == p_) throw ParseError("ply: expected a number");
    p_ = after;
    return v;
  }

 private:
  void skip_ws() {
    while (p_ < end_ && std::isspace(static_cast<unsigned char>(*p_))) ++p_;
  }
  const char* p_;
  const char* end_;
};

SurfaceMesh parse_ply(const std::string& data) {
  // header is always ascii lines terminated by end_header
  const std::size_t header_end = data.find("end_header");
  if (data.rfind("ply", 0) != 0 || header_end == std::string::npos)
    throw ParseError("ply: missing header");
  std::size_t body_off = data.find('\n', header_end);
  if (body_off == std::string::npos) throw ParseError("ply: missing payload");
  ++body_off;

  std::istringstream header(data.substr(0, header_end));
  std::string line;
  bool binary = false;
  bool format_seen = false;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "ply" || tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        throw ParseError("ply: unsupported format '" + fmt + "'");
      format_seen = true;
    } else if (tok == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      if (ls.fail()) throw ParseError("ply: malformed element line");
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty()) throw ParseError("ply: property before element");
      PlyProperty prop;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> prop.name;
        prop.is_list = true;
        prop.count_type = ply_type_from(ct);
        prop.type = ply_type_from(vt);
      } else {
        prop.type = ply_type_from(t);
        ls >> prop.name;
      }
      if (ls.fail()) throw ParseError("ply: malformed property line");
      elements.back().properties.push_back(prop);
    } else {
      throw ParseError("ply: unexpected header token '" + tok + "'");
    }
  }
  if (!format_seen) throw ParseError("ply: no format line");

  SurfaceMesh mesh;
  std::vector<std::array<int, 3>> faces;
  bool has_normals = false;

  const char* bin = data.data() + body_off;
  const char* bin_end = data.data() + data.size();
  AsciiTokens ascii(bin, bin_end);

  auto read_value = [&](PlyType t) {
    return binary ? ply_read_binary(bin, bin_end, t) : ascii.next();
  };

  for (const PlyElement& elem : elements) {
    const bool is_vertex = elem.name == "vertex";
    const bool is_face = elem.name == "face";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ilist = -1;
    for (std::size_t p = 0; p < elem.properties.size(); ++p) {
      const auto& prop = elem.properties[p];
      if (prop.name == "x") ix = static_cast<int>(p);
      if (prop.name == "y") iy = static_cast<int>(p);
      if (prop.name == "z") iz = static_cast<int>(p);
      if (prop.name == "nx") inx = static_cast<int>(p);
      if (prop.name == "ny") iny = static_cast<int>(p);
      if (prop.name == "nz") inz = static_cast<int>(p);
      if (prop.is_list &&
          (prop.name == "vertex_indices" || prop.name == "vertex_index"))
        ilist = static_cast<int>(p);
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
      throw ParseError("ply: vertex element lacks x/y/z");
    if (is_face && ilist < 0) throw ParseError("ply: face element lacks vertex index list");
    if (is_vertex) {
      mesh.vertices.reserve(elem.count);
      has_normals = inx >= 0 && iny >= 0 && inz >= 0;
      if (has_normals) mesh.normals.reserve(elem.count);
    }

    std::vector<double> scratch(elem.properties.size());
    for (std::size_t i = 0; i < elem.count; ++i) {
      std::vector<int> face;
      for (std::size_t p = 0; p < elem.properties.size(); ++p) {
        const auto& prop = elem.properties[p];
        if (prop.is_list) {
          const auto n = static_cast<std::size_t>(read_value(prop.count_type));
          if (n > 255) throw ParseError("ply: absurd face vertex count");
          std::vector<double> vals(n);
          for (auto& v : vals) v = read_value(prop.type);
          if (is_face && static_cast<int>(p) == ilist) {
            face.resize(n);
            for (std::size_t q = 0; q < n; ++q) face[q] = static_cast<int>(vals[q]);
          }
        } else {
          scratch[p] = read_value(prop.type);
        }
      }
      if (is_vertex) {
        mesh.vertices.emplace_back(scratch[ix], scratch[iy], scratch[iz]);
        if (has_normals) mesh.normals.emplace_back(scratch[inx], scratch[iny], scratch[inz]);
      } else if (is_face) {
        if (face.size() < 3) throw ParseError("ply: face with fewer than 3 vertices");
        for (std::size_t q = 2; q < face.size(); ++q)
          faces.push_back({face[0], face[q - 1], face[q]});
      }
    }
  }

  const int nverts = static_cast<int>(mesh.vertices.size());
  for (const auto& f : faces) {
    for (int v : f)
      if (v < 0 || v >= nverts) throw ParseError("ply: vertex index out of range");
  }
  mesh.triangles = std::move(faces);
  return mesh;
}

// ---- OBJ ----------------------------------------------------------------

struct ObjRef {
  int v = -1;
  int vn = -1;
};

ObjRef parse_obj_ref(const std::string& tok, int nverts, int nnormals) {
  ObjRef r;
  // forms: v, v/vt, v//vn, v/vt/vn
  const std::size_t s1 = tok.find('/');
  auto to_index = [&](const std::string& s, int count) {
    int idx = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ParseError("obj: malformed face token '" + tok + "'");
    if (idx < 0) idx = count + idx + 1;  // negative indices are relative
    if (idx < 1 || idx > count) throw ParseError("obj: face index out of range");
    return idx - 1;
  };
  if (s1 == std::string::npos) {
    r.v = to_index(tok, nverts);
    return r;
  }
  r.v = to_index(tok.substr(0, s1), nverts);
  const std::size_t s2 = tok.find('/', s1 + 1);
  if (s2 == std::string::npos) return r;  // v/vt
  const std::string vn = tok.substr(s2 + 1);
  if (!vn.empty()) r.vn = to_index(vn, nnormals);
  return r;
}

SurfaceMesh parse_obj(const std::string& data) {
  SurfaceMesh mesh;
  std::vector<Vec3> file_normals;
  std::vector<int> normal_of_vertex;  // -1 until a face assigns one
  std::istringstream in(data);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "v") {
      double x, y, z;
      ls >> x >> y >> z;
      if (ls.fail()) throw ParseError("obj: malformed vertex line");
      mesh.vertices.emplace_back(x, y, z);
      normal_of_vertex.push_back(-1);
    } else if (tok == "vn") {
      double x, y, z;
      ls >> x >> y >> z;
      if (ls.fail()) throw ParseError("obj: malformed normal line");
      file_normals.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<ObjRef> refs;
      std::string t;
      while (ls >> t)
        refs.push_back(parse_obj_ref(t, static_cast<int>(mesh.vertices.size()),
                                     static_cast<int>(file_normals.size())));
      if (refs.size() < 3) throw ParseError("obj: face with fewer than 3 vertices");
      for (const auto& r : refs)
        if (r.vn >= 0) normal_of_vertex[r.v] = r.vn;
      for (std::size_t q = 2; q < refs.size(); ++q)
        mesh.triangles.push_back({refs[0].v, refs[q - 1].v, refs[q].v});
    }
    // all other record types (vt, usemtl, o, g, s, mtllib, #) are ignored
  }

  if (!file_normals.empty()) {
    bool all_assigned = !mesh.vertices.empty();
    for (int n : normal_of_vertex)
      if (n < 0) all_assigned = false;
    if (all_assigned) {
      mesh.normals.resize(mesh.vertices.size());
      for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        mesh.normals[v] = file_normals[normal_of_vertex[v]];
    } else if (file_normals.size() == mesh.vertices.size()) {
      // positional correspondence, common for files without f-normal refs
      mesh.normals = file_normals;
    }
  }
  return mesh;
}

void drop_degenerate_triangles(SurfaceMesh& mesh) {
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3 e1 = mesh.vertices[tri[1]] - a;
    const Vec3 e2 = mesh.vertices[tri[2]] - a;
    const double cross2 = e1.cross(e2).squaredNorm();
    const double scale2 = std::max(e1.squaredNorm(), e2.squaredNorm());
    if (cross2 <= scale2 * scale2 * 1e-24 || scale2 == 0.0) {
      ++mesh.dropped_degenerate;
      continue;
    }
    kept.push_back(tri);
  }
  mesh.triangles = std::move(kept);
}

}  // namespace

Vec3 SurfaceMesh::triangle_normal(int t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3(0, 0, 1);
}

double SurfaceMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 *
         (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

void compute_vertex_normals(SurfaceMesh& mesh) {
  mesh.normals.assign(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    // cross product length is twice the area, giving the area weighting
    const Vec3 weighted =
        (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
    for (int v : tri) mesh.normals[v] += weighted;
  }
  for (auto& n : mesh.normals) {
    const double len = n.norm();
    n = len > 1e-300 ? Vec3(n / len) : Vec3(0, 0, 1);
  }
}

SurfaceMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string data = read_file(path);
  SurfaceMesh mesh = format == MeshFormat::Ply ? parse_ply(data) : parse_obj(data);
  drop_degenerate_triangles(mesh);
  if (mesh.vertices.empty() || mesh.triangles.empty())
    throw ParseError(path.string() + ": empty mesh");
  if (mesh.normals.empty()) {
    compute_vertex_normals(mesh);
  } else {
    for (auto& n : mesh.normals) {
      const double len = n.norm();
      if (len <= 1e-300) throw ParseError(path.string() + ": zero-length vertex normal");
      if (std::abs(len - 1.0) > 1e-6) n /= len;
    }
  }
  return mesh;
}

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return load_mesh(path, MeshFormat::Ply);
  if (ext == ".obj") return load_mesh(path, MeshFormat::Obj);
  throw ParseError("unknown mesh extension '" + ext + "'");
}

std::vector<PointSample> sample_surface(const SurfaceMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw Error("sample_surface: count must be >= 1");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(static_cast<int>(t));
    cumulative[t] = total;
  }
  if (total <= 0.0) throw Error("sample_surface: mesh has zero total area");

  Rng rng(seed);
  std::vector<PointSample> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const int t = static_cast<int>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const auto& tri = mesh.triangles[t];
    const double r1 = rng.uniform(), r2 = rng.uniform();
    const double s = std::sqrt(r1);
    const double b0 = 1.0 - s, b1 = s * (1.0 - r2), b2 = s * r2;
    PointSample p;
    p.position = b0 * mesh.vertices[tri[0]] + b1 * mesh.vertices[tri[1]] + b2 * mesh.vertices[tri[2]];
    Vec3 n = b0 * mesh.normals[tri[0]] + b1 * mesh.normals[tri[1]] + b2 * mesh.normals[tri[2]];
    const double len = n.norm();
    p.normal = len > 1e-12 ? Vec3(n / len) : mesh.triangle_normal(t);
    p.triangle = t;
    samples.push_back(p);
  }
  return samples;
}

std::vector<PointSample> radius_neighbors(const std::vector<PointSample>& samples,
                                          const Vec3& center, double radius) {
  if (radius <= 0.0) throw Error("radius_neighbors: radius must be > 0");
  std::vector<PointSample> out;
  const double r2 = radius * radius;
  for (const auto& s : samples)
    if ((s.position - center).squaredNorm() <= r2) out.push_back(s);
  return out;
}

double model_diameter(const std::vector<PointSample>& samples) {
  if (samples.size() < 2) throw Error("model_diameter: need at least 2 samples");
  double best = 0.0;
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3& a = samples[i].position;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = (samples[j].position - a).squaredNorm();
      if (d2 > best) best = d2;
    }
  }
  return std::sqrt(best);
}

ModelStats compute_stats(const std::vector<PointSample>& samples) {
  ModelStats st;
  st.sample_count = static_cast<int>(samples.size());
  if (samples.empty()) return st;
  st.bbox_min = st.bbox_max = samples[0].position;
  for (const auto& s : samples) {
    st.bbox_min = st.bbox_min.cwiseMin(s.position);
    st.bbox_max = st.bbox_max.cwiseMax(s.position);
  }
  st.diameter = samples.size() >= 2 ? model_diameter(samples) : 0.0;
  return st;
}

// ---- SampleGrid ----------------------------------------------------------

SampleGrid::SampleGrid(const std::vector<PointSample>& samples, double cell_size)
    : samples_(samples), cell_(cell_size) {
  if (cell_ <= 0) throw Error("SampleGrid: cell size must be > 0");
  if (samples_.empty()) return;
  Vec3 lo = samples_[0].position, hi = samples_[0].position;
  for (const auto& s : samples_) {
    lo = lo.cwiseMin(s.position);
    hi = hi.cwiseMax(s.position);
  }
  origin_ = lo;
  nx_ = static_cast<int>((hi.x() - lo.x()) / cell_) + 1;
  ny_ = static_cast<int>((hi.y() - lo.y()) / cell_) + 1;
  nz_ = static_cast<int>((hi.z() - lo.z()) / cell_) + 1;
  std::vector<int> counts(static_cast<std::size_t>(nx_) * ny_ * nz_, 0);
  std::vector<int> cell_of_sample(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto c = cell_of(samples_[i].position);
    const int f = flat(c[0], c[1], c[2]);
    cell_of_sample[i] = f;
    ++counts[f];
  }
  cells_.resize(counts.size());
  int run = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    cells_[c].begin = run;
    run += counts[c];
    cells_[c].end = cells_[c].begin;
  }
  order_.resize(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i)
    order_[cells_[cell_of_sample[i]].end++] = static_cast<int>(i);
}

std::array<int, 3> SampleGrid::cell_of(const Vec3& p) const {
  auto clampi = [](int v, int hi) { return std::max(0, std::min(v, hi - 1)); };
  return {clampi(static_cast<int>((p.x() - origin_.x()) / cell_), nx_),
          clampi(static_cast<int>((p.y() - origin_.y()) / cell_), ny_),
          clampi(static_cast<int>((p.z() - origin_.z()) / cell_), nz_)};
}

void SampleGrid::query(const Vec3& center, double radius, std::vector<int>& out) const {
  out.clear();
  if (samples_.empty()) return;
  const double r2 = radius * radius;
  const Vec3 lo = center.array() - radius;
  const Vec3 hi = center.array() + radius;
  const auto c0 = cell_of(lo);
  const auto c1 = cell_of(hi);
  for (int z = c0[2]; z <= c1[2]; ++z)
    for (int y = c0[1]; y <= c1[1]; ++y)
      for (int x = c0[0]; x <= c1[0]; ++x) {
        const Cell& cell = cells_[flat(x, y, z)];
        for (int k = cell.begin; k < cell.end; ++k) {
          const int i = order_[k];
          if ((samples_[i].position - center).squaredNorm() <= r2) out.push_back(i);
        }
      }
  std::sort(out.begin(), out.end());
}

int SampleGrid::nearest(const Vec3& p) const {
  if (samples_.empty()) return -1;
  const auto c = cell_of(p);
  int best = -1;
  double best2 = std::numeric_limits<double>::infinity();
  const int max_ring = std::max({nx_, ny_, nz_});
  for (int ring = 0; ring <= max_ring; ++ring) {
    // cells farther than this ring cannot beat the current best
    if (best >= 0) {
      const double reach = (ring - 1) * cell_;
      if (reach > 0 && best2 <= reach * reach) break;
    }
    const int x0 = std::max(0, c[0] - ring), x1 = std::min(nx_ - 1, c[0] + ring);
    const int y0 = std::max(0, c[1] - ring), y1 = std::min(ny_ - 1, c[1] + ring);
    const int z0 = std::max(0, c[2] - ring), z1 = std::min(nz_ - 1, c[2] + ring);
    for (int z = z0; z <= z1; ++z)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const int cheb = std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])});
          if (cheb != ring) continue;
          const Cell& cell = cells_[flat(x, y, z)];
          for (int k = cell.begin; k < cell.end; ++k) {
            const int i = order_[k];
            const double d2 = (samples_[i].position - p).squaredNorm();
            if (d2 < best2 || (d2 == best2 && i < best)) {
              best2 = d2;
              best = i;
            }
          }
        }
  }
  return best;
}

}  // namespace lsepose
