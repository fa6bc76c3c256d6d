#include "lsepose/index.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lsepose {

namespace {

struct HeapItem {
  double d2 = 0.0;
  int rank = 0;  // 0 stable, 1 unstable: unstable entries lose distance ties
  int id = -1;
};

inline bool better(const HeapItem& a, const HeapItem& b) {
  if (a.d2 != b.d2) return a.d2 < b.d2;
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.id < b.id;
}

inline double squared_distance(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void emit_hits(std::vector<HeapItem>& heap, std::vector<KnnHit>& out) {
  std::sort(heap.begin(), heap.end(), better);
  out.resize(heap.size());
  for (std::size_t i = 0; i < heap.size(); ++i)
    out[i] = {heap[i].id, std::sqrt(heap[i].d2)};
}

}  // namespace

LseIndex::LseIndex(std::string model_id, LseParams params, NormalizationStats stats,
                   std::vector<PointSample> samples, std::vector<std::uint8_t> stable,
                   Eigen::MatrixXd vectors, int degenerate_skipped)
    : model_id_(std::move(model_id)),
      params_(std::move(params)),
      stats_(std::move(stats)),
      samples_(std::move(samples)),
      stable_(std::move(stable)),
      vectors_(std::move(vectors)),
      degenerate_skipped_(degenerate_skipped) {
  if (samples_.empty()) throw Error("LseIndex: no entries");
  if (vectors_.cols() != static_cast<Eigen::Index>(samples_.size()) ||
      stable_.size() != samples_.size())
    throw DimensionError("LseIndex: inconsistent entry arrays");
  build_tree();
}

int LseIndex::build_node(int begin, int end) {
  constexpr int kLeafSize = 16;
  const int dim = static_cast<int>(vectors_.rows());
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[node_id].begin = begin;
    nodes_[node_id].end = end;
    return node_id;
  }
  // split along the dimension with the widest spread in this range
  int axis = 0;
  double best_spread = -1.0;
  for (int d = 0; d < dim; ++d) {
    double lo = vectors_(d, perm_[begin]), hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      const double v = vectors_(d, perm_[i]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      axis = d;
    }
  }
  const int mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](int a, int b) {
                     const double va = vectors_(axis, a), vb = vectors_(axis, b);
                     return va != vb ? va < vb : a < b;
                   });
  const double split = vectors_(axis, perm_[mid]);
  const int left = build_node(begin, mid);
  const int right = build_node(mid, end);
  nodes_[node_id].axis = axis;
  nodes_[node_id].split = split;
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

void LseIndex::build_tree() {
  nodes_.clear();
  perm_.resize(samples_.size());
  std::iota(perm_.begin(), perm_.end(), 0);
  nodes_.reserve(2 * samples_.size() / 8 + 8);
  build_node(0, static_cast<int>(samples_.size()));
}

void LseIndex::knn(const Eigen::VectorXd& query, int k, std::vector<KnnHit>& out) const {
  out.clear();
  if (k < 1) throw Error("knn: k must be >= 1");
  if (query.size() != vectors_.rows()) throw DimensionError("knn: query dimension mismatch");
  if (samples_.empty()) return;
  const int dim = static_cast<int>(vectors_.rows());
  const double* q = query.data();
  const std::size_t kk = std::min<std::size_t>(k, samples_.size());

  std::vector<HeapItem> heap;
  heap.reserve(kk);
  auto worse_cmp = [](const HeapItem& a, const HeapItem& b) { return better(a, b); };

  // iterative traversal, near side first
  struct Frame {
    int node;
    double off2;  // lower bound on the squared distance to the node's region
  };
  std::vector<Frame> stack;
  stack.push_back({0, 0.0});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (heap.size() == kk && f.off2 > heap.front().d2) continue;
    const KdNode& node = nodes_[f.node];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int id = perm_[i];
        HeapItem item{squared_distance(q, vectors_.data() + static_cast<std::size_t>(id) * dim, dim),
                      stable_[id] ? 0 : 1, id};
        if (heap.size() < kk) {
          heap.push_back(item);
          std::push_heap(heap.begin(), heap.end(), worse_cmp);
        } else if (better(item, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), worse_cmp);
          heap.back() = item;
          std::push_heap(heap.begin(), heap.end(), worse_cmp);
        }
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    const double far_off2 = delta * delta;
    // the far child must still be visited on exact ties to honor tie-breaking
    if (heap.size() < kk || far_off2 <= heap.front().d2) stack.push_back({far, far_off2});
    stack.push_back({near, f.off2});
  }
  emit_hits(heap, out);
}

void LseIndex::knn_linear(const Eigen::VectorXd& query, int k, std::vector<KnnHit>& out) const {
  out.clear();
  if (k < 1) throw Error("knn: k must be >= 1");
  if (query.size() != vectors_.rows()) throw DimensionError("knn: query dimension mismatch");
  const int dim = static_cast<int>(vectors_.rows());
  const double* q = query.data();
  std::vector<HeapItem> all(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i)
    all[i] = {squared_distance(q, vectors_.data() + i * dim, dim),
              stable_[i] ? 0 : 1, static_cast<int>(i)};
  const std::size_t kk = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + kk, all.end(), better);
  all.resize(kk);
  emit_hits(all, out);
}

LseIndex build_index(const std::vector<PointSample>& samples, const LseParams& params,
                     const std::string& model_id, int threads) {
  if (samples.empty()) throw Error("build_index: no samples");
  params.validate();
  const double radius = params.radius_model_units();
  const SampleGrid grid(samples, radius);
  const int n = static_cast<int>(samples.size());
  const int dim = params.dim();

  std::vector<Eigen::VectorXd> raw(n);
  std::vector<std::uint8_t> ok(n, 0), stable(n, 0);

  parallel_for(0, n, threads, [&](int lo, int hi) {
    std::vector<int> idx;
    std::vector<PointSample> neighborhood;
    for (int i = lo; i < hi; ++i) {
      grid.query(samples[i].position, radius, idx);
      if (idx.size() < 3) continue;
      neighborhood.clear();
      neighborhood.reserve(idx.size());
      for (int j : idx) neighborhood.push_back(samples[j]);
      try {
        const LocalFrame frame =
            local_frame(neighborhood, samples[i].position, samples[i].normal, params.epsilon_sv);
        raw[i] = lse_moments(neighborhood, samples[i].position, frame.rotation, params);
        stable[i] = frame.stable ? 1 : 0;
        ok[i] = 1;
      } catch (const DegenerateFrameError&) {
        // skipped; counted below
      }
    }
  });

  std::vector<PointSample> kept;
  std::vector<std::uint8_t> kept_stable;
  std::vector<LseVector> kept_raw;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    kept.push_back(samples[i]);
    kept_stable.push_back(stable[i]);
    kept_raw.push_back(LseVector{raw[i], false, {}});
  }
  if (kept.size() < 2) throw Error("build_index: fewer than 2 usable (non-degenerate) frames");

  NormalizationStats stats = fit_normalization(kept_raw, model_id);
  Eigen::MatrixXd vectors(dim, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept_raw.size(); ++i)
    vectors.col(static_cast<Eigen::Index>(i)) = normalize(kept_raw[i], stats).values;

  return LseIndex(model_id, params, std::move(stats), std::move(kept), std::move(kept_stable),
                  std::move(vectors), n - static_cast<int>(kept_raw.size()));
}

std::vector<KnnHit> knn_query(const LseIndex& index, const LseVector& query, int k) {
  if (!query.normalized) throw Error("knn_query: query must be normalized");
  std::vector<KnnHit> out;
  index.knn(query.values, k, out);
  return out;
}

std::vector<KnnHit> suppress_clusters(const LseIndex& index, const std::vector<KnnHit>& candidates,
                                      double radius) {
  std::vector<KnnHit> kept;
  const double r2 = radius * radius;
  for (const auto& c : candidates) {
    const Vec3& p = index.sample(c.entry).position;
    bool clustered = false;
    for (const auto& keep : kept) {
      if ((index.sample(keep.entry).position - p).squaredNorm() <= r2) {
        clustered = true;
        break;
      }
    }
    if (!clustered) kept.push_back(c);
  }
  return kept;
}

Mask discriminative_mask(const LseMap& map, double threshold) {
  Mask out(map.width, map.height);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (!map.valid(x, y)) continue;
      const float* px = map.pixel(x, y);
      double strongest = 0.0;
      for (int c = 0; c < map.channels; ++c)
        strongest = std::max(strongest, static_cast<double>(std::abs(px[c])));
      if (strongest >= threshold) out.set(x, y, 1);
    }
  }
  return out;
}

CorrespondenceSet build_correspondences(const LseMap& map, const std::vector<Mask>& masks,
                                        const LseIndex& index, const MatchingParams& params,
                                        int threads) {
  for (const auto& m : masks)
    if (m.width != map.width || m.height != map.height)
      throw DimensionError("build_correspondences: mask size does not match map");
  if (map.channels != index.params().dim())
    throw DimensionError("build_correspondences: channel count does not match index");

  const Mask disc = discriminative_mask(map, params.discriminative_threshold);

  CorrespondenceSet set;
  set.model_id = index.model_id();
  set.per_mask.resize(masks.size());

  for (std::size_t m = 0; m < masks.size(); ++m) {
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x)
        if (masks[m].at(x, y) && disc.at(x, y)) pixels.emplace_back(x, y);

    std::vector<PixelCorrespondence> slots(pixels.size());
    std::vector<std::uint8_t> has(pixels.size(), 0);
    parallel_for(0, static_cast<int>(pixels.size()), threads, [&](int lo, int hi) {
      Eigen::VectorXd query(map.channels);
      std::vector<KnnHit> hits;
      for (int i = lo; i < hi; ++i) {
        const auto [x, y] = pixels[i];
        const float* px = map.pixel(x, y);
        for (int c = 0; c < map.channels; ++c) query[c] = px[c];
        index.knn(query, params.k, hits);
        if (!hits.empty() && params.max_distance_margin > 0) {
          const double cutoff = hits.front().distance + params.max_distance_margin;
          while (!hits.empty() && hits.back().distance > cutoff) hits.pop_back();
        }
        const auto retained = suppress_clusters(index, hits, params.suppression_radius);
        if (retained.empty()) continue;
        PixelCorrespondence pc;
        pc.x = x;
        pc.y = y;
        pc.candidates.reserve(retained.size());
        for (const auto& r : retained) pc.candidates.push_back({r.entry, r.distance});
        slots[i] = std::move(pc);
        has[i] = 1;
      }
    });
    auto& out = set.per_mask[m];
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (has[i]) out.push_back(std::move(slots[i]));
  }
  return set;
}

// ---- serialization --------------------------------------------------------

namespace {

constexpr std::uint32_t kIndexVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u8(std::ostream& out, std::uint8_t v) {
  out.write(reinterpret_cast<const char*>(&v), 1);
}
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint8_t get_u8(std::istream& in) {
  std::uint8_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 1);
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 20)) throw IoError("index file: absurd string length");
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace

void save_index(const LseIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("LSEI", 4);
  put_u32(out, kIndexVersion);
  put_str(out, index.model_id());

  const LseParams& p = index.params();
  put_f64(out, p.radius_cm);
  put_f64(out, p.sigma_cm);
  put_f64(out, p.unit_scale_to_cm);
  put_f64(out, p.epsilon_sv);
  put_u32(out, static_cast<std::uint32_t>(p.exponents.size()));
  for (const auto& e : p.exponents) {
    put_u32(out, static_cast<std::uint32_t>(e[0]));
    put_u32(out, static_cast<std::uint32_t>(e[1]));
    put_u32(out, static_cast<std::uint32_t>(e[2]));
  }

  const NormalizationStats& st = index.stats();
  const int dim = static_cast<int>(st.mean.size());
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (int d = 0; d < dim; ++d) put_f64(out, st.mean[d]);
  for (int d = 0; d < dim; ++d) put_f64(out, st.stddev[d]);
  for (int d = 0; d < dim; ++d) put_u8(out, st.zero_variance[d]);
  put_str(out, st.source_model);

  put_u32(out, static_cast<std::uint32_t>(index.degenerate_skipped()));
  put_u32(out, static_cast<std::uint32_t>(index.size()));
  for (int i = 0; i < index.size(); ++i) {
    const PointSample& s = index.sample(i);
    for (int a = 0; a < 3; ++a) put_f64(out, s.position[a]);
    for (int a = 0; a < 3; ++a) put_f64(out, s.normal[a]);
    put_u32(out, static_cast<std::uint32_t>(s.triangle));
    put_u8(out, index.stable(i) ? 1 : 0);
    for (int d = 0; d < dim; ++d) put_f64(out, index.vectors()(d, i));
  }
  if (!out) throw IoError("short write to " + path.string());
}

LseIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LSEI", 4) != 0)
    throw IoError(path.string() + ": not an index file");
  const std::uint32_t version = get_u32(in);
  if (version != kIndexVersion)
    throw IoError(path.string() + ": unsupported index version " + std::to_string(version));

  LseIndex index;
  index.model_id_ = get_str(in);
  LseParams p;
  p.radius_cm = get_f64(in);
  p.sigma_cm = get_f64(in);
  p.unit_scale_to_cm = get_f64(in);
  p.epsilon_sv = get_f64(in);
  const std::uint32_t nexp = get_u32(in);
  if (nexp == 0 || nexp > 256) throw IoError(path.string() + ": bad exponent count");
  p.exponents.resize(nexp);
  for (auto& e : p.exponents) {
    e[0] = static_cast<int>(get_u32(in));
    e[1] = static_cast<int>(get_u32(in));
    e[2] = static_cast<int>(get_u32(in));
  }
  index.params_ = p;

  const std::uint32_t dim = get_u32(in);
  if (dim != nexp) throw IoError(path.string() + ": stats dimension mismatch");
  NormalizationStats st;
  st.mean.resize(dim);
  st.stddev.resize(dim);
  st.zero_variance.resize(dim);
  for (std::uint32_t d = 0; d < dim; ++d) st.mean[d] = get_f64(in);
  for (std::uint32_t d = 0; d < dim; ++d) st.stddev[d] = get_f64(in);
  for (std::uint32_t d = 0; d < dim; ++d) st.zero_variance[d] = get_u8(in);
  st.source_model = get_str(in);
  index.stats_ = std::move(st);

  index.degenerate_skipped_ = static_cast<int>(get_u32(in));
  const std::uint32_t count = get_u32(in);
  if (count == 0) throw IoError(path.string() + ": empty index");
  index.samples_.resize(count);
  index.stable_.resize(count);
  index.vectors_.resize(dim, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    PointSample& s = index.samples_[i];
    for (int a = 0; a < 3; ++a) s.position[a] = get_f64(in);
    for (int a = 0; a < 3; ++a) s.normal[a] = get_f64(in);
    s.triangle = static_cast<int>(get_u32(in));
    index.stable_[i] = get_u8(in);
    for (std::uint32_t d = 0; d < dim; ++d) index.vectors_(d, i) = get_f64(in);
  }
  if (!in) throw IoError(path.string() + ": truncated index file");
  index.build_tree();
  return index;
}

}  // namespace lsepose
