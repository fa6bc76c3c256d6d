#pragma once

#include "lsepose/lse.hpp"
#include "lsepose/lse_map.hpp"
#include "lsepose/raster.hpp"

#include <filesystem>
#include <memory>

namespace lsepose {

struct KnnHit {
  int entry = -1;
  double distance = 0.0;
};

// Searchable embedding database of one CAD model. Entries are normalized
// with the stored stats. The kd-tree accelerator returns exactly the linear
// scan results (ties broken stable-first, then by entry id).
class LseIndex {
 public:
  LseIndex() = default;
  LseIndex(std::string model_id, LseParams params, NormalizationStats stats,
           std::vector<PointSample> samples, std::vector<std::uint8_t> stable,
           Eigen::MatrixXd vectors, int degenerate_skipped);

  const std::string& model_id() const { return model_id_; }
  const LseParams& params() const { return params_; }
  const NormalizationStats& stats() const { return stats_; }
  int size() const { return static_cast<int>(samples_.size()); }
  int degenerate_skipped() const { return degenerate_skipped_; }

  const PointSample& sample(int entry) const { return samples_[entry]; }
  const std::vector<PointSample>& samples() const { return samples_; }
  bool stable(int entry) const { return stable_[entry] != 0; }
  Eigen::VectorXd vector(int entry) const { return vectors_.col(entry); }
  const Eigen::MatrixXd& vectors() const { return vectors_; }  // dim x n

  void knn(const Eigen::VectorXd& query, int k, std::vector<KnnHit>& out) const;
  void knn_linear(const Eigen::VectorXd& query, int k, std::vector<KnnHit>& out) const;

 private:
  friend LseIndex load_index(const std::filesystem::path&);
  void build_tree();
  int build_node(int begin, int end);

  std::string model_id_;
  LseParams params_;
  NormalizationStats stats_;
  std::vector<PointSample> samples_;
  std::vector<std::uint8_t> stable_;
  Eigen::MatrixXd vectors_;  // dim x n, column-major: one contiguous column per entry
  int degenerate_skipped_ = 0;

  struct KdNode {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into perm_
  };
  std::vector<KdNode> nodes_;
  std::vector<int> perm_;
};

// Embeds every sample (skipping degenerate frames), fits the per-model
// normalization and stores normalized vectors. Neighborhoods are spheres of
// the configured radius over the sample set itself.
LseIndex build_index(const std::vector<PointSample>& samples, const LseParams& params,
                     const std::string& model_id = {}, int threads = 1);

std::vector<KnnHit> knn_query(const LseIndex& index, const LseVector& query, int k);

// Greedy spatial suppression: walk candidates in ascending embedding
// distance, keep the head, drop everything within `radius` of a kept point.
std::vector<KnnHit> suppress_clusters(const LseIndex& index, const std::vector<KnnHit>& candidates,
                                      double radius);

// Pixels whose strongest normalized channel reaches the threshold (planar
// regions fall below it and are discarded).
Mask discriminative_mask(const LseMap& map, double threshold);

struct Candidate {
  int entry = -1;
  double distance = 0.0;
};

struct PixelCorrespondence {
  int x = 0, y = 0;
  std::vector<Candidate> candidates;  // ascending distance, spatially suppressed
};

// 2D-3D correspondence candidates of one model, grouped per instance mask.
struct CorrespondenceSet {
  std::string model_id;
  std::vector<std::vector<PixelCorrespondence>> per_mask;
};

struct MatchingParams {
  int k = 100;
  double suppression_radius = 3.0;  // model units
  double discriminative_threshold = 0.5;
  // candidates are real matches only while their embedding distance stays
  // within this margin of the pixel's best match; beyond that the neighbors
  // are merely the closest of genuinely different geometry
  double max_distance_margin = 1.0;
};

CorrespondenceSet build_correspondences(const LseMap& map, const std::vector<Mask>& masks,
                                        const LseIndex& index, const MatchingParams& params,
                                        int threads = 1);

// magic LSEI, u32 version, then params, stats and entries; bit-exact round trip
void save_index(const LseIndex& index, const std::filesystem::path& path);
LseIndex load_index(const std::filesystem::path& path);

}  // namespace lsepose
