#pragma once

#include "lsepose/index.hpp"
#include "lsepose/pnp.hpp"

#include <optional>

namespace lsepose {

struct RansacConfig {
  int n_iter = 2000;
  int sample_min = 6;
  int sample_max = 10;
  double s_min = 0.3;              // minimum acceptance score
  double inlier_threshold_px = 5.0;
  double alpha = 0.5;              // weight of the mask IoU term against the embedding term
  std::uint64_t seed = 0;
  RenderOptions render;

  void validate() const {
    if (n_iter < 1) throw ConfigError("ransac: n_iter must be >= 1");
    if (sample_min < 4 || sample_max < sample_min)
      throw ConfigError("ransac: sample range must satisfy 4 <= min <= max");
    if (alpha < 0 || alpha > 1) throw ConfigError("ransac: alpha must be in [0,1]");
    if (inlier_threshold_px <= 0) throw ConfigError("ransac: inlier threshold must be > 0");
  }
};

struct PoseHypothesis {
  Pose pose;
  double score = 0.0;
  std::vector<Correspondence2d3d> inliers;
  std::string model_id;
  int mask_id = -1;
};

// Precomputed mask extents so scoring can skip hopeless poses cheaply.
struct MaskContext {
  const Mask* mask = nullptr;
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive bbox; empty when x1 < x0
  std::size_t pixel_count = 0;
};
MaskContext make_mask_context(const Mask& mask);

// Per-model data shared by all scoring calls: the exact nearest-entry lookup
// over the index samples.
class ModelRuntime {
 public:
  ModelRuntime(const SurfaceMesh& mesh, const LseIndex& index);
  const SurfaceMesh& mesh() const { return *mesh_; }
  const LseIndex& index() const { return *index_; }
  int nearest_entry(const Vec3& object_point) const { return grid_.nearest(object_point); }

 private:
  const SurfaceMesh* mesh_;
  const LseIndex* index_;
  SampleGrid grid_;
};

// Render-based pose score with per-thread scratch buffers:
//   alpha * IoU(mask, rendered mask) + (1-alpha) * E
// where E averages exp(-d^2/2) over the rendered-and-detected overlap, d the
// distance between the pixel's predicted embedding and the embedding of the
// model point rendered there. Always in [0,1].
class PoseScorer {
 public:
  PoseScorer(const CameraIntrinsics& cam, const RenderOptions& opts = {});
  double score(const ModelRuntime& model, const Pose& pose, const MaskContext& mask,
               const LseMap& map, double alpha);

 private:
  CameraIntrinsics cam_;
  RenderOptions opts_;
  SceneMaps scratch_;
};

// Spec-level convenience wrapper around PoseScorer.
double score_pose(const Pose& pose, const SurfaceMesh& mesh, const CameraIntrinsics& cam,
                  const Mask& mask, const LseMap& lse_map, const LseIndex& index,
                  const RansacConfig& cfg);

struct IterationTrace {
  std::vector<double> best_score;  // running best after each iteration
};

std::optional<PoseHypothesis> estimate_pose_for_mask(
    const Mask& mask, int mask_id, const std::vector<PixelCorrespondence>& correspondences,
    const SurfaceMesh& mesh, const LseIndex& index, const LseMap& lse_map,
    const CameraIntrinsics& cam, const RansacConfig& cfg, IterationTrace* trace = nullptr);

struct ModelRef {
  std::string id;
  const SurfaceMesh* mesh = nullptr;
  const LseIndex* index = nullptr;
};

// Runs the per-mask estimator against every candidate model and keeps the
// best-scoring hypothesis per mask (ties go to the earlier model). Masks with
// no hypothesis above s_min are absent from the result.
std::vector<PoseHypothesis> estimate_all(const std::vector<Mask>& masks,
                                         const std::vector<CorrespondenceSet>& corr_per_model,
                                         const std::vector<ModelRef>& models,
                                         const LseMap& lse_map, const CameraIntrinsics& cam,
                                         const RansacConfig& cfg, int threads = 1);

}  // namespace lsepose
