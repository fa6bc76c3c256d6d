#include "lsepose/ransac.hpp"

#include <algorithm>
#include <limits>

namespace lsepose {

MaskContext make_mask_context(const Mask& mask) {
  MaskContext ctx;
  ctx.mask = &mask;
  ctx.x0 = mask.width;
  ctx.y0 = mask.height;
  ctx.x1 = -1;
  ctx.y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      ctx.x0 = std::min(ctx.x0, x);
      ctx.y0 = std::min(ctx.y0, y);
      ctx.x1 = std::max(ctx.x1, x);
      ctx.y1 = std::max(ctx.y1, y);
      ++ctx.pixel_count;
    }
  }
  return ctx;
}

ModelRuntime::ModelRuntime(const SurfaceMesh& mesh, const LseIndex& index)
    : mesh_(&mesh), index_(&index), grid_(index.samples(), [&] {
        Vec3 lo = index.samples()[0].position, hi = lo;
        for (const auto& s : index.samples()) {
          lo = lo.cwiseMin(s.position);
          hi = hi.cwiseMax(s.position);
        }
        const double extent = (hi - lo).maxCoeff();
        return std::max(extent / 48.0, 1e-9);
      }()) {}

PoseScorer::PoseScorer(const CameraIntrinsics& cam, const RenderOptions& opts)
    : cam_(cam), opts_(opts), scratch_(cam.width, cam.height) {}

double PoseScorer::score(const ModelRuntime& model, const Pose& pose, const MaskContext& mask,
                         const LseMap& map, double alpha) {
  const SurfaceMesh& mesh = model.mesh();

  // projected vertex bbox: a cheap exact zero-score test when every vertex is
  // in front of the near plane (then the render cannot escape the bbox)
  int rx0 = 0, ry0 = 0, rx1 = cam_.width - 1, ry1 = cam_.height - 1;
  bool all_in_front = true;
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (const auto& v : mesh.vertices) {
    const Vec3 q = pose.apply(v);
    if (q.z() < opts_.near_plane) {
      all_in_front = false;
      break;
    }
    const double px = cam_.fx * q.x() / q.z() + cam_.cx;
    const double py = cam_.fy * q.y() / q.z() + cam_.cy;
    minx = std::min(minx, px);
    maxx = std::max(maxx, px);
    miny = std::min(miny, py);
    maxy = std::max(maxy, py);
  }
  if (all_in_front) {
    rx0 = std::max(0, static_cast<int>(std::floor(minx)) - 1);
    rx1 = std::min(cam_.width - 1, static_cast<int>(std::ceil(maxx)) + 1);
    ry0 = std::max(0, static_cast<int>(std::floor(miny)) - 1);
    ry1 = std::min(cam_.height - 1, static_cast<int>(std::ceil(maxy)) + 1);
    if (rx0 > rx1 || ry0 > ry1) return 0.0;  // fully off screen
    // no overlap with the mask bbox means IoU and E are both exactly zero
    if (mask.x1 < mask.x0 || rx0 > mask.x1 || rx1 < mask.x0 || ry0 > mask.y1 || ry1 < mask.y0)
      return 0.0;
  }

  // scratch is clean outside previously used rects; re-clean after use below
  render(mesh, pose, cam_, 1, scratch_, opts_);

  const LseIndex& index = model.index();
  const int dim = static_cast<int>(index.vectors().rows());
  std::size_t rendered = 0, overlap = 0;
  double esum = 0.0;
  for (int y = ry0; y <= ry1; ++y) {
    for (int x = rx0; x <= rx1; ++x) {
      const std::size_t at = scratch_.idx(x, y);
      if (scratch_.instance[at] == 0) continue;
      ++rendered;
      if (!mask.mask->at(x, y)) continue;
      ++overlap;
      if (!map.valid(x, y)) continue;  // dropped pixels carry no evidence
      const int entry = model.nearest_entry(scratch_.object_point[at]);
      if (entry < 0) continue;
      const float* px = map.pixel(x, y);
      const double* ev = index.vectors().data() + static_cast<std::size_t>(entry) * dim;
      double d2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double d = static_cast<double>(px[c]) - ev[c];
        d2 += d * d;
      }
      esum += std::exp(-0.5 * d2);
    }
  }

  // restore the clean-scratch invariant
  for (int y = ry0; y <= ry1; ++y) {
    const std::size_t row = scratch_.idx(rx0, y);
    std::fill(scratch_.depth.begin() + row, scratch_.depth.begin() + row + (rx1 - rx0 + 1),
              std::numeric_limits<float>::infinity());
    std::fill(scratch_.instance.begin() + row, scratch_.instance.begin() + row + (rx1 - rx0 + 1),
              0);
  }

  const std::size_t uni = rendered + mask.pixel_count - overlap;
  const double iou_term = uni == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(uni);
  const double e_term = overlap == 0 ? 0.0 : esum / static_cast<double>(overlap);
  return alpha * iou_term + (1.0 - alpha) * e_term;
}

double score_pose(const Pose& pose, const SurfaceMesh& mesh, const CameraIntrinsics& cam,
                  const Mask& mask, const LseMap& lse_map, const LseIndex& index,
                  const RansacConfig& cfg) {
  const ModelRuntime runtime(mesh, index);
  PoseScorer scorer(cam, cfg.render);
  const MaskContext ctx = make_mask_context(mask);
  return scorer.score(runtime, pose, ctx, lse_map, cfg.alpha);
}

namespace {

// For every correspondence pixel picks the candidate with the smallest
// reprojection error; pixels under the threshold become inliers.
std::vector<Correspondence2d3d> collect_inliers(
    const std::vector<PixelCorrespondence>& correspondences, const LseIndex& index,
    const Pose& pose, const CameraIntrinsics& cam, double threshold_px) {
  std::vector<Correspondence2d3d> inliers;
  const double thr2 = threshold_px * threshold_px;
  for (const auto& pc : correspondences) {
    const Vec2 target(pc.x + 0.5, pc.y + 0.5);
    double best = std::numeric_limits<double>::infinity();
    const Vec3* best_point = nullptr;
    for (const auto& cand : pc.candidates) {
      const Vec3& p = index.sample(cand.entry).position;
      const Vec3 q = pose.apply(p);
      if (!(q.z() > 0)) continue;
      const Vec2 proj(cam.fx * q.x() / q.z() + cam.cx, cam.fy * q.y() / q.z() + cam.cy);
      const double err2 = (proj - target).squaredNorm();
      if (err2 < best) {
        best = err2;
        best_point = &p;
      }
    }
    if (best_point && best < thr2) inliers.push_back({target, *best_point});
  }
  return inliers;
}

std::optional<PoseHypothesis> run_ransac(const MaskContext& mask_ctx, int mask_id,
                                         const std::vector<PixelCorrespondence>& correspondences,
                                         const ModelRuntime& runtime, const LseMap& lse_map,
                                         const CameraIntrinsics& cam, const RansacConfig& cfg,
                                         PoseScorer& scorer, IterationTrace* trace) {
  cfg.validate();
  const int available = static_cast<int>(correspondences.size());
  if (available < cfg.sample_min) return std::nullopt;

  const LseIndex& index = runtime.index();
  const Rng base(cfg.seed);

  Pose best_pose;
  double best_score = 0.0;
  bool have_best = false;
  std::vector<Correspondence2d3d> sample;

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    Rng rng = base.derive(static_cast<std::uint64_t>(iter));
    const int n =
        std::min<int>(available, static_cast<int>(rng.uniform_int(cfg.sample_min, cfg.sample_max)));
    const std::vector<int> picks = rng.sample_distinct(available, n);
    sample.clear();
    for (int pi : picks) {
      const auto& pc = correspondences[pi];
      const int ci = static_cast<int>(
          rng.uniform_int(0, static_cast<std::int64_t>(pc.candidates.size()) - 1));
      sample.push_back(
          {Vec2(pc.x + 0.5, pc.y + 0.5), index.sample(pc.candidates[ci].entry).position});
    }

    Pose pose;
    try {
      pose = solve_pnp(sample, cam);
    } catch (const DegeneracyError&) {
      if (trace) trace->best_score.push_back(best_score);
      continue;
    }

    const double s = scorer.score(runtime, pose, mask_ctx, lse_map, cfg.alpha);
    if (s > best_score) {
      best_score = s;
      best_pose = pose;
      have_best = true;
      // local optimization: refit on the consensus set and re-score; iterate
      // while the score keeps improving
      for (int round = 0; round < 5; ++round) {
        const auto inliers =
            collect_inliers(correspondences, index, best_pose, cam, cfg.inlier_threshold_px);
        if (inliers.size() < 4) break;
        const Pose refined = refine_pose(best_pose, inliers, cam);
        const double rs = scorer.score(runtime, refined, mask_ctx, lse_map, cfg.alpha);
        if (rs <= best_score) break;
        best_score = rs;
        best_pose = refined;
      }
    }
    if (trace) trace->best_score.push_back(best_score);
  }

  // final refinement of the winner on its full consensus set
  if (have_best) {
    for (int round = 0; round < 5; ++round) {
      const auto inliers =
          collect_inliers(correspondences, index, best_pose, cam, cfg.inlier_threshold_px);
      if (inliers.size() < 4) break;
      const Pose refined = refine_pose(best_pose, inliers, cam);
      const double rs = scorer.score(runtime, refined, mask_ctx, lse_map, cfg.alpha);
      if (rs <= best_score) break;
      best_score = rs;
      best_pose = refined;
    }
  }

  if (!have_best || best_score < cfg.s_min) return std::nullopt;

  PoseHypothesis hyp;
  hyp.pose = best_pose;
  hyp.score = best_score;
  hyp.inliers = collect_inliers(correspondences, index, best_pose, cam, cfg.inlier_threshold_px);
  hyp.model_id = index.model_id();
  hyp.mask_id = mask_id;
  return hyp;
}

}  // namespace

std::optional<PoseHypothesis> estimate_pose_for_mask(
    const Mask& mask, int mask_id, const std::vector<PixelCorrespondence>& correspondences,
    const SurfaceMesh& mesh, const LseIndex& index, const LseMap& lse_map,
    const CameraIntrinsics& cam, const RansacConfig& cfg, IterationTrace* trace) {
  const ModelRuntime runtime(mesh, index);
  PoseScorer scorer(cam, cfg.render);
  const MaskContext ctx = make_mask_context(mask);
  return run_ransac(ctx, mask_id, correspondences, runtime, lse_map, cam, cfg, scorer, trace);
}

std::vector<PoseHypothesis> estimate_all(const std::vector<Mask>& masks,
                                         const std::vector<CorrespondenceSet>& corr_per_model,
                                         const std::vector<ModelRef>& models,
                                         const LseMap& lse_map, const CameraIntrinsics& cam,
                                         const RansacConfig& cfg, int threads) {
  if (corr_per_model.size() != models.size())
    throw DimensionError("estimate_all: one correspondence set per model required");
  for (const auto& cs : corr_per_model)
    if (cs.per_mask.size() != masks.size())
      throw DimensionError("estimate_all: correspondence sets do not cover all masks");

  std::vector<ModelRuntime> runtimes;
  runtimes.reserve(models.size());
  for (const auto& m : models) runtimes.emplace_back(*m.mesh, *m.index);

  std::vector<std::optional<PoseHypothesis>> slots(masks.size());
  parallel_for(0, static_cast<int>(masks.size()), threads, [&](int lo, int hi) {
    PoseScorer scorer(cam, cfg.render);
    for (int m = lo; m < hi; ++m) {
      const MaskContext ctx = make_mask_context(masks[m]);
      std::optional<PoseHypothesis> best;
      for (std::size_t j = 0; j < models.size(); ++j) {
        RansacConfig sub = cfg;
        sub.seed = Rng::mix(cfg.seed ^ Rng::mix((static_cast<std::uint64_t>(m) << 20) + j));
        auto hyp = run_ransac(ctx, m + 1, corr_per_model[j].per_mask[m], runtimes[j], lse_map,
                              cam, sub, scorer, nullptr);
        if (hyp && (!best || hyp->score > best->score)) best = std::move(hyp);
      }
      slots[m] = std::move(best);
    }
  });

  std::vector<PoseHypothesis> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

}  // namespace lsepose
