#include "lsepose/oracle.hpp"
#include "lsepose/procgen.hpp"
#include "lsepose/metrics.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace lsepose;

namespace {

struct SceneFixture {
  SurfaceMesh mesh;
  LseIndex index;
  CameraIntrinsics cam;
  SceneBundle bundle;
  CorrespondenceSet corr;
  RansacConfig cfg;
  double diameter = 0.0;

  explicit SceneFixture(std::uint64_t seed = 5) {
    LseParams params;
    mesh = make_lblock(1.0);
    index = build_index(sample_surface(mesh, 2500, 19), params, "lblock");
    diameter = model_diameter(index.samples());

    cam.fx = cam.fy = 420;
    cam.cx = 160;
    cam.cy = 120;
    cam.width = 320;
    cam.height = 240;

    SceneSpec spec;
    spec.name = "fixture";
    spec.camera = cam;
    spec.seed = seed;
    Rng rng(seed);
    ObjectPlacement obj;
    obj.model_id = "lblock";
    obj.pose.rotation = rng.rotation();
    obj.pose.translation = Vec3(0.5, -0.5, 55);
    spec.objects.push_back(obj);

    std::map<std::string, const SurfaceMesh*> meshes{{"lblock", &mesh}};
    std::map<std::string, const LseIndex*> indices{{"lblock", &index}};
    bundle = render_scene(spec, meshes, indices);

    MatchingParams mp;
    corr = build_correspondences(bundle.lse, bundle.masks, index, mp);

    cfg.n_iter = 300;
    cfg.seed = 99;
  }

  const Pose& gt() const { return bundle.ground_truth[0].pose; }
};

}  // namespace

TEST_SUITE("ransac") {

TEST_CASE("oracle correspondences put the true point among the candidates") {
  SceneFixture f;
  MatchingParams mp;
  const auto& pixels = f.corr.per_mask[0];
  REQUIRE(pixels.size() > 200);
  std::size_t hit = 0;
  for (const auto& pc : pixels) {
    const Vec3& truth = f.bundle.maps.object_point[f.bundle.maps.idx(pc.x, pc.y)];
    for (const auto& cand : pc.candidates) {
      if ((f.index.sample(cand.entry).position - truth).norm() <= mp.suppression_radius) {
        ++hit;
        break;
      }
    }
  }
  CHECK(static_cast<double>(hit) / pixels.size() >= 0.95);

  // retained candidates honor the suppression spacing
  for (const auto& pc : pixels) {
    for (std::size_t i = 0; i < pc.candidates.size(); ++i)
      for (std::size_t j = i + 1; j < pc.candidates.size(); ++j) {
        const double d = (f.index.sample(pc.candidates[i].entry).position -
                          f.index.sample(pc.candidates[j].entry).position)
                             .norm();
        CHECK(d > mp.suppression_radius);
      }
  }
}

TEST_CASE("empty masks or background maps give no correspondences") {
  SceneFixture f;
  std::vector<Mask> empty_masks{Mask(f.cam.width, f.cam.height)};
  const auto none =
      build_correspondences(f.bundle.lse, empty_masks, f.index, MatchingParams{});
  CHECK(none.per_mask[0].empty());

  LseMap background(f.cam.width, f.cam.height, 11);
  const auto still_none =
      build_correspondences(background, f.bundle.masks, f.index, MatchingParams{});
  CHECK(still_none.per_mask[0].empty());
}

TEST_CASE("score of the true pose on a clean scene is near one") {
  SceneFixture f;
  const double s =
      score_pose(f.gt(), f.mesh, f.cam, f.bundle.masks[0], f.bundle.lse, f.index, f.cfg);
  CHECK(s >= 0.99);
}

TEST_CASE("a pose far outside the mask scores zero") {
  SceneFixture f;
  Pose away = f.gt();
  away.translation += Vec3(200, 0, 0);  // projects far off the mask
  const double s =
      score_pose(away, f.mesh, f.cam, f.bundle.masks[0], f.bundle.lse, f.index, f.cfg);
  CHECK(s == 0.0);
}

TEST_CASE("alpha = 1 reduces the score to pure IoU") {
  SceneFixture f;
  RansacConfig cfg = f.cfg;
  cfg.alpha = 1.0;
  const double s =
      score_pose(f.gt(), f.mesh, f.cam, f.bundle.masks[0], f.bundle.lse, f.index, cfg);

  SceneMaps maps(f.cam.width, f.cam.height);
  render(f.mesh, f.gt(), f.cam, 1, maps);
  CHECK(s == doctest::Approx(iou(mask_of(maps, 1), f.bundle.masks[0])).epsilon(1e-12));
}

TEST_CASE("estimator recovers the oracle pose") {
  SceneFixture f;
  IterationTrace trace;
  const auto hyp = estimate_pose_for_mask(f.bundle.masks[0], 1, f.corr.per_mask[0], f.mesh,
                                          f.index, f.bundle.lse, f.cam, f.cfg, &trace);
  REQUIRE(hyp.has_value());
  CHECK(hyp->score >= 0.9);
  CHECK(add_error(f.index.samples(), f.gt(), hyp->pose) < 0.02 * f.diameter);

  // the running best is monotone
  for (std::size_t i = 1; i < trace.best_score.size(); ++i)
    CHECK(trace.best_score[i] >= trace.best_score[i - 1]);

  // reported inliers satisfy the threshold under the reported pose
  REQUIRE(!hyp->inliers.empty());
  for (const auto& inl : hyp->inliers) {
    const Vec2 px = project(hyp->pose.apply(inl.point), f.cam);
    CHECK((px - inl.pixel).norm() < f.cfg.inlier_threshold_px);
  }
}

TEST_CASE("estimation is bit-deterministic for a fixed seed") {
  SceneFixture f;
  const auto a = estimate_pose_for_mask(f.bundle.masks[0], 1, f.corr.per_mask[0], f.mesh,
                                        f.index, f.bundle.lse, f.cam, f.cfg);
  const auto b = estimate_pose_for_mask(f.bundle.masks[0], 1, f.corr.per_mask[0], f.mesh,
                                        f.index, f.bundle.lse, f.cam, f.cfg);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->pose.rotation == b->pose.rotation);
  CHECK(a->pose.translation == b->pose.translation);
  CHECK(a->score == b->score);
}

TEST_CASE("too few correspondences yield a no-detection") {
  SceneFixture f;
  std::vector<PixelCorrespondence> tiny(f.corr.per_mask[0].begin(),
                                        f.corr.per_mask[0].begin() + 3);
  const auto hyp = estimate_pose_for_mask(f.bundle.masks[0], 1, tiny, f.mesh, f.index,
                                          f.bundle.lse, f.cam, f.cfg);
  CHECK_FALSE(hyp.has_value());
}

TEST_CASE("estimate_all on a single mask and model matches the direct call") {
  SceneFixture f;
  std::vector<ModelRef> models{{"lblock", &f.mesh, &f.index}};
  RansacConfig cfg = f.cfg;
  const auto all = estimate_all(f.bundle.masks, {f.corr}, models, f.bundle.lse, f.cam, cfg);
  REQUIRE(all.size() == 1);
  CHECK(all[0].model_id == "lblock");
  CHECK(all[0].mask_id == 1);

  RansacConfig direct_cfg = cfg;
  direct_cfg.seed = Rng::mix(cfg.seed ^ Rng::mix(0));
  const auto direct = estimate_pose_for_mask(f.bundle.masks[0], 1, f.corr.per_mask[0], f.mesh,
                                             f.index, f.bundle.lse, f.cam, direct_cfg);
  REQUIRE(direct.has_value());
  CHECK(all[0].pose.rotation == direct->pose.rotation);
  CHECK(all[0].pose.translation == direct->pose.translation);
  CHECK(all[0].score == direct->score);
}

TEST_CASE("a background-noise mask yields no detection") {
  SceneFixture f;
  // a mask over empty background has no discriminative pixels at all
  Mask corner(f.cam.width, f.cam.height);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x)
      if (!f.bundle.masks[0].at(x, y)) corner.set(x, y, 1);
  std::vector<Mask> masks{corner};
  const auto corr = build_correspondences(f.bundle.lse, masks, f.index, MatchingParams{});
  std::vector<ModelRef> models{{"lblock", &f.mesh, &f.index}};
  const auto all = estimate_all(masks, {corr}, models, f.bundle.lse, f.cam, f.cfg);
  CHECK(all.empty());
}

}  // TEST_SUITE
