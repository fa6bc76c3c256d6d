#include "lsepose/bench.hpp"

#include <chrono>
#include <map>

namespace lsepose::bench {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LoadedModel load_model(std::string id, SurfaceMesh mesh, bool symmetric,
                       const PipelineConfig& cfg, int threads) {
  LoadedModel m;
  m.id = std::move(id);
  m.symmetric = symmetric;
  m.mesh = std::move(mesh);
  const auto samples = sample_surface(m.mesh, cfg.sample_count, Rng::mix(cfg.seed ^ 0x5eed));
  m.index = build_index(samples, cfg.lse, m.id, threads);
  m.diameter = model_diameter(m.index.samples());
  return m;
}

}  // namespace

PipelineConfig benchmark_config(int sample_count, int n_iter) {
  PipelineConfig cfg = default_config();
  cfg.seed = 7;
  cfg.unit_scale_to_cm = 1.0;  // benchmark solids are modeled in centimeters
  cfg.sample_count = sample_count;
  cfg.ransac.n_iter = n_iter;
  cfg.lse.unit_scale_to_cm = cfg.unit_scale_to_cm;
  cfg.vsd.unit_scale_to_cm = cfg.unit_scale_to_cm;
  return cfg;
}

CameraIntrinsics benchmark_camera() {
  CameraIntrinsics cam;
  cam.fx = cam.fy = 550.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  return cam;
}

std::vector<LoadedModel> build_benchmark_models(const PipelineConfig& cfg, int threads) {
  std::vector<LoadedModel> models;
  models.push_back(load_model("lblock", make_lblock(1.0), false, cfg, threads));
  models.push_back(load_model("wedge", make_wedge(1.0), false, cfg, threads));
  models.push_back(load_model("cross4", make_cross_prism(1.0), true, cfg, threads));
  return models;
}

SceneSpec make_benchmark_scene(int scene_index, std::uint64_t seed, const CameraIntrinsics& cam,
                               const std::vector<LoadedModel>& models, const SceneNoise& noise) {
  SceneSpec spec;
  spec.name = "scene_" + std::to_string(scene_index);
  spec.camera = cam;
  spec.noise = noise;
  spec.seed = Rng::mix(seed ^ (0xabcdull + scene_index));

  Rng rng(spec.seed ^ 0x9e37);
  // anchor slots keep the objects mostly apart; jitter varies the layout
  const double slots[3][2] = {{0.30, 0.34}, {0.70, 0.36}, {0.50, 0.70}};
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double z = rng.uniform(75.0, 105.0);
    const double px = (slots[i % 3][0] + rng.uniform(-0.06, 0.06)) * cam.width;
    const double py = (slots[i % 3][1] + rng.uniform(-0.06, 0.06)) * cam.height;
    ObjectPlacement obj;
    obj.model_id = models[i].id;
    obj.pose.rotation = rng.rotation();
    obj.pose.translation = backproject({px, py}, z, cam);
    spec.objects.push_back(obj);
  }
  return spec;
}

EndToEndResult run_end_to_end(const std::vector<LoadedModel>& models, const PipelineConfig& cfg,
                              int scene_count, const SceneNoise& noise, std::uint64_t seed,
                              int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const CameraIntrinsics cam = benchmark_camera();

  std::map<std::string, const SurfaceMesh*> meshes;
  std::map<std::string, const LseIndex*> indices;
  for (const auto& m : models) {
    meshes[m.id] = &m.mesh;
    indices[m.id] = &m.index;
  }

  std::vector<ObjectRecord> records;
  for (int s = 0; s < scene_count; ++s) {
    const SceneSpec spec = make_benchmark_scene(s, seed, cam, models, noise);
    const SceneBundle bundle = render_scene(spec, meshes, indices);
    const auto hyps = estimate_scene(bundle, models, cfg, threads);
    auto recs = evaluate_scene(spec.name, bundle, models, hyps, cfg);
    records.insert(records.end(), recs.begin(), recs.end());
  }

  EndToEndResult result;
  result.report = aggregate(std::move(records), cfg.vsd);
  result.seconds = seconds_since(t0);
  result.scenes = scene_count;
  return result;
}

RobustnessResult run_outlier_robustness(int trials, double outlier_fraction, std::uint64_t seed,
                                        int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg = benchmark_config(3000, 2000);  // the stock iteration count
  CameraIntrinsics cam = benchmark_camera();
  cam.width = 480;
  cam.height = 360;
  cam.cx = 240.0;
  cam.cy = 180.0;

  const LoadedModel model = load_model("lblock", make_lblock(1.0), false, cfg, threads);
  std::map<std::string, const SurfaceMesh*> meshes{{model.id, &model.mesh}};
  std::map<std::string, const LseIndex*> indices{{model.id, &model.index}};

  const Vec3 bb_lo = [&] {
    Vec3 lo = model.index.samples()[0].position;
    for (const auto& s : model.index.samples()) lo = lo.cwiseMin(s.position);
    return lo;
  }();
  const Vec3 bb_hi = [&] {
    Vec3 hi = model.index.samples()[0].position;
    for (const auto& s : model.index.samples()) hi = hi.cwiseMax(s.position);
    return hi;
  }();

  const ModelRuntime runtime(model.mesh, model.index);

  RobustnessResult result;
  result.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(Rng::mix(seed ^ (0x0471ull + trial)));

    SceneSpec spec;
    spec.name = "robustness";
    spec.camera = cam;
    spec.seed = rng.next_u64();
    ObjectPlacement obj;
    obj.model_id = model.id;
    obj.pose.rotation = rng.rotation();
    obj.pose.translation = backproject({cam.cx + rng.uniform(-30, 30), cam.cy + rng.uniform(-30, 30)},
                                       rng.uniform(80.0, 100.0), cam);
    spec.objects.push_back(obj);

    const SceneBundle bundle = render_scene(spec, meshes, indices);
    auto corr = build_correspondences(bundle.lse, bundle.masks, model.index,
                                      cfg.matching_params(), threads);

    // corrupt a fraction of the pixels with uniformly wrong model points
    auto& pixels = corr.per_mask[0];
    const int n_out = static_cast<int>(outlier_fraction * pixels.size());
    const auto chosen = rng.sample_distinct(static_cast<int>(pixels.size()), n_out);
    for (int pi : chosen) {
      // nearest entry to a uniform bbox draw is a uniformly wrong surface point
      Vec3 p;
      for (int a = 0; a < 3; ++a) p[a] = rng.uniform(bb_lo[a], bb_hi[a]);
      const int entry = runtime.nearest_entry(p);
      pixels[pi].candidates = {{entry, 0.0}};
    }

    RansacConfig rc = cfg.ransac;
    rc.seed = Rng::mix(seed ^ (0xbeefull + trial));
    const auto hyp = estimate_pose_for_mask(bundle.masks[0], 1, pixels, model.mesh, model.index,
                                            bundle.lse, cam, rc);
    if (!hyp) continue;
    const double add = add_error(model.index.samples(), bundle.ground_truth[0].pose, hyp->pose);
    if (add < 0.02 * model.diameter) ++result.successes;
  }
  result.seconds = seconds_since(t0);
  return result;
}

PerfResult run_performance_floor(std::uint64_t seed, int threads) {
  PerfResult result;
  PipelineConfig cfg = benchmark_config(20000, 2000);
  const CameraIntrinsics cam = benchmark_camera();

  const SurfaceMesh mesh = make_lblock(1.0);
  const auto samples = sample_surface(mesh, cfg.sample_count, seed);
  const auto t0 = std::chrono::steady_clock::now();
  LseIndex index = build_index(samples, cfg.lse, "lblock", threads);
  result.index_build_seconds = seconds_since(t0);
  result.index_entries = index.size();

  LoadedModel model;
  model.id = "lblock";
  model.mesh = mesh;
  model.index = std::move(index);
  model.diameter = model_diameter(model.index.samples());

  std::map<std::string, const SurfaceMesh*> meshes{{model.id, &model.mesh}};
  std::map<std::string, const LseIndex*> indices{{model.id, &model.index}};

  SceneSpec spec;
  spec.name = "perf";
  spec.camera = cam;
  spec.seed = Rng::mix(seed ^ 0xfeedull);
  Rng rng(spec.seed);
  const double slots[5][2] = {{0.22, 0.30}, {0.56, 0.24}, {0.82, 0.42}, {0.34, 0.70}, {0.68, 0.74}};
  for (int i = 0; i < 5; ++i) {
    ObjectPlacement obj;
    obj.model_id = model.id;
    obj.pose.rotation = rng.rotation();
    obj.pose.translation = backproject(
        {slots[i][0] * cam.width + rng.uniform(-8, 8), slots[i][1] * cam.height + rng.uniform(-8, 8)},
        rng.uniform(85.0, 110.0), cam);
    spec.objects.push_back(obj);
  }
  const SceneBundle bundle = render_scene(spec, meshes, indices);

  std::vector<LoadedModel> models;
  models.push_back(std::move(model));
  const auto t1 = std::chrono::steady_clock::now();
  const auto hyps = estimate_scene(bundle, models, cfg, threads);
  result.estimate_seconds = seconds_since(t1);
  result.instances = 5;
  result.hypotheses = static_cast<int>(hyps.size());
  return result;
}

}  // namespace lsepose::bench
