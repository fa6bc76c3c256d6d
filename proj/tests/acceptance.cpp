// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 10 drives the CLI binary named by the LSEPOSE_CLI
// environment variable.

#include "lsepose/bench.hpp"
#include "lsepose/oracle.hpp"
#include "lsepose/pipeline.hpp"
#include "lsepose/procgen.hpp"

#include "helpers.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace lsepose;
using lsepose::testing::TempDir;
using lsepose::testing::random_cloud;
using lsepose::testing::scalar_moments_oracle;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Harness {
  int failures = 0;
  void run(int id, const std::string& name, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    const double t0 = now_seconds();
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double dt = now_seconds() - t0;
    std::ostringstream line;
    line << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << name;
    if (!detail.empty()) line << " (" << detail << ")";
    line << " [" << dt << " s]";
    std::cout << line.str() << std::endl;
    if (!ok) ++failures;
  }
};

// ---- criterion 1: rotation invariance ------------------------------------

bool rotation_invariance(std::string& detail) {
  const double t0 = now_seconds();
  Rng rng(2024);
  LseParams params;
  double worst = 0.0;
  int tested = 0;
  while (tested < 100) {
    const auto cloud = random_cloud(rng, 64, {3.0, 1.8, 0.9});
    const Vec3 normal = rng.unit_vector();
    const LocalFrame frame = local_frame(cloud, Vec3::Zero(), normal, params.epsilon_sv);
    if (!frame.stable) continue;
    ++tested;
    const LseVector base = lse_raw(cloud, Vec3::Zero(), normal, params);
    const double scale = base.values.cwiseAbs().maxCoeff();
    for (int r = 0; r < 10; ++r) {
      const Mat3 rot = rng.rotation();
      const Vec3 shift(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
      auto moved = cloud;
      for (auto& p : moved) p.position = rot * p.position + shift;
      const LseVector turned = lse_raw(moved, shift, rot * normal, params);
      worst = std::max(worst, (turned.values - base.values).cwiseAbs().maxCoeff() / scale);
    }
  }
  const double dt = now_seconds() - t0;
  std::ostringstream ss;
  ss << "max relative deviation " << worst << ", " << dt << " s";
  detail = ss.str();
  return worst <= 1e-8 && dt < 5.0;
}

// ---- criterion 2: moment oracle -------------------------------------------

bool moment_oracle(std::string& detail) {
  Rng rng(2025);
  LseParams params;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = random_cloud(rng, 50, {2.6, 1.4, 0.7});
    const Vec3 normal = rng.unit_vector();
    const LocalFrame frame = local_frame(cloud, Vec3::Zero(), normal, params.epsilon_sv);
    const Eigen::VectorXd got = lse_moments(cloud, Vec3::Zero(), frame.rotation, params);
    const Eigen::VectorXd want =
        scalar_moments_oracle(cloud, Vec3::Zero(), frame.rotation, params);
    for (int m = 0; m < params.dim(); ++m)
      worst = std::max(worst,
                       std::abs(got[m] - want[m]) / std::max(1.0, std::abs(want[m])));
  }
  detail = "max relative error " + std::to_string(worst);
  return worst <= 1e-12;
}

// ---- criterion 3: even-exponent sign invariance ---------------------------

bool sign_invariance(std::string& detail) {
  Rng rng(2026);
  LseParams params;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = random_cloud(rng, 40, {2.0, 1.2, 0.6});
    const LocalFrame frame = local_frame(cloud, Vec3::Zero(), rng.unit_vector());
    Mat3 flipped = frame.rotation;
    flipped.row(0) = -flipped.row(0);
    flipped.row(1) = -flipped.row(1);
    const Eigen::VectorXd a = lse_moments(cloud, Vec3::Zero(), frame.rotation, params);
    const Eigen::VectorXd b = lse_moments(cloud, Vec3::Zero(), flipped, params);
    for (int m = 0; m < params.dim(); ++m)
      worst = std::max(worst, std::abs(a[m] - b[m]) / std::max(1.0, std::abs(a[m])));
  }
  detail = "max deviation " + std::to_string(worst);
  return worst <= 1e-12;
}

// ---- criterion 4: knn exactness --------------------------------------------

bool knn_exactness(std::string& detail) {
  Rng rng(2027);
  LseParams params;
  const int n = 1000, dim = params.dim();

  std::vector<PointSample> samples(n);
  std::vector<std::uint8_t> stable(n);
  Eigen::MatrixXd vectors(dim, n);
  for (int i = 0; i < n; ++i) {
    samples[i].position = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    samples[i].normal = Vec3(0, 0, 1);
    samples[i].triangle = 0;
    stable[i] = rng.uniform() < 0.9 ? 1 : 0;
    for (int d = 0; d < dim; ++d) vectors(d, i) = rng.gaussian();
  }
  NormalizationStats stats;
  stats.mean = Eigen::VectorXd::Zero(dim);
  stats.stddev = Eigen::VectorXd::Ones(dim);
  stats.zero_variance.assign(dim, 0);
  const LseIndex index("synthetic", params, stats, samples, stable, vectors, 0);

  std::vector<KnnHit> fast, slow;
  for (int q = 0; q < 100; ++q) {
    Eigen::VectorXd query(dim);
    for (int d = 0; d < dim; ++d) query[d] = rng.gaussian();
    index.knn(query, 100, fast);
    index.knn_linear(query, 100, slow);
    if (fast.size() != slow.size()) {
      detail = "result sizes differ";
      return false;
    }
    for (std::size_t i = 0; i < fast.size(); ++i) {
      if (fast[i].entry != slow[i].entry || fast[i].distance != slow[i].distance) {
        detail = "mismatch at query " + std::to_string(q) + " rank " + std::to_string(i);
        return false;
      }
    }
  }
  detail = "100 queries, k=100, identical";
  return true;
}

// ---- criterion 5: pnp recovery ---------------------------------------------

bool pnp_recovery(std::string& detail) {
  Rng rng(2028);
  CameraIntrinsics cam;
  cam.fx = 530;
  cam.fy = 510;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;

  double worst_rot = 0, worst_trans = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Pose truth;
    truth.rotation = rng.rotation();
    truth.translation = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(15, 45));
    const int n = static_cast<int>(rng.uniform_int(6, 10));
    std::vector<Correspondence2d3d> corr(n);
    for (auto& c : corr) {
      c.point = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      c.pixel = project(truth.apply(c.point), cam);
    }
    const Pose got = solve_pnp(corr, cam);
    worst_rot = std::max(worst_rot, rotation_angle_between(got.rotation, truth.rotation));
    worst_trans = std::max(worst_trans, (got.translation - truth.translation).norm() /
                                            truth.translation.norm());
  }
  std::ostringstream ss;
  ss << "worst rotation " << worst_rot << " rad, translation " << worst_trans << " rel";
  detail = ss.str();
  return worst_rot < 1e-5 && worst_trans < 1e-5;
}

// ---- criterion 6: LM jacobian ----------------------------------------------

bool lm_jacobian(std::string& detail) {
  Rng rng(2029);
  CameraIntrinsics cam;
  cam.fx = cam.fy = 500;
  cam.cx = 320;
  cam.cy = 240;
  cam.width = 640;
  cam.height = 480;

  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Pose pose;
    pose.rotation = rng.rotation();
    pose.translation = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(12, 40));
    std::vector<Correspondence2d3d> corr(8);
    for (auto& c : corr) {
      c.point = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
      c.pixel = project(pose.apply(c.point), cam) + Vec2(rng.gaussian() * 2, rng.gaussian() * 2);
    }

    Eigen::VectorXd r0;
    Eigen::MatrixXd jac;
    reprojection_residuals(pose, corr, cam, r0, &jac);
    const double h = 1e-6;
    for (int p = 0; p < 6; ++p) {
      Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
      delta[p] = h;
      Pose plus{rotation_exp(delta.head<3>()) * pose.rotation, pose.translation + delta.tail<3>()};
      Pose minus{rotation_exp(-delta.head<3>()) * pose.rotation,
                 pose.translation - delta.tail<3>()};
      Eigen::VectorXd rp, rm;
      reprojection_residuals(plus, corr, cam, rp);
      reprojection_residuals(minus, corr, cam, rm);
      const Eigen::VectorXd fd = (rp - rm) / (2 * h);
      for (int i = 0; i < fd.size(); ++i)
        worst = std::max(worst, std::abs(jac(i, p) - fd[i]) / std::max(1.0, std::abs(fd[i])));
    }

    // refinement from a perturbed start must not increase the cost
    Pose start{rotation_exp(rng.unit_vector() * 0.1) * pose.rotation,
               pose.translation + Vec3(0.2, -0.1, 0.5)};
    const double before = reprojection_cost(start, corr, cam);
    double after = 0;
    refine_pose(start, corr, cam, {}, &after);
    if (after > before) {
      detail = "refinement increased the cost";
      return false;
    }
  }
  detail = "max jacobian deviation " + std::to_string(worst);
  return worst <= 1e-4;
}

// ---- criterion 7: ransac robustness ---------------------------------------

bool ransac_robustness(std::string& detail) {
  const auto result = bench::run_outlier_robustness(50, 0.40, 424242, 1);
  std::ostringstream ss;
  ss << result.successes << "/" << result.trials << " within 2% diameter, " << result.seconds
     << " s";
  detail = ss.str();
  return result.success_rate() >= 0.95;
}

// ---- criterion 8: end-to-end oracle benchmark ------------------------------

bool end_to_end(std::string& detail) {
  const double t0 = now_seconds();
  const PipelineConfig cfg = bench::benchmark_config();
  const auto models = bench::build_benchmark_models(cfg, 1);

  const auto clean = bench::run_end_to_end(models, cfg, 20, {}, cfg.seed, 1);
  SceneNoise noise;
  noise.lse_sd = 0.25;
  noise.dropout = 0.20;
  const auto noisy = bench::run_end_to_end(models, cfg, 20, noise, cfg.seed + 1, 1);
  const double dt = now_seconds() - t0;

  std::ostringstream ss;
  ss << "clean add " << clean.report.add_recall << " vsd " << clean.report.vsd_recall
     << "; noisy add " << noisy.report.add_recall << " vsd " << noisy.report.vsd_recall << "; "
     << dt << " s";
  detail = ss.str();
  return clean.report.add_recall >= 0.90 && clean.report.vsd_recall >= 0.90 &&
         noisy.report.add_recall >= 0.70 && noisy.report.vsd_recall >= 0.70 && dt < 300.0;
}

// ---- criterion 9: vsd oracle -----------------------------------------------

bool vsd_oracle(std::string& detail) {
  Rng rng(2030);
  VsdParams params;
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 48, h = 36;
    SceneMaps gt(w, h), est(w, h);
    std::vector<float> scene(static_cast<std::size_t>(w) * h,
                             std::numeric_limits<float>::infinity());
    for (int i = 0; i < w * h; ++i) {
      if (rng.uniform() < 0.6) gt.depth[i] = static_cast<float>(rng.uniform(50, 100));
      if (rng.uniform() < 0.6) est.depth[i] = static_cast<float>(rng.uniform(50, 100));
      if (rng.uniform() < 0.8) scene[i] = static_cast<float>(rng.uniform(45, 105));
    }

    const auto [err, vis] = vsd_error(est, gt, scene, params);
    // independent scalar recomputation
    const double tau = params.tau_model_units();
    std::size_t uni = 0, wrong = 0, rendered = 0, visible = 0;
    for (int i = 0; i < w * h; ++i) {
      const bool ve = std::isfinite(est.depth[i]) && est.depth[i] <= scene[i] + tau;
      const bool vg = std::isfinite(gt.depth[i]) && gt.depth[i] <= scene[i] + tau;
      if (std::isfinite(gt.depth[i])) {
        ++rendered;
        if (vg) ++visible;
      }
      if (!ve && !vg) continue;
      ++uni;
      if (!(ve && vg && std::abs(double(est.depth[i]) - double(gt.depth[i])) < tau)) ++wrong;
    }
    const double expect_err = uni ? double(wrong) / uni : 1.0;
    const double expect_vis = rendered ? double(visible) / rendered : 0.0;
    if (err != expect_err || vis != expect_vis) {
      detail = "mismatch on trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "10 scenes, exact match";
  return true;
}

// ---- criterion 10: cli determinism -----------------------------------------

void write_obj(const std::filesystem::path& path, const SurfaceMesh& mesh) {
  std::ofstream out(path);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool cli_determinism(std::string& detail) {
  const char* cli = std::getenv("LSEPOSE_CLI");
  if (!cli) {
    detail = "LSEPOSE_CLI not set";
    return false;
  }
  TempDir dir;
  write_obj(dir.file("wedge.obj"), make_wedge(1.0));

  PipelineConfig cfg = default_config();
  cfg.seed = 11;
  cfg.sample_count = 1500;
  cfg.models.push_back({"wedge", (dir.path / "wedge.obj").string(), false});
  cfg.index_dir = (dir.path / "indices").string();
  cfg.output_dir = (dir.path / "scenes").string();
  cfg.ransac.n_iter = 200;
  save_config(cfg, dir.file("config.json"));

  SceneSpec spec;
  spec.name = "det";
  spec.seed = 3;
  spec.camera.fx = spec.camera.fy = 400;
  spec.camera.cx = 160;
  spec.camera.cy = 120;
  spec.camera.width = 320;
  spec.camera.height = 240;
  Rng rng(3);
  spec.objects.push_back({"wedge", Pose{rng.rotation(), Vec3(0, 0, 60)}});
  save_scene_specs({spec}, dir.file("scenes.json"));

  auto shell = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (shell("embed --config " + dir.file("config.json").string()) != 0) {
    detail = "embed failed";
    return false;
  }
  if (shell("synth --config " + dir.file("config.json").string() + " --scenes " +
            dir.file("scenes.json").string()) != 0) {
    detail = "synth failed";
    return false;
  }
  const std::string scene_dir = (dir.path / "scenes" / "det").string();
  for (int run = 0; run < 2; ++run) {
    const std::string out = (dir.path / ("hyp" + std::to_string(run) + ".json")).string();
    const int rc = shell("estimate --config " + dir.file("config.json").string() + " --scene " +
                         scene_dir + " --seed 77 --output " + out);
    if (rc != 0) {
      detail = "estimate exited with " + std::to_string(rc);
      return false;
    }
  }
  const std::string a = slurp(dir.file("hyp0.json"));
  const std::string b = slurp(dir.file("hyp1.json"));
  if (a.empty() || a != b) {
    detail = "hypothesis files differ";
    return false;
  }
  detail = "byte-identical hypothesis files";
  return true;
}

// ---- criterion 11: performance floor ---------------------------------------

bool performance_floor(std::string& detail) {
  const auto perf = bench::run_performance_floor(31337, 1);
  std::ostringstream ss;
  ss << "index " << perf.index_build_seconds << " s (" << perf.index_entries
     << " entries), estimate " << perf.estimate_seconds << " s (" << perf.hypotheses
     << " hypotheses)";
  detail = ss.str();
  return perf.index_build_seconds < 30.0 && perf.estimate_seconds < 10.0;
}

}  // namespace

int main() {
  Harness h;
  h.run(1, "rotation invariance of the embedding", rotation_invariance);
  h.run(2, "moments match the scalar oracle", moment_oracle);
  h.run(3, "even-exponent sign invariance", sign_invariance);
  h.run(4, "knn acceleration is exact", knn_exactness);
  h.run(5, "pnp recovery on noise-free data", pnp_recovery);
  h.run(6, "analytic jacobian and monotone refinement", lm_jacobian);
  h.run(7, "ransac robustness at 40% outliers", ransac_robustness);
  h.run(8, "end-to-end oracle benchmark", end_to_end);
  h.run(9, "vsd equals the scalar reimplementation", vsd_oracle);
  h.run(10, "cli estimate is byte-deterministic", cli_determinism);
  h.run(11, "performance floor", performance_floor);

  if (h.failures == 0) {
    std::cout << "all criteria passed" << std::endl;
    return 0;
  }
  std::cout << h.failures << " criteria failed" << std::endl;
  return 1;
}
