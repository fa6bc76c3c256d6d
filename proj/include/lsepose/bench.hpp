#pragma once

#include "lsepose/pipeline.hpp"
#include "lsepose/procgen.hpp"

namespace lsepose::bench {

// Desk-scale defaults for the synthetic benchmark: three ~15 cm solids in
// front of a VGA camera, model units in centimeters.
PipelineConfig benchmark_config(int sample_count = 3500, int n_iter = 600);

CameraIntrinsics benchmark_camera();

// lblock and wedge are asymmetric; cross4 has 4-fold rotational symmetry.
std::vector<LoadedModel> build_benchmark_models(const PipelineConfig& cfg, int threads);

// Deterministic placement of all benchmark models in one scene.
SceneSpec make_benchmark_scene(int scene_index, std::uint64_t seed, const CameraIntrinsics& cam,
                               const std::vector<LoadedModel>& models, const SceneNoise& noise);

struct EndToEndResult {
  MetricReport report;
  double seconds = 0.0;
  int scenes = 0;
};

// Full pipeline over generated scenes: render, match, estimate, evaluate.
EndToEndResult run_end_to_end(const std::vector<LoadedModel>& models, const PipelineConfig& cfg,
                              int scene_count, const SceneNoise& noise, std::uint64_t seed,
                              int threads);

struct RobustnessResult {
  int trials = 0;
  int successes = 0;
  double seconds = 0.0;
  double success_rate() const { return trials == 0 ? 0.0 : double(successes) / trials; }
};

// Oracle correspondences with a fraction of candidate lists replaced by
// uniformly wrong 3D points; success means ADD below 2% of the diameter.
RobustnessResult run_outlier_robustness(int trials, double outlier_fraction, std::uint64_t seed,
                                        int threads);

struct PerfResult {
  double index_build_seconds = 0.0;
  int index_entries = 0;
  double estimate_seconds = 0.0;
  int instances = 0;
  int hypotheses = 0;
};

// Timing floor: a 20000-sample index build and one five-instance VGA scene
// estimated at the default iteration count.
PerfResult run_performance_floor(std::uint64_t seed, int threads);

}  // namespace lsepose::bench
