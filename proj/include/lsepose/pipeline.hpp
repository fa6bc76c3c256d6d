#pragma once

#include "lsepose/config.hpp"
#include "lsepose/metrics.hpp"

namespace lsepose {

// A loaded model: geometry, embedding index and evaluation data.
struct LoadedModel {
  std::string id;
  bool symmetric = false;
  SurfaceMesh mesh;
  LseIndex index;
  double diameter = 0.0;  // over the index samples
};

// Builds per-model correspondence sets and runs the detector on every mask.
std::vector<PoseHypothesis> estimate_scene(const SceneBundle& scene,
                                           const std::vector<LoadedModel>& models,
                                           const PipelineConfig& cfg, int threads);

// Scores every ground-truth object of the scene against the hypotheses.
std::vector<ObjectRecord> evaluate_scene(const std::string& scene_id, const SceneBundle& scene,
                                         const std::vector<LoadedModel>& models,
                                         const std::vector<PoseHypothesis>& hypotheses,
                                         const PipelineConfig& cfg);

void write_hypotheses(const std::filesystem::path& path,
                      const std::vector<PoseHypothesis>& hypotheses);
std::vector<PoseHypothesis> read_hypotheses(const std::filesystem::path& path);

void write_report_json(const std::filesystem::path& path, const MetricReport& report);
void write_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace lsepose
