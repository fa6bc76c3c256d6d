#pragma once

#include "lsepose/index.hpp"
#include "lsepose/metrics.hpp"
#include "lsepose/oracle.hpp"
#include "lsepose/ransac.hpp"

#include <filesystem>

namespace lsepose {

struct ModelConfig {
  std::string id;
  std::string mesh_path;
  bool symmetric = false;
};

// One auditable place for every tunable constant. The file format is JSON
// with strict key checking; `lsepose init-config` prints the full defaults.
struct PipelineConfig {
  std::uint64_t seed = 1;
  double unit_scale_to_cm = 1.0;
  int sample_count = 20000;
  std::vector<ModelConfig> models;
  std::string index_dir = "indices";
  std::string output_dir = "out";
  LseParams lse;
  double suppression_radius_cm = 3.0;  // stored in cm, converted for matching
  int matching_k = 100;
  double discriminative_threshold = 0.5;
  RansacConfig ransac;
  VsdParams vsd;

  MatchingParams matching_params() const {
    MatchingParams p;
    p.k = matching_k;
    p.suppression_radius = suppression_radius_cm / unit_scale_to_cm;
    p.discriminative_threshold = discriminative_threshold;
    return p;
  }

  std::filesystem::path index_path(const std::string& model_id) const {
    return std::filesystem::path(index_dir) / (model_id + ".lsei");
  }

  void validate() const;
};

PipelineConfig default_config();

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

// Scene spec files for the synth command: a list of SceneSpec entries.
std::vector<SceneSpec> load_scene_specs(const std::filesystem::path& path);
void save_scene_specs(const std::vector<SceneSpec>& specs, const std::filesystem::path& path);

}  // namespace lsepose
