#pragma once

#include "lsepose/index.hpp"
#include "lsepose/ransac.hpp"

#include <map>

namespace lsepose {

struct SceneNoise {
  double lse_sd = 0.0;     // additive Gaussian on embedding channels, normalized units
  int mask_morph_px = 0;   // > 0 dilates, < 0 erodes the instance masks
  double dropout = 0.0;    // fraction of embedding pixels replaced by the sentinel

  void validate() const {
    if (lse_sd < 0) throw ConfigError("noise: lse sd must be >= 0");
    if (dropout < 0 || dropout > 1) throw ConfigError("noise: dropout must be in [0,1]");
  }
};

struct ObjectPlacement {
  std::string model_id;
  Pose pose;
};

struct SceneSpec {
  std::string name;
  std::vector<ObjectPlacement> objects;
  CameraIntrinsics camera;
  SceneNoise noise;
  std::uint64_t seed = 0;
};

enum class LseLookup {
  NearestEntry,  // pixel embedding copied from the nearest index entry
  Recompute,     // embedding recomputed from the neighborhood of the surface point
};

struct OracleOptions {
  LseLookup lookup = LseLookup::NearestEntry;
  double max_lookup_radius = -1.0;  // model units; <= 0 uses the embedding radius
  RenderOptions render;
};

struct GroundTruthObject {
  std::string model_id;
  Pose pose;
  int instance_id = 0;  // 1-based, matches the mask files
};

// Everything the pipeline consumes for one scene.
struct SceneBundle {
  CameraIntrinsics camera;
  SceneMaps maps;                       // full scene render (true geometry)
  std::vector<Mask> masks;              // per instance, after mask noise
  std::vector<int> mask_instance_ids;   // 1-based id per mask
  LseMap lse;                           // after embedding noise and dropout
  std::vector<GroundTruthObject> ground_truth;
};

// Renders all objects into one z-buffered scene, extracts per-instance masks
// and fills the per-pixel embedding map from the winning object's index.
// Noise is applied afterwards, deterministically from the scene seed.
SceneBundle render_scene(const SceneSpec& spec,
                         const std::map<std::string, const SurfaceMesh*>& meshes,
                         const std::map<std::string, const LseIndex*>& indices,
                         const OracleOptions& opts = {});

// Scene directory layout: camera.json, depth.dpth, mask_<k>.png, lse.lsem,
// gt_poses.json. Round trips are bit exact.
void write_scene(const std::filesystem::path& dir, const SceneBundle& bundle);
SceneBundle read_scene(const std::filesystem::path& dir);

}  // namespace lsepose
