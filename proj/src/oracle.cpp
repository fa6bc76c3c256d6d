#include "lsepose/oracle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace lsepose {

using nlohmann::json;

namespace {

json pose_to_json(const Pose& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation(i, j));
  json t = json::array();
  for (int i = 0; i < 3; ++i) t.push_back(pose.translation[i]);
  return json{{"R", r}, {"t", t}};
}

Pose pose_from_json(const json& j) {
  const auto& r = j.at("R");
  const auto& t = j.at("t");
  if (r.size() != 9 || t.size() != 3) throw ParseError("pose json: expected 9 R and 3 t values");
  Pose pose;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) pose.rotation(i, k) = r[3 * i + k].get<double>();
  for (int i = 0; i < 3; ++i) pose.translation[i] = t[i].get<double>();
  return pose;
}

json require(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("scene json: missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

SceneBundle render_scene(const SceneSpec& spec,
                         const std::map<std::string, const SurfaceMesh*>& meshes,
                         const std::map<std::string, const LseIndex*>& indices,
                         const OracleOptions& opts) {
  spec.camera.validate();
  spec.noise.validate();
  if (spec.objects.empty()) throw Error("render_scene: scene has no objects");

  // every object needs an index, and all indices must agree on the embedding
  const LseIndex* first = nullptr;
  for (const auto& obj : spec.objects) {
    if (!meshes.count(obj.model_id) || !indices.count(obj.model_id))
      throw Error("render_scene: no mesh or index for model '" + obj.model_id + "'");
    const LseIndex* idx = indices.at(obj.model_id);
    if (!first)
      first = idx;
    else if (!(idx->params() == first->params()))
      throw Error("render_scene: indices built with different embedding parameters");
  }
  const int channels = first->params().dim();
  const double lookup_radius =
      opts.max_lookup_radius > 0 ? opts.max_lookup_radius : first->params().radius_model_units();

  SceneBundle bundle;
  bundle.camera = spec.camera;
  bundle.maps = SceneMaps(spec.camera.width, spec.camera.height);
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& obj = spec.objects[k];
    if (!obj.pose.is_valid(1e-6)) throw Error("render_scene: invalid pose for " + obj.model_id);
    render(*meshes.at(obj.model_id), obj.pose, spec.camera, static_cast<int>(k) + 1, bundle.maps,
           opts.render);
    bundle.ground_truth.push_back({obj.model_id, obj.pose, static_cast<int>(k) + 1});
  }

  // instance masks from the true instance map
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    bundle.masks.push_back(mask_of(bundle.maps, static_cast<int>(k) + 1));
    bundle.mask_instance_ids.push_back(static_cast<int>(k) + 1);
  }

  // per-model runtimes for nearest-entry lookups
  std::map<std::string, ModelRuntime> runtimes;
  for (const auto& obj : spec.objects)
    runtimes.try_emplace(obj.model_id, *meshes.at(obj.model_id), *indices.at(obj.model_id));

  bundle.lse = LseMap(spec.camera.width, spec.camera.height, channels);
  std::vector<int> neighbor_scratch;
  for (int y = 0; y < spec.camera.height; ++y) {
    for (int x = 0; x < spec.camera.width; ++x) {
      const std::size_t at = bundle.maps.idx(x, y);
      const int inst = bundle.maps.instance[at];
      if (inst == 0) continue;
      const auto& obj = spec.objects[inst - 1];
      const LseIndex& index = *indices.at(obj.model_id);
      const ModelRuntime& rt = runtimes.at(obj.model_id);
      const Vec3& op = bundle.maps.object_point[at];
      const int entry = rt.nearest_entry(op);
      if (entry < 0) continue;
      if ((index.sample(entry).position - op).norm() > lookup_radius) continue;
      float* px = bundle.lse.pixel(x, y);
      if (opts.lookup == LseLookup::NearestEntry) {
        for (int c = 0; c < channels; ++c)
          px[c] = static_cast<float>(index.vectors()(c, entry));
      } else {
        // recompute the embedding at the surface point from the index samples
        const auto neighborhood =
            radius_neighbors(index.samples(), op, index.params().radius_model_units());
        try {
          const LseVector raw =
              lse_raw(neighborhood, op, index.sample(entry).normal, index.params());
          const LseVector norm = normalize(raw, index.stats());
          for (int c = 0; c < channels; ++c) px[c] = static_cast<float>(norm.values[c]);
        } catch (const DegenerateFrameError&) {
          bundle.lse.invalidate(x, y);
        }
      }
    }
  }

  // noise, seeded and applied after the clean maps are complete
  Rng rng(spec.seed);
  if (spec.noise.lse_sd > 0) {
    Rng noise_rng = rng.derive(1);
    for (int y = 0; y < bundle.lse.height; ++y)
      for (int x = 0; x < bundle.lse.width; ++x) {
        if (!bundle.lse.valid(x, y)) continue;
        float* px = bundle.lse.pixel(x, y);
        for (int c = 0; c < channels; ++c)
          px[c] = static_cast<float>(px[c] + spec.noise.lse_sd * noise_rng.gaussian());
      }
  }
  if (spec.noise.dropout > 0) {
    Rng drop_rng = rng.derive(2);
    for (int y = 0; y < bundle.lse.height; ++y)
      for (int x = 0; x < bundle.lse.width; ++x) {
        if (!bundle.lse.valid(x, y)) continue;
        if (drop_rng.uniform() < spec.noise.dropout) bundle.lse.invalidate(x, y);
      }
  }
  if (spec.noise.mask_morph_px != 0)
    for (auto& m : bundle.masks) m = morph(m, spec.noise.mask_morph_px);

  return bundle;
}

void write_scene(const std::filesystem::path& dir, const SceneBundle& bundle) {
  std::filesystem::create_directories(dir);

  json cam{{"format_version", 1},
           {"fx", bundle.camera.fx},
           {"fy", bundle.camera.fy},
           {"cx", bundle.camera.cx},
           {"cy", bundle.camera.cy},
           {"width", bundle.camera.width},
           {"height", bundle.camera.height}};
  std::ofstream(dir / "camera.json") << cam.dump(2) << '\n';

  write_depth(dir / "depth.dpth", bundle.maps.depth, bundle.maps.width, bundle.maps.height);
  write_lse_map(dir / "lse.lsem", bundle.lse);
  for (std::size_t k = 0; k < bundle.masks.size(); ++k) {
    const int id = bundle.mask_instance_ids[k];
    write_mask_png(dir / ("mask_" + std::to_string(id) + ".png"), bundle.masks[k],
                   static_cast<std::uint8_t>(id));
  }

  json gts = json::array();
  for (const auto& gt : bundle.ground_truth) {
    json g = pose_to_json(gt.pose);
    g["model_id"] = gt.model_id;
    g["instance_id"] = gt.instance_id;
    gts.push_back(g);
  }
  std::ofstream(dir / "gt_poses.json") << json{{"format_version", 1}, {"objects", gts}}.dump(2)
                                       << '\n';
}

SceneBundle read_scene(const std::filesystem::path& dir) {
  SceneBundle bundle;

  std::ifstream cam_in(dir / "camera.json");
  if (!cam_in) throw IoError("cannot open " + (dir / "camera.json").string());
  json cam = json::parse(cam_in, nullptr, true);
  bundle.camera.fx = require(cam, "fx").get<double>();
  bundle.camera.fy = require(cam, "fy").get<double>();
  bundle.camera.cx = require(cam, "cx").get<double>();
  bundle.camera.cy = require(cam, "cy").get<double>();
  bundle.camera.width = require(cam, "width").get<int>();
  bundle.camera.height = require(cam, "height").get<int>();
  bundle.camera.validate();

  int w = 0, h = 0;
  std::vector<float> depth = read_depth(dir / "depth.dpth", w, h);
  if (w != bundle.camera.width || h != bundle.camera.height)
    throw IoError("scene depth size does not match camera");
  bundle.maps = SceneMaps(w, h);
  bundle.maps.depth = std::move(depth);

  bundle.lse = read_lse_map(dir / "lse.lsem");
  if (bundle.lse.width != w || bundle.lse.height != h)
    throw IoError("scene embedding map size does not match camera");

  std::ifstream gt_in(dir / "gt_poses.json");
  if (!gt_in) throw IoError("cannot open " + (dir / "gt_poses.json").string());
  json gt = json::parse(gt_in, nullptr, true);
  for (const auto& g : require(gt, "objects")) {
    GroundTruthObject obj;
    obj.model_id = require(g, "model_id").get<std::string>();
    obj.instance_id = require(g, "instance_id").get<int>();
    obj.pose = pose_from_json(g);
    bundle.ground_truth.push_back(obj);
  }

  for (const auto& gt_obj : bundle.ground_truth) {
    const auto path = dir / ("mask_" + std::to_string(gt_obj.instance_id) + ".png");
    std::uint8_t value = 0;
    Mask m = read_mask_png(path, value);
    if (m.width != w || m.height != h) throw IoError(path.string() + ": mask size mismatch");
    bundle.masks.push_back(std::move(m));
    bundle.mask_instance_ids.push_back(gt_obj.instance_id);
  }
  return bundle;
}

}  // namespace lsepose
