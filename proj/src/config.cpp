#include "lsepose/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace lsepose {

using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
  }
}

json camera_to_json(const CameraIntrinsics& cam) {
  return json{{"fx", cam.fx},       {"fy", cam.fy},           {"cx", cam.cx},
              {"cy", cam.cy},       {"width", cam.width},     {"height", cam.height}};
}

CameraIntrinsics camera_from_json(const json& j) {
  CameraIntrinsics cam;
  cam.fx = get_or(j, "fx", 0.0);
  cam.fy = get_or(j, "fy", 0.0);
  cam.cx = get_or(j, "cx", 0.0);
  cam.cy = get_or(j, "cy", 0.0);
  cam.width = get_or(j, "width", 0);
  cam.height = get_or(j, "height", 0);
  cam.validate();
  return cam;
}

}  // namespace

void PipelineConfig::validate() const {
  if (sample_count < 1) throw ConfigError("config: sample_count must be >= 1");
  if (unit_scale_to_cm <= 0) throw ConfigError("config: unit_scale_to_cm must be > 0");
  if (matching_k < 1) throw ConfigError("config: matching k must be >= 1");
  if (suppression_radius_cm <= 0)
    throw ConfigError("config: suppression radius must be > 0");
  if (discriminative_threshold < 0)
    throw ConfigError("config: discriminative threshold must be >= 0");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (m.id.empty()) throw ConfigError("config: model with empty id");
    if (!ids.insert(m.id).second) throw ConfigError("config: duplicate model id '" + m.id + "'");
  }
  lse.validate();
  ransac.validate();
  vsd.validate();
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.lse.unit_scale_to_cm = cfg.unit_scale_to_cm;
  cfg.vsd.unit_scale_to_cm = cfg.unit_scale_to_cm;
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json models = json::array();
  for (const auto& m : cfg.models)
    models.push_back({{"id", m.id}, {"mesh", m.mesh_path}, {"symmetric", m.symmetric}});

  json exps = json::array();
  for (const auto& e : cfg.lse.exponents) exps.push_back({e[0], e[1], e[2]});

  const json j{
      {"format_version", kConfigVersion},
      {"seed", cfg.seed},
      {"unit_scale_to_cm", cfg.unit_scale_to_cm},
      {"sample_count", cfg.sample_count},
      {"models", models},
      {"index_dir", cfg.index_dir},
      {"output_dir", cfg.output_dir},
      {"lse",
       {{"radius_cm", cfg.lse.radius_cm},
        {"sigma_cm", cfg.lse.sigma_cm},
        {"epsilon_sv", cfg.lse.epsilon_sv},
        {"exponents", exps}}},
      {"matching",
       {{"k", cfg.matching_k},
        {"suppression_radius_cm", cfg.suppression_radius_cm},
        {"discriminative_threshold", cfg.discriminative_threshold}}},
      {"ransac",
       {{"n_iter", cfg.ransac.n_iter},
        {"sample_min", cfg.ransac.sample_min},
        {"sample_max", cfg.ransac.sample_max},
        {"s_min", cfg.ransac.s_min},
        {"inlier_threshold_px", cfg.ransac.inlier_threshold_px},
        {"alpha", cfg.ransac.alpha}}},
      {"vsd",
       {{"tau_mm", cfg.vsd.tau_mm},
        {"error_threshold", cfg.vsd.error_threshold},
        {"min_visibility", cfg.vsd.min_visibility}}},
      {"render", {{"near_plane", cfg.ransac.render.near_plane}}},
  };
  return j.dump(2) + "\n";
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config_to_json(cfg);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  check_keys(j, {"format_version", "seed", "unit_scale_to_cm", "sample_count", "models",
                 "index_dir", "output_dir", "lse", "matching", "ransac", "vsd", "render"},
             "top level");
  if (get_or(j, "format_version", kConfigVersion) != kConfigVersion)
    throw ConfigError("config: unsupported format_version");

  PipelineConfig cfg = default_config();
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.unit_scale_to_cm = get_or(j, "unit_scale_to_cm", cfg.unit_scale_to_cm);
  cfg.sample_count = get_or(j, "sample_count", cfg.sample_count);
  cfg.index_dir = get_or(j, "index_dir", cfg.index_dir);
  cfg.output_dir = get_or(j, "output_dir", cfg.output_dir);

  if (j.contains("models")) {
    for (const auto& m : j.at("models")) {
      check_keys(m, {"id", "mesh", "symmetric"}, "models[]");
      ModelConfig mc;
      mc.id = get_or<std::string>(m, "id", "");
      mc.mesh_path = get_or<std::string>(m, "mesh", "");
      mc.symmetric = get_or(m, "symmetric", false);
      cfg.models.push_back(mc);
    }
  }

  if (j.contains("lse")) {
    const json& l = j.at("lse");
    check_keys(l, {"radius_cm", "sigma_cm", "epsilon_sv", "exponents"}, "lse");
    cfg.lse.radius_cm = get_or(l, "radius_cm", cfg.lse.radius_cm);
    cfg.lse.sigma_cm = get_or(l, "sigma_cm", cfg.lse.sigma_cm);
    cfg.lse.epsilon_sv = get_or(l, "epsilon_sv", cfg.lse.epsilon_sv);
    if (l.contains("exponents")) {
      cfg.lse.exponents.clear();
      for (const auto& e : l.at("exponents")) {
        if (e.size() != 3) throw ConfigError("config: exponents entries need 3 values");
        cfg.lse.exponents.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
      }
    }
  }
  cfg.lse.unit_scale_to_cm = cfg.unit_scale_to_cm;

  if (j.contains("matching")) {
    const json& m = j.at("matching");
    check_keys(m, {"k", "suppression_radius_cm", "discriminative_threshold"}, "matching");
    cfg.matching_k = get_or(m, "k", cfg.matching_k);
    cfg.suppression_radius_cm = get_or(m, "suppression_radius_cm", cfg.suppression_radius_cm);
    cfg.discriminative_threshold =
        get_or(m, "discriminative_threshold", cfg.discriminative_threshold);
  }

  if (j.contains("ransac")) {
    const json& r = j.at("ransac");
    check_keys(r, {"n_iter", "sample_min", "sample_max", "s_min", "inlier_threshold_px", "alpha"},
               "ransac");
    cfg.ransac.n_iter = get_or(r, "n_iter", cfg.ransac.n_iter);
    cfg.ransac.sample_min = get_or(r, "sample_min", cfg.ransac.sample_min);
    cfg.ransac.sample_max = get_or(r, "sample_max", cfg.ransac.sample_max);
    cfg.ransac.s_min = get_or(r, "s_min", cfg.ransac.s_min);
    cfg.ransac.inlier_threshold_px =
        get_or(r, "inlier_threshold_px", cfg.ransac.inlier_threshold_px);
    cfg.ransac.alpha = get_or(r, "alpha", cfg.ransac.alpha);
  }
  cfg.ransac.seed = cfg.seed;

  if (j.contains("vsd")) {
    const json& v = j.at("vsd");
    check_keys(v, {"tau_mm", "error_threshold", "min_visibility"}, "vsd");
    cfg.vsd.tau_mm = get_or(v, "tau_mm", cfg.vsd.tau_mm);
    cfg.vsd.error_threshold = get_or(v, "error_threshold", cfg.vsd.error_threshold);
    cfg.vsd.min_visibility = get_or(v, "min_visibility", cfg.vsd.min_visibility);
  }
  cfg.vsd.unit_scale_to_cm = cfg.unit_scale_to_cm;

  if (j.contains("render")) {
    const json& r = j.at("render");
    check_keys(r, {"near_plane"}, "render");
    cfg.ransac.render.near_plane = get_or(r, "near_plane", cfg.ransac.render.near_plane);
  }

  cfg.validate();
  return cfg;
}

std::vector<SceneSpec> load_scene_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scene spec: " + std::string(e.what()));
  }
  check_keys(j, {"format_version", "scenes"}, "scene spec");
  std::vector<SceneSpec> specs;
  if (!j.contains("scenes")) throw ConfigError("scene spec: missing 'scenes'");
  for (const auto& s : j.at("scenes")) {
    check_keys(s, {"name", "seed", "camera", "objects", "noise"}, "scenes[]");
    SceneSpec spec;
    spec.name = get_or<std::string>(s, "name", "scene");
    spec.seed = get_or<std::uint64_t>(s, "seed", 0);
    if (!s.contains("camera")) throw ConfigError("scene spec: scene lacks camera");
    spec.camera = camera_from_json(s.at("camera"));
    if (s.contains("noise")) {
      const json& n = s.at("noise");
      check_keys(n, {"lse_sd", "mask_morph_px", "dropout"}, "noise");
      spec.noise.lse_sd = get_or(n, "lse_sd", 0.0);
      spec.noise.mask_morph_px = get_or(n, "mask_morph_px", 0);
      spec.noise.dropout = get_or(n, "dropout", 0.0);
      spec.noise.validate();
    }
    if (!s.contains("objects")) throw ConfigError("scene spec: scene lacks objects");
    for (const auto& o : s.at("objects")) {
      check_keys(o, {"model_id", "R", "t"}, "objects[]");
      ObjectPlacement placement;
      placement.model_id = get_or<std::string>(o, "model_id", "");
      const auto& r = o.at("R");
      const auto& t = o.at("t");
      if (r.size() != 9 || t.size() != 3)
        throw ConfigError("scene spec: pose needs 9 R and 3 t values");
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) placement.pose.rotation(i, k) = r[3 * i + k].get<double>();
      for (int i = 0; i < 3; ++i) placement.pose.translation[i] = t[i].get<double>();
      spec.objects.push_back(placement);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

void save_scene_specs(const std::vector<SceneSpec>& specs, const std::filesystem::path& path) {
  json scenes = json::array();
  for (const auto& spec : specs) {
    json objects = json::array();
    for (const auto& o : spec.objects) {
      json r = json::array();
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.push_back(o.pose.rotation(i, k));
      objects.push_back(
          {{"model_id", o.model_id},
           {"R", r},
           {"t", {o.pose.translation[0], o.pose.translation[1], o.pose.translation[2]}}});
    }
    scenes.push_back({{"name", spec.name},
                      {"seed", spec.seed},
                      {"camera", camera_to_json(spec.camera)},
                      {"objects", objects},
                      {"noise",
                       {{"lse_sd", spec.noise.lse_sd},
                        {"mask_morph_px", spec.noise.mask_morph_px},
                        {"dropout", spec.noise.dropout}}}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << json{{"format_version", 1}, {"scenes", scenes}}.dump(2) << "\n";
}

}  // namespace lsepose
