#include "lsepose/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace lsepose {

using nlohmann::json;

std::vector<PoseHypothesis> estimate_scene(const SceneBundle& scene,
                                           const std::vector<LoadedModel>& models,
                                           const PipelineConfig& cfg, int threads) {
  if (models.empty()) throw Error("estimate_scene: no models");
  const MatchingParams matching = cfg.matching_params();

  std::vector<CorrespondenceSet> corr;
  corr.reserve(models.size());
  std::vector<ModelRef> refs;
  refs.reserve(models.size());
  for (const auto& m : models) {
    corr.push_back(build_correspondences(scene.lse, scene.masks, m.index, matching, threads));
    refs.push_back({m.id, &m.mesh, &m.index});
  }

  RansacConfig rc = cfg.ransac;
  rc.seed = cfg.seed;
  auto hyps = estimate_all(scene.masks, corr, refs, scene.lse, scene.camera, rc, threads);
  // estimate_all numbers masks by position; translate to the scene's ids
  for (auto& h : hyps) h.mask_id = scene.mask_instance_ids[h.mask_id - 1];
  return hyps;
}

std::vector<ObjectRecord> evaluate_scene(const std::string& scene_id, const SceneBundle& scene,
                                         const std::vector<LoadedModel>& models,
                                         const std::vector<PoseHypothesis>& hypotheses,
                                         const PipelineConfig& cfg) {
  std::vector<ObjectRecord> records;
  RenderOptions ropts = cfg.ransac.render;

  for (const auto& gt : scene.ground_truth) {
    ObjectRecord rec;
    rec.scene_id = scene_id;
    rec.object_id = gt.instance_id;
    rec.model_id = gt.model_id;

    const auto model = std::find_if(models.begin(), models.end(),
                                    [&](const LoadedModel& m) { return m.id == gt.model_id; });
    if (model == models.end()) throw Error("evaluate_scene: unknown model " + gt.model_id);
    rec.symmetric = model->symmetric;

    SceneMaps gt_render(scene.camera.width, scene.camera.height);
    render(model->mesh, gt.pose, scene.camera, 1, gt_render, ropts);

    const auto hyp = std::find_if(hypotheses.begin(), hypotheses.end(), [&](const auto& h) {
      return h.mask_id == gt.instance_id;
    });
    if (hyp == hypotheses.end() || hyp->model_id != gt.model_id) {
      // missed or misidentified: visibility still comes from the true render
      SceneMaps empty(scene.camera.width, scene.camera.height);
      const auto [err, vis] = vsd_error(empty, gt_render, scene.maps.depth, cfg.vsd);
      rec.visibility = vis;
      rec.vsd = err;
      records.push_back(rec);
      continue;
    }

    rec.detected = true;
    rec.add = add_error(model->index.samples(), gt.pose, hyp->pose);
    rec.adi = adi_error(model->index.samples(), gt.pose, hyp->pose);
    rec.add_correct =
        add_correct(rec.symmetric ? rec.adi : rec.add, model->diameter, rec.symmetric);

    SceneMaps est_render(scene.camera.width, scene.camera.height);
    render(model->mesh, hyp->pose, scene.camera, 1, est_render, ropts);
    const auto [err, vis] = vsd_error(est_render, gt_render, scene.maps.depth, cfg.vsd);
    rec.vsd = err;
    rec.visibility = vis;
    rec.vsd_correct = err < cfg.vsd.error_threshold;
    records.push_back(rec);
  }
  return records;
}

void write_hypotheses(const std::filesystem::path& path,
                      const std::vector<PoseHypothesis>& hypotheses) {
  json list = json::array();
  for (const auto& h : hypotheses) {
    json r = json::array();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.push_back(h.pose.rotation(i, j));
    list.push_back({{"model_id", h.model_id},
                    {"mask_id", h.mask_id},
                    {"score", h.score},
                    {"inlier_count", h.inliers.size()},
                    {"R", r},
                    {"t",
                     {h.pose.translation[0], h.pose.translation[1], h.pose.translation[2]}}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << json{{"format_version", 1}, {"hypotheses", list}}.dump(2) << "\n";
}

std::vector<PoseHypothesis> read_hypotheses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("hypotheses: " + std::string(e.what()));
  }
  std::vector<PoseHypothesis> out;
  for (const auto& h : j.at("hypotheses")) {
    PoseHypothesis hyp;
    hyp.model_id = h.at("model_id").get<std::string>();
    hyp.mask_id = h.at("mask_id").get<int>();
    hyp.score = h.at("score").get<double>();
    const auto& r = h.at("R");
    const auto& t = h.at("t");
    if (r.size() != 9 || t.size() != 3) throw ParseError("hypotheses: malformed pose");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) hyp.pose.rotation(i, k) = r[3 * i + k].get<double>();
    for (int i = 0; i < 3; ++i) hyp.pose.translation[i] = t[i].get<double>();
    out.push_back(std::move(hyp));
  }
  return out;
}

void write_report_json(const std::filesystem::path& path, const MetricReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"scene", r.scene_id},
                       {"object", r.object_id},
                       {"model_id", r.model_id},
                       {"symmetric", r.symmetric},
                       {"detected", r.detected},
                       {"add", r.add},
                       {"adi", r.adi},
                       {"add_correct", r.add_correct},
                       {"vsd", r.vsd},
                       {"vsd_correct", r.vsd_correct},
                       {"visibility", r.visibility}});
  }
  const json j{{"format_version", 1},
               {"add_recall", report.add_recall},
               {"vsd_recall", report.vsd_recall},
               {"evaluated", report.evaluated},
               {"records", records}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scene,object,add,adi,vsd,add_correct,vsd_correct\n";
  for (const auto& r : report.records) {
    out << r.scene_id << ',' << r.object_id << ',' << r.add << ',' << r.adi << ',' << r.vsd
        << ',' << (r.add_correct ? 1 : 0) << ',' << (r.vsd_correct ? 1 : 0) << "\n";
  }
}

}  // namespace lsepose
