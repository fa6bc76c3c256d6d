#include "lsepose/metrics.hpp"

#include <algorithm>
#include <limits>

namespace lsepose {

double add_error(const std::vector<PointSample>& samples, const Pose& gt, const Pose& est) {
  if (samples.empty()) throw Error("add_error: empty sample set");
  double acc = 0.0;
  for (const auto& s : samples) acc += (gt.apply(s.position) - est.apply(s.position)).norm();
  return acc / static_cast<double>(samples.size());
}

double adi_error(const std::vector<PointSample>& samples, const Pose& gt, const Pose& est) {
  if (samples.empty()) throw Error("adi_error: empty sample set");
  // grid over the estimated-transformed set for exact nearest lookups
  std::vector<PointSample> est_pts(samples.size());
  Vec3 lo = est.apply(samples[0].position), hi = lo;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    est_pts[i].position = est.apply(samples[i].position);
    lo = lo.cwiseMin(est_pts[i].position);
    hi = hi.cwiseMax(est_pts[i].position);
  }
  const double cell = std::max((hi - lo).maxCoeff() / 48.0, 1e-12);
  const SampleGrid grid(est_pts, cell);
  double acc = 0.0;
  for (const auto& s : samples) {
    const Vec3 g = gt.apply(s.position);
    const int j = grid.nearest(g);
    acc += (est_pts[j].position - g).norm();
  }
  return acc / static_cast<double>(samples.size());
}

bool add_correct(double error, double diameter, bool symmetric_uses_adi_error) {
  // the caller passes the ADI error for symmetric objects; the flag only
  // documents that contract
  (void)symmetric_uses_adi_error;
  if (diameter <= 0) throw Error("add_correct: diameter must be > 0");
  return error < 0.1 * diameter;
}

std::pair<double, double> vsd_error(const SceneMaps& render_est, const SceneMaps& render_gt,
                                    const std::vector<float>& scene_depth,
                                    const VsdParams& params) {
  if (render_est.width != render_gt.width || render_est.height != render_gt.height ||
      scene_depth.size() != render_est.depth.size())
    throw DimensionError("vsd_error: map dimensions differ");
  params.validate();
  const double tau = params.tau_model_units();

  std::size_t union_count = 0, wrong = 0;
  std::size_t gt_rendered = 0, gt_visible = 0;
  for (std::size_t i = 0; i < render_est.depth.size(); ++i) {
    const float de = render_est.depth[i];
    const float dg = render_gt.depth[i];
    const float ds = scene_depth[i];
    // a rendered pixel is visible unless the scene surface occludes it by
    // more than the tolerance
    const bool vis_est = std::isfinite(de) && de <= ds + tau;
    const bool vis_gt = std::isfinite(dg) && dg <= ds + tau;
    if (std::isfinite(dg)) {
      ++gt_rendered;
      if (vis_gt) ++gt_visible;
    }
    if (!vis_est && !vis_gt) continue;
    ++union_count;
    const bool match = vis_est && vis_gt && std::abs(static_cast<double>(de) - dg) < tau;
    if (!match) ++wrong;
  }
  const double error =
      union_count == 0 ? 1.0 : static_cast<double>(wrong) / static_cast<double>(union_count);
  const double visibility =
      gt_rendered == 0 ? 0.0 : static_cast<double>(gt_visible) / static_cast<double>(gt_rendered);
  return {error, visibility};
}

MetricReport aggregate(std::vector<ObjectRecord> records, const VsdParams& params) {
  if (records.empty()) throw Error("aggregate: no records");
  MetricReport report;
  report.records = std::move(records);
  int add_ok = 0, vsd_ok = 0;
  for (const auto& r : report.records) {
    if (r.visibility < params.min_visibility) continue;
    ++report.evaluated;
    add_ok += r.detected && r.add_correct;
    vsd_ok += r.detected && r.vsd_correct;
  }
  if (report.evaluated > 0) {
    report.add_recall = static_cast<double>(add_ok) / report.evaluated;
    report.vsd_recall = static_cast<double>(vsd_ok) / report.evaluated;
  }
  return report;
}

}  // namespace lsepose
