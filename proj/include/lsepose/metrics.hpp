#pragma once

#include "lsepose/raster.hpp"

namespace lsepose {

struct VsdParams {
  double tau_mm = 20.0;           // tolerance, millimeter-equivalent
  double error_threshold = 0.3;   // err < threshold counts as correct
  double min_visibility = 0.10;   // records below are excluded from recall
  double unit_scale_to_cm = 1.0;  // converts model units for the tau comparison

  double tau_model_units() const { return tau_mm / (10.0 * unit_scale_to_cm); }
  void validate() const {
    if (tau_mm <= 0) throw ConfigError("vsd: tau must be > 0");
    if (error_threshold <= 0 || error_threshold > 1)
      throw ConfigError("vsd: error threshold must be in (0,1]");
    if (min_visibility < 0 || min_visibility > 1)
      throw ConfigError("vsd: min visibility must be in [0,1]");
  }
};

struct ObjectRecord {
  std::string scene_id;
  int object_id = 0;
  std::string model_id;
  bool symmetric = false;
  bool detected = false;
  double add = 0.0;
  double adi = 0.0;
  bool add_correct = false;  // uses ADI when symmetric
  double vsd = 1.0;
  bool vsd_correct = false;
  double visibility = 0.0;
};

struct MetricReport {
  std::vector<ObjectRecord> records;
  double add_recall = 0.0;
  double vsd_recall = 0.0;
  int evaluated = 0;  // records above the visibility floor
};

// Mean distance between corresponding transformed model points.
double add_error(const std::vector<PointSample>& samples, const Pose& gt, const Pose& est);

// Mean distance from each ground-truth-transformed point to its nearest
// estimated-transformed point (symmetry tolerant).
double adi_error(const std::vector<PointSample>& samples, const Pose& gt, const Pose& est);

// The 10%-of-diameter rule, strict at the boundary.
bool add_correct(double error, double diameter, bool symmetric_uses_adi_error = false);

// Visible surface discrepancy between the renders of the estimated and the
// ground-truth pose against the scene depth. Returns (error, visibility),
// visibility being the visible fraction of the ground-truth render.
std::pair<double, double> vsd_error(const SceneMaps& render_est, const SceneMaps& render_gt,
                                    const std::vector<float>& scene_depth,
                                    const VsdParams& params);

// Recall over records with visibility >= the floor; missing detections count
// as incorrect.
MetricReport aggregate(std::vector<ObjectRecord> records, const VsdParams& params);

}  // namespace lsepose
