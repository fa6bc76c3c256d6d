#pragma once

#include "lsepose/camera.hpp"

namespace lsepose {

struct Correspondence2d3d {
  Vec2 pixel;
  Vec3 point;  // object frame
};

// Pose from n >= 4 2D-3D correspondences: control-point solver (EPnP style)
// followed by a Levenberg-Marquardt polish. Throws DegeneracyError when the
// 3D points are collinear or the solver cannot produce a finite pose.
Pose solve_pnp(const std::vector<Correspondence2d3d>& correspondences,
               const CameraIntrinsics& cam);

struct RefineOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
};

// Levenberg-Marquardt over a 6-parameter tangent update (rotation left-
// composed, translation additive). The returned cost never exceeds the
// initial cost; with no improving step the initial pose comes back.
Pose refine_pose(const Pose& initial, const std::vector<Correspondence2d3d>& correspondences,
                 const CameraIntrinsics& cam, const RefineOptions& opts = {},
                 double* final_cost = nullptr);

// Summed squared reprojection error.
double reprojection_cost(const Pose& pose, const std::vector<Correspondence2d3d>& correspondences,
                         const CameraIntrinsics& cam);

// Stacked residuals (2 per correspondence) and the analytic Jacobian with
// respect to the tangent parameters [rotation; translation] at delta = 0.
void reprojection_residuals(const Pose& pose,
                            const std::vector<Correspondence2d3d>& correspondences,
                            const CameraIntrinsics& cam, Eigen::VectorXd& residuals,
                            Eigen::MatrixXd* jacobian = nullptr);

}  // namespace lsepose
