#include "lsepose/pnp.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <limits>

namespace lsepose {

double reprojection_cost(const Pose& pose, const std::vector<Correspondence2d3d>& correspondences,
                         const CameraIntrinsics& cam) {
  double cost = 0.0;
  for (const auto& c : correspondences) {
    const Vec3 q = pose.apply(c.point);
    if (!(q.z() > 0)) return std::numeric_limits<double>::infinity();
    const double ru = cam.fx * q.x() / q.z() + cam.cx - c.pixel.x();
    const double rv = cam.fy * q.y() / q.z() + cam.cy - c.pixel.y();
    cost += ru * ru + rv * rv;
  }
  return cost;
}

void reprojection_residuals(const Pose& pose,
                            const std::vector<Correspondence2d3d>& correspondences,
                            const CameraIntrinsics& cam, Eigen::VectorXd& residuals,
                            Eigen::MatrixXd* jacobian) {
  const int n = static_cast<int>(correspondences.size());
  residuals.resize(2 * n);
  if (jacobian) jacobian->resize(2 * n, 6);
  for (int i = 0; i < n; ++i) {
    const auto& c = correspondences[i];
    const Vec3 u = pose.rotation * c.point;
    const Vec3 q = u + pose.translation;
    if (!(q.z() > 0)) throw Error("reprojection_residuals: point behind the camera");
    const double iz = 1.0 / q.z();
    residuals[2 * i] = cam.fx * q.x() * iz + cam.cx - c.pixel.x();
    residuals[2 * i + 1] = cam.fy * q.y() * iz + cam.cy - c.pixel.y();
    if (!jacobian) continue;
    // dpi/dq for the pinhole projection
    Eigen::Matrix<double, 2, 3> dpi;
    dpi << cam.fx * iz, 0, -cam.fx * q.x() * iz * iz, 0, cam.fy * iz, -cam.fy * q.y() * iz * iz;
    // q = exp(w) R X + t + dt  =>  dq/dw = -[RX]x, dq/dt = I
    Eigen::Matrix<double, 3, 6> dq;
    dq << 0, u.z(), -u.y(), 1, 0, 0,  //
        -u.z(), 0, u.x(), 0, 1, 0,    //
        u.y(), -u.x(), 0, 0, 0, 1;
    jacobian->block<2, 6>(2 * i, 0) = dpi * dq;
  }
}

Pose refine_pose(const Pose& initial, const std::vector<Correspondence2d3d>& correspondences,
                 const CameraIntrinsics& cam, const RefineOptions& opts, double* final_cost) {
  Pose pose = initial;
  double cost = reprojection_cost(pose, correspondences, cam);
  if (final_cost) *final_cost = cost;
  if (!std::isfinite(cost) || correspondences.empty()) return initial;

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  reprojection_residuals(pose, correspondences, cam, r, &J);
  double lambda = 1e-6;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::Matrix<double, 6, 1> g = J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() < opts.gradient_tolerance) break;
    const Eigen::Matrix<double, 6, 6> h = J.transpose() * J;

    Eigen::Matrix<double, 6, 6> damped = h;
    for (int d = 0; d < 6; ++d) damped(d, d) += lambda * std::max(h(d, d), 1e-12);
    const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-g);
    if (!step.allFinite()) break;
    if (step.norm() < opts.step_tolerance) break;

    Pose candidate;
    candidate.rotation = rotation_exp(step.head<3>()) * pose.rotation;
    candidate.translation = pose.translation + step.tail<3>();
    const double candidate_cost = reprojection_cost(candidate, correspondences, cam);

    if (candidate_cost < cost) {
      pose = candidate;
      cost = candidate_cost;
      lambda = std::max(lambda / 3.0, 1e-12);
      reprojection_residuals(pose, correspondences, cam, r, &J);
    } else {
      lambda *= 5.0;
      if (lambda > 1e12) break;
    }
  }
  if (final_cost) *final_cost = cost;
  return pose;
}

namespace {

// Distinct unordered control-point pairs, in a fixed order.
std::vector<std::pair<int, int>> control_pairs(int n_ctrl) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n_ctrl; ++i)
    for (int j = i + 1; j < n_ctrl; ++j) pairs.emplace_back(i, j);
  return pairs;
}

// Camera-frame control points for a combination of kernel vectors.
Eigen::MatrixXd combine(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& betas, int n_ctrl) {
  Eigen::MatrixXd ccs = Eigen::MatrixXd::Zero(3, n_ctrl);
  for (int b = 0; b < betas.size(); ++b)
    for (int j = 0; j < n_ctrl; ++j) ccs.col(j) += betas[b] * kernel.col(b).segment<3>(3 * j);
  return ccs;
}

// Gauss-Newton on the betas so that camera control-point distances match the
// world distances.
void refine_betas(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& rho,
                  const std::vector<std::pair<int, int>>& pairs, int n_ctrl,
                  Eigen::VectorXd& betas) {
  const int np = static_cast<int>(pairs.size());
  const int nb = static_cast<int>(betas.size());
  for (int iter = 0; iter < 10; ++iter) {
    Eigen::MatrixXd jac(np, nb);
    Eigen::VectorXd res(np);
    const Eigen::MatrixXd ccs = combine(kernel, betas, n_ctrl);
    for (int p = 0; p < np; ++p) {
      const Vec3 dc = ccs.col(pairs[p].first) - ccs.col(pairs[p].second);
      res[p] = dc.squaredNorm() - rho[p];
      for (int b = 0; b < nb; ++b) {
        const Vec3 dv = kernel.col(b).segment<3>(3 * pairs[p].first) -
                        kernel.col(b).segment<3>(3 * pairs[p].second);
        jac(p, b) = 2.0 * dc.dot(dv);
      }
    }
    const Eigen::VectorXd step =
        (jac.transpose() * jac + 1e-12 * Eigen::MatrixXd::Identity(nb, nb))
            .ldlt()
            .solve(-jac.transpose() * res);
    if (!step.allFinite()) return;
    betas += step;
    if (step.norm() < 1e-14) break;
  }
}

Pose pose_from_control_points(const Eigen::MatrixXd& world_pts, const Eigen::MatrixXd& alphas,
                              const Eigen::MatrixXd& ccs) {
  const int n = static_cast<int>(world_pts.cols());
  Eigen::MatrixXd cam_pts(3, n);
  for (int i = 0; i < n; ++i) cam_pts.col(i) = ccs * alphas.col(i);
  // the kernel has a global sign ambiguity; objects live in front of the camera
  double mean_z = cam_pts.row(2).mean();
  if (mean_z < 0) cam_pts = -cam_pts;
  const Eigen::Matrix4d t = Eigen::umeyama(world_pts, cam_pts, false);
  Pose pose;
  pose.rotation = t.topLeftCorner<3, 3>();
  pose.translation = t.topRightCorner<3, 1>();
  return pose;
}

}  // namespace

Pose solve_pnp(const std::vector<Correspondence2d3d>& correspondences,
               const CameraIntrinsics& cam) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 4) throw DegeneracyError("solve_pnp: need at least 4 correspondences");

  Eigen::MatrixXd world_pts(3, n);
  for (int i = 0; i < n; ++i) world_pts.col(i) = correspondences[i].point;
  const Vec3 centroid = world_pts.rowwise().mean();
  Eigen::MatrixXd centered = world_pts.colwise() - centroid;

  Eigen::SelfAdjointEigenSolver<Mat3> pca(centered * centered.transpose());
  const Vec3 ev = pca.eigenvalues();  // ascending
  if (!(ev[2] > 0) || ev[1] <= 1e-12 * ev[2])
    throw DegeneracyError("solve_pnp: 3D points are collinear");
  const bool planar = ev[0] <= 1e-9 * ev[2];
  const int n_ctrl = planar ? 3 : 4;

  // control points: centroid plus principal directions scaled by the spread
  Eigen::MatrixXd ctrl(3, n_ctrl);
  ctrl.col(0) = centroid;
  for (int j = 1; j < n_ctrl; ++j) {
    const int axis = 2 - (j - 1);  // strongest direction first
    ctrl.col(j) = centroid + std::sqrt(ev[axis] / n) * pca.eigenvectors().col(axis);
  }

  // barycentric coordinates of each point in the control frame
  Eigen::MatrixXd basis(3, n_ctrl - 1);
  for (int j = 1; j < n_ctrl; ++j) basis.col(j - 1) = ctrl.col(j) - ctrl.col(0);
  const Eigen::MatrixXd solver =
      (basis.transpose() * basis).ldlt().solve(basis.transpose()).eval();
  Eigen::MatrixXd alphas(n_ctrl, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd b = solver * (world_pts.col(i) - ctrl.col(0));
    alphas(0, i) = 1.0 - b.sum();
    alphas.block(1, i, n_ctrl - 1, 1) = b;
  }

  // M x = 0 over the stacked camera-frame control points
  const int dims = 3 * n_ctrl;
  Eigen::MatrixXd m(2 * n, dims);
  for (int i = 0; i < n; ++i) {
    const double u = correspondences[i].pixel.x();
    const double v = correspondences[i].pixel.y();
    for (int j = 0; j < n_ctrl; ++j) {
      const double a = alphas(j, i);
      m(2 * i, 3 * j) = a * cam.fx;
      m(2 * i, 3 * j + 1) = 0.0;
      m(2 * i, 3 * j + 2) = a * (cam.cx - u);
      m(2 * i + 1, 3 * j) = 0.0;
      m(2 * i + 1, 3 * j + 1) = a * cam.fy;
      m(2 * i + 1, 3 * j + 2) = a * (cam.cy - v);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mtm(m.transpose() * m);
  const int max_kernel = planar ? 3 : 4;   // null vectors combined by Gauss-Newton
  const int n_cases = planar ? 2 : 3;      // closed-form initializations
  Eigen::MatrixXd kernel = mtm.eigenvectors().leftCols(max_kernel);  // ascending eigenvalues

  const auto pairs = control_pairs(n_ctrl);
  Eigen::VectorXd rho(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    rho[p] = (ctrl.col(pairs[p].first) - ctrl.col(pairs[p].second)).squaredNorm();

  Pose best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int n_used = 1; n_used <= n_cases; ++n_used) {
    // the closed form fixes the first n_used betas; Gauss-Newton then refines
    // the combination over the whole kernel
    Eigen::VectorXd betas = Eigen::VectorXd::Zero(max_kernel);
    if (n_used == 1) {
      // scale matching in the least-squares sense
      double num = 0.0, den = 0.0;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const double dv = (kernel.col(0).segment<3>(3 * pairs[p].first) -
                           kernel.col(0).segment<3>(3 * pairs[p].second))
                              .norm();
        num += dv * std::sqrt(rho[p]);
        den += dv * dv;
      }
      betas[0] = den > 0 ? num / den : 0.0;
    } else {
      // linear system over the distinct beta products
      const int nprod = n_used * (n_used + 1) / 2;
      Eigen::MatrixXd lmat(pairs.size(), nprod);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        std::vector<Vec3> dv(n_used);
        for (int b = 0; b < n_used; ++b)
          dv[b] = kernel.col(b).segment<3>(3 * pairs[p].first) -
                  kernel.col(b).segment<3>(3 * pairs[p].second);
        int col = 0;
        for (int a = 0; a < n_used; ++a)
          for (int b = a; b < n_used; ++b)
            lmat(p, col++) = (a == b ? dv[a].squaredNorm() : 2.0 * dv[a].dot(dv[b]));
      }
      const Eigen::VectorXd prod =
          lmat.colPivHouseholderQr().solve(rho);
      // recover betas from the products; signs relative to beta_0
      int col = 0;
      std::vector<double> diag(n_used, 0.0), off0(n_used, 0.0);
      for (int a = 0; a < n_used; ++a)
        for (int b = a; b < n_used; ++b) {
          if (a == b) diag[a] = prod[col];
          if (a == 0 && b > 0) off0[b] = prod[col];
          ++col;
        }
      betas[0] = std::sqrt(std::abs(diag[0]));
      for (int b = 1; b < n_used; ++b)
        betas[b] = std::copysign(std::sqrt(std::abs(diag[b])), off0[b]);
    }

    refine_betas(kernel, rho, pairs, n_ctrl, betas);
    const Eigen::MatrixXd ccs = combine(kernel, betas, n_ctrl);
    const Pose pose = pose_from_control_points(world_pts, alphas, ccs);
    if (!pose.rotation.allFinite() || !pose.translation.allFinite()) continue;
    const double cost = reprojection_cost(pose, correspondences, cam);
    if (cost < best_cost) {
      best_cost = cost;
      best = pose;
    }
  }

  if (!std::isfinite(best_cost))
    throw DegeneracyError("solve_pnp: no finite pose candidate");

  const Pose polished = refine_pose(best, correspondences, cam);
  if (!polished.rotation.allFinite() || !polished.translation.allFinite())
    throw DegeneracyError("solve_pnp: refinement produced a non-finite pose");
  return polished;
}

}  // namespace lsepose
