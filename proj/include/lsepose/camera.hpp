#pragma once

#include "lsepose/common.hpp"

namespace lsepose {

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw ConfigError("camera: focal lengths must be > 0");
    if (width <= 0 || height <= 0) throw ConfigError("camera: image size must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw ConfigError("camera: principal point outside the image");
  }
};

// Rigid transform from object to camera coordinates.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
  Pose compose(const Pose& rhs) const {  // this ∘ rhs
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  bool is_valid(double tol = 1e-9) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

// Pinhole projection of a camera-frame point; throws on non-positive depth.
inline Vec2 project(const Vec3& p, const CameraIntrinsics& cam) {
  if (!(p.z() > 0)) throw Error("project: point has non-positive depth");
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

inline Vec3 backproject(const Vec2& pixel, double depth, const CameraIntrinsics& cam) {
  return {(pixel.x() - cam.cx) / cam.fx * depth, (pixel.y() - cam.cy) / cam.fy * depth, depth};
}

// Rodrigues exponential map; small angles use the series expansion.
Mat3 rotation_exp(const Vec3& omega);

// Geodesic angle between two rotations, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace lsepose
