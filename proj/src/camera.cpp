#include "lsepose/camera.hpp"

namespace lsepose {

Mat3 rotation_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  Mat3 skew;
  skew << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
  if (theta2 < 1e-16) {
    // second-order series keeps the map smooth near zero
    return Mat3::Identity() + skew + 0.5 * skew * skew;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + std::sin(theta) / theta * skew +
         (1.0 - std::cos(theta)) / theta2 * skew * skew;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) * 0.5;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace lsepose
