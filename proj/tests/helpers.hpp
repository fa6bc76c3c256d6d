#pragma once

#include "lsepose/lse.hpp"
#include "lsepose/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <random>

namespace lsepose::testing {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("lsepose_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Anisotropic Gaussian cloud, non-degenerate by construction.
inline std::vector<PointSample> random_cloud(Rng& rng, int count, const Vec3& axes,
                                             const Vec3& center = Vec3::Zero()) {
  std::vector<PointSample> pts(count);
  for (auto& p : pts) {
    p.position = center + Vec3(axes.x() * rng.gaussian(), axes.y() * rng.gaussian(),
                               axes.z() * rng.gaussian());
    p.normal = Vec3(0, 0, 1);
    p.triangle = 0;
  }
  return pts;
}

// Plain-loop evaluation of the weighted moments, kept free of the library's
// incremental-power path so it can serve as an oracle.
inline Eigen::VectorXd scalar_moments_oracle(const std::vector<PointSample>& neighbors,
                                             const Vec3& center, const Mat3& frame,
                                             const LseParams& params) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(params.dim());
  for (const auto& nb : neighbors) {
    const double vx = (nb.position.x() - center.x()) * params.unit_scale_to_cm;
    const double vy = (nb.position.y() - center.y()) * params.unit_scale_to_cm;
    const double vz = (nb.position.z() - center.z()) * params.unit_scale_to_cm;
    const double w = std::exp(-(vx * vx + vy * vy + vz * vz) /
                              (params.sigma_cm * params.sigma_cm));
    const double x = frame(0, 0) * vx + frame(0, 1) * vy + frame(0, 2) * vz;
    const double y = frame(1, 0) * vx + frame(1, 1) * vy + frame(1, 2) * vz;
    const double z = frame(2, 0) * vx + frame(2, 1) * vy + frame(2, 2) * vz;
    for (int m = 0; m < params.dim(); ++m) {
      const auto& e = params.exponents[m];
      out[m] += w * std::pow(x, e[0]) * std::pow(y, e[1]) * std::pow(z, e[2]);
    }
  }
  return out;
}

}  // namespace lsepose::testing
