#pragma once

#include "lsepose/common.hpp"
#include "lsepose/mesh.hpp"

namespace lsepose {

// Parameters of the local surface embedding. The neighborhood radius and the
// weight scale are physical lengths in centimeters; unit_scale_to_cm converts
// model units to centimeters (T-LESS style meshes in millimeters use 0.1).
struct LseParams {
  double radius_cm = 3.0;
  double sigma_cm = 5.0;
  double unit_scale_to_cm = 1.0;
  double epsilon_sv = 1e-6;  // relative singular-value gap flagged unstable
  std::vector<std::array<int, 3>> exponents = default_exponents();

  // the 11 moment exponents: i in {0,2}, j in {0,2}, k in {0,1,2}, (0,0,0) excluded
  static std::vector<std::array<int, 3>> default_exponents();

  int dim() const { return static_cast<int>(exponents.size()); }
  double radius_model_units() const { return radius_cm / unit_scale_to_cm; }

  void validate() const;
  bool operator==(const LseParams&) const = default;
};

// Canonical orientation of a neighborhood: rows of `rotation` are the
// principal directions, the third row sign-aligned with the surface normal.
struct LocalFrame {
  Mat3 rotation = Mat3::Identity();
  bool stable = true;
  Vec3 singular_values = Vec3::Zero();  // descending
};

struct LseVector {
  Eigen::VectorXd values;
  bool normalized = false;
  std::string stats_id;  // stats the vector was normalized with
};

struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;                 // population; zero-variance dims forced to 1
  std::vector<std::uint8_t> zero_variance;  // flag per dimension
  std::string source_model;
};

// Canonical frame from the SVD of the centered covariance of the neighbors.
// Throws DegenerateFrameError when fewer than 3 neighbors are given or the
// neighborhood carries no spatial extent.
LocalFrame local_frame(const std::vector<PointSample>& neighbors, const Vec3& center,
                       const Vec3& normal, double epsilon_sv = 1e-6);

// Raw (unnormalized) embedding of a neighborhood.
LseVector lse_raw(const std::vector<PointSample>& neighbors, const Vec3& center,
                  const Vec3& normal, const LseParams& params);

// Moments for an externally supplied frame; lse_raw delegates here. Exposed
// so the frame-flip invariance can be exercised directly.
Eigen::VectorXd lse_moments(const std::vector<PointSample>& neighbors, const Vec3& center,
                            const Mat3& frame, const LseParams& params);

NormalizationStats fit_normalization(const std::vector<LseVector>& raw,
                                     const std::string& source_model = {});

LseVector normalize(const LseVector& v, const NormalizationStats& stats);

// Inverse of normalize; test and tooling helper.
LseVector denormalize(const LseVector& v, const NormalizationStats& stats);

}  // namespace lsepose
