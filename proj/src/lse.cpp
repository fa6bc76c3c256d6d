#include "lsepose/lse.hpp"

#include <Eigen/SVD>

namespace lsepose {

std::vector<std::array<int, 3>> LseParams::default_exponents() {
  std::vector<std::array<int, 3>> e;
  for (int i : {0, 2})
    for (int j : {0, 2})
      for (int k : {0, 1, 2}) {
        if (i == 0 && j == 0 && k == 0) continue;
        e.push_back({i, j, k});
      }
  return e;
}

void LseParams::validate() const {
  if (radius_cm <= 0) throw ConfigError("lse: radius must be > 0");
  if (sigma_cm <= 0) throw ConfigError("lse: sigma must be > 0");
  if (unit_scale_to_cm <= 0) throw ConfigError("lse: unit_scale_to_cm must be > 0");
  if (exponents.empty()) throw ConfigError("lse: exponent list must be non-empty");
  for (const auto& e : exponents) {
    if (e[0] == 0 && e[1] == 0 && e[2] == 0)
      throw ConfigError("lse: exponent (0,0,0) is not allowed");
    if (e[0] % 2 != 0 || e[1] % 2 != 0)
      throw ConfigError("lse: x and y exponents must be even");
    if (e[0] < 0 || e[1] < 0 || e[2] < 0) throw ConfigError("lse: negative exponent");
  }
}

namespace {

// Flip v so its largest-magnitude component is positive; ties pick the first.
Vec3 canonical_sign(const Vec3& v) {
  int arg = 0;
  double best = std::abs(v[0]);
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  return v[arg] < 0 ? Vec3(-v) : v;
}

}  // namespace

LocalFrame local_frame(const std::vector<PointSample>& neighbors, const Vec3& center,
                       const Vec3& normal, double epsilon_sv) {
  if (neighbors.size() < 3)
    throw DegenerateFrameError("local_frame: fewer than 3 neighbors");

  Mat3 cov = Mat3::Zero();
  for (const auto& nb : neighbors) {
    const Vec3 v = nb.position - center;
    cov.noalias() += v * v.transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();  // Eigen returns them descending
  if (!(sv[0] > 0.0))
    throw DegenerateFrameError("local_frame: neighborhood has no spatial extent");

  // rows of the right factor, sign-canonicalized for reproducibility
  const Vec3 r1 = canonical_sign(svd.matrixV().col(0));
  Vec3 r3 = svd.matrixV().col(2);
  // the normal fixes the sign of the third row
  if (r3.dot(normal) < 0) r3 = -r3;

  LocalFrame frame;
  frame.rotation.row(0) = r1;
  frame.rotation.row(2) = r3;
  frame.rotation.row(1) = r3.cross(r1);
  frame.singular_values = sv;
  frame.stable = (sv[0] - sv[1]) >= epsilon_sv * sv[0] && (sv[1] - sv[2]) >= epsilon_sv * sv[0];
  return frame;
}

Eigen::VectorXd lse_moments(const std::vector<PointSample>& neighbors, const Vec3& center,
                            const Mat3& frame, const LseParams& params) {
  const double scale = params.unit_scale_to_cm;
  const double inv_sigma2 = 1.0 / (params.sigma_cm * params.sigma_cm);
  int max_exp = 0;
  for (const auto& e : params.exponents) max_exp = std::max({max_exp, e[0], e[1], e[2]});

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.dim());
  // powers[a][p] = a-th coordinate raised to p, built incrementally
  std::array<std::vector<double>, 3> powers;
  for (auto& p : powers) p.assign(max_exp + 1, 1.0);

  for (const auto& nb : neighbors) {
    const Vec3 v = (nb.position - center) * scale;
    const double w = std::exp(-v.squaredNorm() * inv_sigma2);
    const Vec3 local = frame * v;
    for (int a = 0; a < 3; ++a)
      for (int p = 1; p <= max_exp; ++p) powers[a][p] = powers[a][p - 1] * local[a];
    for (int m = 0; m < params.dim(); ++m) {
      const auto& e = params.exponents[m];
      acc[m] += w * powers[0][e[0]] * powers[1][e[1]] * powers[2][e[2]];
    }
  }
  return acc;
}

LseVector lse_raw(const std::vector<PointSample>& neighbors, const Vec3& center,
                  const Vec3& normal, const LseParams& params) {
  const LocalFrame frame = local_frame(neighbors, center, normal, params.epsilon_sv);
  LseVector out;
  out.values = lse_moments(neighbors, center, frame.rotation, params);
  out.normalized = false;
  return out;
}

NormalizationStats fit_normalization(const std::vector<LseVector>& raw,
                                     const std::string& source_model) {
  if (raw.size() < 2) throw Error("fit_normalization: need at least 2 vectors");
  const Eigen::Index dim = raw[0].values.size();
  for (const auto& v : raw) {
    if (v.values.size() != dim) throw DimensionError("fit_normalization: dimension mismatch");
    if (v.normalized) throw Error("fit_normalization: input must be raw vectors");
  }

  NormalizationStats stats;
  stats.source_model = source_model;
  stats.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& v : raw) stats.mean += v.values;
  stats.mean /= static_cast<double>(raw.size());

  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& v : raw) var += (v.values - stats.mean).cwiseAbs2();
  var /= static_cast<double>(raw.size());  // population variance

  stats.stddev = var.cwiseSqrt();
  stats.zero_variance.assign(dim, 0);
  for (Eigen::Index d = 0; d < dim; ++d) {
    if (stats.stddev[d] <= 0.0) {
      stats.stddev[d] = 1.0;
      stats.zero_variance[d] = 1;
    }
  }
  return stats;
}

LseVector normalize(const LseVector& v, const NormalizationStats& stats) {
  if (v.normalized) throw Error("normalize: vector is already normalized");
  if (v.values.size() != stats.mean.size())
    throw DimensionError("normalize: dimension mismatch");
  LseVector out;
  out.values = (v.values - stats.mean).cwiseQuotient(stats.stddev);
  out.normalized = true;
  out.stats_id = stats.source_model;
  return out;
}

LseVector denormalize(const LseVector& v, const NormalizationStats& stats) {
  if (!v.normalized) throw Error("denormalize: vector is not normalized");
  if (v.values.size() != stats.mean.size())
    throw DimensionError("denormalize: dimension mismatch");
  LseVector out;
  out.values = v.values.cwiseProduct(stats.stddev) + stats.mean;
  out.normalized = false;
  return out;
}

}  // namespace lsepose
