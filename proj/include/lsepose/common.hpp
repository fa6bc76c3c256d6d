#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsepose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Error hierarchy. The CLI maps ConfigError to exit code 2 and the
// data-shaped errors (ParseError, IoError, DimensionError) to 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
// Neighborhood whose covariance has no usable principal directions.
struct DegenerateFrameError : Error {
  using Error::Error;
};
// PnP input that admits no pose (collinear points, solver breakdown).
struct DegeneracyError : Error {
  using Error::Error;
};

// Deterministic RNG with explicitly coded distributions so that results are
// reproducible across standard libraries. Streams for parallel work are
// derived with derive(): mixing is splitmix64, so streams do not overlap in
// practice.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up through the mixer so that small seeds diverge immediately
    state_ = mix(state_ + 0x9e3779b97f4a7c15ull);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  Rng derive(std::uint64_t stream) const { return Rng(mix(state_ ^ mix(stream))); }

  std::uint64_t next_u64() {
    // xorshift* keeps the generator tiny; quality is ample for sampling work
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi]
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = ~0ull - ~0ull % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  // standard normal via Box-Muller (polar form avoided to keep call count fixed)
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 unit_vector() {
    // uniform on the sphere
    const double z = uniform(-1.0, 1.0);
    const double t = uniform(0.0, 2.0 * M_PI);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(t), s * std::sin(t), z};
  }

  Mat3 rotation() {
    // uniform random rotation from a random unit quaternion
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double qw = a * std::sin(2.0 * M_PI * u2);
    const double qx = a * std::cos(2.0 * M_PI * u2);
    const double qy = b * std::sin(2.0 * M_PI * u3);
    const double qz = b * std::cos(2.0 * M_PI * u3);
    Mat3 r;
    r << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
        2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
        2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy);
    return r;
  }

  // n distinct indices drawn from [0, count), in draw order
  std::vector<int> sample_distinct(int count, int n);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(begin..end) split across `threads` workers. Results must not depend
// on the split: callers only use this for element-wise independent work.
void parallel_for(int begin, int end, int threads, const std::function<void(int, int)>& fn);

int effective_threads(int requested);

}  // namespace lsepose
