#pragma once

// Counter-seeded random streams for reproducible experiments.
//
// Generator: xoshiro256++ (Blackman & Vigna), state expanded from
// (seed, stream_id, substream tag) with splitmix64. The algorithm is fixed
// and integer-exact, so a given (seed, stream_id) always yields the same
// sample sequence; floating-point transforms below use only arithmetic,
// sqrt, log, and cos on exact dyadic uniforms.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace ncstep {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// One independent random stream. Runs own one stream per (seed, stream_id);
/// oracle kinds draw from substreams so that e.g. adding Hessian noise does
/// not perturb the gradient noise sequence.
class RngStream {
 public:
  RngStream() : RngStream(0, 0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t tag = 0)
      : seed_(seed), stream_id_(stream_id), tag_(tag) {
    std::uint64_t mix = seed;
    detail::splitmix64(mix);
    mix ^= 0x632BE59BD9B4E019ULL + stream_id;
    detail::splitmix64(mix);
    mix ^= 0x9E6C63D0876A9A47ULL + tag;
    for (auto& word : state_) word = detail::splitmix64(mix);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derived stream, decorrelated from this one and from other tags.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, stream_id_, tag_ * 0x100000001B3ULL + tag + 1);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (-1, 1).
  double uniform_pm1() { return 2.0 * u01() - 1.0; }

  /// Standard normal via Box-Muller (two uniforms per draw, twin discarded).
  double normal() {
    double u1 = u01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // avoid log(0)
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Exponential with rate a > 0.
  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    double u = u01();
    if (u <= 0.0) u = 0x1.0p-53;
    return -std::log(u) / rate;
  }

  /// +1 or -1 with equal probability.
  double uniform_sign() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  /// Uniform direction on the unit sphere in R^n.
  Eigen::VectorXd unit_sphere(Eigen::Index n) {
    Eigen::VectorXd v(n);
    double norm2 = 0.0;
    do {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
      norm2 = v.squaredNorm();
    } while (norm2 == 0.0);
    return v / std::sqrt(norm2);
  }

  /// Matrix of independent standard normals.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t tag_;
  std::uint64_t state_[4];
};

}  // namespace ncstep
