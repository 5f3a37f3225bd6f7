#pragma once

// Seed-deterministic random sources. Every sampler takes an Rng constructed
// from an explicit (master_seed, stream_index) pair; Monte Carlo trial t of
// experiment e uses stream_index = stream_hash(e, t), so results do not depend
// on which thread ran the trial.

#include "supercon/geometry.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace supercon {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, for turning experiment names into stream keys.
inline constexpr std::uint64_t experiment_key(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t stream_hash(std::uint64_t experiment, std::uint64_t trial) {
  return splitmix64(splitmix64(experiment) ^ (trial + 0x632be59bd9b4e019ULL));
}

struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

class Rng {
 public:
  explicit Rng(RngStream stream)
      : stream_(stream),
        engine_(splitmix64(stream.master_seed) ^ splitmix64(~stream.stream_index)) {}

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }
  std::uint64_t bits() { return engine_(); }
  const RngStream& stream() const { return stream_; }

 private:
  RngStream stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Nonnegative finite spectrum (s_1, ..., s_N).
class SingularSpectrum {
 public:
  explicit SingularSpectrum(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw std::invalid_argument("SingularSpectrum: empty");
    if (!all_finite(values_) || values_.minCoeff() < 0.0)
      throw std::invalid_argument("SingularSpectrum: entries must be finite and nonnegative");
  }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

 private:
  Vector values_;
};

inline Vector gaussian_vector(Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("gaussian_vector: dimension must be >= 1");
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix y(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) y(i, j) = rng.normal();
  return y;
}

/// x / |x| with x standard Gaussian: uniform on S^{N-1}.
inline Vector uniform_sphere(Eigen::Index n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("uniform_sphere: dimension must be >= 2");
  for (;;) {
    Vector x = gaussian_vector(n, rng);
    const double len = x.norm();
    if (len >= 1e-300) return x / len;
  }
}

/// Uniform in the closed ball of the given radius about the origin.
inline Vector uniform_ball(Eigen::Index n, double radius, Rng& rng) {
  const Vector u = uniform_sphere(n, rng);
  return u * (radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)));
}

/// Uniform on the unit sphere of u^perp (u a unit vector): Gaussian draw with
/// the u-component removed, then normalized.
inline Vector uniform_sphere_orthogonal(const Vector& u, Rng& rng) {
  if (u.size() < 2) throw std::invalid_argument("uniform_sphere_orthogonal: dimension must be >= 2");
  for (;;) {
    Vector w = gaussian_vector(u.size(), rng);
    w -= u.dot(w) * u;
    const double len = w.norm();
    if (len >= 1e-300) return w / len;
  }
}

/// Haar-distributed orthogonal matrix. Implemented as the Q factor of a
/// Gaussian matrix with the signs of diag(R) folded into Q, which has the same
/// law as the orthogonal polar factor of that matrix.
inline Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("random_orthogonal: dimension must be >= 1");
  for (;;) {
    const Matrix y = gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(y);
    const Matrix& packed = qr.matrixQR();
    const double tiny = 1e-12 * std::sqrt(static_cast<double>(n));
    bool singular = false;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(packed(j, j)) < tiny) singular = true;
    if (singular) continue;
    Matrix q = qr.householderQ();
    for (Eigen::Index j = 0; j < n; ++j)
      if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
  }
}

/// T = U1 diag(s) U2 with independent Haar U1, U2.
inline Matrix matrix_with_singular_values(const SingularSpectrum& s, Rng& rng) {
  const Eigen::Index n = s.size();
  const Matrix u1 = random_orthogonal(n, rng);
  const Matrix u2 = random_orthogonal(n, rng);
  return u1 * s.values().asDiagonal() * u2;
}

/// One step of the sphere chain: a uniform point of
/// Sigma(u, d) = (1 - d^2/2) u + d sqrt(1 - d^2/4) S^{N-2}_{u-perp}.
inline Vector sphere_markov_step(const Vector& u, double d, Rng& rng) {
  if (!(d >= 0.0 && d <= 2.0)) throw std::domain_error("sphere_markov_step: d must lie in [0, 2]");
  if (std::abs(u.norm() - 1.0) > 1e-10) throw std::invalid_argument("sphere_markov_step: u must be a unit vector");
  const Vector w = uniform_sphere_orthogonal(u, rng);
  const double along = 1.0 - 0.5 * d * d;
  const double across = d * std::sqrt(std::max(0.0, 1.0 - 0.25 * d * d));
  if (across == 0.0) return along * u;
  return along * u + across * w;
}

/// R^T op(R w) for R Haar-orthogonal, sampled in law without forming R.
/// R maps w/|w| to a uniform g; conditionally on g, R restricted to the
/// complement is Haar, so the component of op(g) orthogonal to g lands
/// uniformly on the sphere of (w/|w|)^perp.
template <class Op>
Vector conjugated_action(Op&& op, const Vector& w, Rng& rng) {
  const double len = w.norm();
  if (len == 0.0) return Vector::Zero(w.size());
  const Vector w_hat = w / len;
  const Vector g = uniform_sphere(w.size(), rng);
  const Vector image = op(g);
  const double along = image.dot(g);
  const double across = (image - along * g).norm();
  const Vector xi = uniform_sphere_orthogonal(w_hat, rng);
  return len * (along * w_hat + across * xi);
}

}  // namespace supercon
