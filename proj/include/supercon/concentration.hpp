#pragma once

// Closed-form concentration-of-measure predictors and their Monte Carlo
// estimators in E^N.

#include "supercon/parallel.hpp"
#include "supercon/randgen.hpp"

#include <functional>
#include <string>

namespace supercon {

struct PredictionReport {
  std::string conclusion_id;
  double predicted = 0.0;
  double empirical_mean = 0.0;
  double empirical_std = 0.0;
  std::size_t trials = 0;
  Eigen::Index N = 0;
  std::size_t M = 0;
  double relative_error = 0.0;
  std::uint64_t seed = 0;
  /// Trials dropped because of a degenerate (zero) intermediate vector.
  std::size_t discarded = 0;
};

struct MonteCarloOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 10000;
  unsigned threads = 1;
};

/// How random Haar-conjugated matrices are realized. `dense` forms the
/// matrices; `implicit` samples the identical law of their action on the
/// vectors involved in O(N) per factor.
enum class MatrixSampling { dense, implicit };

inline PredictionReport make_report(std::string id, double predicted, std::span<const double> samples,
                                    Eigen::Index n, std::size_t m, const MonteCarloOptions& opts,
                                    std::size_t discarded = 0) {
  const SampleMoments mom = moments(samples);
  PredictionReport r;
  r.conclusion_id = std::move(id);
  r.predicted = predicted;
  r.empirical_mean = mom.mean;
  r.empirical_std = mom.std;
  r.trials = mom.count;
  r.N = n;
  r.M = m;
  r.relative_error = std::abs(mom.mean - predicted) / std::max(std::abs(predicted), 1e-30);
  r.seed = opts.seed;
  r.discarded = discarded;
  return r;
}

/// Runs `trial(rng)` once per trial, each on its own stream derived from
/// (experiment, trial index); returns results in trial order.
template <class T, class Fn>
std::vector<T> run_trials(std::uint64_t experiment, const MonteCarloOptions& opts, Fn&& trial) {
  if (opts.trials < 1) throw std::invalid_argument("Monte Carlo: trials must be >= 1");
  std::vector<T> out(opts.trials);
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    Rng rng(RngStream{opts.seed, stream_hash(experiment, t)});
    out[t] = trial(rng);
  });
  return out;
}

inline void require_nonnegative(const std::vector<double>& d, const char* what) {
  if (d.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  for (double x : d)
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": entries must be >= 0");
}

// ---------------------------------------------------------------------------
// Sums of independent uniformly directed vectors of given norms

/// sqrt(sum d_i^2)
inline double predict_sum_norm(const std::vector<double>& d) {
  require_nonnegative(d, "predict_sum_norm");
  double s = 0.0;
  for (double x : d) s += x * x;
  return std::sqrt(s);
}

struct SumNormReport {
  PredictionReport report;
  /// Mean and std of <y_1, y_2> over trials (M >= 2).
  double pair_inner_mean = 0.0;
  double pair_inner_std = 0.0;
};

inline SumNormReport mc_sum_norm(const std::vector<double>& d, Eigen::Index n, const MonteCarloOptions& opts) {
  const double predicted = predict_sum_norm(d);
  if (n < 2) throw std::invalid_argument("mc_sum_norm: N must be >= 2");
  struct Sample { double norm = 0.0, inner = 0.0; };
  auto samples = run_trials<Sample>(experiment_key("sum_norm"), opts, [&](Rng& rng) {
    Vector sum = Vector::Zero(n);
    Vector first;
    Sample s;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Vector y = d[i] * uniform_sphere(n, rng);
      if (i == 0) first = y;
      if (i == 1) s.inner = first.dot(y);
      sum += y;
    }
    s.norm = sum.norm();
    return s;
  });
  std::vector<double> norms, inners;
  for (const auto& s : samples) {
    norms.push_back(s.norm);
    inners.push_back(s.inner);
  }
  SumNormReport out;
  out.report = make_report("sum_norm", predicted, norms, n, d.size(), opts);
  if (d.size() >= 2) {
    const auto m = moments(inners);
    out.pair_inner_mean = m.mean;
    out.pair_inner_std = m.std;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accumulated displacement of the sphere Markov chain

/// 2 (1 - prod (1 - d_i^2 / 2))
inline double predict_sphere_displacement_sq(const std::vector<double>& d) {
  if (d.empty()) throw std::invalid_argument("predict_sphere_displacement_sq: empty input");
  double prod = 1.0;
  for (double x : d) {
    if (!(x >= 0.0 && x <= 2.0)) throw std::invalid_argument("predict_sphere_displacement_sq: entries must lie in [0, 2]");
    prod *= 1.0 - 0.5 * x * x;
  }
  return 2.0 * (1.0 - prod);
}

/// |u_M - u_0|^2 along u_0 -> u_1 -> ... with u_0 uniform on S^{N-1}.
inline PredictionReport mc_sphere_displacement(const std::vector<double>& d, Eigen::Index n,
                                               const MonteCarloOptions& opts) {
  const double predicted = predict_sphere_displacement_sq(d);
  if (n < 3) throw std::invalid_argument("mc_sphere_displacement: N must be >= 3");
  auto samples = run_trials<double>(experiment_key("sphere_chain"), opts, [&](Rng& rng) {
    const Vector u0 = uniform_sphere(n, rng);
    Vector u = u0;
    for (double step : d) u = sphere_markov_step(u, step, rng);
    return (u - u0).squaredNorm();
  });
  return make_report("sphere_chain", predicted, samples, n, d.size(), opts);
}

// ---------------------------------------------------------------------------
// Gram matrix of a Gaussian matrix

struct GramReport {
  /// Diagonal entries of (1/N) Y^T Y against 1.
  PredictionReport diagonal;
  double offdiag_mean = 0.0;
  double offdiag_std = 0.0;
  /// Means over trials of max |G - I| and RMS(G - I) entrywise.
  double max_abs_dev = 0.0;
  double rms_dev = 0.0;
  /// RMS over trials of <(G - I) u, u> for u uniform on the sphere.
  double quadform_rms = 0.0;
};

inline GramReport mc_gram_identity(Eigen::Index n, const MonteCarloOptions& opts) {
  if (n < 1) throw std::invalid_argument("mc_gram_identity: N must be >= 1");
  struct Sample { double diag_mean = 0, off_sum = 0, off_sq = 0, max_dev = 0, rms = 0, quad = 0; };
  auto samples = run_trials<Sample>(experiment_key("gram"), opts, [&](Rng& rng) {
    const Matrix y = gaussian_matrix(n, n, rng);
    Matrix g = (y.transpose() * y) / static_cast<double>(n);
    Sample s;
    s.diag_mean = g.diagonal().mean();
    g.diagonal().array() -= 1.0;
    s.max_dev = g.cwiseAbs().maxCoeff();
    s.rms = std::sqrt(g.squaredNorm() / static_cast<double>(n * n));
    const double diag_sq = g.diagonal().squaredNorm();
    s.off_sum = g.sum() - g.diagonal().sum();
    s.off_sq = g.squaredNorm() - diag_sq;
    if (n >= 2) {
      const Vector u = uniform_sphere(n, rng);
      s.quad = u.dot(g * u);
    } else {
      s.quad = g(0, 0);
    }
    return s;
  });
  std::vector<double> diag;
  CompensatedSum off_sum, off_sq, max_dev, rms, quad_sq;
  for (const auto& s : samples) {
    diag.push_back(s.diag_mean);
    off_sum.add(s.off_sum);
    off_sq.add(s.off_sq);
    max_dev.add(s.max_dev);
    rms.add(s.rms);
    quad_sq.add(s.quad * s.quad);
  }
  const double t = static_cast<double>(samples.size());
  GramReport out;
  out.diagonal = make_report("gram_diagonal", 1.0, diag, n, 1, opts);
  if (n >= 2) {
    const double count = t * static_cast<double>(n * (n - 1));
    out.offdiag_mean = off_sum.value() / count;
    out.offdiag_std = std::sqrt(std::max(0.0, off_sq.value() / count - out.offdiag_mean * out.offdiag_mean));
  }
  out.max_abs_dev = max_dev.value() / t;
  out.rms_dev = rms.value() / t;
  out.quadform_rms = std::sqrt(quad_sq.value() / t);
  return out;
}

// ---------------------------------------------------------------------------
// Action of a matrix with given singular values

/// |s|_2^(pi) = (1/sqrt N) |T|_HS
inline double predict_action_norm(const SingularSpectrum& s) { return prob_lp_norm(s.values(), 2.0); }

struct ActionReport {
  /// |T v| for v uniform on the unit sphere.
  PredictionReport norm;
  /// Mean over trials of (<Tu, Tv>/pred^2 - <u, v>)^2 for independent uniform u, v.
  double distortion_mean_sq = 0.0;
  /// (1/N) ((|s/pred|_4^(pi))^4 - 1)
  double distortion_predicted = 0.0;
};

/// With `implicit` sampling, T = U1 S U2 acts on (u, v) as S acts on the
/// uniform pair (U2 u, U2 v), and U1 drops out of every norm and inner product.
inline ActionReport mc_action_norm(const SingularSpectrum& s, const MonteCarloOptions& opts,
                                   MatrixSampling sampling = MatrixSampling::dense) {
  const Eigen::Index n = s.size();
  if (n < 2) throw std::invalid_argument("mc_action_norm: N must be >= 2");
  const double pred = predict_action_norm(s);
  struct Sample { double norm = 0.0, distortion = 0.0; };
  auto samples = run_trials<Sample>(experiment_key("action"), opts, [&](Rng& rng) {
    Sample out;
    Vector tu, tv, u, v;
    if (sampling == MatrixSampling::dense) {
      const Matrix t = matrix_with_singular_values(s, rng);
      u = uniform_sphere(n, rng);
      v = uniform_sphere(n, rng);
      tu = t * u;
      tv = t * v;
    } else {
      u = uniform_sphere(n, rng);
      v = uniform_sphere(n, rng);
      tu = s.values().cwiseProduct(u);
      tv = s.values().cwiseProduct(v);
    }
    out.norm = tv.norm();
    out.distortion = pred > 0.0 ? tu.dot(tv) / (pred * pred) - u.dot(v) : 0.0;
    return out;
  });
  std::vector<double> norms;
  CompensatedSum dist_sq;
  for (const auto& x : samples) {
    norms.push_back(x.norm);
    dist_sq.add(x.distortion * x.distortion);
  }
  ActionReport r;
  r.norm = make_report("action_norm", pred, norms, n, 1, opts);
  r.distortion_mean_sq = dist_sq.value() / static_cast<double>(samples.size());
  if (pred > 0.0) {
    const double l4 = prob_lp_norm(s.values() / pred, 4.0);
    r.distortion_predicted = (l4 * l4 * l4 * l4 - 1.0) / static_cast<double>(n);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rotation by products of symmetric operators

/// 2 (1 - prod_i ((1/N) tr A_i) / |s^(i)|_2^(pi)); for PSD spectra the trace
/// term is |s^(i)|_1^(pi). `psd` asserts every eigenvalue is nonnegative.
inline double predict_rotation(const std::vector<Vector>& eigs, bool psd) {
  if (eigs.empty()) throw std::invalid_argument("predict_rotation: no spectra");
  double prod = 1.0;
  for (const auto& s : eigs) {
    require_same_dim(s.size(), eigs.front().size(), "predict_rotation");
    if (s.size() == 0) throw std::invalid_argument("predict_rotation: empty spectrum");
    if (psd && s.minCoeff() < 0.0) throw std::invalid_argument("predict_rotation: negative eigenvalue with psd set");
    const double l2 = prob_lp_norm(s, 2.0);
    if (l2 == 0.0) throw std::invalid_argument("predict_rotation: zero operator");
    prod *= s.mean() / l2;
  }
  return 2.0 * (1.0 - prod);
}

inline double predict_rotation(const std::vector<SingularSpectrum>& eigs) {
  std::vector<Vector> v;
  for (const auto& s : eigs) v.push_back(s.values());
  return predict_rotation(v, true);
}

/// |A_M ... A_1 v / |.| - v|^2 with A_i = U_i^T diag(s^(i)) U_i, U_i Haar.
inline PredictionReport mc_rotation_product(const std::vector<SingularSpectrum>& eigs, const MonteCarloOptions& opts,
                                            MatrixSampling sampling = MatrixSampling::dense) {
  const double predicted = predict_rotation(eigs);
  const Eigen::Index n = eigs.front().size();
  if (n < 2) throw std::invalid_argument("mc_rotation_product: N must be >= 2");
  constexpr double kDiscarded = -1.0;
  auto samples = run_trials<double>(experiment_key("rotation_product"), opts, [&](Rng& rng) {
    const Vector v0 = uniform_sphere(n, rng);
    Vector v = v0;
    for (const auto& s : eigs) {
      if (sampling == MatrixSampling::dense) {
        const Matrix u = random_orthogonal(n, rng);
        v = u.transpose() * s.values().cwiseProduct(u * v);
      } else {
        v = conjugated_action([&](const Vector& g) -> Vector { return s.values().cwiseProduct(g); }, v, rng);
      }
      if (!(v.norm() > 0.0)) return kDiscarded;
    }
    return (v / v.norm() - v0).squaredNorm();
  });
  std::vector<double> kept;
  for (double x : samples)
    if (x != kDiscarded) kept.push_back(x);
  if (kept.empty()) throw std::runtime_error("mc_rotation_product: every trial degenerated");
  return make_report("rotation_product", predicted, kept, n, eigs.size(), opts, samples.size() - kept.size());
}

// ---------------------------------------------------------------------------
// Scaling-law fits

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = slope x + intercept; needs two distinct x.
inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

struct ScalingFit {
  std::vector<Eigen::Index> dims;
  std::vector<double> deviations;
  std::vector<bool> used;
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(deviation) against log(N).
inline ScalingFit fit_scaling(const std::vector<Eigen::Index>& dims,
                              const std::function<double(Eigen::Index)>& measure) {
  if (dims.size() < 3) throw std::invalid_argument("fit_scaling: need at least 3 dimensions");
  for (auto n : dims)
    if (n < 16) throw std::invalid_argument("fit_scaling: dimensions must be >= 16");
  ScalingFit fit;
  fit.dims = dims;
  std::vector<double> xs, ys;
  for (auto n : dims) {
    const double dev = measure(n);
    fit.deviations.push_back(dev);
    const bool ok = dev > 0.0 && std::isfinite(dev);
    fit.used.push_back(ok);
    if (ok) {
      xs.push_back(std::log(static_cast<double>(n)));
      ys.push_back(std::log(dev));
    }
  }
  if (xs.size() < 3) throw std::invalid_argument("fit_scaling: fewer than 3 positive deviations");
  const LineFit line = fit_line(xs, ys);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

/// Empirical std divided by the predictor.
inline double relative_deviation(const PredictionReport& r) {
  return r.empirical_std / std::max(std::abs(r.predicted), 1e-30);
}

}  // namespace supercon
