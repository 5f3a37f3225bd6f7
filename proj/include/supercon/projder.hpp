#pragma once

// Derivative of the metric projection onto a smooth convex body, the
// mean-value identity along segments outside the body, and predictions for
// cascades of such derivatives.
//
// For x outside C with d = |x - P(x)|, DP(x) vanishes on the radial line and
// equals (1 + d kappa)^{-1} on the tangent hyperplane H at P(x).

#include "supercon/concentration.hpp"

#include <boost/math/special_functions/legendre.hpp>

namespace supercon {

class ProjectionDerivative {
 public:
  const ConvexBody& body() const { return body_; }
  const Vector& base_point() const { return base_; }
  const Vector& projected() const { return projected_; }
  double dist() const { return dist_; }
  const Vector& radial_dir() const { return radial_; }

  /// DP(x) w.
  Vector apply(const Vector& w) const {
    require_same_dim(base_.size(), w.size(), "dp_apply");
    if (std::holds_alternative<Ball>(body_)) {
      const double r = std::get<Ball>(body_).radius();
      // dividing by <n, n> makes DP(n) vanish exactly in floating point
      return (r / (r + dist_)) * (w - (radial_.dot(w) / radial_.squaredNorm()) * radial_);
    }
    // y = (I + tD)^{-1} z with D = diag(1/a^2): differentiating the multiplier
    // equation gives Mw - (n'Mw / n'Mn) Mn with M = (I + tD)^{-1}.
    const Vector mw = shrink_.cwiseProduct(w);
    const Vector mn = shrink_.cwiseProduct(radial_);
    return mw - (radial_.dot(mw) / radial_.dot(mn)) * mn;
  }

  /// Eigenvalues of DP(x) on H, (1 + d kappa_l)^{-1}, ascending in kappa.
  Vector tangent_spectrum() const {
    const Vector kappa = curvature_operator(body_, projected_).principal_curvatures();
    return (1.0 + dist_ * kappa.array()).inverse().matrix();
  }

 private:
  friend ProjectionDerivative projection_derivative(const ConvexBody&, const Vector&);
  ProjectionDerivative(ConvexBody body, Vector base) : body_(std::move(body)), base_(std::move(base)) {}

  ConvexBody body_;
  Vector base_, projected_, radial_;
  double dist_ = 0.0;
  Vector shrink_;  // ellipsoid only: a^2 / (a^2 + t)
};

inline ProjectionDerivative projection_derivative(const ConvexBody& body, const Vector& x) {
  require_same_dim(dim(body), x.size(), "projection_derivative");
  if (!std::holds_alternative<Ball>(body) && !std::holds_alternative<Ellipsoid>(body))
    throw UnsupportedBody(std::string("projection_derivative: non-smooth body kind ") + kind_name(body));
  ProjectionDerivative pd(body, x);
  if (const auto* e = std::get_if<Ellipsoid>(&body)) {
    const Vector z = x - e->center();
    if (z.cwiseQuotient(e->semi_axes()).squaredNorm() <= 1.0)
      throw std::invalid_argument("projection_derivative: x lies in C");
    const Vector a2 = e->semi_axes().cwiseAbs2();
    const double t = detail::ellipsoid_multiplier(z, e->semi_axes());
    pd.shrink_ = a2.cwiseQuotient((a2.array() + t).matrix());
    pd.projected_ = e->center() + z.cwiseProduct(pd.shrink_);
  } else {
    pd.projected_ = project(x, body);
  }
  const Vector diff = x - pd.projected_;
  pd.dist_ = diff.norm();
  if (!(pd.dist_ > 0.0)) throw std::invalid_argument("projection_derivative: x lies in C");
  pd.radial_ = diff / pd.dist_;
  return pd;
}

inline Vector dp_apply(const ProjectionDerivative& pd, const Vector& w) { return pd.apply(w); }

// ---------------------------------------------------------------------------
// Mean-value identity P(x1) - P(x0) = int_0^1 DP(x0 + t w) w dt, w = x1 - x0

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(unsigned points) {
  if (points < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  GaussLegendre q;
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(points));
  auto add = [&](double x) {
    const double dp = boost::math::legendre_p_prime(static_cast<int>(points), x);
    q.nodes.push_back(x);
    q.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  };
  for (double z : zeros) {
    add(z);
    if (z != 0.0) add(-z);
  }
  return q;
}

/// Smallest value of |center-relative gauge|^2 along x0 + t w, t in [0, 1].
inline double min_gauge_sq_on_segment(const ConvexBody& body, const Vector& x0, const Vector& w) {
  Vector c, scale;
  if (const auto* b = std::get_if<Ball>(&body)) {
    c = b->center();
    scale = Vector::Constant(x0.size(), 1.0 / b->radius());
  } else if (const auto* e = std::get_if<Ellipsoid>(&body)) {
    c = e->center();
    scale = e->semi_axes().cwiseInverse();
  } else {
    throw UnsupportedBody(std::string("mean_value_check: non-smooth body kind ") + kind_name(body));
  }
  const Vector p = (x0 - c).cwiseProduct(scale);
  const Vector q = w.cwiseProduct(scale);
  const double qq = q.squaredNorm();
  double t = qq > 0.0 ? std::clamp(-p.dot(q) / qq, 0.0, 1.0) : 0.0;
  return (p + t * q).squaredNorm();
}

/// |P(x1) - P(x0) - Gauss-Legendre approximation of the integral|.
inline double mean_value_check(const ConvexBody& body, const Vector& x0, const Vector& x1, unsigned quad_points = 64) {
  require_same_dim(dim(body), x0.size(), "mean_value_check");
  require_same_dim(x0.size(), x1.size(), "mean_value_check");
  const Vector w = x1 - x0;
  if (!(min_gauge_sq_on_segment(body, x0, w) > 1.0))
    throw std::invalid_argument("mean_value_check: segment meets C");
  if (w.norm() == 0.0) return 0.0;
  const GaussLegendre q = gauss_legendre(quad_points);
  Vector integral = Vector::Zero(w.size());
  for (std::size_t j = 0; j < q.nodes.size(); ++j) {
    const double t = 0.5 * (q.nodes[j] + 1.0);
    integral += (0.5 * q.weights[j]) * projection_derivative(body, x0 + t * w).apply(w);
  }
  return (project(x1, body) - project(x0, body) - integral).norm();
}

// ---------------------------------------------------------------------------
// Cascade predictions

struct CascadeStep {
  double dist = 0.0;
  Vector curvatures;  // N - 1 principal curvatures
};

class CascadePath {
 public:
  explicit CascadePath(std::vector<CascadeStep> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw std::invalid_argument("CascadePath: no steps");
    for (const auto& s : steps_) {
      require_same_dim(s.curvatures.size(), steps_.front().curvatures.size(), "CascadePath");
      if (s.curvatures.size() == 0) throw std::invalid_argument("CascadePath: empty curvature list");
      if (!(s.dist >= 0.0) || !std::isfinite(s.dist)) throw std::invalid_argument("CascadePath: bad distance");
      if (!all_finite(s.curvatures) || s.curvatures.minCoeff() < 0.0)
        throw std::invalid_argument("CascadePath: curvatures must be finite and >= 0");
    }
  }
  const std::vector<CascadeStep>& steps() const { return steps_; }

  /// v_l = (1 + d_k kappa_l)^{-1} for step k.
  Vector factors(std::size_t k) const {
    const auto& s = steps_.at(k);
    return (1.0 + s.dist * s.curvatures.array()).inverse().matrix();
  }

 private:
  std::vector<CascadeStep> steps_;
};

/// prod_k |v^(k)|_2^(pi)
inline double cascade_norm_prediction(const CascadePath& path) {
  double prod = 1.0;
  for (std::size_t k = 0; k < path.steps().size(); ++k) prod *= prob_lp_norm(path.factors(k), 2.0);
  return prod;
}

/// sqrt(2 (1 - prod_k |v^(k)|_1^(pi) / |v^(k)|_2^(pi)))
inline double cascade_rotation_prediction(const CascadePath& path) {
  double prod = 1.0;
  for (std::size_t k = 0; k < path.steps().size(); ++k) {
    const Vector v = path.factors(k);
    prod *= prob_lp_norm(v, 1.0) / prob_lp_norm(v, 2.0);
  }
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - prod)));
}

struct NormRatioBounds {
  double lower = 0.0;  // |v|_2
  double upper = 0.0;  // (|v|_2 + 1/|v|_2) / 2
  double ratio = 0.0;  // |v|_1 / |v|_2
};

/// For v in (0,1]^n: |v|_2 <= |v|_1/|v|_2 <= (|v|_2 + 1/|v|_2)/2, all norms
/// probability norms. A small ratio therefore forces a small |v|_2.
inline NormRatioBounds norm_ratio_bounds(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("norm_ratio_bounds: empty vector");
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0 && v[i] <= 1.0)) throw std::domain_error("norm_ratio_bounds: entries must lie in (0, 1]");
  NormRatioBounds b;
  const double l1 = prob_lp_norm(v, 1.0);
  const double l2 = prob_lp_norm(v, 2.0);
  b.lower = l2;
  b.upper = 0.5 * (l2 + 1.0 / l2);
  b.ratio = l1 / l2;
  // (l2)^2 <= l1 because v_i^2 <= v_i; l1 <= ((l2)^2 + 1)/2 because v_i <= (v_i^2 + 1)/2.
  const double slack = 1e-12;
  if (b.ratio < b.lower * (1.0 - slack) || b.ratio > b.upper * (1.0 + slack))
    throw std::logic_error("norm_ratio_bounds: inequality violated");
  return b;
}

// ---------------------------------------------------------------------------
// Monte Carlo cascades

struct CascadeLink {
  ConvexBody body;
  double distance = 0.0;  // distance of the base point from the body
};

struct CascadeReport {
  /// |w_M| / |w_0| against prod |v^(k)|_2.
  PredictionReport norm;
  /// |w_M/|w_M| - w_0/|w_0||^2 against the square of the rotation prediction.
  PredictionReport rotation_sq;
  /// Mean of |w_M/|w_M| - w_0/|w_0|| and the unsquared prediction.
  double rotation_mean = 0.0;
  double rotation_predicted = 0.0;
};

namespace detail {

/// Boundary point of a Ball or Ellipsoid hit by the ray from the center along g.
inline Vector boundary_point_along(const ConvexBody& body, const Vector& g) {
  if (const auto* b = std::get_if<Ball>(&body)) return b->center() + b->radius() * g;
  if (const auto* e = std::get_if<Ellipsoid>(&body)) return e->center() + g / g.cwiseQuotient(e->semi_axes()).norm();
  throw UnsupportedBody(std::string("mc_cascade: non-smooth body kind ") + kind_name(body));
}

}  // namespace detail

/// Each trial applies DP along the chain to w0. Step k picks a boundary point
/// y_k in a uniformly random direction from the body's center, sets
/// x_k = y_k + d_k n(y_k) (so P(x_k) = y_k exactly) and orients the body by an
/// independent Haar rotation, realized through conjugated_action.
inline CascadeReport mc_cascade(const std::vector<CascadeLink>& chain, const Vector& w0, const MonteCarloOptions& opts) {
  if (chain.empty()) throw std::invalid_argument("mc_cascade: empty chain");
  const Eigen::Index n = w0.size();
  if (n < 2) throw std::invalid_argument("mc_cascade: N must be >= 2");
  if (!(w0.norm() > 0.0)) throw std::invalid_argument("mc_cascade: w0 must be nonzero");
  for (const auto& link : chain) {
    require_same_dim(dim(link.body), n, "mc_cascade");
    if (!(link.distance > 0.0) || !std::isfinite(link.distance))
      throw std::invalid_argument("mc_cascade: distances must be positive");
    if (!std::holds_alternative<Ball>(link.body) && !std::holds_alternative<Ellipsoid>(link.body))
      throw UnsupportedBody(std::string("mc_cascade: non-smooth body kind ") + kind_name(link.body));
  }
  const Vector w0_hat = w0.normalized();

  struct Sample {
    bool ok = false;
    double norm = 0.0, rot_sq = 0.0, pred_norm = 0.0, pred_rot = 0.0;
  };
  auto samples = run_trials<Sample>(experiment_key("cascade"), opts, [&](Rng& rng) {
    Sample s;
    Vector w = w0;
    std::vector<CascadeStep> steps;
    for (const auto& link : chain) {
      const Vector y = detail::boundary_point_along(link.body, uniform_sphere(n, rng));
      const Vector x = y + link.distance * outward_normal(link.body, y);
      const ProjectionDerivative pd = projection_derivative(link.body, x);
      steps.push_back({pd.dist(), curvature_operator(link.body, pd.projected()).principal_curvatures()});
      w = conjugated_action([&](const Vector& g) { return pd.apply(g); }, w, rng);
      if (!(w.norm() > 0.0)) return s;
    }
    const CascadePath path(std::move(steps));
    s.ok = true;
    s.norm = w.norm() / w0.norm();
    s.rot_sq = (w.normalized() - w0_hat).squaredNorm();
    s.pred_norm = cascade_norm_prediction(path);
    s.pred_rot = cascade_rotation_prediction(path);
    return s;
  });

  std::vector<double> norms, rots;
  CompensatedSum pred_norm, pred_rot, pred_rot_sq, rot;
  for (const auto& s : samples) {
    if (!s.ok) continue;
    norms.push_back(s.norm);
    rots.push_back(s.rot_sq);
    pred_norm.add(s.pred_norm);
    pred_rot.add(s.pred_rot);
    pred_rot_sq.add(s.pred_rot * s.pred_rot);
    rot.add(std::sqrt(s.rot_sq));
  }
  if (norms.empty()) throw std::runtime_error("mc_cascade: every trial degenerated");
  const double kept = static_cast<double>(norms.size());
  const std::size_t discarded = samples.size() - norms.size();
  CascadeReport r;
  r.norm = make_report("cascade.norm", pred_norm.value() / kept, norms, n, chain.size(), opts, discarded);
  r.rotation_sq = make_report("cascade.rotation_sq", pred_rot_sq.value() / kept, rots, n, chain.size(), opts, discarded);
  r.rotation_mean = rot.value() / kept;
  r.rotation_predicted = pred_rot.value() / kept;
  return r;
}

}  // namespace supercon
