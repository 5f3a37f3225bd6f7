#pragma once

// Vectors, probability L^p norms, closed convex sets with metric projections,
// distances and boundary curvature operators.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace supercon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation needs a smooth boundary and the body has none.
class UnsupportedBody : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b)
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                            " vs " + std::to_string(b));
}

inline bool all_finite(const Vector& x) { return x.allFinite(); }

/// ((1/N) sum |x_j|^p)^(1/p), the L^p norm under the uniform probability on
/// coordinate indices. Nondecreasing in p.
inline double prob_lp_norm(const Vector& x, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::domain_error("prob_lp_norm: p must be finite and >= 1");
  if (x.size() == 0) throw std::invalid_argument("prob_lp_norm: empty vector");
  const double n = static_cast<double>(x.size());
  if (p == 1.0) return x.cwiseAbs().sum() / n;
  if (p == 2.0) return std::sqrt(x.squaredNorm() / n);
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) acc += std::pow(std::abs(x[j]) / scale, p);
  return scale * std::pow(acc / n, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Constraint sets

/// {y : <normal, y> <= offset} with a unit normal.
class HalfSpace {
 public:
  HalfSpace(Vector normal, double offset) : normal_(std::move(normal)), offset_(offset) {
    if (normal_.size() == 0 || !all_finite(normal_) || !std::isfinite(offset_))
      throw std::invalid_argument("HalfSpace: non-finite or empty data");
    if (std::abs(normal_.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("HalfSpace: normal must have unit length");
  }
  /// Normalizes (a, b) so that {<a,y> <= b} keeps its meaning.
  static HalfSpace from_unnormalized(const Vector& a, double b) {
    const double len = a.norm();
    if (!(len > 0.0)) throw std::invalid_argument("HalfSpace: zero normal");
    return HalfSpace(a / len, b / len);
  }

  const Vector& normal() const { return normal_; }
  double offset() const { return offset_; }
  Eigen::Index dim() const { return normal_.size(); }
  double violation(const Vector& x) const { return normal_.dot(x) - offset_; }

 private:
  Vector normal_;
  double offset_;
};

class Ball {
 public:
  Ball(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
    if (center_.size() == 0 || !all_finite(center_))
      throw std::invalid_argument("Ball: bad center");
    if (!(radius_ > 0.0) || !std::isfinite(radius_))
      throw std::invalid_argument("Ball: radius must be positive");
  }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  Eigen::Index dim() const { return center_.size(); }

 private:
  Vector center_;
  double radius_;
};

/// Axis-aligned ellipsoid {y : sum ((y_i - c_i) / a_i)^2 <= 1}.
class Ellipsoid {
 public:
  Ellipsoid(Vector center, Vector semi_axes)
      : center_(std::move(center)), semi_axes_(std::move(semi_axes)) {
    if (center_.size() == 0 || !all_finite(center_))
      throw std::invalid_argument("Ellipsoid: bad center");
    require_same_dim(center_.size(), semi_axes_.size(), "Ellipsoid");
    if (!all_finite(semi_axes_) || !(semi_axes_.minCoeff() > 0.0))
      throw std::invalid_argument("Ellipsoid: semi-axes must be positive");
  }
  const Vector& center() const { return center_; }
  const Vector& semi_axes() const { return semi_axes_; }
  Eigen::Index dim() const { return center_.size(); }
  /// sqrt(sum (z_i/a_i)^2); equals 1 exactly on the boundary.
  double gauge(const Vector& x) const {
    return (x - center_).cwiseQuotient(semi_axes_).norm();
  }

 private:
  Vector center_;
  Vector semi_axes_;
};

class HalfSpaceSet {
 public:
  explicit HalfSpaceSet(std::vector<HalfSpace> halfspaces) : halfspaces_(std::move(halfspaces)) {
    if (halfspaces_.empty()) throw std::invalid_argument("HalfSpaceSet: empty");
    for (const auto& h : halfspaces_) require_same_dim(h.dim(), halfspaces_.front().dim(), "HalfSpaceSet");
  }
  const std::vector<HalfSpace>& halfspaces() const { return halfspaces_; }
  Eigen::Index dim() const { return halfspaces_.front().dim(); }

 private:
  std::vector<HalfSpace> halfspaces_;
};

using ConvexBody = std::variant<HalfSpace, Ball, Ellipsoid, HalfSpaceSet>;

inline Eigen::Index dim(const ConvexBody& body) {
  return std::visit([](const auto& b) { return b.dim(); }, body);
}

inline const char* kind_name(const ConvexBody& body) {
  switch (body.index()) {
    case 0: return "halfspace";
    case 1: return "ball";
    case 2: return "ellipsoid";
    default: return "halfspace_set";
  }
}

// ---------------------------------------------------------------------------
// Membership by direct constraint evaluation

inline bool contains(const HalfSpace& h, const Vector& x, double tol = 0.0) {
  return h.violation(x) <= tol;
}
inline bool contains(const Ball& b, const Vector& x, double tol = 0.0) {
  return (x - b.center()).norm() <= b.radius() + tol;
}
inline bool contains(const Ellipsoid& e, const Vector& x, double tol = 0.0) {
  return e.gauge(x) <= 1.0 + tol;
}
inline bool contains(const HalfSpaceSet& s, const Vector& x, double tol = 0.0) {
  return std::all_of(s.halfspaces().begin(), s.halfspaces().end(),
                     [&](const HalfSpace& h) { return contains(h, x, tol); });
}
inline bool contains(const ConvexBody& body, const Vector& x, double tol = 0.0) {
  require_same_dim(dim(body), x.size(), "contains");
  return std::visit([&](const auto& b) { return contains(b, x, tol); }, body);
}

// ---------------------------------------------------------------------------
// Metric projections

inline Vector project(const Vector& x, const HalfSpace& h) {
  require_same_dim(h.dim(), x.size(), "project");
  const double v = h.violation(x);
  if (v <= 0.0) return x;
  return x - v * h.normal();
}

inline Vector project(const Vector& x, const Ball& b) {
  require_same_dim(b.dim(), x.size(), "project");
  const Vector z = x - b.center();
  const double len = z.norm();
  if (len <= b.radius()) return x;
  return b.center() + z * (b.radius() / len);
}

namespace detail {

/// Root t >= 0 of f(t) = sum (a_i z_i / (a_i^2 + t))^2 - 1 for z outside the
/// ellipsoid. f is convex and decreasing on t >= 0; Newton from the left
/// endpoint is monotone, bisection guards against round-off excursions.
inline double ellipsoid_multiplier(const Vector& z, const Vector& a) {
  const Vector az = a.cwiseProduct(z);
  const Vector a2 = a.cwiseAbs2();
  double lo = 0.0;
  double hi = az.norm();
  double t = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double f = -1.0, df = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double q = az[i] / (a2[i] + t);
      f += q * q;
      df -= 2.0 * q * q / (a2[i] + t);
    }
    if (f > 0.0) lo = t; else hi = t;
    if (f == 0.0) break;
    double next = (df < 0.0) ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (std::abs(f) <= 1e-12 && step <= 1e-15 * std::max(1.0, t)) break;
    if (hi - lo <= 1e-17 * std::max(1.0, hi)) break;
  }
  return t;
}

}  // namespace detail

inline Vector project(const Vector& x, const Ellipsoid& e) {
  require_same_dim(e.dim(), x.size(), "project");
  const Vector z = x - e.center();
  if (z.cwiseQuotient(e.semi_axes()).squaredNorm() <= 1.0) return x;
  const double t = detail::ellipsoid_multiplier(z, e.semi_axes());
  const Vector a2 = e.semi_axes().cwiseAbs2();
  return e.center() + z.cwiseProduct(a2).cwiseQuotient((a2.array() + t).matrix());
}

/// Projection onto a polyhedron by Hildreth's dual coordinate ascent, followed
/// by an exact solve on the identified active set when that solve satisfies
/// the KKT conditions.
inline Vector project(const Vector& x, const HalfSpaceSet& s) {
  require_same_dim(s.dim(), x.size(), "project");
  const auto& hs = s.halfspaces();
  const std::size_t m = hs.size();
  if (contains(s, x)) return x;
  if (m == 1) return project(x, hs.front());

  std::vector<double> lambda(m, 0.0);
  Vector y = x;
  const double scale = 1.0 + x.norm();
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      // maximize the dual in lambda_i >= 0 with unit-norm rows
      const double delta = std::max(-lambda[i], hs[i].violation(y));
      if (delta != 0.0) {
        lambda[i] += delta;
        y -= delta * hs[i].normal();
        change = std::max(change, std::abs(delta));
      }
    }
    if (change <= 1e-15 * scale) break;
  }

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < m; ++i)
    if (lambda[i] > 1e-14 * scale) active.push_back(i);
  if (active.empty()) return y;
  Matrix a(static_cast<Eigen::Index>(active.size()), x.size());
  Vector rhs(static_cast<Eigen::Index>(active.size()));
  for (std::size_t r = 0; r < active.size(); ++r) {
    a.row(static_cast<Eigen::Index>(r)) = hs[active[r]].normal().transpose();
    rhs[static_cast<Eigen::Index>(r)] = hs[active[r]].violation(x);
  }
  const Matrix gram = a * a.transpose();
  const Vector mu = gram.completeOrthogonalDecomposition().solve(rhs);
  const Vector polished = x - a.transpose() * mu;
  if (mu.minCoeff() < -1e-12 * scale || !contains(s, polished, 1e-13 * scale)) return y;
  const double kkt = (gram * mu - rhs).norm();
  return kkt <= 1e-10 * scale ? polished : y;
}

inline Vector project(const Vector& x, const ConvexBody& body) {
  return std::visit([&](const auto& b) { return project(x, b); }, body);
}

inline double distance(const Vector& x, const HalfSpace& h) {
  require_same_dim(h.dim(), x.size(), "distance");
  return std::max(0.0, h.violation(x));
}
inline double distance(const Vector& x, const ConvexBody& body) {
  if (const auto* h = std::get_if<HalfSpace>(&body)) return distance(x, *h);
  return (x - project(x, body)).norm();
}

// ---------------------------------------------------------------------------
// Boundary curvature

inline constexpr double kBoundaryTolerance = 1e-9;

/// Outward unit normal at a boundary point of a smooth body.
inline Vector outward_normal(const ConvexBody& body, const Vector& y) {
  if (const auto* b = std::get_if<Ball>(&body)) return (y - b->center()).normalized();
  if (const auto* e = std::get_if<Ellipsoid>(&body)) {
    const Vector g = (y - e->center()).cwiseQuotient(e->semi_axes().cwiseAbs2());
    return g.normalized();
  }
  throw UnsupportedBody(std::string("outward_normal: non-smooth body kind ") + kind_name(body));
}

/// Orthonormal basis of normal^perp as the last N-1 columns of the Householder
/// reflector that maps `normal` to +-e_1.
inline Matrix tangent_basis(const Vector& normal) {
  const Eigen::Index n = normal.size();
  Vector v = normal;
  v[0] += (normal[0] >= 0.0 ? 1.0 : -1.0);
  const double vv = v.squaredNorm();
  Matrix reflector = Matrix::Identity(n, n) - (2.0 / vv) * v * v.transpose();
  return reflector.rightCols(n - 1);
}

/// Shape operator of a Ball or Ellipsoid boundary at a point, acting on the
/// tangent hyperplane H = normal^perp. Stored implicitly: for a ball it is
/// (1/r) on H; for an ellipsoid it is Pi_H diag(1/a^2) Pi_H / |diag(1/a^2) z|.
class CurvatureOperator {
 public:
  CurvatureOperator(Vector normal, Vector weights, double scale)
      : normal_(std::move(normal)), weights_(std::move(weights)), scale_(scale) {}

  const Vector& normal() const { return normal_; }
  Eigen::Index dim() const { return normal_.size(); }

  Vector project_tangent(const Vector& w) const { return w - normal_.dot(w) * normal_; }

  Vector apply(const Vector& w) const {
    require_same_dim(dim(), w.size(), "CurvatureOperator::apply");
    const Vector t = project_tangent(w);
    if (weights_.size() == 0) return scale_ * t;
    return scale_ * project_tangent(weights_.cwiseProduct(t));
  }

  /// Principal curvatures (N - 1 values, ascending).
  Vector principal_curvatures() const {
    const Eigen::Index n = dim();
    if (weights_.size() == 0) return Vector::Constant(n - 1, scale_);
    const Matrix basis = tangent_basis(normal_);
    const Matrix restricted = scale_ * basis.transpose() * weights_.asDiagonal() * basis;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(restricted, Eigen::EigenvaluesOnly);
    return eig.eigenvalues();
  }

 private:
  Vector normal_;
  Vector weights_;  // empty for a ball
  double scale_;
};

inline CurvatureOperator curvature_operator(const ConvexBody& body, const Vector& boundary_point) {
  require_same_dim(dim(body), boundary_point.size(), "curvature_operator");
  if (const auto* b = std::get_if<Ball>(&body)) {
    const double r = (boundary_point - b->center()).norm();
    if (std::abs(r - b->radius()) > kBoundaryTolerance)
      throw std::invalid_argument("curvature_operator: point not on boundary");
    return CurvatureOperator(outward_normal(body, boundary_point), Vector(), 1.0 / b->radius());
  }
  if (const auto* e = std::get_if<Ellipsoid>(&body)) {
    if (std::abs(e->gauge(boundary_point) - 1.0) > kBoundaryTolerance)
      throw std::invalid_argument("curvature_operator: point not on boundary");
    const Vector weights = e->semi_axes().cwiseAbs2().cwiseInverse();
    const Vector grad = (boundary_point - e->center()).cwiseProduct(weights);
    return CurvatureOperator(grad.normalized(), weights, 1.0 / grad.norm());
  }
  throw UnsupportedBody(std::string("curvature_operator: non-smooth body kind ") + kind_name(body));
}

}  // namespace supercon
