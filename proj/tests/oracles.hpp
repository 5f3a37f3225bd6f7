#pragma once

// Reference computations used only by the tests. Deliberately independent of
// the library code paths they check.

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// CDF of the first coordinate of a uniform point on S^{n-1}: (t + 1)/2 is
/// Beta((n-1)/2, (n-1)/2).
inline double sphere_marginal_cdf(double t, int n) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = 0.5 * (n - 1);
  return boost::math::ibeta(a, a, 0.5 * (t + 1.0));
}

/// Nearest point of a 2-d axis-aligned ellipsoid centred at 0 by scanning the
/// boundary angle, then golden-section refinement around the best cell.
inline Vector ellipse_projection_grid(const Vector& x, double a, double b) {
  auto dist2 = [&](double th) {
    const double px = a * std::cos(th) - x[0], py = b * std::sin(th) - x[1];
    return px * px + py * py;
  };
  const int cells = 200000;
  const double step = 2.0 * M_PI / cells;
  int best = 0;
  double best_d = dist2(0.0);
  for (int i = 1; i < cells; ++i)
    if (double d = dist2(i * step); d < best_d) best_d = d, best = i;
  double lo = (best - 1) * step, hi = (best + 1) * step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (dist2(m1) < dist2(m2)) hi = m2; else lo = m1;
  }
  const double th = 0.5 * (lo + hi);
  Vector y(2);
  y << a * std::cos(th), b * std::sin(th);
  return y;
}

/// Projection onto {y : A y <= b} by enumerating active sets (small m only).
/// Each candidate solves the equality-constrained problem exactly; the
/// feasible candidate with nonnegative multipliers is the answer.
inline Vector polyhedron_projection_enum(const Vector& x, const Matrix& A, const Vector& b) {
  const int m = static_cast<int>(A.rows());
  Vector best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) act.push_back(i);
    Vector y = x;
    if (!act.empty()) {
      Matrix Aa(act.size(), A.cols());
      Vector ba(act.size());
      for (std::size_t r = 0; r < act.size(); ++r) Aa.row(r) = A.row(act[r]), ba[r] = b[act[r]];
      const Matrix G = Aa * Aa.transpose();
      Eigen::FullPivLU<Matrix> lu(G);
      if (lu.rank() < static_cast<int>(act.size())) continue;
      const Vector lambda = lu.solve(Aa * x - ba);
      if (lambda.minCoeff() < -1e-12) continue;
      y = x - Aa.transpose() * lambda;
    }
    if (((A * y - b).array() > 1e-10).any()) continue;
    const double d = (x - y).norm();
    if (d < best_d) best_d = d, best = y;
  }
  return best;
}

/// Outward unit normal of {sum ((y-c)_i/a_i)^2 <= 1} extended off the boundary
/// as the normalized gradient of the quadratic.
inline Vector ellipsoid_normal_field(const Vector& y, const Vector& c, const Vector& a) {
  Vector g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) g[i] = (y[i] - c[i]) / (a[i] * a[i]);
  return g / g.norm();
}

/// Orthonormal complement of a unit vector via full QR.
inline Matrix orth_complement(const Vector& n) {
  const Matrix col = n;
  Eigen::HouseholderQR<Matrix> qr(col);
  const Matrix q = qr.householderQ() * Matrix::Identity(n.size(), n.size());
  return q.rightCols(n.size() - 1);
}

/// Principal curvatures by central differences of the normal field along an
/// orthonormal tangent basis.
inline Vector fd_principal_curvatures(const std::function<Vector(const Vector&)>& normal, const Vector& y,
                                      double h = 1e-5) {
  const Vector n0 = normal(y);
  const Matrix t = orth_complement(n0);
  const Eigen::Index k = t.cols();
  Matrix s(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Vector dn = (normal(y + h * t.col(j)) - normal(y - h * t.col(j))) / (2.0 * h);
    s.col(j) = t.transpose() * dn;
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  return eig.eigenvalues();
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace oracle
