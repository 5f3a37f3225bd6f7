#include "supercon/geometry.hpp"
#include "supercon/randgen.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace supercon;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<ConvexBody> sample_bodies(Eigen::Index n, Rng& rng) {
  std::vector<HalfSpace> hs;
  for (int i = 0; i < 4; ++i) hs.emplace_back(uniform_sphere(n, rng), 0.3 + rng.uniform());
  Vector axes(n);
  for (Eigen::Index i = 0; i < n; ++i) axes[i] = 0.3 + 2.0 * rng.uniform();
  return {HalfSpace(uniform_sphere(n, rng), 0.5), Ball(gaussian_vector(n, rng) * 0.3, 1.3),
          Ellipsoid(gaussian_vector(n, rng) * 0.3, axes), HalfSpaceSet(hs)};
}

}  // namespace

TEST(ProbLpNorm, Examples) {
  EXPECT_NEAR(prob_lp_norm(vec({1, 1, 1, 1}), 3.0), 1.0, 1e-15);
  EXPECT_NEAR(prob_lp_norm(vec({3, 4}), 2.0), std::sqrt(12.5), 1e-14);
  EXPECT_DOUBLE_EQ(prob_lp_norm(vec({1, 0, 0, 0}), 1.0), 0.25);
  EXPECT_DOUBLE_EQ(prob_lp_norm(vec({1, 0, 0, 0}), 2.0), 0.5);
  EXPECT_THROW(prob_lp_norm(vec({1, 2}), 0.5), std::domain_error);
  EXPECT_THROW(prob_lp_norm(Vector(), 2.0), std::invalid_argument);
}

TEST(ProbLpNorm, NondecreasingInP) {
  Rng rng({11, 0});
  const std::vector<double> ps = {1.0, 1.5, 2.0, 3.0, 4.0, 7.5};
  for (int t = 0; t < 500; ++t) {
    const Vector x = gaussian_vector(1 + t % 40, rng);
    for (std::size_t i = 1; i < ps.size(); ++i)
      EXPECT_LE(prob_lp_norm(x, ps[i - 1]), prob_lp_norm(x, ps[i]) * (1 + 1e-13));
  }
}

TEST(Project, Examples) {
  const HalfSpace h(vec({1, 0}), 1.0);
  EXPECT_EQ(project(vec({2, 0}), h), vec({1, 0}));
  EXPECT_EQ(project(vec({0.5, 3}), h), vec({0.5, 3}));
  const Ball b(Vector::Zero(3), 1.0);
  EXPECT_TRUE(project(vec({2, 0, 0}), ConvexBody(b)).isApprox(vec({1, 0, 0}), 1e-15));
  EXPECT_EQ(project(vec({0.1, 0.2, 0.3}), ConvexBody(b)), vec({0.1, 0.2, 0.3}));
  EXPECT_THROW(project(vec({1, 2}), ConvexBody(b)), DimensionMismatch);
}

TEST(Project, EllipsoidMatchesGridSearch) {
  const Ellipsoid e(Vector::Zero(2), vec({2, 1}));
  const Vector y = project(vec({3, 0}), ConvexBody(e));
  EXPECT_LT((y - oracle::ellipse_projection_grid(vec({3, 0}), 2, 1)).norm(), 1e-6);

  Rng rng({12, 0});
  for (int t = 0; t < 30; ++t) {
    const double a = 0.2 + 3 * rng.uniform(), bb = 0.2 + 3 * rng.uniform();
    Vector x = gaussian_vector(2, rng) * 3.0;
    const Ellipsoid ell(Vector::Zero(2), vec({a, bb}));
    if (contains(ell, x)) continue;
    const Vector p = project(x, ConvexBody(ell));
    EXPECT_LT((p - oracle::ellipse_projection_grid(x, a, bb)).norm(), 1e-6) << "a=" << a << " b=" << bb;
  }
}

TEST(Project, EllipsoidKktHighAspect) {
  // x - P(x) must be a nonnegative multiple of the outward normal at P(x).
  Rng rng({13, 0});
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + t % 9;
    Vector axes(n);
    for (Eigen::Index i = 0; i < n; ++i) axes[i] = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const Vector c = gaussian_vector(n, rng);
    const Ellipsoid e(c, axes);
    const Vector x = c + gaussian_vector(n, rng).cwiseProduct(axes) * 3.0;
    if (contains(e, x)) continue;
    const Vector y = project(x, ConvexBody(e));
    EXPECT_NEAR(e.gauge(y), 1.0, 1e-10);
    const Vector nrm = oracle::ellipsoid_normal_field(y, c, axes);
    const Vector r = x - y;
    EXPECT_GT(r.dot(nrm), 0.0);
    EXPECT_LT((r - r.dot(nrm) * nrm).norm(), 1e-8 * (1.0 + r.norm()));
  }
}

TEST(Project, HalfSpaceSetMatchesActiveSetEnumeration) {
  Rng rng({14, 0});
  for (int t = 0; t < 300; ++t) {
    const Eigen::Index n = 2 + t % 3;
    const int m = 2 + t % 4;
    std::vector<HalfSpace> hs;
    Matrix A(m, n);
    Vector b(m);
    for (int i = 0; i < m; ++i) {
      hs.emplace_back(uniform_sphere(n, rng), rng.uniform() - 0.2);
      A.row(i) = hs.back().normal().transpose();
      b[i] = hs.back().offset();
    }
    const Vector x = gaussian_vector(n, rng) * 2.0;
    const Vector expected = oracle::polyhedron_projection_enum(x, A, b);
    if (expected.size() == 0) continue;  // empty polyhedron
    const Vector got = project(x, ConvexBody(HalfSpaceSet(hs)));
    EXPECT_LT((got - expected).norm(), 1e-9);
  }
}

TEST(Project, NonexpansiveMonotoneIdempotent) {
  Rng rng({15, 0});
  for (Eigen::Index n : {2, 5}) {
    for (const auto& body : sample_bodies(n, rng)) {
      for (int t = 0; t < 1000; ++t) {
        const Vector x = gaussian_vector(n, rng) * 2.5, y = gaussian_vector(n, rng) * 2.5;
        const Vector px = project(x, body), py = project(y, body);
        EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-12) << kind_name(body);
        EXPECT_GE((y - x).dot(py - px), -1e-12) << kind_name(body);
        EXPECT_LT((project(px, body) - px).norm(), 1e-10) << kind_name(body);
      }
    }
  }
}

TEST(Distance, Examples) {
  const ConvexBody ball = Ball(Vector::Zero(3), 1.0);
  EXPECT_DOUBLE_EQ(distance(vec({2, 0, 0}), ball), 1.0);
  EXPECT_EQ(distance(vec({0.2, 0, 0}), ball), 0.0);
  EXPECT_DOUBLE_EQ(distance(vec({2, 2}), ConvexBody(HalfSpace(vec({1, 0}), 1.0))), 1.0);
}

TEST(Distance, ZeroIffMember) {
  Rng rng({16, 0});
  for (const auto& body : sample_bodies(3, rng)) {
    for (int t = 0; t < 1000; ++t) {
      const Vector x = gaussian_vector(3, rng) * 2.0;
      // Direct constraint evaluation, not the library's contains().
      bool inside = false;
      if (auto* h = std::get_if<HalfSpace>(&body)) inside = h->normal().dot(x) <= h->offset();
      if (auto* b = std::get_if<Ball>(&body)) inside = (x - b->center()).squaredNorm() <= b->radius() * b->radius();
      if (auto* e = std::get_if<Ellipsoid>(&body))
        inside = (x - e->center()).cwiseQuotient(e->semi_axes()).squaredNorm() <= 1.0;
      if (auto* s = std::get_if<HalfSpaceSet>(&body)) {
        inside = true;
        for (const auto& h : s->halfspaces()) inside = inside && h.normal().dot(x) <= h.offset();
      }
      const double d = distance(x, body);
      if (inside) EXPECT_LT(d, 1e-12) << kind_name(body);
      else EXPECT_GT(d, 0.0) << kind_name(body);
    }
  }
}

TEST(Curvature, Ball) {
  Rng rng({17, 0});
  for (double r : {1.0, 5.0}) {
    const Vector c = gaussian_vector(4, rng);
    const Vector y = c + r * uniform_sphere(4, rng);
    const auto k = curvature_operator(Ball(c, r), y);
    EXPECT_TRUE(k.principal_curvatures().isApprox(Vector::Constant(3, 1.0 / r), 1e-14));
    const Vector w = gaussian_vector(4, rng);
    const Vector tw = w - w.dot(k.normal()) * k.normal();
    EXPECT_LT((k.apply(w) - tw / r).norm(), 1e-14);
  }
}

TEST(Curvature, EllipsoidMatchesFiniteDifferences) {
  const Ellipsoid e(Vector::Zero(2), vec({2, 1}));
  const auto k = curvature_operator(e, vec({2, 0}));
  // At the end of the major axis the curvature is a / b^2.
  EXPECT_NEAR(k.principal_curvatures()[0], 2.0, 1e-12);

  Rng rng({18, 0});
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index n = 2 + t % 5;
    Vector axes(n);
    for (Eigen::Index i = 0; i < n; ++i) axes[i] = 0.5 + 2.5 * rng.uniform();
    const Vector c = gaussian_vector(n, rng);
    const Vector g = uniform_sphere(n, rng);
    const Vector y = c + g / g.cwiseQuotient(axes).norm();
    const auto op = curvature_operator(Ellipsoid(c, axes), y);
    const Vector fd = oracle::fd_principal_curvatures(
        [&](const Vector& p) { return oracle::ellipsoid_normal_field(p, c, axes); }, y);
    const Vector got = op.principal_curvatures();
    ASSERT_EQ(got.size(), n - 1);
    EXPECT_LT((got - fd).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()));
    EXPECT_GE(got.minCoeff(), 0.0);
  }
}

TEST(Curvature, Errors) {
  EXPECT_THROW(curvature_operator(Ball(Vector::Zero(2), 1.0), vec({1.1, 0})), std::invalid_argument);
  EXPECT_THROW(curvature_operator(HalfSpaceSet({HalfSpace(vec({1, 0}), 1)}), vec({1, 0})), UnsupportedBody);
  EXPECT_NO_THROW(curvature_operator(Ball(Vector::Zero(2), 1.0), vec({1 + 5e-10, 0})));
}

TEST(Bodies, InvalidParameters) {
  EXPECT_THROW(Ball(Vector::Zero(2), 0.0), std::invalid_argument);
  EXPECT_THROW(Ellipsoid(Vector::Zero(2), vec({1, -1})), std::invalid_argument);
  EXPECT_THROW(HalfSpaceSet({}), std::invalid_argument);
}
