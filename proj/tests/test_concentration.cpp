#include "supercon/concentration.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace supercon;

namespace {

Vector spectrum(Eigen::Index n, double hi, std::uint64_t seed) {
  Rng rng({seed, 0});
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = hi * rng.uniform();
  return s;
}

}  // namespace

TEST(SumNorm, Predictor) {
  EXPECT_EQ(predict_sum_norm({3, 4}), 5.0);
  EXPECT_EQ(predict_sum_norm({2.5}), 2.5);
  EXPECT_EQ(predict_sum_norm({1, 1, 1, 1}), 2.0);
  EXPECT_THROW(predict_sum_norm({1, -1}), std::invalid_argument);
  EXPECT_THROW(predict_sum_norm({}), std::invalid_argument);
}

TEST(SumNorm, MonteCarlo) {
  const auto r = mc_sum_norm({3, 4}, 1000, {101, 10000, 1});
  EXPECT_LT(r.report.relative_error, 0.01);
  EXPECT_LT(relative_deviation(r.report), 3.0 / std::sqrt(1000.0));
  EXPECT_EQ(r.report.trials, 10000u);
  EXPECT_EQ(r.report.conclusion_id, "sum_norm");

  const auto single = mc_sum_norm({1}, 50, {102, 200, 1});
  EXPECT_NEAR(single.report.empirical_mean, 1.0, 1e-15);
  EXPECT_LT(single.report.empirical_std, 1e-15);

  const auto pair = mc_sum_norm({1, 1}, 200, {103, 10000, 1});
  EXPECT_LT(std::abs(pair.pair_inner_mean), 3.0 / std::sqrt(10000.0 * 200.0) * 3.0);
  // std of <y1, y2> for independent uniform unit vectors is 1/sqrt(N).
  EXPECT_NEAR(pair.pair_inner_std, 1.0 / std::sqrt(200.0), 0.01 / std::sqrt(200.0) * 5);
}

TEST(SphereChain, Predictor) {
  EXPECT_NEAR(predict_sphere_displacement_sq({std::sqrt(2.0)}), 2.0, 1e-15);
  EXPECT_EQ(predict_sphere_displacement_sq({0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(predict_sphere_displacement_sq({1, 1}), 1.5);
  EXPECT_THROW(predict_sphere_displacement_sq({2.5}), std::invalid_argument);

  Rng rng({104, 0});
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> d(1 + t % 6);
    for (auto& x : d) x = std::sqrt(2.0) * rng.uniform();
    const double base = predict_sphere_displacement_sq(d);
    auto bumped = d;
    bumped[t % d.size()] = std::min(std::sqrt(2.0), bumped[t % d.size()] + 0.1 * rng.uniform());
    EXPECT_GE(predict_sphere_displacement_sq(bumped), base - 1e-15);
  }
}

TEST(SphereChain, MonteCarlo) {
  const std::vector<double> d(20, 0.1);
  const auto r = mc_sphere_displacement(d, 500, {105, 10000, 1});
  EXPECT_NEAR(r.predicted, 2.0 * (1.0 - std::pow(0.995, 20)), 1e-14);
  EXPECT_LT(r.relative_error, 0.02);

  const auto one = mc_sphere_displacement({0.7}, 50, {106, 500, 1});
  EXPECT_NEAR(one.empirical_mean, 0.49, 1e-12);
  EXPECT_LT(one.empirical_std, 1e-12);

  const auto back = mc_sphere_displacement({2.0, 2.0}, 10, {107, 100, 1});
  EXPECT_EQ(back.predicted, 0.0);
  EXPECT_LT(back.empirical_mean, 1e-24);
  EXPECT_THROW(mc_sphere_displacement({0.1}, 2, {1, 10, 1}), std::invalid_argument);
}

TEST(Gram, DiagonalAndOffDiagonal) {
  for (Eigen::Index n : {64, 256}) {
    const std::size_t trials = n == 64 ? 400 : 40;
    const auto g = mc_gram_identity(n, {108, trials, 1});
    EXPECT_LT(std::abs(g.diagonal.empirical_mean - 1.0), 2.0 * std::sqrt(2.0) / std::sqrt(double(n * trials)) * 2);
    EXPECT_LT(std::abs(g.offdiag_mean), 5.0 / std::sqrt(double(n) * n * trials));
    EXPECT_NEAR(g.offdiag_std * std::sqrt(double(n)), 1.0, 0.05);
  }
  const auto lo = mc_gram_identity(64, {109, 200, 1}), hi = mc_gram_identity(256, {109, 30, 1});
  const double slope = std::log(hi.offdiag_std / lo.offdiag_std) / std::log(4.0);
  EXPECT_NEAR(slope, -0.5, 0.05);

  const auto one = mc_gram_identity(1, {110, 20000, 1});
  EXPECT_NEAR(one.diagonal.empirical_mean, 1.0, 4.0 * std::sqrt(2.0 / 20000.0));
}

TEST(Action, Predictor) {
  EXPECT_DOUBLE_EQ(predict_action_norm(SingularSpectrum(Vector::Ones(9))), 1.0);
  Vector s = Vector::Zero(16);
  s[0] = 2.0;
  EXPECT_DOUBLE_EQ(predict_action_norm(SingularSpectrum(s)), 0.5);
  EXPECT_DOUBLE_EQ(predict_action_norm(SingularSpectrum(Vector::Constant(7, 1.5))), 1.5);
}

TEST(Action, OnesExactDense) {
  const auto r = mc_action_norm(SingularSpectrum(Vector::Ones(40)), {111, 30, 1}, MatrixSampling::dense);
  EXPECT_NEAR(r.norm.empirical_mean, 1.0, 1e-10);
  EXPECT_LT(r.norm.empirical_std, 1e-10);
}

TEST(Action, RandomSpectrumConcentrates) {
  const SingularSpectrum s(spectrum(400, 2.0, 112));
  const auto r = mc_action_norm(s, {113, 1000, 1}, MatrixSampling::implicit);
  EXPECT_LT(std::abs(r.norm.empirical_mean - r.norm.predicted), 3.0 * r.norm.empirical_std);
  EXPECT_LT(relative_deviation(r.norm), 2.0 / std::sqrt(400.0));
  // Distortion variance against (1/N)((|s|_4)^4 - 1) with s normalized by the predictor.
  const Vector sn = s.values() / r.norm.predicted;
  const double expected = (sn.array().pow(4).mean() - 1.0) / 400.0;
  EXPECT_NEAR(r.distortion_predicted, expected, 1e-15);
  EXPECT_GT(r.distortion_mean_sq, 0.5 * expected);
  EXPECT_LT(r.distortion_mean_sq, 2.0 * expected);
}

TEST(Action, DenseAndImplicitAgree) {
  const SingularSpectrum s(spectrum(48, 2.0, 114));
  const auto d = mc_action_norm(s, {115, 800, 1}, MatrixSampling::dense);
  const auto i = mc_action_norm(s, {116, 800, 1}, MatrixSampling::implicit);
  const double se = std::hypot(d.norm.empirical_std, i.norm.empirical_std) / std::sqrt(800.0);
  EXPECT_LT(std::abs(d.norm.empirical_mean - i.norm.empirical_mean), 4.0 * se);
  EXPECT_NEAR(d.norm.empirical_std / i.norm.empirical_std, 1.0, 0.15);
}

TEST(Rotation, Predictor) {
  EXPECT_EQ(predict_rotation({SingularSpectrum(Vector::Ones(10))}), 0.0);
  Vector p = Vector::Zero(100);
  p[0] = 1.0;
  EXPECT_NEAR(predict_rotation({SingularSpectrum(p)}), 1.8, 1e-14);
  Vector signed_s(2);
  signed_s << 1.0, -1.0;
  EXPECT_NEAR(predict_rotation({signed_s}, false), 2.0, 1e-15);
  EXPECT_THROW(predict_rotation({signed_s}, true), std::invalid_argument);

  Rng rng({117, 0});
  for (int t = 0; t < 2000; ++t) {
    std::vector<SingularSpectrum> eigs;
    const Eigen::Index n = 2 + t % 30;
    for (int k = 0; k < 1 + t % 5; ++k) {
      Vector s(n);
      for (Eigen::Index i = 0; i < n; ++i) s[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
      s[0] += 0.01;
      eigs.emplace_back(s);
    }
    const double v = predict_rotation(eigs);
    EXPECT_GE(v, -1e-15);
    EXPECT_LE(v, 2.0);
  }
}

TEST(Rotation, MonteCarlo) {
  const auto id = mc_rotation_product({SingularSpectrum(Vector::Ones(30))}, {118, 20, 1});
  EXPECT_LT(id.empirical_mean, 1e-24);

  Vector p = Vector::Zero(100);
  p[0] = 1.0;
  const auto rank1 = mc_rotation_product({SingularSpectrum(p)}, {119, 1000, 1}, MatrixSampling::dense);
  EXPECT_LT(rank1.relative_error, 0.05);

  std::vector<SingularSpectrum> chain(5, SingularSpectrum(spectrum(400, 1.0, 120)));
  const auto r = mc_rotation_product(chain, {121, 1000, 1}, MatrixSampling::implicit);
  EXPECT_LT(r.relative_error, 3.0 * std::sqrt(5.0 / 400.0));
  EXPECT_LE(r.predicted, 2.0);
}

TEST(Rotation, DenseAndImplicitAgree) {
  std::vector<SingularSpectrum> chain = {SingularSpectrum(spectrum(40, 1.0, 122)),
                                         SingularSpectrum(spectrum(40, 1.5, 123))};
  const auto d = mc_rotation_product(chain, {124, 1500, 1}, MatrixSampling::dense);
  const auto i = mc_rotation_product(chain, {125, 1500, 1}, MatrixSampling::implicit);
  const double se = std::hypot(d.empirical_std, i.empirical_std) / std::sqrt(1500.0);
  EXPECT_LT(std::abs(d.empirical_mean - i.empirical_mean), 4.0 * se);
}

TEST(Rotation, TrialBookkeeping) {
  Vector s = Vector::Zero(3);
  s[0] = 1.0;
  const auto r = mc_rotation_product({SingularSpectrum(s), SingularSpectrum(s)}, {126, 200, 1});
  EXPECT_EQ(r.trials + r.discarded, 200u);
}

TEST(Scaling, SyntheticSlope) {
  const auto fit = fit_scaling({16, 64, 256, 1024}, [](Eigen::Index n) { return 3.0 / std::sqrt(double(n)); });
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);

  const auto partial = fit_scaling({16, 32, 64, 128}, [](Eigen::Index n) { return n == 32 ? 0.0 : 1.0 / double(n); });
  EXPECT_FALSE(partial.used[1]);
  EXPECT_NEAR(partial.slope, -1.0, 1e-12);

  EXPECT_THROW(fit_scaling({16, 32}, [](Eigen::Index) { return 1.0; }), std::invalid_argument);
  EXPECT_THROW(fit_scaling({8, 32, 64}, [](Eigen::Index) { return 1.0; }), std::invalid_argument);
  EXPECT_THROW(fit_scaling({16, 32, 64}, [](Eigen::Index n) { return n == 16 ? 1.0 : -1.0; }), std::invalid_argument);
}

TEST(Scaling, MonteCarloSlopes) {
  const std::vector<Eigen::Index> dims = {64, 256, 1024};
  const auto action = fit_scaling(dims, [](Eigen::Index n) {
    return relative_deviation(mc_action_norm(SingularSpectrum(spectrum(n, 2.0, 127)), {128, 1000, 1},
                                             MatrixSampling::implicit).norm);
  });
  EXPECT_GE(action.slope, -0.65);
  EXPECT_LE(action.slope, -0.35);
  const auto chain = fit_scaling(dims, [](Eigen::Index n) {
    return mc_sphere_displacement(std::vector<double>(20, 0.1), n, {129, 1000, 1}).empirical_std;
  });
  EXPECT_GE(chain.slope, -0.65);
  EXPECT_LE(chain.slope, -0.35);
}

TEST(Determinism, ThreadCountInvariant) {
  auto same = [](const PredictionReport& a, const PredictionReport& b) {
    return a.empirical_mean == b.empirical_mean && a.empirical_std == b.empirical_std && a.trials == b.trials;
  };
  EXPECT_TRUE(same(mc_sum_norm({3, 4, 12}, 100, {130, 3000, 1}).report,
                   mc_sum_norm({3, 4, 12}, 100, {130, 3000, 4}).report));
  EXPECT_TRUE(same(mc_sphere_displacement({0.3, 0.4}, 20, {131, 3000, 1}),
                   mc_sphere_displacement({0.3, 0.4}, 20, {131, 3000, 8})));
  const SingularSpectrum s(spectrum(30, 2.0, 132));
  EXPECT_TRUE(same(mc_action_norm(s, {133, 300, 1}).norm, mc_action_norm(s, {133, 300, 3}).norm));
  EXPECT_FALSE(same(mc_sum_norm({3, 4}, 100, {130, 3000, 1}).report, mc_sum_norm({3, 4}, 100, {131, 3000, 1}).report));
}
