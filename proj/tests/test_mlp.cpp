#include <gtest/gtest.h>

#include <cmath>

#include "sspg/mlp.hpp"

using namespace sspg;

namespace {

Vec random_vec(RngStream& r, Index n, double scale = 1.0) {
  Vec v(n);
  for (Index k = 0; k < n; ++k) v[k] = scale * r.normal();
  return v;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveOutputBias) {
  const MlpShape shape{3, 4};
  Vec theta = Vec::Zero(shape.param_count());
  theta[shape.param_count() - 1] = 1.25;
  const Vec a = Vec{{0.3, -2.0, 5.0}};
  EXPECT_EQ(mlp_forward(shape, theta, a), 1.25);
  EXPECT_EQ(mlp_backward_input(shape, theta, a), Vec::Zero(3));
}

TEST(Mlp, ParamCountAndLayout) {
  const MlpShape shape{2, 3};
  EXPECT_EQ(shape.param_count(), 13);
  Vec theta(13);
  for (Index k = 0; k < 13; ++k) theta[k] = static_cast<double>(k);
  const MlpParams p = MlpParams::unflatten(shape, theta);
  EXPECT_EQ(p.w1(0, 1), 1.0);
  EXPECT_EQ(p.w1(1, 0), 2.0);
  EXPECT_EQ(p.b1[0], 6.0);
  EXPECT_EQ(p.w2[2], 11.0);
  EXPECT_EQ(p.b2, 12.0);
  EXPECT_EQ(p.flatten(), theta);
}

TEST(Mlp, FlatAndStructuredFormsAgree) {
  RngStream r = RngSpec{1}.stream("test/mlp");
  const MlpShape shape{4, 5};
  const Vec theta = random_vec(r, shape.param_count());
  const Vec a = random_vec(r, 4);
  const MlpParams p = MlpParams::unflatten(shape, theta);
  EXPECT_NEAR(mlp_forward(p, a), mlp_forward(shape, theta, a), 1e-15);
  EXPECT_LT((mlp_backward_theta(p, a) - mlp_backward_theta(shape, theta, a)).norm(), 1e-15);
  EXPECT_LT((mlp_backward_input(p, a) - mlp_backward_input(shape, theta, a)).norm(), 1e-15);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  RngStream r = RngSpec{2}.stream("test/mlp");
  const MlpShape shape{3, 6};
  const double h = 1e-6;
  for (int c = 0; c < 20; ++c) {
    const Vec theta = random_vec(r, shape.param_count());
    const Vec a = random_vec(r, 3);
    const Vec gt = mlp_backward_theta(shape, theta, a);
    for (Index k = 0; k < theta.size(); ++k) {
      Vec tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double fd = (mlp_forward(shape, tp, a) - mlp_forward(shape, tm, a)) / (2 * h);
      EXPECT_NEAR(gt[k], fd, 1e-5);
    }
    const Vec ga = mlp_backward_input(shape, theta, a);
    for (Index k = 0; k < a.size(); ++k) {
      Vec ap = a, am = a;
      ap[k] += h;
      am[k] -= h;
      const double fd = (mlp_forward(shape, theta, ap) - mlp_forward(shape, theta, am)) / (2 * h);
      EXPECT_NEAR(ga[k], fd, 1e-5);
    }
  }
}

TEST(Mlp, InputGradientScalesWithOutputWeights) {
  RngStream r = RngSpec{3}.stream("test/mlp");
  const MlpShape shape{2, 4};
  MlpParams p = MlpParams::unflatten(shape, random_vec(r, shape.param_count()));
  const Vec a = random_vec(r, 2);
  const Vec g = mlp_backward_input(p, a);
  p.w2 *= 3.0;
  EXPECT_LT((mlp_backward_input(p, a) - 3.0 * g).norm(), 1e-14);
}

TEST(Mlp, ReluDerivativeAtZeroIsZero) {
  const MlpShape shape{1, 1};
  const Vec theta = Vec{{1.0, 0.0, 2.0, 0.0}};
  EXPECT_EQ(mlp_backward_input(shape, theta, Vec::Zero(1))[0], 0.0);
  EXPECT_EQ(mlp_backward_input(shape, theta, Vec::Constant(1, 0.5))[0], 2.0);
}

TEST(Mlp, InitRangeAndDeterminism) {
  const MlpShape shape{9, 5};
  RngStream r1 = RngSpec{4}.stream("init/mlp");
  RngStream r2 = RngSpec{4}.stream("init/mlp");
  const MlpParams p = mlp_init(shape, r1);
  EXPECT_EQ(p.flatten(), mlp_init(shape, r2).flatten());
  EXPECT_LE(p.w1.cwiseAbs().maxCoeff(), 1.0 / 3.0);
  EXPECT_LE(p.b1.cwiseAbs().maxCoeff(), 1.0 / 3.0);
  EXPECT_LE(p.w2.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(5.0));
  EXPECT_LE(std::abs(p.b2), 1.0 / std::sqrt(5.0));
  EXPECT_EQ(p.shape().inputs, 9);
  EXPECT_EQ(p.shape().hidden, 5);
}
