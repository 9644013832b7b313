#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sspg/rng.hpp"
#include "sspg/smooth_core.hpp"

using namespace sspg;

namespace {

// Reference values computed with 30-digit arithmetic.
constexpr double kLogMeanExp01 = 0.62011450695827752463;   // log((1 + e) / 2)
constexpr double kGradMu01 = -0.11094407167172735462;       // log((1 + e) / 2) - e / (1 + e)
constexpr double kShifted1000 = 999.99930685281944005469;  // 1000 - 1e-3 log 2

MaxTermSpec scalar_term(std::vector<double> values, std::vector<Vec> grads = {}) {
  FiniteSet set;
  for (std::size_t j = 0; j < values.size(); ++j) set.points.push_back(Vec::Constant(1, double(j)));
  MaxTermSpec t;
  t.psi = [values](const Vec&, const Vec& z) { return values[static_cast<std::size_t>(z[0])]; };
  if (grads.empty()) grads.assign(values.size(), Vec::Zero(2));
  t.grad_y_psi = [grads](const Vec&, const Vec& z) { return grads[static_cast<std::size_t>(z[0])]; };
  t.anchor = set.points.front();
  t.support = set;
  return t;
}

// psi(y, z) = a . y + 0.5 b ||y||^2 with z = (a, b), b in [-1, 1].
MaxTermSpec quadratic_term(RngStream& r, std::size_t card, Index dim) {
  FiniteSet set;
  for (std::size_t j = 0; j < card; ++j) {
    Vec z(dim + 1);
    for (Index k = 0; k <= dim; ++k) z[k] = r.uniform(-1.0, 1.0);
    set.points.push_back(z);
  }
  MaxTermSpec t;
  t.psi = [dim](const Vec& y, const Vec& z) { return z.head(dim).dot(y) + 0.5 * z[dim] * y.squaredNorm(); };
  t.grad_y_psi = [dim](const Vec& y, const Vec& z) -> Vec { return z.head(dim) + z[dim] * y; };
  t.anchor = set.points.front();
  t.support = set;
  t.lip_value = std::sqrt(static_cast<double>(dim)) + 1.0;  // on the unit ball
  t.lip_grad = 1.0;
  return t;
}

}  // namespace

TEST(LseShifted, ConstantInputCollapses) {
  const std::vector<double> v = {2.5, 2.5, 2.5};
  EXPECT_DOUBLE_EQ(lse_shifted(v, 0.37), 2.5);
}

TEST(LseShifted, TwoPointValue) {
  const std::vector<double> v = {0.0, 1.0};
  EXPECT_NEAR(lse_shifted(v, 1.0), kLogMeanExp01, 1e-15);
}

TEST(LseShifted, LargeGapDoesNotOverflow) {
  const std::vector<double> v = {0.0, 1000.0};
  const double out = lse_shifted(v, 1e-3);
  EXPECT_TRUE(std::isfinite(out));
  EXPECT_NEAR(out, kShifted1000, 1e-12);
}

TEST(LseShifted, RejectsBadMu) {
  const std::vector<double> v = {0.0};
  EXPECT_THROW(lse_shifted(v, 0.0), std::domain_error);
  EXPECT_THROW(lse_shifted(v, 1e-13), std::domain_error);
  EXPECT_THROW(lse_shifted(v, std::nan("")), std::domain_error);
}

TEST(SoftmaxWeights, SumToOneAndOrder) {
  const std::vector<double> v = {0.0, 1.0, -3.0};
  const auto w = softmax_weights(v, 0.5);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-15);
  EXPECT_GT(w[1], w[0]);
  EXPECT_GT(w[0], w[2]);
}

TEST(SmoothValueFinite, LargeMuAveragesGradients) {
  Vec g0(2), g1(2);
  g0 << 1.0, 0.0;
  g1 << 0.0, 3.0;
  const SmoothEval e = smooth_value_finite(scalar_term({0.0, 1.0}, {g0, g1}), Vec::Zero(2), 1e6);
  EXPECT_NEAR(e.weights[0], 0.5, 1e-6);
  EXPECT_NEAR(e.weights[1], 0.5, 1e-6);
  EXPECT_LT((e.grad_y - 0.5 * (g0 + g1)).norm(), 1e-5);
}

TEST(SmoothValueFinite, SmallMuPicksArgmaxGradient) {
  Vec g0(2), g1(2);
  g0 << 1.0, 0.0;
  g1 << 0.0, 3.0;
  const SmoothEval e = smooth_value_finite(scalar_term({0.0, 1.0}, {g0, g1}), Vec::Zero(2), 1e-6);
  EXPECT_LT((e.grad_y - g1).norm(), 1e-9);
}

TEST(SmoothValueFinite, SandwichOnRandomSets) {
  RngStream r = RngSpec{7}.stream("test/sandwich");
  for (int c = 0; c < 200; ++c) {
    const std::size_t card = 1 + r.below(40);
    const MaxTermSpec t = quadratic_term(r, card, 3);
    Vec y(3);
    for (Index k = 0; k < 3; ++k) y[k] = r.uniform(-1.0, 1.0);
    double m = -INFINITY;
    for (const Vec& z : std::get<FiniteSet>(t.support).points) m = std::max(m, t.psi(y, z));
    for (double mu : {1e-3, 1e-2, 0.1, 1.0}) {
      const double v = smooth_value_finite(t, y, mu).value;
      EXPECT_LE(v, m + 1e-9);
      EXPECT_GE(v, m - mu * std::log(static_cast<double>(card)) - 1e-9);
    }
  }
}

TEST(SmoothValueFinite, SinglePointIsExact) {
  RngStream r = RngSpec{8}.stream("test/single");
  const MaxTermSpec t = quadratic_term(r, 1, 2);
  const Vec y = Vec::Constant(2, 0.3);
  for (double mu : {1e-3, 0.5, 7.0}) {
    EXPECT_EQ(smooth_value_finite(t, y, mu).value, t.psi(y, std::get<FiniteSet>(t.support).points[0]));
  }
}

TEST(SmoothValueFinite, RequiresFiniteSupport) {
  MaxTermSpec t = scalar_term({0.0});
  t.support = Box{Vec::Zero(1), Vec::Ones(1)};
  EXPECT_THROW(smooth_value_finite(t, Vec::Zero(2), 1.0), std::invalid_argument);
}

TEST(SmoothGradMu, ConstantPsiGivesZero) {
  for (double mu : {1e-3, 0.1, 1.0, 10.0}) {
    EXPECT_NEAR(smooth_grad_mu(scalar_term({4.0, 4.0, 4.0}), Vec::Zero(2), mu), 0.0, 1e-15);
  }
}

TEST(SmoothGradMu, TwoPointValue) {
  EXPECT_NEAR(smooth_grad_mu(scalar_term({0.0, 1.0}), Vec::Zero(2), 1.0), kGradMu01, 1e-14);
}

TEST(SmoothGradMu, MuTimesDerivativeVanishes) {
  // mu * d/dmu equals -mu KL(softmax || uniform), so it lies in [-mu log|Z|, 0].
  RngStream r = RngSpec{9}.stream("test/grad_mu");
  const MaxTermSpec t = quadratic_term(r, 16, 3);
  const Vec y = Vec::Constant(3, 0.2);
  for (double mu : {1.0, 0.1, 0.01, 0.001}) {
    const double v = mu * smooth_grad_mu(t, y, mu);
    EXPECT_LE(v, 1e-15);
    EXPECT_GE(v, -mu * std::log(16.0) - 1e-15);
  }
}

TEST(GradLipschitzBound, FormulaValues) {
  EXPECT_DOUBLE_EQ(grad_lipschitz_bound(1.0, 0.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(grad_lipschitz_bound(2.0, 3.0, 0.5), 19.0);
}

TEST(GradLipschitzBound, HoldsEmpirically) {
  RngStream r = RngSpec{10}.stream("test/lipschitz");
  for (int c = 0; c < 100; ++c) {
    const MaxTermSpec t = quadratic_term(r, 1 + r.below(20), 3);
    const double mu = std::exp(r.uniform(std::log(0.01), std::log(2.0)));
    Vec y1(3), y2(3);
    for (Index k = 0; k < 3; ++k) {
      y1[k] = r.uniform(-0.5, 0.5);
      y2[k] = r.uniform(-0.5, 0.5);
    }
    const Vec g1 = smooth_value_finite(t, y1, mu).grad_y;
    const Vec g2 = smooth_value_finite(t, y2, mu).grad_y;
    EXPECT_LE((g1 - g2).norm(), grad_lipschitz_bound(t, mu) * (y1 - y2).norm() * (1 + 1e-12));
  }
}

TEST(MuGapBound, FormulaValues) {
  EXPECT_EQ(mu_gap_bound_finite(1, 0.5, 0.25), 0.0);
  EXPECT_NEAR(mu_gap_bound_finite(7, 0.5, 0.25), 0.97295507452765665255, 1e-15);
}

TEST(MuGapBound, HoldsOnRandomTerms) {
  RngStream r = RngSpec{11}.stream("test/mu_gap");
  for (int c = 0; c < 1000; ++c) {
    const std::size_t card = 1 + r.below(64);
    const MaxTermSpec t = quadratic_term(r, card, 2);
    const Vec y = Vec::Constant(2, r.uniform(-1.0, 1.0));
    const double mu1 = r.uniform(0.5, 1.0);
    const double mu2 = r.uniform(1e-3, 0.5);
    const double gap = std::abs(smooth_value_finite(t, y, mu1).value - smooth_value_finite(t, y, mu2).value);
    EXPECT_LE(gap, mu_gap_bound_finite(card, mu1, mu2));
  }
}

TEST(LinearBoxExpectation, ZeroSlope) {
  const Box box{Vec::Zero(2), Vec::Ones(2)};
  EXPECT_NEAR(linear_box_expectation(Vec::Zero(2), 0.7, box, 0.5).value, std::exp(1.4), 1e-13);
}

TEST(LinearBoxExpectation, OneDimension) {
  const Box box{Vec::Zero(1), Vec::Ones(1)};
  EXPECT_NEAR(linear_box_expectation(Vec::Ones(1), 0.0, box, 1.0).value, 1.71828182845904523536, 1e-14);
}

TEST(LinearBoxExpectation, TwoDimensions) {
  const Box box{Vec::Zero(2), Vec::Ones(2)};
  Vec a(2);
  a << 1.0, 2.0;
  EXPECT_NEAR(linear_box_expectation(a, 0.0, box, 1.0).value, 5.48909949789898613917, 1e-13);
}

TEST(LinearBoxExpectation, LogValueStaysFinite) {
  const Box box{Vec::Zero(1), Vec::Ones(1)};
  const BoxExpectation e = linear_box_expectation(Vec::Constant(1, 1000.0), 0.0, box, 1e-3);
  EXPECT_TRUE(std::isfinite(e.log_value));
  EXPECT_NEAR(e.log_value, 1e6 - std::log(1e6), 1e-6);
}

TEST(ShiftInvariance, AddingAConstant) {
  // Dyadic values keep the shift exact in floating point.
  const std::vector<double> v = {0.5, 1.25, -2.0};
  const std::vector<double> shifted = {4.5, 5.25, 2.0};
  EXPECT_EQ(lse_shifted(shifted, 0.25), lse_shifted(v, 0.25) + 4.0);
}
