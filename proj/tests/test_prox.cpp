#include <gtest/gtest.h>

#include "sspg/prox.hpp"
#include "sspg/rng.hpp"

using namespace sspg;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Prox, HalfLineProjects) {
  const auto reg = RegularizerSpec::half_line(Vec::Constant(1, 7.0));
  EXPECT_DOUBLE_EQ(prox(reg, Vec::Constant(1, 5.0), 0.3)[0], 7.0);
  EXPECT_DOUBLE_EQ(prox(reg, Vec::Constant(1, 9.0), 0.3)[0], 9.0);
}

TEST(Prox, HalfLineCap) {
  const auto reg = RegularizerSpec::half_line(Vec::Constant(1, 7.0), 10.0);
  EXPECT_DOUBLE_EQ(prox(reg, Vec::Constant(1, 12.0), 1.0)[0], 10.0);
}

TEST(Prox, SoftThreshold) {
  const Vec out = prox(RegularizerSpec::l1(1.0), v2(0.5, -0.1), 0.3);
  EXPECT_NEAR(out[0], 0.2, 1e-15);
  EXPECT_EQ(out[1], 0.0);
}

TEST(Prox, BoxClamp) {
  const auto reg = RegularizerSpec::box(Vec::Zero(2), Vec::Ones(2));
  EXPECT_EQ(prox(reg, v2(-2.0, 0.4), 1.0), v2(0.0, 0.4));
}

TEST(Prox, ZeroIsIdentity) {
  EXPECT_EQ(prox(RegularizerSpec::zero(), v2(3.0, -4.0), 2.0), v2(3.0, -4.0));
}

TEST(Prox, ProductActsBlockwise) {
  const auto reg = RegularizerSpec::product(
      {{1, RegularizerSpec::half_line(Vec::Zero(1))}, {1, RegularizerSpec::half_line(Vec::Constant(1, 7.0))}});
  EXPECT_EQ(prox(reg, v2(-1.0, 5.0), 0.1), v2(0.0, 7.0));
}

TEST(Prox, ProductSizeMismatchRejected) {
  const auto reg = RegularizerSpec::product({{2, RegularizerSpec::zero()}});
  EXPECT_THROW(prox(reg, Vec::Zero(3), 1.0), std::invalid_argument);
}

TEST(Prox, ValidationRejectsBadSpecs) {
  EXPECT_THROW(validate_regularizer(RegularizerSpec::l1(-1.0)), std::invalid_argument);
  EXPECT_THROW(validate_regularizer(RegularizerSpec::box(Vec::Ones(1), Vec::Zero(1))), std::invalid_argument);
}

TEST(Prox, NonexpansiveAndIdempotentOnIndicators) {
  RngStream r = RngSpec{1}.stream("test/prox");
  const auto reg = RegularizerSpec::product(
      {{2, RegularizerSpec::box(Vec::Constant(2, -1.0), Vec::Constant(2, 2.0))},
       {1, RegularizerSpec::half_line(Vec::Constant(1, 3.0))}});
  for (int c = 0; c < 500; ++c) {
    Vec a(3), b(3);
    for (Index j = 0; j < 3; ++j) {
      a[j] = r.uniform(-5.0, 5.0);
      b[j] = r.uniform(-5.0, 5.0);
    }
    const Vec pa = prox(reg, a, 0.7);
    EXPECT_LE((pa - prox(reg, b, 0.7)).norm(), (a - b).norm() + 1e-15);
    EXPECT_EQ(prox(reg, pa, 0.7), pa);
    EXPECT_TRUE(is_feasible(reg, pa));
    EXPECT_EQ(regularizer_value(reg, pa), 0.0);
  }
}

TEST(Prox, RegularizerValue) {
  EXPECT_DOUBLE_EQ(regularizer_value(RegularizerSpec::l1(2.0), v2(1.0, -3.0)), 8.0);
  EXPECT_EQ(regularizer_value(RegularizerSpec::half_line(Vec::Constant(1, 7.0)), Vec::Constant(1, 6.0)),
            std::numeric_limits<double>::infinity());
}

TEST(Project, BallRadialScaling) {
  const Vec p = project(Ball{Vec::Zero(2), 1.0}, v2(3.0, 4.0));
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.8, 1e-15);
}

TEST(Project, BoxInteriorIsIdentity) {
  const Box box{Vec::Zero(2), Vec::Constant(2, 3.0)};
  EXPECT_EQ(project(box, v2(1.0, 2.5)), v2(1.0, 2.5));
}

TEST(Project, ScalarBoxClamp) {
  EXPECT_EQ(project(Box{Vec::Zero(1), Vec::Constant(1, 3.0)}, Vec::Constant(1, 5.0))[0], 3.0);
}

TEST(Project, FiniteSetRejected) {
  EXPECT_THROW(project(FiniteSet{{Vec::Zero(1)}}, Vec::Zero(1)), std::invalid_argument);
}
