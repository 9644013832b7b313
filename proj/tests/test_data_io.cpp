#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sspg/data_io.hpp"
#include "sspg/rng.hpp"

using namespace sspg;

namespace {

ParseError parse_error_of(std::string_view text) {
  try {
    parse_sparse_regression_text(text);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no parse error for: " << text;
  return ParseError(0, 0, "none");
}

}  // namespace

TEST(SparseParse, SingleRecord) {
  const Dataset d = parse_sparse_regression_text("1.5 1:0.5 3:2.0\n");
  ASSERT_EQ(d.rows(), 1);
  ASSERT_EQ(d.width(), 3);
  EXPECT_EQ(d.targets[0], 1.5);
  EXPECT_EQ(d.features(0, 0), 0.5);
  EXPECT_EQ(d.features(0, 1), 0.0);
  EXPECT_EQ(d.features(0, 2), 2.0);
}

TEST(SparseParse, BlankLinesTabsAndCrlf) {
  const Dataset d = parse_sparse_regression_text("\n1 1:2\r\n\n  \n-3\t2:-0.25\n");
  ASSERT_EQ(d.rows(), 2);
  EXPECT_EQ(d.width(), 2);
  EXPECT_EQ(d.targets[1], -3.0);
  EXPECT_EQ(d.features(1, 1), -0.25);
  EXPECT_EQ(d.features(1, 0), 0.0);
}

TEST(SparseParse, RoundTripIsCanonical) {
  const std::string text = "0.1 1:0.5 3:-2\n2 2:1e-300\n-7.25 1:3 2:4 3:5\n";
  const Dataset d = parse_sparse_regression_text(text);
  EXPECT_EQ(serialize_sparse_regression(d), text);
  const Dataset back = parse_sparse_regression_text(serialize_sparse_regression(d));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.targets, d.targets);
}

TEST(SparseParse, RandomRoundTrip) {
  RngStream r = RngSpec{1}.stream("test/io");
  Mat f = Mat::Zero(50, 6);
  Vec t(50);
  for (Index i = 0; i < 50; ++i) {
    t[i] = r.normal() * 1e3;
    for (Index j = 0; j < 6; ++j) {
      if (r.uniform() < 0.5) f(i, j) = r.normal() * std::pow(10.0, r.uniform(-20, 20));
    }
  }
  f(49, 5) = 1.0;
  const Dataset d = make_dataset(f, t);
  const Dataset back = parse_sparse_regression_text(serialize_sparse_regression(d));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.targets, d.targets);
}

TEST(SparseParse, ErrorsCarryLineAndColumn) {
  const ParseError e = parse_error_of("1 1:2\n2 3:1 2:4\n");
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.column(), 7u);
  EXPECT_EQ(parse_error_of("1 0:2\n").line(), 1u);
  EXPECT_EQ(parse_error_of("1 1:2\n\n1 1:nan\n").line(), 3u);
  parse_error_of("inf 1:2\n");
  parse_error_of("1 1:1e400\n");
  parse_error_of("1 1:2 1:3\n");
  parse_error_of("1 x:2\n");
  parse_error_of("1 1:\n");
  parse_error_of("1 1:2\x01\n");
}

TEST(SparseParse, WidthCap) {
  ParseOptions o;
  o.max_width = 4;
  EXPECT_THROW(parse_sparse_regression_text("1 5:1\n", o), ParseError);
  EXPECT_EQ(parse_sparse_regression_text("1 4:1\n", o).width(), 4);
}

TEST(Doubles, FormatAndParse) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(parse_double("0.1"), 0.1);
  EXPECT_EQ(parse_double("+3"), 3.0);
  RngStream r = RngSpec{2}.stream("test/io");
  for (int k = 0; k < 1000; ++k) {
    const double v = r.normal() * std::pow(10.0, r.uniform(-300, 300));
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_THROW(parse_double("1.0x"), std::invalid_argument);
  EXPECT_THROW(parse_double("nan"), std::invalid_argument);
  EXPECT_THROW(parse_double(""), std::invalid_argument);
}

TEST(Split, SizesFollowCeiling) {
  const Dataset d = make_dataset(Mat::Zero(10, 2), Vec::Zero(10));
  const SplitResult s = train_test_split(d, 0.2, 7);
  EXPECT_EQ(s.train.rows(), 8);
  EXPECT_EQ(s.test.rows(), 2);
  EXPECT_EQ(train_test_split(d, 0.25, 7).test.rows(), 3);
  EXPECT_EQ(train_test_split(d, 0.01, 7).test.rows(), 1);
  EXPECT_EQ(train_test_split(d, 0.99, 7).test.rows(), 9);
}

TEST(Split, PartitionAndDeterminism) {
  Mat f(37, 1);
  for (Index i = 0; i < 37; ++i) f(i, 0) = static_cast<double>(i);
  const Dataset d = make_dataset(f, f.col(0));
  const SplitResult a = train_test_split(d, 0.3, 11);
  const SplitResult b = train_test_split(d, 0.3, 11);
  EXPECT_EQ(a.train_indices, b.train_indices);
  EXPECT_EQ(a.test_indices, b.test_indices);
  std::vector<std::size_t> all = a.train_indices;
  all.insert(all.end(), a.test_indices.begin(), a.test_indices.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(37);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  EXPECT_EQ(all, expect);
  for (std::size_t k = 0; k < a.test_indices.size(); ++k) {
    EXPECT_EQ(a.test.features(static_cast<Index>(k), 0), static_cast<double>(a.test_indices[k]));
  }
  EXPECT_NE(train_test_split(d, 0.3, 12).test_indices, a.test_indices);
  EXPECT_THROW(train_test_split(d, 0.0, 1), std::invalid_argument);
}

TEST(Scale, TwoPointColumn) {
  Mat f(2, 2);
  f << 1.0, 5.0, 3.0, 5.0;
  const Dataset d = make_dataset(f, Vec::Zero(2));
  EXPECT_FALSE(d.column_stats[0].constant);
  EXPECT_TRUE(d.column_stats[1].constant);
  const ScaledPair s = standard_scale_fit_transform(d, d);
  EXPECT_EQ(s.train.features(0, 0), -1.0);
  EXPECT_EQ(s.train.features(1, 0), 1.0);
  EXPECT_EQ(s.train.features(0, 1), 5.0);
}

TEST(Scale, StandardizedMoments) {
  RngStream r = RngSpec{3}.stream("test/io");
  Mat f(200, 3);
  for (Index i = 0; i < 200; ++i) {
    for (Index j = 0; j < 3; ++j) f(i, j) = 10.0 * j + (j + 1) * r.normal();
  }
  const Dataset train = make_dataset(f.topRows(150), Vec::Zero(150));
  const Dataset test = make_dataset(f.bottomRows(50), Vec::Zero(50));
  const ScaledPair s = standard_scale_fit_transform(train, test);
  for (const ColumnStats& c : compute_column_stats(s.train.features)) {
    EXPECT_NEAR(c.mean, 0.0, 1e-12);
    EXPECT_NEAR(c.std, 1.0, 1e-12);
  }
  const Mat expected_test =
      (f.bottomRows(50).rowwise() - f.topRows(150).colwise().mean()).array().rowwise() /
      Eigen::RowVectorXd{{s.stats[0].std, s.stats[1].std, s.stats[2].std}}.array();
  EXPECT_LT((s.test.features - expected_test).cwiseAbs().maxCoeff(), 1e-12);
  const ScaledPair each = standard_scale_fit_transform(train, test, ScaleFit::Each);
  for (const ColumnStats& c : compute_column_stats(each.test.features)) {
    EXPECT_NEAR(c.mean, 0.0, 1e-12);
    EXPECT_NEAR(c.std, 1.0, 1e-12);
  }
}

TEST(Generators, ExponentialMean) {
  for (double rate : {1.0, 2.0}) {
    const std::vector<double> x = gen_exponential_demand(1000000, rate, 5);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    EXPECT_NEAR(mean, 1.0 / rate, 0.01 / rate);
    EXPECT_GE(*std::min_element(x.begin(), x.end()), 0.0);
  }
  EXPECT_EQ(gen_exponential_demand(100, 1.0, 9), gen_exponential_demand(100, 1.0, 9));
  EXPECT_NE(gen_exponential_demand(100, 1.0, 9), gen_exponential_demand(100, 1.0, 10));
  EXPECT_THROW(gen_exponential_demand(10, 0.0, 1), std::invalid_argument);
}

TEST(Generators, LinearRegressionShape) {
  const Dataset d = gen_linear_regression(40, 3, 0.5, 2);
  EXPECT_EQ(d.rows(), 40);
  EXPECT_EQ(d.width(), 3);
  EXPECT_TRUE(d.features.allFinite());
  EXPECT_EQ(gen_linear_regression(40, 3, 0.5, 2).targets, d.targets);
}
