#include <gtest/gtest.h>

#include <cmath>

#include "sspg/solver.hpp"
#include "sspg/wdro.hpp"

using namespace sspg;

namespace {

// One term whose single support point gives psi = 0.5 ||y||^2.
MinSumMaxProblem half_squared_norm(Index dim) {
  MaxTermSpec t;
  t.psi = [](const Vec& y, const Vec&) { return 0.5 * y.squaredNorm(); };
  t.grad_y_psi = [](const Vec& y, const Vec&) -> Vec { return y; };
  t.support = FiniteSet{{Vec::Zero(1)}};
  t.anchor = Vec::Zero(1);
  t.lip_value = 1.0;
  t.lip_grad = 1.0;
  MinSumMaxProblem p;
  p.dim = dim;
  p.terms.push_back(t);
  return p;
}

MinSumMaxProblem random_finite_problem(std::size_t n, std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("test/solver_problem");
  MinSumMaxProblem p;
  p.dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    FiniteSet set;
    for (int j = 0; j < 6; ++j) set.points.push_back(Vec{{r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1)}});
    MaxTermSpec t;
    t.psi = [](const Vec& y, const Vec& z) { return z.head(2).dot(y) + z[2] - 0.5 * y.squaredNorm(); };
    t.grad_y_psi = [](const Vec& y, const Vec& z) -> Vec { return z.head(2) - y; };
    t.anchor = set.points.front();
    t.support = set;
    t.lip_value = 3.0;
    t.lip_grad = 1.0;
    p.terms.push_back(t);
  }
  p.regularizer = RegularizerSpec::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  return p;
}

SspgConfig exact_config(StepsizeRule step, MuSchedule schedule = ConstantMu{0.1}) {
  SspgConfig c;
  c.schedule = schedule;
  c.stepsize = step;
  c.estimator.kind = EstimatorKind::ExactFinite;
  c.diagnostics.every = 1;
  c.diagnostics.stationarity = StationarityMode::Always;
  return c;
}

}  // namespace

TEST(SspgStep, ZeroRegularizerIsGradientStep) {
  const MinSumMaxProblem p = [] {
    auto q = random_finite_problem(4, 1);
    q.regularizer = RegularizerSpec::zero();
    return q;
  }();
  const SspgConfig cfg = exact_config(FixedStep{0.3});
  const Vec y0 = Vec::Constant(2, 0.2);
  SolverState s = sspg_init(p, cfg, y0);
  const Vec g = estimate_gradient(p, y0, 0.1, cfg.estimator, cfg.inner, cfg.rng, 0).grad;
  sspg_step(s, p, cfg);
  EXPECT_LT((s.y - (y0 - 0.3 * g)).norm(), 1e-15);
}

TEST(SspgStep, ExactMinimizerInOneStep) {
  const MinSumMaxProblem p = half_squared_norm(3);
  SolverState s = sspg_init(p, exact_config(FixedStep{1.0}), Vec::Constant(3, 2.0));
  sspg_step(s, p, exact_config(FixedStep{1.0}));
  EXPECT_EQ(s.y, Vec::Zero(3));
}

TEST(SspgRun, ZeroIterationsGivesEmptyTrace) {
  const MinSumMaxProblem p = half_squared_norm(1);
  const SolverState s = sspg_run(p, exact_config(FixedStep{0.5}), Vec::Ones(1), 0);
  EXPECT_TRUE(s.trace.empty());
  EXPECT_EQ(s.y, Vec::Ones(1));
}

TEST(SspgRun, TraceRowsAndCadence) {
  const MinSumMaxProblem p = random_finite_problem(5, 2);
  SspgConfig cfg = exact_config(FixedStep{0.1});
  cfg.diagnostics.every = 10;
  const SolverState s = sspg_run(p, cfg, Vec::Zero(2), 25);
  ASSERT_EQ(s.trace.size(), 25u);
  for (std::size_t k = 0; k < 25; ++k) {
    EXPECT_EQ(s.trace[k].iter, k + 1);
    const bool due = (k + 1) % 10 == 0 || k + 1 == 25;
    EXPECT_EQ(s.trace[k].obj_primal_est.has_value(), due);
    EXPECT_EQ(s.trace[k].stationarity_sq.has_value(), due);
  }
}

TEST(SspgRun, InfeasibleStartIsProjected) {
  const MinSumMaxProblem p = random_finite_problem(3, 3);
  const SolverState s = sspg_init(p, exact_config(FixedStep{0.1}), Vec::Constant(2, 5.0));
  EXPECT_EQ(s.y, Vec::Ones(2));
}

TEST(MuSchedule, AdaptiveKeepsMuOnSufficientDecrease) {
  const AdaptiveMu a{1.0, 0.99, 0.5, 1e-4};
  EXPECT_DOUBLE_EQ(schedule_next_mu(a, 1, 0.1, 1.0, 0.5), 0.1);
}

TEST(MuSchedule, AdaptiveShrinksOnSmallDecrease) {
  const AdaptiveMu a{1.0, 0.99, 0.5, 1e-4};
  EXPECT_DOUBLE_EQ(schedule_next_mu(a, 1, 0.1, 1.0, 0.95), 0.099);
}

TEST(MuSchedule, AdaptiveRespectsFloor) {
  const AdaptiveMu a{1.0, 0.5, 0.5, 0.1};
  EXPECT_DOUBLE_EQ(schedule_next_mu(a, 1, 0.12, 1.0, 1.0), 0.1);
}

TEST(MuSchedule, PowerDecay) {
  EXPECT_NEAR(schedule_next_mu(PowerDecayMu{1.0, 1e-4}, 7, 1.0, 0.0, 0.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(schedule_next_mu(PowerDecayMu{1.0, 0.3}, 1000, 1.0, 0.0, 0.0), 0.3);
}

TEST(MuSchedule, RestartStages) {
  // Stage lengths ceil(0.5625 t^3): 1, 5, 16, 36, ...
  const RestartMu r{1.0, 0.03125, 0.5};
  EXPECT_EQ(restart_stage_boundaries(0.03125, 0.5, 100), (std::vector<std::uint64_t>{0, 1, 6, 22, 58}));
  EXPECT_DOUBLE_EQ(schedule_next_mu(r, 0, 1.0, 0.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(schedule_next_mu(r, 1, 1.0, 0.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(schedule_next_mu(r, 5, 1.0, 0.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(schedule_next_mu(r, 6, 1.0, 0.0, 0.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(schedule_next_mu(r, 58, 1.0, 0.0, 0.0), 0.2);
}

TEST(MuSchedule, NeverIncreases) {
  EXPECT_DOUBLE_EQ(schedule_next_mu(ConstantMu{0.5}, 3, 0.2, 0.0, 0.0), 0.2);
}

TEST(MuSchedule, ValidationRejectsBadParameters) {
  EXPECT_ANY_THROW(validate_schedule(ConstantMu{0.0}));
  EXPECT_THROW(validate_schedule(AdaptiveMu{1.0, 1.5, 0.5, 1e-4}), std::invalid_argument);
  EXPECT_THROW(validate_stepsize(FixedStep{-0.1}), std::invalid_argument);
}

TEST(Stepsize, Rules) {
  EXPECT_DOUBLE_EQ(step_size(TheoryStep{4.0}, 0, 0.2), 0.05);
  EXPECT_DOUBLE_EQ(step_size(FixedStep{0.1}, 99, 0.2), 0.1);
  EXPECT_DOUBLE_EQ(step_size(StagedDecayStep{0.1, 0.5, 20}, 45, 0.2), 0.025);
  EXPECT_DOUBLE_EQ(theory_c2(2.0, 3.0, 0.5), 9.5);
}

TEST(Horizons, IterationCounts) {
  EXPECT_EQ(constant_mu_horizon(1.0, 0.5, 1.0), 288u);
  EXPECT_EQ(power_decay_window_start(0.1), 1000u);
}

TEST(Stationarity, ZeroAtStationaryPoint) {
  const MinSumMaxProblem p = half_squared_norm(2);
  const SspgConfig cfg = exact_config(FixedStep{0.5});
  const Vec y = Vec::Zero(2);
  EXPECT_LE(stationarity_violation(p, y, y, Vec::Zero(2), 0.5, 0.1, cfg, 0), 1e-18);
}

TEST(Stationarity, OneStepHandValue) {
  const MinSumMaxProblem p = half_squared_norm(1);
  const SspgConfig cfg = exact_config(FixedStep{0.5});
  const Vec y = Vec::Constant(1, 2.0);
  const Vec y_next = Vec::Constant(1, 1.0);
  EXPECT_NEAR(stationarity_violation(p, y, y_next, y, 0.5, 0.1, cfg, 0), 1.0, 1e-15);
  SolverState s = sspg_init(p, cfg, y);
  sspg_step(s, p, cfg);
  EXPECT_DOUBLE_EQ(s.y[0], 1.0);
  EXPECT_NEAR(s.trace.back().stationarity_sq.value(), 1.0, 1e-15);
}

TEST(OutputIndex, EqualWeightsAreUniform) {
  const std::vector<double> mu(10, 0.3);
  RngStream r = RngSpec{4}.stream("test/output");
  std::vector<int> counts(10, 0);
  for (int k = 0; k < 100000; ++k) ++counts[sample_output_index(mu, 5, r)];
  for (int k = 0; k < 5; ++k) EXPECT_EQ(counts[k], 0);
  for (int k = 5; k < 10; ++k) EXPECT_NEAR(counts[k] / 1e5, 0.2, 0.01);
}

TEST(OutputIndex, ProportionalToMu) {
  const std::vector<double> mu = {0.2, 0.8};
  RngStream r = RngSpec{5}.stream("test/output");
  int ones = 0;
  for (int k = 0; k < 100000; ++k) ones += sample_output_index(mu, 0, r) == 1 ? 1 : 0;
  EXPECT_NEAR(ones / 1e5, 0.8, 0.01);
}

TEST(OutputIndex, WindowOfOne) {
  const std::vector<double> mu = {0.5, 0.4, 0.3};
  RngStream r = RngSpec{6}.stream("test/output");
  for (int k = 0; k < 100; ++k) EXPECT_EQ(sample_output_index(mu, 2, r), 2u);
}

TEST(Gdmax, MatchesDanskinDescent) {
  // psi_i = z . (y - x_i) - 0.5 ||z||^2, max at z = y - x_i with gradient y - x_i.
  const std::vector<Vec> xs = {Vec{{1.0, -2.0}}, Vec{{0.5, 0.5}}, Vec{{-1.5, 3.0}}};
  MinSumMaxProblem p;
  p.dim = 2;
  for (const Vec& x : xs) {
    MaxTermSpec t;
    t.psi = [x](const Vec& y, const Vec& z) { return z.dot(y - x) - 0.5 * z.squaredNorm(); };
    t.grad_y_psi = [](const Vec&, const Vec& z) -> Vec { return z; };
    t.support = Box{Vec::Constant(2, -100.0), Vec::Constant(2, 100.0)};
    t.anchor = Vec::Zero(2);
    p.terms.push_back(t);
    p.grad_z_psi.push_back([x](const Vec& y, const Vec& z) -> Vec { return y - x - z; });
  }
  GdmaxConfig cfg;
  cfg.stepsize = FixedStep{0.2};
  cfg.inner.step_size = 1.0;
  cfg.inner.iterations = 1;
  cfg.inner.init_noise_scale = 0.0;
  const Vec y0 = Vec{{4.0, -3.0}};
  const SolverState s = gdmax_run(p, cfg, y0, 50);
  Vec y = y0;
  const Vec mean_x = (xs[0] + xs[1] + xs[2]) / 3.0;
  for (int k = 0; k < 50; ++k) y -= 0.2 * (y - mean_x);
  EXPECT_LT((s.y - y).norm(), 1e-9);
  EXPECT_EQ(s.trace.back().mu, 0.0);
}

TEST(Gdmax, ZeroInnerBudgetIsProjectedGradientOnLoss) {
  NewsvendorParams prm;
  const std::vector<double> d = {0.3, 1.2, 0.8, 2.5, 0.05};
  const MinSumMaxProblem p = compile_to_minsummax(newsvendor_instance(prm, d));
  GdmaxConfig cfg;
  cfg.stepsize = FixedStep{0.05};
  cfg.inner.iterations = 0;
  cfg.inner.init_noise_scale = 0.0;
  const Vec y0 = Vec{{1.5, 9.0}};
  const SolverState s = gdmax_run(p, cfg, y0, 40);
  double theta = 1.5;
  double lambda = 9.0;
  for (int k = 0; k < 40; ++k) {
    double g = 0.0;
    for (double x : d) g += (theta <= x ? 5.0 - 7.0 : 5.0) / d.size();
    theta = std::max(0.0, theta - 0.05 * g);
    lambda = std::max(7.0, lambda - 0.05 * 1.0);
  }
  EXPECT_NEAR(s.y[0], theta, 1e-12);
  EXPECT_NEAR(s.y[1], lambda, 1e-12);
}

TEST(Gdmax, RejectsTheoryStep) {
  GdmaxConfig cfg;
  cfg.stepsize = TheoryStep{1.0};
  EXPECT_THROW(gdmax_run(half_squared_norm(1), cfg, Vec::Zero(1), 1), std::invalid_argument);
}

TEST(SdroFixed, EqualsSspgOnFrozenProblem) {
  NewsvendorParams prm;
  const std::vector<double> d = {0.3, 1.2, 0.8, 2.5, 0.05, 1.7};
  const MinSumMaxProblem p = compile_to_minsummax(newsvendor_instance(prm, d));
  SspgConfig cfg;
  cfg.estimator.kind = EstimatorKind::GaussianCloud;
  cfg.stepsize = FixedStep{0.1};
  cfg.rng = RngSpec{21};
  const Vec y0 = Vec{{0.4, 11.0}};
  const SolverState a = sdro_fixed_run(p, 7.0, 0.1, cfg, y0, 60);
  SspgConfig direct = cfg;
  direct.schedule = ConstantMu{0.7};
  const SolverState b = sspg_run(freeze_lambda(p, 7.0), direct, Vec{{0.4, 7.0}}, 60);
  EXPECT_NEAR(a.trace.front().mu, 0.7, 1e-15);
  EXPECT_LT((a.y - b.y).norm(), 1e-12);
  for (const auto& row : a.trace) EXPECT_EQ(row.lambda.value(), 7.0);
}

TEST(SdroFixed, SmoothedObjectiveBracketsFiniteMax) {
  NewsvendorParams prm;
  const std::vector<double> d = {0.3, 1.2, 0.8, 2.5};
  MinSumMaxProblem p = compile_to_minsummax(newsvendor_instance(prm, d));
  std::size_t card = 0;
  for (auto& t : p.terms) {
    FiniteSet set;
    for (int k = 0; k <= 50; ++k) set.points.push_back(Vec::Constant(1, 0.05 + k * 0.049));
    card = set.points.size();
    t.support = set;
  }
  p.exact_inner = nullptr;
  SspgConfig cfg;
  cfg.estimator.kind = EstimatorKind::ExactFinite;
  const Vec y = Vec{{0.9, 7.0}};
  const double mu = 0.7;
  const double smoothed = smoothed_objective(p, y, mu, cfg, 0);
  const double primal = primal_objective_estimate(p, y, cfg.inner, cfg.rng);
  EXPECT_LE(smoothed, primal + 1e-12);
  EXPECT_GE(smoothed, primal - mu * std::log(static_cast<double>(card)) - 1e-12);
}
