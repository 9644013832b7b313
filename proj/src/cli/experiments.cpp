#include <cmath>
#include <stdexcept>

#include "cli/setup.hpp"
#include "sspg/data_io.hpp"
#include "sspg/mlp.hpp"
#include "sspg/wdro.hpp"

namespace sspg::cli {

namespace {

struct InitDraws {
  double theta = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
};

// Always drawn in the same order so every method starts from the same point.
InitDraws draw_init(const RunConfig& c) {
  RngStream r = RngSpec{c.seed}.stream("init");
  InitDraws d;
  d.theta = r.uniform();
  d.lambda = r.uniform(c.init_lambda_lo, c.init_lambda_hi);
  d.eta = r.uniform(c.init_eta_lo, c.init_eta_hi);
  if (c.init_theta) d.theta = *c.init_theta;
  if (c.init_lambda) d.lambda = *c.init_lambda;
  if (c.init_eta) d.eta = *c.init_eta;
  return d;
}

}  // namespace

Setup make_setup(const RunConfig& c) {
  Setup s;
  const InitDraws init = draw_init(c);
  if (c.experiment == "newsvendor") {
    NewsvendorParams prm;
    prm.v = c.nv_v;
    prm.u = c.nv_u;
    prm.delta = c.delta;
    prm.order = c.order;
    prm.lambda_min = c.lambda_min;
    prm.lambda_cap = c.lambda_cap;
    const auto demands = gen_exponential_demand(c.nv_n, c.nv_rate, c.seed);
    s.problem = compile_to_minsummax(newsvendor_instance(prm, demands));
    s.y0 = Vec(2);
    s.y0 << init.theta, init.lambda;
    s.mu0 = c.mu0.value_or(init.lambda * init.eta);
  } else if (c.experiment == "regression") {
    const Dataset data = c.reg_data.empty()
                             ? gen_linear_regression(c.reg_n, c.reg_features, c.reg_noise, c.seed)
                             : read_sparse_regression_file(c.reg_data);
    const SplitResult split = train_test_split(data, c.reg_test_fraction, c.seed);
    RegressionContext ctx{standard_scale_fit_transform(split.train, split.test,
                                                      c.reg_scale == "each" ? ScaleFit::Each
                                                                            : ScaleFit::Train),
                          MlpShape{data.width(), c.reg_hidden}};
    WdroInstance inst = regression_instance(ctx.data.train.features, ctx.data.train.targets,
                                            c.delta, c.order, c.lambda_min, ctx.shape);
    inst.lambda_cap = c.lambda_cap;
    s.problem = compile_to_minsummax(inst);
    RngStream r = RngSpec{c.seed}.stream("init/mlp");
    const Vec theta0 = mlp_init(ctx.shape, r).flatten();
    s.y0 = Vec(theta0.size() + 1);
    s.y0 << theta0, init.lambda;
    s.mu0 = c.mu0.value_or(init.lambda * init.eta);
    s.reg = std::move(ctx);
  } else {
    s.problem = make_toy_problem(c.toy_n, c.toy_points, c.toy_dim, c.seed);
    RngStream r = RngSpec{c.seed}.stream("init");
    s.y0 = Vec(c.toy_dim);
    for (Index j = 0; j < c.toy_dim; ++j) s.y0[j] = r.uniform(-1.0, 1.0);
    s.mu0 = c.mu0.value_or(0.1);
  }
  if (c.estimator == "exact") {
    bool finite = true;
    for (const auto& t : s.problem.terms) finite = finite && std::holds_alternative<FiniteSet>(t.support);
    if (!finite) s.problem = finite_grid_surrogate(s.problem, c.grid);
  }
  return s;
}

namespace {

double max_lip_value(const MinSumMaxProblem& p) {
  double out = 0.0;
  for (const auto& t : p.terms) out = std::max(out, t.lip_value);
  return out;
}

double max_lip_grad(const MinSumMaxProblem& p) {
  double out = 0.0;
  for (const auto& t : p.terms) out = std::max(out, t.lip_grad);
  return out;
}

DiagnosticsConfig make_diagnostics(const RunConfig& c) {
  DiagnosticsConfig d;
  d.every = c.diag_every;
  d.stationarity = c.stationarity == "always"  ? StationarityMode::Always
                   : c.stationarity == "never" ? StationarityMode::Never
                                               : StationarityMode::Auto;
  d.primal = c.primal;
  d.high_accuracy_samples = c.high_accuracy_samples;
  d.record_wallclock = c.wallclock;
  return d;
}

StepsizeRule make_stepsize(const RunConfig& c, const MinSumMaxProblem& p, double mu0) {
  if (c.stepsize == "staged") return StagedDecayStep{c.alpha, c.gamma, c.period};
  if (c.stepsize == "theory") {
    return TheoryStep{c.theory_c2.value_or(theory_c2(max_lip_value(p), max_lip_grad(p), mu0))};
  }
  return FixedStep{c.alpha};
}

SspgConfig make_sspg_config(const RunConfig& c, const MinSumMaxProblem& p, double mu0) {
  SspgConfig s;
  if (c.schedule == "constant") {
    s.schedule = ConstantMu{c.schedule_eps.value_or(mu0)};
  } else if (c.schedule == "power") {
    s.schedule = PowerDecayMu{mu0, c.floor_ratio};
  } else if (c.schedule == "restart") {
    s.schedule = RestartMu{mu0, c.restart_c2.value_or(theory_c2(max_lip_value(p), max_lip_grad(p), mu0)),
                           c.restart_delta};
  } else {
    s.schedule = AdaptiveMu{mu0, c.sigma1, c.sigma2, c.floor_ratio};
  }
  s.stepsize = make_stepsize(c, p, mu0);
  s.estimator.kind = c.estimator == "exact"  ? EstimatorKind::ExactFinite
                     : c.estimator == "ball" ? EstimatorKind::BallSampler
                                             : EstimatorKind::GaussianCloud;
  s.estimator.samples = c.samples;
  s.estimator.noise_std = c.noise_std;
  s.estimator.retain_improvers = c.retain_improvers;
  s.estimator.eps_hat = c.eps_hat;
  s.inner = c.inner;
  s.diagnostics = make_diagnostics(c);
  s.rng = RngSpec{c.seed};
  s.workers = c.workers;
  return s;
}

SolverState run_method(const RunConfig& c, const Setup& s) {
  if (c.method == "gdmax") {
    GdmaxConfig g;
    g.stepsize = make_stepsize(c, s.problem, s.mu0);
    g.inner = c.inner;
    g.diagnostics = make_diagnostics(c);
    g.rng = RngSpec{c.seed};
    g.workers = c.workers;
    return gdmax_run(s.problem, g, s.y0, c.iters);
  }
  const SspgConfig cfg = make_sspg_config(c, s.problem, s.mu0);
  if (c.method == "sdro_fixed") {
    return sdro_fixed_run(s.problem, c.sdro_lambda, c.sdro_eta, cfg, s.y0, c.iters);
  }
  return sspg_run(s.problem, cfg, s.y0, c.iters);
}

double rmse(const MlpShape& shape, const Vec& theta, const Mat& features, const Vec& targets) {
  double sum = 0.0;
  for (Index i = 0; i < features.rows(); ++i) {
    const double r = mlp_forward(shape, theta, features.row(i).transpose()) - targets[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(features.rows()));
}

struct Scored {
  ExperimentOutcome outcome;
  double rmse_perturbed = 0.0;
};

Scored run_once(const RunConfig& c) {
  const Setup s = make_setup(c);
  Scored out;
  out.outcome.state = run_method(c, s);
  const SolverState& st = out.outcome.state;
  auto& sum = out.outcome.summary;
  sum.emplace_back("experiment", c.experiment);
  sum.emplace_back("method", c.method);
  sum.emplace_back("seed", std::to_string(c.seed));
  sum.emplace_back("iters", std::to_string(st.iter));
  sum.emplace_back("final_obj", c.iters == 0 ? "nan" : format_double(st.obj_smoothed));
  const double primal = primal_objective_estimate(s.problem, st.y, c.inner, RngSpec{c.seed}, st.iter);
  sum.emplace_back("final_primal", format_double(primal));
  sum.emplace_back("final_mu", format_double(st.mu));
  if (s.problem.lambda_index) {
    sum.emplace_back("final_lambda", format_double(st.y[*s.problem.lambda_index]));
  }
  if (c.experiment == "newsvendor") sum.emplace_back("final_theta", format_double(st.y[0]));
  if (s.reg) {
    const Vec theta = st.y.head(s.reg->shape.param_count());
    const MlpShape shape = s.reg->shape;
    const Dataset& test = s.reg->data.test;
    RngStream r = RngSpec{c.seed}.stream("perturb");
    out.rmse_perturbed = evaluate_perturbed(
        [&](const Vec& a) { return mlp_forward(shape, theta, a); }, test.features, test.targets,
        c.reg_upsilon, r);
    sum.emplace_back("rmse_clean", format_double(rmse(shape, theta, test.features, test.targets)));
    sum.emplace_back("rmse_perturbed", format_double(out.rmse_perturbed));
    sum.emplace_back("lr", format_double(c.alpha));
  }
  return out;
}

}  // namespace

std::string ExperimentOutcome::summary_line() const {
  std::string out;
  for (const auto& [k, v] : summary) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

std::optional<std::string> ExperimentOutcome::field(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  return std::nullopt;
}

ExperimentOutcome run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.experiment != "regression" || !cfg.reg_select_lr) return run_once(cfg).outcome;
  // A learning rate that diverges is dropped from the selection.
  std::optional<Scored> best;
  std::string last_error;
  for (double lr : cfg.reg_lr_grid) {
    RunConfig c = cfg;
    c.alpha = lr;
    try {
      Scored s = run_once(c);
      if (!std::isfinite(s.rmse_perturbed)) continue;
      if (!best || s.rmse_perturbed < best->rmse_perturbed) best = std::move(s);
    } catch (const NumericalError& e) {
      last_error = "lr " + format_double(lr) + ": " + e.what();
    }
  }
  if (!best) throw NumericalError("every learning rate diverged; last: " + last_error);
  return std::move(best->outcome);
}

MinSumMaxProblem make_toy_problem(std::size_t n, std::size_t points, Index dim, std::uint64_t seed) {
  if (n == 0 || points == 0 || dim < 1) throw std::invalid_argument("make_toy_problem: empty instance");
  RngStream r = RngSpec{seed}.stream("toy");
  MinSumMaxProblem p;
  p.dim = dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  auto psi = [dim](const Vec& y, const Vec& z) {
    const auto a = z.head(dim);
    return a.dot(y) + z[dim] - 0.5 * (y - a).squaredNorm();
  };
  auto grad = [dim](const Vec& y, const Vec& z) -> Vec { return 2.0 * z.head(dim) - y; };
  for (std::size_t i = 0; i < n; ++i) {
    FiniteSet set;
    for (std::size_t j = 0; j < points; ++j) {
      Vec z(dim + 1);
      for (Index k = 0; k < dim; ++k) z[k] = scale * r.uniform(-1.0, 1.0);
      z[dim] = r.uniform(-0.5, 0.5);
      set.points.push_back(std::move(z));
    }
    MaxTermSpec t;
    t.psi = psi;
    t.grad_y_psi = grad;
    t.anchor = set.points.front();
    t.support = std::move(set);
    t.lip_value = 2.0 + std::sqrt(static_cast<double>(dim));
    t.lip_grad = 1.0;
    p.terms.push_back(std::move(t));
  }
  p.regularizer = RegularizerSpec::box(Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0));
  return p;
}

MinSumMaxProblem finite_grid_surrogate(const MinSumMaxProblem& problem, int per_axis) {
  if (per_axis < 2) throw std::invalid_argument("finite_grid_surrogate: need >= 2 points per axis");
  MinSumMaxProblem out = problem;
  for (auto& term : out.terms) {
    const Box* box = std::get_if<Box>(&term.support);
    if (box == nullptr) continue;
    std::vector<Index> free;
    for (Index j = 0; j < box->lower.size(); ++j) {
      if (box->lower[j] < box->upper[j]) free.push_back(j);
    }
    double count = std::pow(static_cast<double>(per_axis), static_cast<double>(free.size()));
    if (count > 5e6) throw std::invalid_argument("finite_grid_surrogate: grid too large");
    FiniteSet set;
    std::vector<int> digit(free.size(), 0);
    while (true) {
      Vec z = box->lower;
      for (std::size_t f = 0; f < free.size(); ++f) {
        const Index j = free[f];
        const double t = static_cast<double>(digit[f]) / (per_axis - 1);
        z[j] = digit[f] == per_axis - 1 ? box->upper[j] : box->lower[j] + t * (box->upper[j] - box->lower[j]);
      }
      set.points.push_back(std::move(z));
      std::size_t f = 0;
      while (f < free.size() && ++digit[f] == per_axis) digit[f++] = 0;
      if (f == free.size()) break;
    }
    term.support = std::move(set);
  }
  return out;
}

}  // namespace sspg::cli
