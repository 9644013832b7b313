#include "sspg/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "internal.hpp"

namespace sspg {

using detail::Overloaded;

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void require_rate(double v, const char* what) {
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in (0, 1]");
}

EstimatorConfig high_accuracy(const SspgConfig& cfg) {
  EstimatorConfig e = cfg.estimator;
  e.eps_hat = 0.0;
  if (e.kind != EstimatorKind::ExactFinite) {
    e.samples = std::max(e.samples, cfg.diagnostics.high_accuracy_samples);
  }
  return e;
}

bool wants_stationarity(const SspgConfig& cfg) {
  switch (cfg.diagnostics.stationarity) {
    case StationarityMode::Always:
      return true;
    case StationarityMode::Never:
      return false;
    case StationarityMode::Auto:
      return cfg.estimator.kind == EstimatorKind::ExactFinite;
  }
  return false;
}

bool diagnostics_due(const DiagnosticsConfig& d, std::uint64_t row_iter, bool final_step) {
  if (final_step) return true;
  return d.every > 0 && row_iter % static_cast<std::uint64_t>(d.every) == 0;
}

std::optional<double> lambda_of(const MinSumMaxProblem& problem, const Vec& y) {
  if (!problem.lambda_index) return std::nullopt;
  return y[*problem.lambda_index];
}

Vec feasible_start(const MinSumMaxProblem& problem, const Vec& y0) {
  if (y0.size() != problem.dim) throw std::invalid_argument("initial point has the wrong dimension");
  if (!y0.allFinite()) throw std::invalid_argument("initial point is not finite");
  return is_feasible(problem.regularizer, y0) ? y0 : prox(problem.regularizer, y0, 1.0);
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

void validate_schedule(const MuSchedule& schedule) {
  std::visit(Overloaded{[](const ConstantMu& s) { check_mu(s.eps); },
                        [](const PowerDecayMu& s) {
                          check_mu(s.mu0);
                          require_rate(s.floor_ratio, "floor_ratio");
                        },
                        [](const AdaptiveMu& s) {
                          check_mu(s.mu0);
                          require_rate(s.sigma1, "sigma1");
                          if (!(s.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
                          require_rate(s.floor_ratio, "floor_ratio");
                        },
                        [](const RestartMu& s) {
                          check_mu(s.mu0);
                          require_positive(s.c2, "c2");
                          require_positive(s.delta_bound, "delta_bound");
                        }},
             schedule);
}

void validate_stepsize(const StepsizeRule& rule) {
  std::visit(Overloaded{[](const TheoryStep& s) { require_positive(s.c2, "c2"); },
                        [](const FixedStep& s) { require_positive(s.alpha, "alpha"); },
                        [](const StagedDecayStep& s) {
                          require_positive(s.alpha0, "alpha0");
                          require_rate(s.gamma, "gamma");
                          if (s.period < 1) throw std::invalid_argument("period must be >= 1");
                        }},
             rule);
}

double initial_mu(const MuSchedule& schedule) {
  return std::visit(Overloaded{[](const ConstantMu& s) { return s.eps; },
                               [](const PowerDecayMu& s) { return s.mu0; },
                               [](const AdaptiveMu& s) { return s.mu0; },
                               [](const RestartMu& s) { return s.mu0; }},
                    schedule);
}

double schedule_next_mu(const MuSchedule& schedule, std::uint64_t k, double mu_prev,
                        double obj_prev, double obj_new) {
  const double next = std::visit(
      Overloaded{[](const ConstantMu& s) { return s.eps; },
                 [&](const PowerDecayMu& s) {
                   const double decay = std::pow(static_cast<double>(k) + 1.0, -1.0 / 3.0);
                   return std::max(s.floor_ratio * s.mu0, decay * s.mu0);
                 },
                 [&](const AdaptiveMu& s) {
                   if (!std::isfinite(obj_prev) || !std::isfinite(obj_new)) {
                     throw NumericalError("adaptive mu schedule got a non-finite objective");
                   }
                   if (obj_new - obj_prev < -std::pow(mu_prev, 2.0 * s.sigma2)) return mu_prev;
                   return std::max(s.sigma1 * mu_prev, s.floor_ratio * s.mu0);
                 },
                 [&](const RestartMu& s) {
                   std::uint64_t start = 0;
                   for (std::uint64_t t = 1;; ++t) {
                     const double len =
                         std::ceil(36.0 * s.c2 * static_cast<double>(t * t * t) * s.delta_bound);
                     if (static_cast<double>(k - start) < len) return s.mu0 / static_cast<double>(t);
                     start += static_cast<std::uint64_t>(len);
                   }
                 }},
      schedule);
  return std::min(next, mu_prev);
}

double step_size(const StepsizeRule& rule, std::uint64_t k, double mu) {
  return std::visit(Overloaded{[&](const TheoryStep& s) { return mu / s.c2; },
                               [](const FixedStep& s) { return s.alpha; },
                               [&](const StagedDecayStep& s) {
                                 const auto stage = k / static_cast<std::uint64_t>(s.period);
                                 return s.alpha0 * std::pow(s.gamma, static_cast<double>(stage));
                               }},
                    rule);
}

double theory_c2(double lip_value, double lip_grad, double mu0) {
  return lip_grad * mu0 + 2.0 * lip_value * lip_value;
}

std::vector<std::uint64_t> restart_stage_boundaries(double c2, double delta_bound,
                                                    std::uint64_t max_k) {
  require_positive(c2, "c2");
  require_positive(delta_bound, "delta_bound");
  std::vector<std::uint64_t> out{0};
  std::uint64_t k = 0;
  for (std::uint64_t t = 1;; ++t) {
    k += static_cast<std::uint64_t>(std::ceil(36.0 * c2 * static_cast<double>(t * t * t) * delta_bound));
    if (k >= max_k) break;
    out.push_back(k);
  }
  return out;
}

std::uint64_t constant_mu_horizon(double c2, double eps, double gap) {
  require_positive(c2, "c2");
  require_positive(eps, "eps");
  if (!(gap >= 0.0)) throw std::invalid_argument("gap must be >= 0");
  return static_cast<std::uint64_t>(std::ceil(36.0 * c2 * gap / (eps * eps * eps)));
}

std::uint64_t power_decay_window_start(double eps) {
  require_positive(eps, "eps");
  return static_cast<std::uint64_t>(std::ceil(1.0 / (eps * eps * eps)));
}

SolverState sspg_init(const MinSumMaxProblem& problem, const SspgConfig& cfg, const Vec& y0) {
  validate_problem(problem);
  validate_schedule(cfg.schedule);
  validate_stepsize(cfg.stepsize);
  validate_inner_config(cfg.inner);
  for (const MaxTermSpec& t : problem.terms) validate_estimator_config(cfg.estimator, t);
  if (cfg.estimator.kind != EstimatorKind::ExactFinite &&
      problem.grad_z_psi.size() != problem.terms.size()) {
    throw std::invalid_argument("sampling estimators need grad_z_psi for every term");
  }
  SolverState s;
  s.y = feasible_start(problem, y0);
  s.mu = initial_mu(cfg.schedule);
  s.mu0 = s.mu;
  s.obj_smoothed = std::numeric_limits<double>::quiet_NaN();
  return s;
}

double smoothed_objective(const MinSumMaxProblem& problem, const Vec& y, double mu,
                          const SspgConfig& cfg, std::uint64_t iteration) {
  const GradientEstimate est = estimate_gradient(problem, y, mu, high_accuracy(cfg), cfg.inner,
                                                 cfg.rng, iteration, cfg.workers, "diagnostic");
  return est.value + regularizer_value(problem.regularizer, y);
}

double stationarity_violation(const MinSumMaxProblem& problem, const Vec& y, const Vec& y_next,
                              const Vec& step_grad, double alpha, double mu,
                              const SspgConfig& cfg, std::uint64_t iteration) {
  const GradientEstimate full = estimate_gradient(problem, y_next, mu, high_accuracy(cfg),
                                                  cfg.inner, cfg.rng, iteration, cfg.workers,
                                                  "diagnostic");
  return (full.grad - step_grad - (y_next - y) / alpha).squaredNorm();
}

double primal_objective_estimate(const MinSumMaxProblem& problem, const Vec& y,
                                 const InnerMaxConfig& inner, const RngSpec& rng,
                                 std::uint64_t iteration) {
  const std::size_t n = problem.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const MaxTermSpec& term = problem.terms[i];
    if (problem.exact_inner) {
      values[i] = problem.exact_inner(i, y).value;
    } else if (const auto* finite = std::get_if<FiniteSet>(&term.support)) {
      values[i] = argmax_over_points(term, y, finite->points).value;
    } else {
      if (problem.grad_z_psi.empty()) {
        throw std::invalid_argument("primal estimate needs grad_z_psi or an exact inner oracle");
      }
      RngStream stream = rng.stream("primal", iteration, i);
      values[i] = inner_maximize(term, problem.grad_z_psi[i], y, inner, stream).value;
    }
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return regularizer_value(problem.regularizer, y) + problem.smooth_part(y) +
         sum / static_cast<double>(n);
}

void sspg_step(SolverState& state, const MinSumMaxProblem& problem, const SspgConfig& cfg,
               bool final_step) {
  const auto t0 = Clock::now();
  const std::uint64_t k = state.iter;
  const double mu = state.mu;

  GradientEstimate est;
  try {
    est = estimate_gradient(problem, state.y, mu, cfg.estimator, cfg.inner, cfg.rng, k,
                            cfg.workers);
  } catch (const NumericalError& e) {
    throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
  }

  const double alpha = step_size(cfg.stepsize, k, mu);
  Vec y_next = prox(problem.regularizer, state.y - alpha * est.grad, alpha);
  if (!y_next.allFinite()) {
    throw NumericalError("iteration " + std::to_string(k) + ": non-finite iterate");
  }

  const double obj_prev = est.value + regularizer_value(problem.regularizer, state.y);
  const double obj_new =
      reevaluate_smoothed(problem, est, y_next, mu) + regularizer_value(problem.regularizer, y_next);

  ConvergenceRecord row;
  row.iter = k + 1;
  row.mu = mu;
  row.alpha = alpha;
  row.obj_smoothed = obj_new;
  row.lambda = lambda_of(problem, y_next);
  if (diagnostics_due(cfg.diagnostics, row.iter, final_step)) {
    if (wants_stationarity(cfg)) {
      row.stationarity_sq =
          stationarity_violation(problem, state.y, y_next, est.grad, alpha, mu, cfg, k + 1);
    }
    if (cfg.diagnostics.primal) {
      row.obj_primal_est = primal_objective_estimate(problem, y_next, cfg.inner, cfg.rng, k + 1);
    }
  }

  state.mu_trace.push_back(mu);
  state.mu = schedule_next_mu(cfg.schedule, k + 1, mu, obj_prev, obj_new);
  state.y = std::move(y_next);
  state.obj_smoothed = obj_new;
  state.iter = k + 1;
  if (cfg.keep_iterates) state.iterates.push_back(state.y);
  if (cfg.diagnostics.record_wallclock) {
    state.elapsed_ms += ms_since(t0);
    row.wallclock_ms = state.elapsed_ms;
  }
  state.trace.push_back(std::move(row));
}

SolverState sspg_run(const MinSumMaxProblem& problem, const SspgConfig& cfg, const Vec& y0,
                     std::uint64_t iterations) {
  SolverState state = sspg_init(problem, cfg, y0);
  state.trace.reserve(iterations);
  for (std::uint64_t k = 0; k < iterations; ++k) sspg_step(state, problem, cfg, k + 1 == iterations);
  return state;
}

std::size_t sample_output_index(std::span<const double> mu_trace, std::size_t k1, RngStream& rng) {
  if (k1 >= mu_trace.size()) throw std::invalid_argument("sample_output_index: empty window");
  double total = 0.0;
  for (std::size_t k = k1; k < mu_trace.size(); ++k) {
    if (!(mu_trace[k] > 0.0)) throw std::invalid_argument("sample_output_index: mu must be positive");
    total += mu_trace[k];
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t k = k1; k < mu_trace.size(); ++k) {
    acc += mu_trace[k];
    if (u < acc) return k;
  }
  return mu_trace.size() - 1;
}

SolverState gdmax_run(const MinSumMaxProblem& problem, const GdmaxConfig& cfg, const Vec& y0,
                      std::uint64_t iterations) {
  validate_problem(problem);
  validate_stepsize(cfg.stepsize);
  validate_inner_config(cfg.inner);
  if (std::holds_alternative<TheoryStep>(cfg.stepsize)) {
    throw std::invalid_argument("gdmax has no mu; use a fixed or staged stepsize");
  }
  const std::size_t n = problem.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::holds_alternative<FiniteSet>(problem.terms[i].support) &&
        problem.grad_z_psi.size() != n) {
      throw std::invalid_argument("gdmax needs grad_z_psi for continuous supports");
    }
  }

  SolverState state;
  state.y = feasible_start(problem, y0);
  state.obj_smoothed = std::numeric_limits<double>::quiet_NaN();
  state.trace.reserve(iterations);
  std::vector<Vec> z(n);
  std::vector<Vec> grads(n);

  for (std::uint64_t k = 0; k < iterations; ++k) {
    const auto t0 = Clock::now();
    const Vec& y = state.y;
    try {
      detail::parallel_for(n, cfg.workers, [&](std::size_t i) {
        const MaxTermSpec& term = problem.terms[i];
        if (const auto* finite = std::get_if<FiniteSet>(&term.support)) {
          z[i] = argmax_over_points(term, y, finite->points).z_star;
        } else {
          RngStream stream = cfg.rng.stream("gdmax", k, i);
          z[i] = inner_maximize(term, problem.grad_z_psi[i], y, cfg.inner, stream).z_star;
        }
        grads[i] = term.grad_y_psi(y, z[i]);
      });
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
    }
    const Vec grad = aggregate_gradient(grads) + problem.smooth_part_grad(y);
    const double alpha = step_size(cfg.stepsize, k, 0.0);
    Vec y_next = prox(problem.regularizer, y - alpha * grad, alpha);
    if (!y_next.allFinite()) {
      throw NumericalError("iteration " + std::to_string(k) + ": non-finite iterate");
    }

    double inner_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) inner_sum += problem.terms[i].psi(y_next, z[i]);

    ConvergenceRecord row;
    row.iter = k + 1;
    row.mu = 0.0;
    row.alpha = alpha;
    row.obj_smoothed = regularizer_value(problem.regularizer, y_next) + problem.smooth_part(y_next) +
                       inner_sum / static_cast<double>(n);
    row.lambda = lambda_of(problem, y_next);
    if (cfg.diagnostics.primal && diagnostics_due(cfg.diagnostics, row.iter, k + 1 == iterations)) {
      row.obj_primal_est = primal_objective_estimate(problem, y_next, cfg.inner, cfg.rng, k + 1);
    }
    state.y = std::move(y_next);
    state.obj_smoothed = row.obj_smoothed;
    state.iter = k + 1;
    if (cfg.diagnostics.record_wallclock) {
      state.elapsed_ms += ms_since(t0);
      row.wallclock_ms = state.elapsed_ms;
    }
    state.trace.push_back(std::move(row));
  }
  return state;
}

MinSumMaxProblem freeze_lambda(const MinSumMaxProblem& problem, double lambda_fixed) {
  if (!problem.lambda_index) throw std::invalid_argument("freeze_lambda: problem has no lambda");
  const auto* product = std::get_if<ProductRegularizer>(&problem.regularizer.kind);
  if (product == nullptr) {
    throw std::invalid_argument("freeze_lambda: regularizer must be a product");
  }
  MinSumMaxProblem out = problem;
  auto& blocks = std::get<ProductRegularizer>(out.regularizer.kind);
  const Index target = *problem.lambda_index;
  Index offset = 0;
  for (std::size_t b = 0; b < blocks.sizes.size(); ++b) {
    if (target >= offset && target < offset + blocks.sizes[b]) {
      if (blocks.sizes[b] != 1) {
        throw std::invalid_argument("freeze_lambda: lambda must sit in a block of size one");
      }
      const Vec pinned = Vec::Constant(1, lambda_fixed);
      blocks.blocks[b] = RegularizerSpec::box(pinned, pinned);
      return out;
    }
    offset += blocks.sizes[b];
  }
  throw std::invalid_argument("freeze_lambda: lambda_index outside the regularizer blocks");
}

SolverState sdro_fixed_run(const MinSumMaxProblem& problem, double lambda_fixed, double eta,
                           SspgConfig cfg, Vec y0, std::uint64_t iterations) {
  require_positive(lambda_fixed, "lambda_fixed");
  require_positive(eta, "eta");
  const MinSumMaxProblem frozen = freeze_lambda(problem, lambda_fixed);
  cfg.schedule = ConstantMu{lambda_fixed * eta};
  y0[*problem.lambda_index] = lambda_fixed;
  return sspg_run(frozen, cfg, y0, iterations);
}

}  // namespace sspg
