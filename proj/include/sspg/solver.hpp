#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sspg/estimators.hpp"
#include "sspg/problem.hpp"
#include "sspg/rng.hpp"

namespace sspg {

struct ConstantMu {
  double eps = 0.1;
};

/// mu_k = max{floor_ratio * mu0, (k+1)^{-1/3} mu0}.
struct PowerDecayMu {
  double mu0 = 1.0;
  double floor_ratio = 1e-4;
};

/// Keeps mu while the smoothed objective drops by more than mu^{2 sigma2},
/// otherwise mu <- max{sigma1 mu, floor_ratio mu0}.
struct AdaptiveMu {
  double mu0 = 1.0;
  double sigma1 = 0.99;
  double sigma2 = 0.5;
  double floor_ratio = 1e-4;
};

/// Stages k_1 = 0, k_{t+1} = k_t + ceil(36 c2 t^3 delta_bound); mu = mu0 / t
/// on stage t.
struct RestartMu {
  double mu0 = 1.0;
  double c2 = 1.0;
  double delta_bound = 1.0;
};

using MuSchedule = std::variant<ConstantMu, PowerDecayMu, AdaptiveMu, RestartMu>;

/// alpha_k = mu_k / c2.
struct TheoryStep {
  double c2 = 1.0;
};

struct FixedStep {
  double alpha = 0.1;
};

/// alpha_k = alpha0 * gamma^{floor(k / period)}.
struct StagedDecayStep {
  double alpha0 = 0.1;
  double gamma = 1.0;
  int period = 20;
};

using StepsizeRule = std::variant<TheoryStep, FixedStep, StagedDecayStep>;

void validate_schedule(const MuSchedule& schedule);
void validate_stepsize(const StepsizeRule& rule);

double initial_mu(const MuSchedule& schedule);

/// mu for iterate k given the previous mu and the smoothed objective before
/// and after the last step (both at the previous mu, on the same samples).
/// The result never exceeds mu_prev.
double schedule_next_mu(const MuSchedule& schedule, std::uint64_t k, double mu_prev,
                        double obj_prev, double obj_new);

double step_size(const StepsizeRule& rule, std::uint64_t k, double mu);

/// C2 = L_psi mu0 + 2 l_psi^2.
double theory_c2(double lip_value, double lip_grad, double mu0);

/// Stage starts k_1 = 0 < k_2 < ... that are < max_k.
std::vector<std::uint64_t> restart_stage_boundaries(double c2, double delta_bound,
                                                    std::uint64_t max_k);

/// ceil(36 c2 eps^{-3} gap), the horizon for constant mu = eps.
std::uint64_t constant_mu_horizon(double c2, double eps, double gap);

/// ceil(eps^{-3}), the first index of the output window for mu_k = (k+1)^{-1/3}.
std::uint64_t power_decay_window_start(double eps);

struct ConvergenceRecord {
  std::uint64_t iter = 0;  // the row describes y^{(iter)}
  double mu = 0.0;         // mu used for the step into y^{(iter)}
  double alpha = 0.0;
  double obj_smoothed = 0.0;
  std::optional<double> obj_primal_est;
  std::optional<double> lambda;
  std::optional<double> stationarity_sq;
  std::optional<double> wallclock_ms;
};

enum class StationarityMode { Auto, Always, Never };

struct DiagnosticsConfig {
  int every = 10;  // cadence T; the last iteration of a run is always included
  /// Auto computes the surrogate only for ExactFinite estimators.
  StationarityMode stationarity = StationarityMode::Auto;
  bool primal = true;
  int high_accuracy_samples = 10000;
  bool record_wallclock = false;
};

struct SspgConfig {
  MuSchedule schedule = ConstantMu{};
  StepsizeRule stepsize = FixedStep{};
  EstimatorConfig estimator;
  InnerMaxConfig inner;
  DiagnosticsConfig diagnostics;
  RngSpec rng;
  int workers = 1;
  bool keep_iterates = false;
};

struct SolverState {
  Vec y;
  double mu = 0.0;
  double mu0 = 0.0;
  std::uint64_t iter = 0;
  double obj_smoothed = 0.0;
  std::vector<ConvergenceRecord> trace;
  std::vector<double> mu_trace;  // mu_k used at step k
  std::vector<Vec> iterates;     // y^{(k+1)}, only with keep_iterates
  double elapsed_ms = 0.0;       // accumulated step time, only with record_wallclock
};

/// Validates the problem and configuration and projects y0 onto dom(phi).
SolverState sspg_init(const MinSumMaxProblem& problem, const SspgConfig& cfg, const Vec& y0);

/// One step y <- Prox_{alpha phi}(y - alpha G(y, mu)), the mu update and a
/// trace row. `final_step` forces the diagnostics for this row.
void sspg_step(SolverState& state, const MinSumMaxProblem& problem, const SspgConfig& cfg,
               bool final_step = false);

SolverState sspg_run(const MinSumMaxProblem& problem, const SspgConfig& cfg, const Vec& y0,
                     std::uint64_t iterations);

/// phi(y) + s(y) + mean_i Phi~_i(y, mu) over all terms, with the
/// high-accuracy estimator for sampling kinds.
double smoothed_objective(const MinSumMaxProblem& problem, const Vec& y, double mu,
                          const SspgConfig& cfg, std::uint64_t iteration);

/// ||grad g_bar(y_next) - G(y) - (y_next - y) / alpha||^2 where grad g_bar is
/// a full-batch high-accuracy gradient of the smooth part at mu.
double stationarity_violation(const MinSumMaxProblem& problem, const Vec& y, const Vec& y_next,
                              const Vec& step_grad, double alpha, double mu,
                              const SspgConfig& cfg, std::uint64_t iteration);

/// phi(y) + s(y) + mean_i max_z psi_i(y, z) using the exact inner oracle when
/// the problem has one, the finite argmax for finite supports, and the inner
/// ascent otherwise.
double primal_objective_estimate(const MinSumMaxProblem& problem, const Vec& y,
                                 const InnerMaxConfig& inner, const RngSpec& rng,
                                 std::uint64_t iteration = 0);

/// tau in [k1, size) with P(tau = k) proportional to mu_trace[k].
std::size_t sample_output_index(std::span<const double> mu_trace, std::size_t k1,
                                RngStream& rng);

struct GdmaxConfig {
  StepsizeRule stepsize = FixedStep{};
  InnerMaxConfig inner;
  DiagnosticsConfig diagnostics;
  RngSpec rng;
  int workers = 1;
};

/// Alternates an inner maximization per term with a projected descent step
/// on the full-batch gradient at the found maximizers. Rows log mu = 0 and
/// obj_smoothed = phi + s + mean_i psi_i(y_next, z_i).
SolverState gdmax_run(const MinSumMaxProblem& problem, const GdmaxConfig& cfg, const Vec& y0,
                      std::uint64_t iterations);

/// SSPG with the lambda coordinate pinned to lambda_fixed and constant
/// mu = lambda_fixed * eta. The problem's regularizer must be a product whose
/// block holding lambda_index has size one.
SolverState sdro_fixed_run(const MinSumMaxProblem& problem, double lambda_fixed, double eta,
                           SspgConfig cfg, Vec y0, std::uint64_t iterations);

/// The problem sdro_fixed_run optimizes.
MinSumMaxProblem freeze_lambda(const MinSumMaxProblem& problem, double lambda_fixed);

}  // namespace sspg
