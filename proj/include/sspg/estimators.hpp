#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sspg/problem.hpp"
#include "sspg/rng.hpp"
#include "sspg/smooth_core.hpp"

namespace sspg {

/// Projected gradient ascent on z with restarts.
struct InnerMaxConfig {
  double step_size = 1e-2;
  int iterations = 20;  // 0 keeps the (projected, perturbed) anchor
  double init_noise_scale = 1e-3;
  int restarts = 1;
};

void validate_inner_config(const InnerMaxConfig& cfg);

/// Best iterate of projected gradient ascent over all restarts, started
/// from Proj_Z(anchor + init_noise_scale * N(0, I)). For a FiniteSet support
/// this is the argmax over its points. Ties go to the lexicographically
/// smallest z.
InnerMaxResult inner_maximize(const MaxTermSpec& term, const GradFn& grad_z_psi, const Vec& y,
                              const InnerMaxConfig& cfg, RngStream& rng);

/// Argmax over an explicit point list with the same tie rule.
InnerMaxResult argmax_over_points(const MaxTermSpec& term, const Vec& y,
                                  std::span<const Vec> points);

/// True when a is lexicographically smaller than b.
bool lex_less(const Vec& a, const Vec& b);

enum class EstimatorKind {
  /// Softmax over every point of a finite support; no bias.
  ExactFinite,
  /// M uniform samples in the ball of radius mu / (4 l_psi) about the inner
  /// maximizer, projected onto Z.
  BallSampler,
  /// M samples Proj_Z(z_center + noise_std * N(0, I)) about the inner
  /// maximizer (the perturbation rule used in the WDRO experiments).
  GaussianCloud,
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::ExactFinite;
  int samples = 32;  // M
  bool retain_improvers = false;
  double noise_std = 0.1;
  /// Target accuracy; 0 means exact (full batch).
  double eps_hat = 0.0;
};

void validate_estimator_config(const EstimatorConfig& cfg, const MaxTermSpec& term);

/// Per-term estimate of grad_y of the smoothed term.
struct TermEstimate {
  Vec grad;
  double value = 0.0;       // smoothed value over `points`
  std::vector<Vec> points;  // points the softmax was taken over
  Vec center;               // inner maximizer (empty for ExactFinite)
  double center_value = 0.0;
};

TermEstimate exact_finite_estimator(const MaxTermSpec& term, const Vec& y, double mu);

TermEstimate ball_sampler_estimator(const MaxTermSpec& term, const GradFn& grad_z_psi,
                                    const Vec& y, double mu, const EstimatorConfig& cfg,
                                    const InnerMaxConfig& inner_cfg, RngStream& rng);

TermEstimate gaussian_cloud_estimator(const MaxTermSpec& term, const GradFn& grad_z_psi,
                                      const Vec& y, double mu, const EstimatorConfig& cfg,
                                      const InnerMaxConfig& inner_cfg, RngStream& rng);

/// M points drawn uniformly with replacement from a FiniteSet support and
/// softmax-combined; the sampling estimator with zeta uniform on the set.
TermEstimate finite_sampler_estimator(const MaxTermSpec& term, const Vec& y, double mu,
                                      int samples, RngStream& rng);

/// Dispatches on cfg.kind. grad_z_psi may be null for ExactFinite.
TermEstimate estimate_term(const MaxTermSpec& term, const GradFn* grad_z_psi, const Vec& y,
                           double mu, const EstimatorConfig& cfg, const InnerMaxConfig& inner_cfg,
                           RngStream& rng);

/// mu / (4 l_psi).
double ball_radius(double mu, double lip_value);

/// min{ceil(4 l^2 / eps_hat^2), n}; eps_hat == 0 gives n.
std::size_t minibatch_size(std::size_t n, double lip_value, double eps_hat);

/// ceil(12 l^2 / eps_hat^2), the per-term sample count of the ball sampler.
std::size_t ball_sample_size(double lip_value, double eps_hat);

struct SampleSizes {
  std::size_t batch;     // m
  std::size_t per_term;  // M
};

/// Couples m and M to a single accuracy target.
SampleSizes sample_sizes_for_accuracy(std::size_t n, double lip_value, double eps_hat);

/// Mean of the gradients, summed in index order.
Vec aggregate_gradient(std::span<const Vec> grads);

/// m distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, RngStream& rng);

/// Minibatch estimate of the gradient of the smoothed objective, including
/// the smooth additive part of the problem.
struct GradientEstimate {
  Vec grad;
  std::vector<std::size_t> indices_used;  // sorted ascending
  std::size_t per_term_samples = 0;
  double value = 0.0;  // smooth part + mean smoothed term value
  std::vector<TermEstimate> terms;
};

/// Per-term substreams are RngSpec::stream("estimator", iteration, i), and
/// reductions run in ascending index order, so the result is independent of
/// `workers`.
GradientEstimate estimate_gradient(const MinSumMaxProblem& problem, const Vec& y, double mu,
                                   const EstimatorConfig& cfg, const InnerMaxConfig& inner_cfg,
                                   const RngSpec& rng, std::uint64_t iteration, int workers = 1,
                                   std::string_view purpose = "estimator");

/// Smooth part + mean over the batch of the smoothed value at y, reusing the
/// point sets of a previous estimate.
double reevaluate_smoothed(const MinSumMaxProblem& problem, const GradientEstimate& estimate,
                           const Vec& y, double mu);

}  // namespace sspg
