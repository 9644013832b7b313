#include "sspg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "internal.hpp"
#include "sspg/prox.hpp"

namespace sspg {

void validate_problem(const MinSumMaxProblem& problem) {
  if (problem.terms.empty()) throw std::invalid_argument("problem has no terms");
  if (problem.dim <= 0) throw std::invalid_argument("problem dimension must be positive");
  if (!problem.grad_z_psi.empty() && problem.grad_z_psi.size() != problem.terms.size()) {
    throw std::invalid_argument("grad_z_psi must be empty or one per term");
  }
  for (const MaxTermSpec& t : problem.terms) {
    if (!t.psi || !t.grad_y_psi) throw std::invalid_argument("term without psi / grad_y_psi");
    if (!(t.lip_value > 0.0)) throw std::invalid_argument("term lip_value must be positive");
    if (!(t.lip_grad >= 0.0)) throw std::invalid_argument("term lip_grad must be nonnegative");
    validate_support(t.support);
  }
  if (problem.lambda_index && (*problem.lambda_index < 0 || *problem.lambda_index >= problem.dim)) {
    throw std::invalid_argument("lambda_index out of range");
  }
  validate_regularizer(problem.regularizer);
}

void validate_inner_config(const InnerMaxConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("inner step_size must be positive");
  if (cfg.iterations < 0) throw std::invalid_argument("inner iterations must be >= 0");
  if (!(cfg.init_noise_scale >= 0.0)) throw std::invalid_argument("inner init_noise_scale must be >= 0");
  if (cfg.restarts < 1) throw std::invalid_argument("inner restarts must be >= 1");
}

bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

namespace {

struct Best {
  Vec z;
  double value = -std::numeric_limits<double>::infinity();
  bool empty = true;

  void offer(const Vec& cand, double v) {
    if (empty || v > value || (v == value && lex_less(cand, z))) {
      z = cand;
      value = v;
      empty = false;
    }
  }
};

double checked_psi(const MaxTermSpec& term, const Vec& y, const Vec& z, int restart, int iter) {
  const double v = term.psi(y, z);
  if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
    std::ostringstream os;
    os << "inner_maximize: non-finite psi at restart " << restart << ", iteration " << iter
       << ", z = [" << z.transpose() << "]";
    throw NumericalError(os.str());
  }
  return v;
}

Vec start_point(const MaxTermSpec& term) {
  const Index d = support_dimension(term.support);
  if (term.anchor.size() == d) return term.anchor;
  return std::visit(detail::Overloaded{[](const FiniteSet& f) -> Vec { return f.points.front(); },
                                       [](const Box& b) -> Vec {
                                         Vec mid = 0.5 * (b.lower + b.upper);
                                         for (Index i = 0; i < mid.size(); ++i) {
                                           if (!std::isfinite(mid[i])) {
                                             mid[i] = std::isfinite(b.lower[i]) ? b.lower[i]
                                                      : std::isfinite(b.upper[i]) ? b.upper[i]
                                                                                  : 0.0;
                                           }
                                         }
                                         return mid;
                                       },
                                       [](const Ball& b) -> Vec { return b.center; }},
                    term.support);
}

/// Coordinates a sampler may move: all of them except pinned box coordinates.
std::vector<Index> free_coordinates(const SupportSet& set) {
  std::vector<Index> out;
  if (const auto* box = std::get_if<Box>(&set)) {
    for (Index i = 0; i < box->lower.size(); ++i) {
      if (box->upper[i] > box->lower[i]) out.push_back(i);
    }
  } else {
    const Index d = support_dimension(set);
    for (Index i = 0; i < d; ++i) out.push_back(i);
  }
  return out;
}

InnerMaxResult center_for(const MaxTermSpec& term, const GradFn& grad_z_psi, const Vec& y,
                          const InnerMaxConfig& inner_cfg, RngStream& rng) {
  if (!grad_z_psi) throw std::invalid_argument("sampling estimator requires grad_z_psi");
  return inner_maximize(term, grad_z_psi, y, inner_cfg, rng);
}

TermEstimate finish_sampled(const MaxTermSpec& term, const Vec& y, double mu,
                            const EstimatorConfig& cfg, InnerMaxResult center,
                            std::vector<Vec> samples) {
  std::vector<double> values(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) values[j] = term.psi(y, samples[j]);

  TermEstimate out;
  if (cfg.retain_improvers) {
    std::vector<Vec> kept{center.z_star};
    std::vector<double> kept_values{center.value};
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (values[j] > center.value) {
        kept.push_back(std::move(samples[j]));
        kept_values.push_back(values[j]);
      }
    }
    samples = std::move(kept);
    values = std::move(kept_values);
  }
  SmoothEval eval = smooth_over_values(term, y, samples, values, mu);
  out.grad = std::move(eval.grad_y);
  out.value = eval.value;
  out.points = std::move(samples);
  out.center = std::move(center.z_star);
  out.center_value = center.value;
  return out;
}

double ceil_tolerant(double x) {
  return std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
}

}  // namespace

InnerMaxResult argmax_over_points(const MaxTermSpec& term, const Vec& y,
                                  std::span<const Vec> points) {
  if (points.empty()) throw std::invalid_argument("argmax over an empty point set");
  Best best;
  for (const Vec& z : points) best.offer(z, checked_psi(term, y, z, 0, 0));
  return {best.z, best.value};
}

InnerMaxResult inner_maximize(const MaxTermSpec& term, const GradFn& grad_z_psi, const Vec& y,
                              const InnerMaxConfig& cfg, RngStream& rng) {
  if (const auto* finite = std::get_if<FiniteSet>(&term.support)) {
    return argmax_over_points(term, y, finite->points);
  }
  validate_inner_config(cfg);
  if (!grad_z_psi && cfg.iterations > 0) {
    throw std::invalid_argument("inner_maximize requires grad_z_psi for Box/Ball supports");
  }
  const Vec anchor = start_point(term);
  Best best;
  for (int r = 0; r < cfg.restarts; ++r) {
    Vec z = anchor;
    for (Index i = 0; i < z.size(); ++i) z[i] += cfg.init_noise_scale * rng.normal();
    z = project(term.support, z);
    best.offer(z, checked_psi(term, y, z, r, 0));
    for (int it = 1; it <= cfg.iterations; ++it) {
      const Vec g = grad_z_psi(y, z);
      if (!g.allFinite()) {
        std::ostringstream os;
        os << "inner_maximize: non-finite grad_z at restart " << r << ", iteration " << it;
        throw NumericalError(os.str());
      }
      z = project(term.support, z + cfg.step_size * g);
      best.offer(z, checked_psi(term, y, z, r, it));
    }
  }
  return {best.z, best.value};
}

void validate_estimator_config(const EstimatorConfig& cfg, const MaxTermSpec& term) {
  if (!(cfg.eps_hat >= 0.0)) throw std::domain_error("eps_hat must be >= 0");
  switch (cfg.kind) {
    case EstimatorKind::ExactFinite:
      if (!std::holds_alternative<FiniteSet>(term.support)) {
        throw std::invalid_argument("ExactFinite estimator requires a FiniteSet support");
      }
      break;
    case EstimatorKind::BallSampler:
    case EstimatorKind::GaussianCloud:
      if (cfg.samples < 1) throw std::domain_error("sampling estimator requires M >= 1");
      if (std::holds_alternative<FiniteSet>(term.support)) {
        throw std::invalid_argument("sampling estimators need a Box or Ball support");
      }
      if (cfg.kind == EstimatorKind::GaussianCloud && !(cfg.noise_std >= 0.0)) {
        throw std::domain_error("noise_std must be >= 0");
      }
      break;
  }
}

TermEstimate exact_finite_estimator(const MaxTermSpec& term, const Vec& y, double mu) {
  const auto* finite = std::get_if<FiniteSet>(&term.support);
  if (finite == nullptr) {
    throw std::invalid_argument("exact_finite_estimator requires a FiniteSet support");
  }
  SmoothEval eval = smooth_value_finite(term, y, mu);
  TermEstimate out;
  out.grad = std::move(eval.grad_y);
  out.value = eval.value;
  out.points = finite->points;
  out.center_value = eval.shift;
  return out;
}

TermEstimate finite_sampler_estimator(const MaxTermSpec& term, const Vec& y, double mu,
                                      int samples, RngStream& rng) {
  const auto* finite = std::get_if<FiniteSet>(&term.support);
  if (finite == nullptr) {
    throw std::invalid_argument("finite_sampler_estimator requires a FiniteSet support");
  }
  if (samples < 1) throw std::domain_error("finite_sampler_estimator requires M >= 1");
  std::vector<Vec> picked;
  picked.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) picked.push_back(finite->points[rng.below(finite->points.size())]);
  SmoothEval eval = smooth_over_points(term, y, picked, mu);
  TermEstimate out;
  out.grad = std::move(eval.grad_y);
  out.value = eval.value;
  out.points = std::move(picked);
  out.center_value = eval.shift;
  return out;
}

double ball_radius(double mu, double lip_value) {
  check_mu(mu);
  if (!(lip_value > 0.0)) throw std::domain_error("ball_radius: lip_value must be positive");
  return mu / (4.0 * lip_value);
}

TermEstimate ball_sampler_estimator(const MaxTermSpec& term, const GradFn& grad_z_psi,
                                    const Vec& y, double mu, const EstimatorConfig& cfg,
                                    const InnerMaxConfig& inner_cfg, RngStream& rng) {
  check_mu(mu);
  EstimatorConfig checked = cfg;
  checked.kind = EstimatorKind::BallSampler;
  validate_estimator_config(checked, term);

  InnerMaxResult center = center_for(term, grad_z_psi, y, inner_cfg, rng);
  const double radius = ball_radius(mu, term.lip_value);
  const std::vector<Index> free = free_coordinates(term.support);
  const double k = static_cast<double>(free.size());

  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(cfg.samples));
  Vec direction(static_cast<Index>(free.size()));
  for (int j = 0; j < cfg.samples; ++j) {
    Vec p = center.z_star;
    if (!free.empty()) {
      double norm = 0.0;
      do {
        for (Index c = 0; c < direction.size(); ++c) direction[c] = rng.normal();
        norm = direction.norm();
      } while (norm == 0.0);
      const double r = radius * std::pow(rng.uniform(), 1.0 / k);
      for (std::size_t c = 0; c < free.size(); ++c) {
        p[free[c]] += r * direction[static_cast<Index>(c)] / norm;
      }
    }
    samples.push_back(project(term.support, p));
  }
  return finish_sampled(term, y, mu, cfg, std::move(center), std::move(samples));
}

TermEstimate gaussian_cloud_estimator(const MaxTermSpec& term, const GradFn& grad_z_psi,
                                      const Vec& y, double mu, const EstimatorConfig& cfg,
                                      const InnerMaxConfig& inner_cfg, RngStream& rng) {
  check_mu(mu);
  EstimatorConfig checked = cfg;
  checked.kind = EstimatorKind::GaussianCloud;
  validate_estimator_config(checked, term);

  InnerMaxResult center = center_for(term, grad_z_psi, y, inner_cfg, rng);
  const std::vector<Index> free = free_coordinates(term.support);
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(cfg.samples));
  for (int j = 0; j < cfg.samples; ++j) {
    Vec p = center.z_star;
    for (Index c : free) p[c] += cfg.noise_std * rng.normal();
    samples.push_back(project(term.support, p));
  }
  return finish_sampled(term, y, mu, cfg, std::move(center), std::move(samples));
}

TermEstimate estimate_term(const MaxTermSpec& term, const GradFn* grad_z_psi, const Vec& y,
                           double mu, const EstimatorConfig& cfg, const InnerMaxConfig& inner_cfg,
                           RngStream& rng) {
  static const GradFn kNone;
  const GradFn& gz = grad_z_psi != nullptr ? *grad_z_psi : kNone;
  switch (cfg.kind) {
    case EstimatorKind::ExactFinite:
      return exact_finite_estimator(term, y, mu);
    case EstimatorKind::BallSampler:
      return ball_sampler_estimator(term, gz, y, mu, cfg, inner_cfg, rng);
    case EstimatorKind::GaussianCloud:
      return gaussian_cloud_estimator(term, gz, y, mu, cfg, inner_cfg, rng);
  }
  throw std::logic_error("unknown estimator kind");
}

std::size_t minibatch_size(std::size_t n, double lip_value, double eps_hat) {
  if (n == 0) throw std::domain_error("minibatch_size: n must be positive");
  if (!(eps_hat >= 0.0)) throw std::domain_error("minibatch_size: eps_hat must be >= 0");
  if (eps_hat == 0.0) return n;
  const double m = ceil_tolerant(4.0 * lip_value * lip_value / (eps_hat * eps_hat));
  if (!(m < static_cast<double>(n))) return n;
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

std::size_t ball_sample_size(double lip_value, double eps_hat) {
  if (!(eps_hat > 0.0)) throw std::domain_error("ball_sample_size: eps_hat must be positive");
  const double m = ceil_tolerant(12.0 * lip_value * lip_value / (eps_hat * eps_hat));
  if (!(m < 1e15)) throw std::domain_error("ball_sample_size: requested accuracy is not reachable");
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

SampleSizes sample_sizes_for_accuracy(std::size_t n, double lip_value, double eps_hat) {
  if (eps_hat == 0.0) return {n, 0};
  return {minibatch_size(n, lip_value, eps_hat), ball_sample_size(lip_value, eps_hat)};
}

Vec aggregate_gradient(std::span<const Vec> grads) {
  if (grads.empty()) throw std::invalid_argument("aggregate_gradient: no gradients");
  Vec sum = Vec::Zero(grads.front().size());
  for (const Vec& g : grads) {
    if (g.size() != sum.size()) throw std::invalid_argument("aggregate_gradient: dimension mismatch");
    sum += g;
  }
  return sum / static_cast<double>(grads.size());
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, RngStream& rng) {
  if (m < 1 || m > n) throw std::domain_error("sample_without_replacement requires 1 <= m <= n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  return pool;
}

GradientEstimate estimate_gradient(const MinSumMaxProblem& problem, const Vec& y, double mu,
                                   const EstimatorConfig& cfg, const InnerMaxConfig& inner_cfg,
                                   const RngSpec& rng, std::uint64_t iteration, int workers,
                                   std::string_view purpose) {
  check_mu(mu);
  const std::size_t n = problem.size();
  if (n == 0) throw std::invalid_argument("estimate_gradient: problem has no terms");
  double lip = 0.0;
  for (const MaxTermSpec& t : problem.terms) lip = std::max(lip, t.lip_value);

  GradientEstimate out;
  const std::size_t m = minibatch_size(n, lip, cfg.eps_hat);
  if (m == n) {
    out.indices_used.resize(n);
    std::iota(out.indices_used.begin(), out.indices_used.end(), std::size_t{0});
  } else {
    RngStream batch_rng = rng.stream(std::string(purpose) + "/batch", iteration);
    out.indices_used = sample_without_replacement(n, m, batch_rng);
    std::sort(out.indices_used.begin(), out.indices_used.end());
  }

  out.terms.resize(m);
  detail::parallel_for(m, workers, [&](std::size_t j) {
    const std::size_t i = out.indices_used[j];
    RngStream term_rng = rng.stream(purpose, iteration, i);
    const GradFn* gz = problem.grad_z_psi.empty() ? nullptr : &problem.grad_z_psi[i];
    try {
      out.terms[j] = estimate_term(problem.terms[i], gz, y, mu, cfg, inner_cfg, term_rng);
    } catch (const NumericalError& e) {
      throw NumericalError("term " + std::to_string(i) + ": " + e.what());
    }
  });

  Vec sum = Vec::Zero(problem.dim);
  double value_sum = 0.0;
  for (const TermEstimate& t : out.terms) {
    if (t.grad.size() != problem.dim) throw std::invalid_argument("term gradient dimension mismatch");
    sum += t.grad;
    value_sum += t.value;
  }
  out.grad = sum / static_cast<double>(m) + problem.smooth_part_grad(y);
  out.value = problem.smooth_part(y) + value_sum / static_cast<double>(m);
  out.per_term_samples = cfg.kind == EstimatorKind::ExactFinite
                             ? std::get<FiniteSet>(problem.terms.front().support).points.size()
                             : static_cast<std::size_t>(cfg.samples);
  return out;
}

double reevaluate_smoothed(const MinSumMaxProblem& problem, const GradientEstimate& estimate,
                           const Vec& y, double mu) {
  double value_sum = 0.0;
  std::vector<double> values;
  for (std::size_t j = 0; j < estimate.terms.size(); ++j) {
    const MaxTermSpec& term = problem.terms[estimate.indices_used[j]];
    const auto& points = estimate.terms[j].points;
    values.resize(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) values[k] = term.psi(y, points[k]);
    value_sum += lse_shifted(values, mu);
  }
  return problem.smooth_part(y) + value_sum / static_cast<double>(estimate.terms.size());
}

}  // namespace sspg
