#include "sspg/smooth_core.hpp"

#include "internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sspg {

namespace {

using detail::Overloaded;

double max_checked(std::span<const double> values) {
  double s = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw NumericalError("smoothing: psi evaluated to a non-finite value");
    }
    s = std::max(s, v);
  }
  if (!std::isfinite(s)) {
    throw NumericalError("smoothing: every psi value is -inf");
  }
  return s;
}

}  // namespace

void validate_support(const SupportSet& set) {
  std::visit(
      Overloaded{
          [](const FiniteSet& f) {
            if (f.points.empty()) throw std::invalid_argument("FiniteSet must be nonempty");
            const Index d = f.points.front().size();
            for (const Vec& p : f.points) {
              if (p.size() != d) throw std::invalid_argument("FiniteSet points differ in dimension");
            }
          },
          [](const Box& b) {
            if (b.lower.size() != b.upper.size()) {
              throw std::invalid_argument("Box bounds differ in dimension");
            }
            for (Index i = 0; i < b.lower.size(); ++i) {
              if (!(b.lower[i] <= b.upper[i])) {
                throw std::invalid_argument("Box requires lower <= upper componentwise");
              }
            }
          },
          [](const Ball& b) {
            if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
              throw std::invalid_argument("Ball radius must be positive and finite");
            }
          }},
      set);
}

Index support_dimension(const SupportSet& set) {
  return std::visit(Overloaded{[](const FiniteSet& f) { return f.points.front().size(); },
                               [](const Box& b) { return b.lower.size(); },
                               [](const Ball& b) { return b.center.size(); }},
                    set);
}

void check_mu(double mu) {
  if (!(mu >= kMinMu) || !std::isfinite(mu)) {
    std::ostringstream os;
    os << "smoothing parameter mu must be finite and >= " << kMinMu << ", got " << mu;
    throw std::domain_error(os.str());
  }
}

double lse_shifted(std::span<const double> values, double mu) {
  if (values.empty()) throw std::domain_error("lse_shifted: empty input");
  check_mu(mu);
  const double s = max_checked(values);
  if (values.size() == 1) return s;
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - s) / mu);
  return s + mu * (std::log(sum) - std::log(static_cast<double>(values.size())));
}

std::vector<double> softmax_weights(std::span<const double> values, double mu) {
  if (values.empty()) throw std::domain_error("softmax_weights: empty input");
  check_mu(mu);
  const double s = max_checked(values);
  std::vector<double> w(values.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    w[j] = std::exp((values[j] - s) / mu);
    sum += w[j];
  }
  for (double& x : w) x /= sum;
  return w;
}

SmoothEval smooth_over_values(const MaxTermSpec& term, const Vec& y,
                              std::span<const Vec> points,
                              std::span<const double> psi_values, double mu) {
  if (points.empty()) throw std::domain_error("smoothing over an empty point set");
  if (points.size() != psi_values.size()) {
    throw std::invalid_argument("smooth_over_values: points/values size mismatch");
  }
  check_mu(mu);
  SmoothEval out;
  out.mu = mu;
  out.shift = max_checked(psi_values);

  if (points.size() == 1) {
    out.value = psi_values[0];
    out.weights = {1.0};
    out.grad_y = term.grad_y_psi(y, points[0]);
    return out;
  }

  const std::size_t t = points.size();
  out.weights.resize(t);
  double sum = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    out.weights[j] = std::exp((psi_values[j] - out.shift) / mu);
    sum += out.weights[j];
  }
  out.value = out.shift + mu * (std::log(sum) - std::log(static_cast<double>(t)));
  for (double& w : out.weights) w /= sum;

  out.grad_y = Vec::Zero(y.size());
  for (std::size_t j = 0; j < t; ++j) {
    if (out.weights[j] == 0.0) continue;
    out.grad_y.noalias() += out.weights[j] * term.grad_y_psi(y, points[j]);
  }
  return out;
}

SmoothEval smooth_over_points(const MaxTermSpec& term, const Vec& y,
                              std::span<const Vec> points, double mu) {
  check_mu(mu);
  std::vector<double> values(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) values[j] = term.psi(y, points[j]);
  return smooth_over_values(term, y, points, values, mu);
}

SmoothEval smooth_value_finite(const MaxTermSpec& term, const Vec& y, double mu) {
  const auto* finite = std::get_if<FiniteSet>(&term.support);
  if (finite == nullptr) {
    throw std::invalid_argument("smooth_value_finite requires a FiniteSet support");
  }
  return smooth_over_points(term, y, finite->points, mu);
}

double smooth_grad_mu_values(std::span<const double> values, double mu) {
  if (values.empty()) throw std::domain_error("smooth_grad_mu: empty input");
  check_mu(mu);
  const double s = max_checked(values);
  if (values.size() == 1) return 0.0;
  double sum = 0.0;
  double weighted = 0.0;
  for (double v : values) {
    const double e = std::exp((v - s) / mu);
    sum += e;
    weighted += e * (v - s);
  }
  const double log_mean = std::log(sum) - std::log(static_cast<double>(values.size()));
  return log_mean - weighted / (sum * mu);
}

double smooth_grad_mu(const MaxTermSpec& term, const Vec& y, double mu) {
  const auto* finite = std::get_if<FiniteSet>(&term.support);
  if (finite == nullptr) {
    throw std::invalid_argument("smooth_grad_mu requires a FiniteSet support");
  }
  std::vector<double> values;
  values.reserve(finite->points.size());
  for (const Vec& z : finite->points) values.push_back(term.psi(y, z));
  return smooth_grad_mu_values(values, mu);
}

double grad_lipschitz_bound(double lip_value, double lip_grad, double mu) {
  check_mu(mu);
  return lip_grad + 2.0 * lip_value * lip_value / mu;
}

double grad_lipschitz_bound(const MaxTermSpec& term, double mu) {
  return grad_lipschitz_bound(term.lip_value, term.lip_grad, mu);
}

double mu_gap_bound_finite(std::size_t cardinality, double mu1, double mu2) {
  if (cardinality < 1) throw std::domain_error("mu_gap_bound_finite: cardinality must be >= 1");
  if (!(mu1 <= 1.0 && mu1 > mu2 && mu2 > 0.0)) {
    throw std::domain_error("mu_gap_bound_finite requires 1 >= mu1 > mu2 > 0");
  }
  return 2.0 * std::log(static_cast<double>(cardinality)) * (mu1 - mu2);
}

BoxExpectation linear_box_expectation(const Vec& a, double c, const Box& box, double mu) {
  check_mu(mu);
  validate_support(box);
  if (a.size() != box.lower.size()) {
    throw std::invalid_argument("linear_box_expectation: dimension mismatch");
  }
  double log_total = c / mu;
  for (Index i = 0; i < a.size(); ++i) {
    const double lo = box.lower[i];
    const double hi = box.upper[i];
    if (a[i] == 0.0) continue;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      throw std::domain_error("linear_box_expectation: unbounded coordinate with a_i != 0");
    }
    // psi_i = (e^p - e^q) / (p - q), the mean of e^t over t in [q, p].
    const double p = a[i] * hi / mu;
    const double q = a[i] * lo / mu;
    const double width = std::abs(p - q);
    if (width < 1e-8) {
      log_total += 0.5 * (p + q) + std::log1p(width * width / 24.0);
    } else {
      log_total += std::max(p, q) + std::log(-std::expm1(-width)) - std::log(width);
    }
  }
  return {std::exp(log_total), log_total};
}

}  // namespace sspg
