#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace sspg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when an evaluation produces a non-finite value that the
/// stabilized formulas cannot absorb.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest temperature accepted anywhere in the library.
inline constexpr double kMinMu = 1e-12;

struct FiniteSet {
  std::vector<Vec> points;
};

/// Axis-aligned box. A coordinate with lower == upper is pinned.
struct Box {
  Vec lower;
  Vec upper;
};

struct Ball {
  Vec center;
  double radius = 1.0;
};

using SupportSet = std::variant<FiniteSet, Box, Ball>;

/// Throws std::invalid_argument when the set violates its invariants.
void validate_support(const SupportSet& set);
Index support_dimension(const SupportSet& set);

using PsiFn = std::function<double(const Vec& y, const Vec& z)>;
using GradFn = std::function<Vec(const Vec& y, const Vec& z)>;

/// One inner-max term max_{z in support} psi(y, z). The anchor (data point)
/// is captured by the callables; it is also kept here for initialization of
/// inner solvers.
struct MaxTermSpec {
  PsiFn psi;
  GradFn grad_y_psi;
  SupportSet support;
  double lip_value = 1.0;  // bound on ||grad_y psi|| (and Lipschitz const in z)
  double lip_grad = 0.0;   // Lipschitz constant of grad_y psi in y
  Vec anchor;
};

/// Result of evaluating mu * log mean_j exp(psi(y, z_j) / mu).
struct SmoothEval {
  double value = 0.0;
  Vec grad_y;
  std::vector<double> weights;  // softmax of psi / mu over evaluated points
  double shift = 0.0;           // max psi, subtracted before exponentiation
  double mu = 0.0;
};

/// Throws std::domain_error unless mu is finite and >= kMinMu.
void check_mu(double mu);

/// s + mu * log(mean_j exp((v_j - s) / mu)) with s = max_j v_j.
double lse_shifted(std::span<const double> values, double mu);

/// Softmax of values / mu, shifted by the max. Weights sum to one.
std::vector<double> softmax_weights(std::span<const double> values, double mu);

/// Smoothed value and y-gradient over an explicit list of points with
/// uniform measure. This is the common kernel of the exact finite
/// evaluation and of every sampling estimator.
SmoothEval smooth_over_points(const MaxTermSpec& term, const Vec& y,
                              std::span<const Vec> points, double mu);

/// Same as smooth_over_points with precomputed psi values; gradients of psi
/// are still evaluated through the term.
SmoothEval smooth_over_values(const MaxTermSpec& term, const Vec& y,
                              std::span<const Vec> points,
                              std::span<const double> psi_values, double mu);

/// Requires a FiniteSet support; uniform measure over its points.
SmoothEval smooth_value_finite(const MaxTermSpec& term, const Vec& y, double mu);

/// d/dmu of the smoothed value over the finite support:
/// log mean exp(psi/mu) - (1/mu) * sum_j w_j psi_j, evaluated with the same
/// max shift as the value.
double smooth_grad_mu(const MaxTermSpec& term, const Vec& y, double mu);
double smooth_grad_mu_values(std::span<const double> values, double mu);

/// L_psi + 2 l_psi^2 / mu.
double grad_lipschitz_bound(double lip_value, double lip_grad, double mu);
double grad_lipschitz_bound(const MaxTermSpec& term, double mu);

/// 2 log(cardinality) (mu1 - mu2) for 1 >= mu1 > mu2 > 0.
double mu_gap_bound_finite(std::size_t cardinality, double mu1, double mu2);

struct BoxExpectation {
  double value = 0.0;      // E[exp((a.z + c)/mu)], may be +inf when huge
  double log_value = 0.0;  // always finite
};

/// Expectation of exp((a.z + c)/mu) for z uniform on an axis-aligned box,
/// in closed form per coordinate.
BoxExpectation linear_box_expectation(const Vec& a, double c, const Box& box, double mu);

}  // namespace sspg
