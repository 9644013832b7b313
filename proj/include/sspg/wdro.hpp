#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "sspg/mlp.hpp"
#include "sspg/problem.hpp"
#include "sspg/prox.hpp"
#include "sspg/rng.hpp"

namespace sspg {

using ThetaRef = Eigen::Ref<const Vec>;

/// Dual of a Wasserstein DRO problem,
///   min_{theta, lambda >= lambda_min} lambda delta^p + mean_i max_z { l(theta, z) - lambda d(x_i, z) },
/// with d(x, z) = 0.5 ||x - z||^2 over the coordinates that are not frozen.
/// Frozen coordinates of z are pinned to the anchor through the per-term
/// support boxes.
struct WdroInstance {
  Index theta_dim = 0;
  std::function<double(ThetaRef theta, const Vec& z)> loss;
  std::function<Vec(ThetaRef theta, const Vec& z)> grad_theta_loss;
  std::function<Vec(ThetaRef theta, const Vec& z)> grad_z_loss;
  std::vector<bool> frozen;  // one flag per z coordinate
  double delta = 1.0;
  int order = 2;
  std::vector<Vec> data;
  std::vector<Box> supports;  // one per data point
  RegularizerSpec theta_domain = RegularizerSpec::zero();
  double lambda_min = 0.0;
  double lambda_cap = std::numeric_limits<double>::infinity();
  double lip_value = 1.0;
  double lip_grad = 0.0;
  /// Optional exact inner maximizer for data point i.
  std::function<InnerMaxResult(ThetaRef theta, double lambda, std::size_t i)> exact_inner;
};

void validate_instance(const WdroInstance& inst);

/// 0.5 sum over free coordinates of (x_j - z_j)^2.
double transport_cost(const std::vector<bool>& frozen, const Vec& x, const Vec& z);

/// Gradient of transport_cost in z; zero on frozen coordinates.
Vec transport_grad_z(const std::vector<bool>& frozen, const Vec& x, const Vec& z);

/// y = (theta, lambda). psi_i = l(theta, z) - lambda d(x_i, z), the affine
/// lambda delta^p is the smooth part, phi = theta_domain x [lambda_min, cap].
MinSumMaxProblem compile_to_minsummax(const WdroInstance& inst);

/// Box spanning the per-coordinate range of the points.
Box data_range_box(const std::vector<Vec>& points);

struct NewsvendorParams {
  double v = 5.0;  // underage
  double u = 7.0;  // overage
  double delta = 1.0;
  int order = 2;
  double lambda_min = 7.0;
  double lambda_cap = std::numeric_limits<double>::infinity();
};

/// l(theta, z) = v theta - u min(theta, z), d(x, z) = 0.5 (x - z)^2,
/// theta >= 0, Z = [min demand, max demand].
WdroInstance newsvendor_instance(const NewsvendorParams& params, const std::vector<double>& demands);

/// Exact maximizer of v theta - u min(theta, z) - 0.5 lambda (x - z)^2 over
/// z in [lo, hi]; ties go to the smaller z.
InnerMaxResult closed_form_newsvendor_argmax(double theta, double lambda, double x, double lo,
                                             double hi, double v = 5.0, double u = 7.0);

/// max(|v|, |v - u|, u) + max(lambda_cap diam, diam^2 / 2): bounds both the
/// y-gradient norm and the z-Lipschitz constant of psi for lambda <= lambda_cap.
double newsvendor_lip_bound(double v, double u, double lambda_cap, double diam);

/// Squared error of the MLP on z = (a, b) with the label b frozen.
/// Features are the rows of `features`.
WdroInstance regression_instance(const Mat& features, const Vec& targets, double delta, int order,
                                 double lambda_min, const MlpShape& shape, double lip_value = 1.0);

/// Root mean squared error of predict(a + upsilon * omega * ||a||) against
/// targets, omega with i.i.d. Laplace(0, 1) coordinates, one draw per row.
double evaluate_perturbed(const std::function<double(const Vec&)>& predict, const Mat& features,
                          const Vec& targets, double upsilon, RngStream& rng);

}  // namespace sspg
