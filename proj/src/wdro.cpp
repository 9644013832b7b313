#include "sspg/wdro.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace sspg {

void validate_instance(const WdroInstance& inst) {
  if (inst.theta_dim < 1) throw std::invalid_argument("wdro: theta_dim must be >= 1");
  if (!inst.loss || !inst.grad_theta_loss || !inst.grad_z_loss) {
    throw std::invalid_argument("wdro: loss callables missing");
  }
  if (inst.data.empty()) throw std::invalid_argument("wdro: empty data");
  if (!(inst.delta > 0.0)) throw std::invalid_argument("wdro: delta must be positive");
  if (inst.order < 1) throw std::invalid_argument("wdro: order must be >= 1");
  if (inst.supports.size() != inst.data.size()) {
    throw std::invalid_argument("wdro: need one support per data point");
  }
  const Index dz = inst.data.front().size();
  if (static_cast<Index>(inst.frozen.size()) != dz) {
    throw std::invalid_argument("wdro: frozen mask must match the data width");
  }
  for (std::size_t i = 0; i < inst.data.size(); ++i) {
    const Vec& x = inst.data[i];
    const Box& box = inst.supports[i];
    if (x.size() != dz || box.lower.size() != dz) throw std::invalid_argument("wdro: inconsistent dimensions");
    validate_support(box);
    for (Index j = 0; j < dz; ++j) {
      if (inst.frozen[static_cast<std::size_t>(j)] &&
          (box.lower[j] != x[j] || box.upper[j] != x[j])) {
        throw std::invalid_argument("wdro: frozen coordinates must be pinned to the anchor");
      }
    }
  }
  if (!(inst.lambda_min >= 0.0) || !(inst.lambda_cap >= inst.lambda_min)) {
    throw std::invalid_argument("wdro: need 0 <= lambda_min <= lambda_cap");
  }
  validate_regularizer(inst.theta_domain);
}

double transport_cost(const std::vector<bool>& frozen, const Vec& x, const Vec& z) {
  if (x.size() != z.size() || static_cast<Index>(frozen.size()) != x.size()) {
    throw std::invalid_argument("transport_cost: dimension mismatch");
  }
  double acc = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    if (frozen[static_cast<std::size_t>(j)]) continue;
    const double d = x[j] - z[j];
    acc += d * d;
  }
  return 0.5 * acc;
}

Vec transport_grad_z(const std::vector<bool>& frozen, const Vec& x, const Vec& z) {
  if (x.size() != z.size() || static_cast<Index>(frozen.size()) != x.size()) {
    throw std::invalid_argument("transport_grad_z: dimension mismatch");
  }
  Vec g(x.size());
  for (Index j = 0; j < x.size(); ++j) g[j] = frozen[static_cast<std::size_t>(j)] ? 0.0 : z[j] - x[j];
  return g;
}

MinSumMaxProblem compile_to_minsummax(const WdroInstance& instance) {
  validate_instance(instance);
  auto inst = std::make_shared<const WdroInstance>(instance);
  const Index d = inst->theta_dim;
  const double slope = std::pow(inst->delta, inst->order);

  MinSumMaxProblem problem;
  problem.dim = d + 1;
  problem.lambda_index = d;
  problem.terms.reserve(inst->data.size());
  problem.grad_z_psi.reserve(inst->data.size());
  for (std::size_t i = 0; i < inst->data.size(); ++i) {
    MaxTermSpec term;
    term.psi = [inst, i, d](const Vec& y, const Vec& z) {
      return inst->loss(y.head(d), z) - y[d] * transport_cost(inst->frozen, inst->data[i], z);
    };
    term.grad_y_psi = [inst, i, d](const Vec& y, const Vec& z) {
      Vec g(d + 1);
      g.head(d) = inst->grad_theta_loss(y.head(d), z);
      g[d] = -transport_cost(inst->frozen, inst->data[i], z);
      return g;
    };
    term.support = inst->supports[i];
    term.lip_value = inst->lip_value;
    term.lip_grad = inst->lip_grad;
    term.anchor = inst->data[i];
    problem.terms.push_back(std::move(term));
    problem.grad_z_psi.push_back([inst, i, d](const Vec& y, const Vec& z) -> Vec {
      return inst->grad_z_loss(y.head(d), z) - y[d] * transport_grad_z(inst->frozen, inst->data[i], z);
    });
  }
  problem.smooth_value = [d, slope](const Vec& y) { return y[d] * slope; };
  problem.smooth_grad = [d, slope](const Vec& y) {
    Vec g = Vec::Zero(y.size());
    g[d] = slope;
    return g;
  };
  problem.regularizer = RegularizerSpec::product(
      {{d, inst->theta_domain},
       {1, RegularizerSpec::half_line(Vec::Constant(1, inst->lambda_min), inst->lambda_cap)}});
  if (inst->exact_inner) {
    problem.exact_inner = [inst, d](std::size_t i, const Vec& y) {
      return inst->exact_inner(y.head(d), y[d], i);
    };
  }
  return problem;
}

Box data_range_box(const std::vector<Vec>& points) {
  if (points.empty()) throw std::invalid_argument("data_range_box: no points");
  Box box{points.front(), points.front()};
  for (const Vec& p : points) {
    if (p.size() != box.lower.size()) throw std::invalid_argument("data_range_box: ragged points");
    box.lower = box.lower.cwiseMin(p);
    box.upper = box.upper.cwiseMax(p);
  }
  return box;
}

InnerMaxResult closed_form_newsvendor_argmax(double theta, double lambda, double x, double lo,
                                             double hi, double v, double u) {
  if (!(lambda > 0.0)) throw std::domain_error("closed_form_newsvendor_argmax: lambda must be positive");
  if (!(lo <= hi)) throw std::invalid_argument("closed_form_newsvendor_argmax: lo > hi");
  auto psi = [&](double z) { return v * theta - u * std::min(theta, z) - 0.5 * lambda * (x - z) * (x - z); };
  if (lo == hi) return {Vec::Constant(1, lo), psi(lo)};

  double best_z = std::clamp(theta, lo, hi);
  double best = psi(best_z);
  auto offer = [&](double z) {
    const double val = psi(z);
    if (val > best || (val == best && z < best_z)) {
      best = val;
      best_z = z;
    }
  };
  // z <= theta: concave with peak x - u / lambda.
  const double up = std::min(theta, hi);
  if (lo <= up) offer(std::clamp(x - u / lambda, lo, up));
  // z >= theta: concave with peak x.
  const double down = std::max(theta, lo);
  if (down <= hi) offer(std::clamp(x, down, hi));
  return {Vec::Constant(1, best_z), best};
}

double newsvendor_lip_bound(double v, double u, double lambda_cap, double diam) {
  const double g = std::max({std::abs(v), std::abs(v - u), std::abs(u)});
  return g + std::max(lambda_cap * diam, 0.5 * diam * diam);
}

WdroInstance newsvendor_instance(const NewsvendorParams& prm, const std::vector<double>& demands) {
  if (demands.empty()) throw std::invalid_argument("newsvendor_instance: no demands");
  const auto [min_it, max_it] = std::minmax_element(demands.begin(), demands.end());
  const double lo = *min_it;
  const double hi = *max_it;
  const double v = prm.v;
  const double u = prm.u;

  WdroInstance inst;
  inst.theta_dim = 1;
  inst.loss = [v, u](ThetaRef theta, const Vec& z) { return v * theta[0] - u * std::min(theta[0], z[0]); };
  // At theta == z the z >= theta branch is used: d/dtheta = v - u, d/dz = 0.
  inst.grad_theta_loss = [v, u](ThetaRef theta, const Vec& z) {
    return Vec::Constant(1, theta[0] <= z[0] ? v - u : v);
  };
  inst.grad_z_loss = [u](ThetaRef theta, const Vec& z) {
    return Vec::Constant(1, z[0] < theta[0] ? -u : 0.0);
  };
  inst.frozen = {false};
  inst.delta = prm.delta;
  inst.order = prm.order;
  for (double x : demands) {
    inst.data.push_back(Vec::Constant(1, x));
    inst.supports.push_back(Box{Vec::Constant(1, lo), Vec::Constant(1, hi)});
  }
  inst.theta_domain = RegularizerSpec::half_line(Vec::Zero(1));
  inst.lambda_min = prm.lambda_min;
  inst.lambda_cap = prm.lambda_cap;
  const double diam = hi - lo;
  inst.lip_value = std::max(std::abs(v), std::abs(v - u)) + 0.5 * diam * diam;
  if (!(inst.lip_value > 0.0)) inst.lip_value = 1.0;
  inst.lip_grad = 0.0;
  std::vector<double> xs = demands;
  inst.exact_inner = [xs, lo, hi, v, u](ThetaRef theta, double lambda, std::size_t i) {
    return closed_form_newsvendor_argmax(theta[0], lambda, xs[i], lo, hi, v, u);
  };
  return inst;
}

WdroInstance regression_instance(const Mat& features, const Vec& targets, double delta, int order,
                                 double lambda_min, const MlpShape& shape, double lip_value) {
  if (features.rows() < 1) throw std::invalid_argument("regression_instance: empty data");
  if (features.rows() != targets.size()) throw std::invalid_argument("regression_instance: row mismatch");
  if (features.cols() != shape.inputs) throw std::invalid_argument("regression_instance: feature width mismatch");
  const Index q = features.cols();

  WdroInstance inst;
  inst.theta_dim = shape.param_count();
  inst.loss = [shape, q](ThetaRef theta, const Vec& z) {
    const double r = mlp_forward(shape, theta, z.head(q)) - z[q];
    return r * r;
  };
  inst.grad_theta_loss = [shape, q](ThetaRef theta, const Vec& z) -> Vec {
    const double r = mlp_forward(shape, theta, z.head(q)) - z[q];
    return 2.0 * r * mlp_backward_theta(shape, theta, z.head(q));
  };
  inst.grad_z_loss = [shape, q](ThetaRef theta, const Vec& z) -> Vec {
    const double r = mlp_forward(shape, theta, z.head(q)) - z[q];
    Vec g = Vec::Zero(q + 1);
    g.head(q) = 2.0 * r * mlp_backward_input(shape, theta, z.head(q));
    return g;
  };
  inst.frozen.assign(static_cast<std::size_t>(q + 1), false);
  inst.frozen.back() = true;
  inst.delta = delta;
  inst.order = order;
  const Vec col_min = features.colwise().minCoeff().transpose();
  const Vec col_max = features.colwise().maxCoeff().transpose();
  for (Index i = 0; i < features.rows(); ++i) {
    Vec x(q + 1);
    x.head(q) = features.row(i).transpose();
    x[q] = targets[i];
    Box box{Vec(q + 1), Vec(q + 1)};
    box.lower.head(q) = col_min;
    box.upper.head(q) = col_max;
    box.lower[q] = box.upper[q] = targets[i];
    inst.data.push_back(std::move(x));
    inst.supports.push_back(std::move(box));
  }
  inst.theta_domain = RegularizerSpec::zero();
  inst.lambda_min = lambda_min;
  inst.lip_value = lip_value;
  return inst;
}

double evaluate_perturbed(const std::function<double(const Vec&)>& predict, const Mat& features,
                          const Vec& targets, double upsilon, RngStream& rng) {
  if (!(upsilon >= 0.0)) throw std::domain_error("evaluate_perturbed: upsilon must be >= 0");
  if (features.rows() != targets.size() || features.rows() == 0) {
    throw std::invalid_argument("evaluate_perturbed: need matching, nonempty rows");
  }
  double sq = 0.0;
  Vec a(features.cols());
  for (Index i = 0; i < features.rows(); ++i) {
    a = features.row(i).transpose();
    const double scale = upsilon * a.norm();
    for (Index j = 0; j < a.size(); ++j) a[j] += scale * rng.laplace();
    const double e = predict(a) - targets[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(features.rows()));
}

}  // namespace sspg
