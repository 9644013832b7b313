#include "sspg/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace sspg {

namespace {

void check(const MlpShape& shape, const Eigen::Ref<const Vec>& theta,
           const Eigen::Ref<const Vec>& a) {
  if (shape.inputs < 1 || shape.hidden < 1) throw std::invalid_argument("mlp: empty shape");
  if (theta.size() != shape.param_count()) throw std::invalid_argument("mlp: parameter size mismatch");
  if (a.size() != shape.inputs) throw std::invalid_argument("mlp: input size mismatch");
}

// theta offsets
Index b1_at(const MlpShape& s) { return s.hidden * s.inputs; }
Index w2_at(const MlpShape& s) { return b1_at(s) + s.hidden; }
Index b2_at(const MlpShape& s) { return w2_at(s) + s.hidden; }

double preactivation(const MlpShape& s, const Eigen::Ref<const Vec>& theta,
                     const Eigen::Ref<const Vec>& a, Index h) {
  double acc = theta[b1_at(s) + h];
  const Index row = h * s.inputs;
  for (Index j = 0; j < s.inputs; ++j) acc += theta[row + j] * a[j];
  return acc;
}

}  // namespace

Vec MlpParams::flatten() const {
  const MlpShape s = shape();
  Vec theta(s.param_count());
  for (Index h = 0; h < s.hidden; ++h) {
    for (Index j = 0; j < s.inputs; ++j) theta[h * s.inputs + j] = w1(h, j);
  }
  theta.segment(b1_at(s), s.hidden) = b1;
  theta.segment(w2_at(s), s.hidden) = w2;
  theta[b2_at(s)] = b2;
  return theta;
}

MlpParams MlpParams::unflatten(const MlpShape& s, const Vec& theta) {
  if (theta.size() != s.param_count()) throw std::invalid_argument("mlp: parameter size mismatch");
  MlpParams p;
  p.w1.resize(s.hidden, s.inputs);
  for (Index h = 0; h < s.hidden; ++h) {
    for (Index j = 0; j < s.inputs; ++j) p.w1(h, j) = theta[h * s.inputs + j];
  }
  p.b1 = theta.segment(b1_at(s), s.hidden);
  p.w2 = theta.segment(w2_at(s), s.hidden);
  p.b2 = theta[b2_at(s)];
  return p;
}

MlpParams mlp_init(const MlpShape& s, RngStream& rng) {
  const double k1 = 1.0 / std::sqrt(static_cast<double>(s.inputs));
  const double k2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
  Vec theta(s.param_count());
  for (Index i = 0; i < w2_at(s); ++i) theta[i] = rng.uniform(-k1, k1);
  for (Index i = w2_at(s); i < theta.size(); ++i) theta[i] = rng.uniform(-k2, k2);
  return MlpParams::unflatten(s, theta);
}

double mlp_forward(const MlpShape& s, const Eigen::Ref<const Vec>& theta,
                   const Eigen::Ref<const Vec>& a) {
  check(s, theta, a);
  double out = theta[b2_at(s)];
  for (Index h = 0; h < s.hidden; ++h) {
    const double pre = preactivation(s, theta, a, h);
    if (pre > 0.0) out += theta[w2_at(s) + h] * pre;
  }
  return out;
}

Vec mlp_backward_theta(const MlpShape& s, const Eigen::Ref<const Vec>& theta,
                       const Eigen::Ref<const Vec>& a) {
  check(s, theta, a);
  Vec g = Vec::Zero(s.param_count());
  for (Index h = 0; h < s.hidden; ++h) {
    const double pre = preactivation(s, theta, a, h);
    if (pre <= 0.0) continue;
    const double w = theta[w2_at(s) + h];
    for (Index j = 0; j < s.inputs; ++j) g[h * s.inputs + j] = w * a[j];
    g[b1_at(s) + h] = w;
    g[w2_at(s) + h] = pre;
  }
  g[b2_at(s)] = 1.0;
  return g;
}

Vec mlp_backward_input(const MlpShape& s, const Eigen::Ref<const Vec>& theta,
                       const Eigen::Ref<const Vec>& a) {
  check(s, theta, a);
  Vec g = Vec::Zero(s.inputs);
  for (Index h = 0; h < s.hidden; ++h) {
    if (preactivation(s, theta, a, h) <= 0.0) continue;
    const double w = theta[w2_at(s) + h];
    for (Index j = 0; j < s.inputs; ++j) g[j] += w * theta[h * s.inputs + j];
  }
  return g;
}

double mlp_forward(const MlpParams& params, const Vec& a) {
  return mlp_forward(params.shape(), params.flatten(), a);
}

Vec mlp_backward_theta(const MlpParams& params, const Vec& a) {
  return mlp_backward_theta(params.shape(), params.flatten(), a);
}

Vec mlp_backward_input(const MlpParams& params, const Vec& a) {
  return mlp_backward_input(params.shape(), params.flatten(), a);
}

}  // namespace sspg
