#pragma once

#include "sspg/rng.hpp"
#include "sspg/smooth_core.hpp"

namespace sspg {

/// One hidden ReLU layer: out = w2 . relu(W1 a + b1) + b2.
struct MlpShape {
  Index inputs = 1;
  Index hidden = 3;

  /// Flat layout: W1 (row-major, hidden x inputs), b1, w2, b2.
  Index param_count() const { return hidden * inputs + 2 * hidden + 1; }
};

struct MlpParams {
  Mat w1;  // hidden x inputs
  Vec b1;
  Vec w2;
  double b2 = 0.0;

  MlpShape shape() const { return {w1.cols(), w1.rows()}; }
  Vec flatten() const;
  static MlpParams unflatten(const MlpShape& shape, const Vec& theta);
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias, in
/// flat order.
MlpParams mlp_init(const MlpShape& shape, RngStream& rng);

// The flat-vector forms below avoid materializing MlpParams; they read
// theta in the layout documented on MlpShape.

double mlp_forward(const MlpShape& shape, const Eigen::Ref<const Vec>& theta,
                   const Eigen::Ref<const Vec>& a);

/// d out / d theta in flat order. ReLU'(0) = 0.
Vec mlp_backward_theta(const MlpShape& shape, const Eigen::Ref<const Vec>& theta,
                       const Eigen::Ref<const Vec>& a);

/// d out / d a.
Vec mlp_backward_input(const MlpShape& shape, const Eigen::Ref<const Vec>& theta,
                       const Eigen::Ref<const Vec>& a);

double mlp_forward(const MlpParams& params, const Vec& a);
Vec mlp_backward_theta(const MlpParams& params, const Vec& a);
Vec mlp_backward_input(const MlpParams& params, const Vec& a);

}  // namespace sspg
