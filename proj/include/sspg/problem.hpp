#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sspg/prox.hpp"
#include "sspg/smooth_core.hpp"

namespace sspg {

struct InnerMaxResult {
  Vec z_star;
  double value = 0.0;
};

/// min_y phi(y) + s(y) + (1/n) sum_i max_{z in Z_i} psi_i(y, z), where s is
/// an optional smooth term kept outside the smoothing (e.g. lambda delta^p).
struct MinSumMaxProblem {
  Index dim = 0;
  std::vector<MaxTermSpec> terms;
  /// Either empty or one z-gradient per term; needed by the inner ascent.
  std::vector<GradFn> grad_z_psi;
  std::function<double(const Vec&)> smooth_value;
  std::function<Vec(const Vec&)> smooth_grad;
  RegularizerSpec regularizer = RegularizerSpec::zero();
  /// Coordinate of y reported as `lambda` in traces, when meaningful.
  std::optional<Index> lambda_index;
  /// Optional exact maximizer of term i at y (used for primal estimates).
  std::function<InnerMaxResult(std::size_t term, const Vec& y)> exact_inner;

  std::size_t size() const { return terms.size(); }
  double smooth_part(const Vec& y) const { return smooth_value ? smooth_value(y) : 0.0; }
  Vec smooth_part_grad(const Vec& y) const {
    return smooth_grad ? smooth_grad(y) : Vec::Zero(y.size());
  }
};

/// Throws std::invalid_argument when sizes are inconsistent.
void validate_problem(const MinSumMaxProblem& problem);

}  // namespace sspg
