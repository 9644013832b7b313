#pragma once

#include <optional>

#include "sspg/cli.hpp"
#include "sspg/data_io.hpp"
#include "sspg/mlp.hpp"

namespace sspg::cli {

struct RegressionContext {
  ScaledPair data;
  MlpShape shape;
};

/// Instance, starting point and mu0 of a configured experiment. With
/// estimator = exact, box supports are replaced by the grid surrogate.
struct Setup {
  MinSumMaxProblem problem;
  Vec y0;
  double mu0 = 0.0;
  std::optional<RegressionContext> reg;
};

Setup make_setup(const RunConfig& cfg);

}  // namespace sspg::cli
