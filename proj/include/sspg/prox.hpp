#pragma once

#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "sspg/smooth_core.hpp"

namespace sspg {

struct RegularizerSpec;

struct ZeroRegularizer {};

struct BoxIndicator {
  Vec lower;
  Vec upper;
};

/// Coordinatewise lower bounds; upper bounds may be +inf (the default).
struct HalfLineIndicator {
  Vec lower;
  Vec upper;
};

struct L1Regularizer {
  double weight = 0.0;
};

/// Blockwise regularizer; block b acts on the next sizes[b] coordinates.
struct ProductRegularizer {
  std::vector<Index> sizes;
  std::vector<RegularizerSpec> blocks;
};

struct RegularizerSpec {
  std::variant<ZeroRegularizer, BoxIndicator, HalfLineIndicator, L1Regularizer, ProductRegularizer>
      kind;

  static RegularizerSpec zero() { return {ZeroRegularizer{}}; }
  static RegularizerSpec box(Vec lower, Vec upper);
  /// Indicator of {v >= lower}, optionally capped at `cap` from above.
  static RegularizerSpec half_line(Vec lower,
                                   double cap = std::numeric_limits<double>::infinity());
  static RegularizerSpec l1(double weight);
  static RegularizerSpec product(std::vector<std::pair<Index, RegularizerSpec>> blocks);
};

/// Throws std::invalid_argument on unordered bounds, negative L1 weight or
/// inconsistent product sizes.
void validate_regularizer(const RegularizerSpec& reg);

/// argmin_x { alpha * reg(x) + 0.5 * ||x - v||^2 }.
Vec prox(const RegularizerSpec& reg, const Vec& v, double alpha);

/// reg(v); +inf outside the domain of an indicator.
double regularizer_value(const RegularizerSpec& reg, const Vec& v);

bool is_feasible(const RegularizerSpec& reg, const Vec& v);

/// Euclidean projection onto a Box or Ball support. A FiniteSet has no
/// projection in this sense and raises std::invalid_argument.
Vec project(const SupportSet& set, const Vec& v);

}  // namespace sspg
