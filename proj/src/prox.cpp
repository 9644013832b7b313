#include "sspg/prox.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "internal.hpp"

namespace sspg {

using detail::Overloaded;

RegularizerSpec RegularizerSpec::box(Vec lower, Vec upper) {
  RegularizerSpec r{BoxIndicator{std::move(lower), std::move(upper)}};
  validate_regularizer(r);
  return r;
}

RegularizerSpec RegularizerSpec::half_line(Vec lower, double cap) {
  Vec upper = Vec::Constant(lower.size(), cap);
  RegularizerSpec r{HalfLineIndicator{std::move(lower), std::move(upper)}};
  validate_regularizer(r);
  return r;
}

RegularizerSpec RegularizerSpec::l1(double weight) {
  RegularizerSpec r{L1Regularizer{weight}};
  validate_regularizer(r);
  return r;
}

RegularizerSpec RegularizerSpec::product(std::vector<std::pair<Index, RegularizerSpec>> blocks) {
  ProductRegularizer p;
  for (auto& [size, spec] : blocks) {
    p.sizes.push_back(size);
    p.blocks.push_back(std::move(spec));
  }
  RegularizerSpec r{std::move(p)};
  validate_regularizer(r);
  return r;
}

namespace {

void check_bounds(const Vec& lower, const Vec& upper) {
  if (lower.size() != upper.size()) throw std::invalid_argument("bounds differ in dimension");
  for (Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("bounds must satisfy lower <= upper");
  }
}

void check_dim(const Vec& bound, const Vec& v) {
  if (bound.size() != v.size()) throw std::invalid_argument("regularizer dimension mismatch");
}

Vec clamp(const Vec& v, const Vec& lower, const Vec& upper) {
  check_dim(lower, v);
  return v.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

void validate_regularizer(const RegularizerSpec& reg) {
  std::visit(Overloaded{[](const ZeroRegularizer&) {},
                        [](const BoxIndicator& b) { check_bounds(b.lower, b.upper); },
                        [](const HalfLineIndicator& h) { check_bounds(h.lower, h.upper); },
                        [](const L1Regularizer& l) {
                          if (!(l.weight >= 0.0)) throw std::invalid_argument("L1 weight must be >= 0");
                        },
                        [](const ProductRegularizer& p) {
                          if (p.sizes.size() != p.blocks.size()) {
                            throw std::invalid_argument("product regularizer: sizes/blocks mismatch");
                          }
                          for (std::size_t b = 0; b < p.blocks.size(); ++b) {
                            if (p.sizes[b] < 0) throw std::invalid_argument("negative block size");
                            validate_regularizer(p.blocks[b]);
                          }
                        }},
             reg.kind);
}

Vec prox(const RegularizerSpec& reg, const Vec& v, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("prox: alpha must be positive");
  return std::visit(
      Overloaded{[&](const ZeroRegularizer&) -> Vec { return v; },
                 [&](const BoxIndicator& b) -> Vec { return clamp(v, b.lower, b.upper); },
                 [&](const HalfLineIndicator& h) -> Vec { return clamp(v, h.lower, h.upper); },
                 [&](const L1Regularizer& l) -> Vec {
                   const double t = alpha * l.weight;
                   Vec out(v.size());
                   for (Index i = 0; i < v.size(); ++i) {
                     const double a = std::abs(v[i]) - t;
                     out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
                   }
                   return out;
                 },
                 [&](const ProductRegularizer& p) -> Vec {
                   const Index total = std::accumulate(p.sizes.begin(), p.sizes.end(), Index{0});
                   if (total != v.size()) throw std::invalid_argument("product regularizer: dimension mismatch");
                   Vec out(v.size());
                   Index offset = 0;
                   for (std::size_t b = 0; b < p.blocks.size(); ++b) {
                     out.segment(offset, p.sizes[b]) =
                         prox(p.blocks[b], v.segment(offset, p.sizes[b]), alpha);
                     offset += p.sizes[b];
                   }
                   return out;
                 }},
      reg.kind);
}

double regularizer_value(const RegularizerSpec& reg, const Vec& v) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  return std::visit(
      Overloaded{[&](const ZeroRegularizer&) { return 0.0; },
                 [&](const BoxIndicator& b) {
                   check_dim(b.lower, v);
                   return ((v.array() >= b.lower.array()) && (v.array() <= b.upper.array())).all() ? 0.0 : kInf;
                 },
                 [&](const HalfLineIndicator& h) {
                   check_dim(h.lower, v);
                   return ((v.array() >= h.lower.array()) && (v.array() <= h.upper.array())).all() ? 0.0 : kInf;
                 },
                 [&](const L1Regularizer& l) { return l.weight * v.lpNorm<1>(); },
                 [&](const ProductRegularizer& p) {
                   double total = 0.0;
                   Index offset = 0;
                   for (std::size_t b = 0; b < p.blocks.size(); ++b) {
                     total += regularizer_value(p.blocks[b], v.segment(offset, p.sizes[b]));
                     offset += p.sizes[b];
                   }
                   if (offset != v.size()) throw std::invalid_argument("product regularizer: dimension mismatch");
                   return total;
                 }},
      reg.kind);
}

bool is_feasible(const RegularizerSpec& reg, const Vec& v) {
  return std::isfinite(regularizer_value(reg, v));
}

Vec project(const SupportSet& set, const Vec& v) {
  return std::visit(
      Overloaded{[](const FiniteSet&) -> Vec {
                   throw std::invalid_argument("project: FiniteSet has no Euclidean projection here");
                 },
                 [&](const Box& b) -> Vec { return clamp(v, b.lower, b.upper); },
                 [&](const Ball& b) -> Vec {
                   check_dim(b.center, v);
                   const Vec d = v - b.center;
                   const double norm = d.norm();
                   if (norm <= b.radius) return v;
                   return b.center + (b.radius / norm) * d;
                 }},
      set);
}

}  // namespace sspg
