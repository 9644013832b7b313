#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sspg/cli.hpp"
#include "sspg/data_io.hpp"
#include "sspg/estimators.hpp"
#include "sspg/prox.hpp"
#include "sspg/smooth_core.hpp"

namespace sspg::cli {

namespace {

constexpr Index kDim = 3;

Vec uniform_vec(RngStream& r, Index n, double lo, double hi) {
  Vec v(n);
  for (Index j = 0; j < n; ++j) v[j] = r.uniform(lo, hi);
  return v;
}

double log_uniform(RngStream& r, double lo, double hi) {
  return std::exp(r.uniform(std::log(lo), std::log(hi)));
}

// psi(y, z) = scale * a . y + c with z = (a, c); steep for large scale.
MaxTermSpec linear_term(RngStream& r, std::size_t card, double scale, bool lip_fault) {
  FiniteSet set;
  for (std::size_t j = 0; j < card; ++j) set.points.push_back(uniform_vec(r, kDim + 1, -1.0, 1.0));
  MaxTermSpec t;
  t.psi = [scale](const Vec& y, const Vec& z) { return scale * z.head(kDim).dot(y) + z[kDim]; };
  t.grad_y_psi = [scale](const Vec&, const Vec& z) -> Vec { return scale * z.head(kDim); };
  t.anchor = set.points.front();
  t.support = std::move(set);
  t.lip_value = lip_fault ? 0.01 : scale * std::sqrt(static_cast<double>(kDim));
  t.lip_grad = 0.0;
  return t;
}

// psi(y, z) = sin(a . y) + 0.5 b (a . y)^2 with z = (a, b).
MaxTermSpec curved_term(RngStream& r, std::size_t card) {
  FiniteSet set;
  for (std::size_t j = 0; j < card; ++j) set.points.push_back(uniform_vec(r, kDim + 1, -1.0, 1.0));
  MaxTermSpec t;
  t.psi = [](const Vec& y, const Vec& z) {
    const double s = z.head(kDim).dot(y);
    return std::sin(s) + 0.5 * z[kDim] * s * s;
  };
  t.grad_y_psi = [](const Vec& y, const Vec& z) -> Vec {
    const double s = z.head(kDim).dot(y);
    return (std::cos(s) + z[kDim] * s) * z.head(kDim);
  };
  t.anchor = set.points.front();
  t.support = std::move(set);
  t.lip_value = 4.0;
  t.lip_grad = 4.0;
  return t;
}

double max_psi(const MaxTermSpec& t, const Vec& y) {
  double m = -std::numeric_limits<double>::infinity();
  for (const Vec& z : std::get<FiniteSet>(t.support).points) m = std::max(m, t.psi(y, z));
  return m;
}

std::size_t cardinality(const MaxTermSpec& t) { return std::get<FiniteSet>(t.support).points.size(); }

SuiteResult finish(std::string name, std::size_t cases, double margin, std::string detail = {}) {
  return {std::move(name), margin >= 0.0, cases, margin, std::move(detail)};
}

SuiteResult sandwich_suite(std::uint64_t seed, bool fault) {
  RngStream r = RngSpec{seed}.stream("verify/sandwich");
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t cases = 1000;
  for (std::size_t c = 0; c < cases; ++c) {
    const MaxTermSpec t = linear_term(r, 1 + r.below(64), r.uniform(1.0, 50.0), fault);
    const Vec y = uniform_vec(r, kDim, -1.0, 1.0);
    const double mu = log_uniform(r, 1e-3, 10.0);
    const double v = smooth_value_finite(t, y, mu).value;
    const double m = max_psi(t, y);
    const double tol = 1e-9 * std::max(1.0, std::abs(m));
    const double lower = m - mu * std::log(static_cast<double>(cardinality(t)));
    margin = std::min({margin, v - lower + tol, m - v + tol});
  }
  return finish("sandwich", cases, margin);
}

SuiteResult monotonicity_suite(std::uint64_t seed, bool fault) {
  RngStream r = RngSpec{seed}.stream("verify/monotonicity");
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t cases = 1000;
  for (std::size_t c = 0; c < cases; ++c) {
    const MaxTermSpec t = linear_term(r, 1 + r.below(64), r.uniform(1.0, 50.0), fault);
    const Vec y = uniform_vec(r, kDim, -1.0, 1.0);
    double mu1 = log_uniform(r, 1e-3, 10.0);
    double mu2 = log_uniform(r, 1e-3, 10.0);
    if (mu1 > mu2) std::swap(mu1, mu2);
    const double v1 = smooth_value_finite(t, y, mu1).value;
    const double v2 = smooth_value_finite(t, y, mu2).value;
    margin = std::min(margin, v1 - v2 + 1e-12 * std::max(1.0, std::abs(v1)));
  }
  return finish("monotonicity", cases, margin);
}

double rel_error(double an, double fd) {
  return std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
}

SuiteResult finite_difference_suite(std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("verify/finite_difference");
  const double h = 1e-6;
  const double tol = 1e-5;
  double worst = 0.0;
  const std::size_t cases = 200;
  for (std::size_t c = 0; c < cases; ++c) {
    const MaxTermSpec t = curved_term(r, 2 + r.below(15));
    const Vec y = uniform_vec(r, kDim, -1.0, 1.0);
    const double mu = log_uniform(r, 0.1, 10.0);
    const Vec an = smooth_value_finite(t, y, mu).grad_y;
    Vec fd(kDim);
    for (Index j = 0; j < kDim; ++j) {
      Vec yp = y;
      Vec ym = y;
      yp[j] += h;
      ym[j] -= h;
      fd[j] = (smooth_value_finite(t, yp, mu).value - smooth_value_finite(t, ym, mu).value) / (2 * h);
    }
    worst = std::max(worst, (an - fd).norm() / std::max({an.norm(), fd.norm(), 1e-3}));
    const double an_mu = smooth_grad_mu(t, y, mu);
    const double fd_mu =
        (smooth_value_finite(t, y, mu + h).value - smooth_value_finite(t, y, mu - h).value) / (2 * h);
    worst = std::max(worst, rel_error(an_mu, fd_mu));
  }
  return finish("finite_difference", cases, tol - worst,
                "worst_rel_err=" + format_double(worst));
}

SuiteResult gradient_norm_suite(std::uint64_t seed, bool fault) {
  RngStream r = RngSpec{seed}.stream("verify/gradient_norm");
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t cases = 1000;
  for (std::size_t c = 0; c < cases; ++c) {
    const MaxTermSpec t = linear_term(r, 1 + r.below(64), r.uniform(1.0, 50.0), fault);
    const Vec y = uniform_vec(r, kDim, -1.0, 1.0);
    const double mu = log_uniform(r, 1e-3, 10.0);
    const double bound = t.lip_value * (1.0 + 1e-12);
    for (const Vec& z : std::get<FiniteSet>(t.support).points) {
      margin = std::min(margin, (bound - t.grad_y_psi(y, z).norm()) / t.lip_value);
    }
    margin = std::min(margin, (bound - smooth_value_finite(t, y, mu).grad_y.norm()) / t.lip_value);
  }
  return finish("gradient_norm", cases, margin);
}

SuiteResult mu_gap_suite(std::uint64_t seed, bool fault) {
  RngStream r = RngSpec{seed}.stream("verify/mu_gap");
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t cases = 1000;
  for (std::size_t c = 0; c < cases; ++c) {
    const MaxTermSpec t = linear_term(r, 1 + r.below(64), r.uniform(1.0, 50.0), fault);
    const Vec y = uniform_vec(r, kDim, -1.0, 1.0);
    double mu1 = r.uniform(1e-3, 1.0);
    double mu2 = r.uniform(1e-3, 1.0);
    if (mu1 < mu2) std::swap(mu1, mu2);
    if (mu1 == mu2) continue;
    const double v1 = smooth_value_finite(t, y, mu1).value;
    const double v2 = smooth_value_finite(t, y, mu2).value;
    const double bound = mu_gap_bound_finite(cardinality(t), mu1, mu2);
    margin = std::min(margin, bound - std::abs(v1 - v2) + 1e-12 * std::max(1.0, std::abs(v1)));
  }
  return finish("mu_gap", cases, margin);
}

// Support of 64 points within mu / (4 l) of a center angle, so psi
// oscillates by at most mu / 2 over it.
SuiteResult variance_suite(std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("verify/variance");
  const double l = 2.0;
  const double mu = 0.5;
  const double radius = mu / (4.0 * l);
  const double center = r.uniform(0.0, 2.0 * std::numbers::pi);
  FiniteSet set;
  for (int j = 0; j < 64; ++j) set.points.push_back(Vec::Constant(1, center + r.uniform(-radius, radius)));
  MaxTermSpec t;
  t.psi = [l](const Vec& y, const Vec& z) { return l * (y[0] * std::cos(z[0]) + y[1] * std::sin(z[0])); };
  t.grad_y_psi = [l](const Vec&, const Vec& z) -> Vec {
    Vec g(2);
    g << l * std::cos(z[0]), l * std::sin(z[0]);
    return g;
  };
  t.anchor = set.points.front();
  t.support = std::move(set);
  t.lip_value = l;
  Vec y = uniform_vec(r, 2, -1.0, 1.0);
  if (y.norm() > 1.0) y /= y.norm();
  const Vec exact = smooth_value_finite(t, y, mu).grad_y;
  const int draws = 10000;
  double margin = std::numeric_limits<double>::infinity();
  std::string detail;
  for (int m : {8, 32, 128}) {
    double sum = 0.0;
    for (int d = 0; d < draws; ++d) {
      RngStream s = RngSpec{seed}.stream("verify/variance/draw", static_cast<std::uint64_t>(m),
                                        static_cast<std::uint64_t>(d));
      sum += (finite_sampler_estimator(t, y, mu, m, s).grad - exact).squaredNorm();
    }
    const double bound = 1.5 * 12.0 * l * l / m;
    const double measured = sum / draws;
    margin = std::min(margin, (bound - measured) / bound);
    detail += (detail.empty() ? "" : " ") + std::string("M") + std::to_string(m) + "=" +
              format_double(measured) + "/" + format_double(bound);
  }
  return finish("variance", 3 * draws, margin, detail);
}

Vec soft_threshold(const Vec& v, double t) {
  Vec out(v.size());
  for (Index j = 0; j < v.size(); ++j) out[j] = std::copysign(std::max(std::abs(v[j]) - t, 0.0), v[j]);
  return out;
}

SuiteResult prox_suite(std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("verify/prox");
  double worst = 0.0;
  const std::size_t cases = 1000;
  for (std::size_t c = 0; c < cases; ++c) {
    const Index n = 1 + static_cast<Index>(r.below(6));
    const Vec v = uniform_vec(r, n, -5.0, 5.0);
    const Vec v2 = uniform_vec(r, n, -5.0, 5.0);
    const double alpha = log_uniform(r, 1e-3, 10.0);
    Vec lo = uniform_vec(r, n, -3.0, 0.0);
    Vec hi = lo + uniform_vec(r, n, 0.0, 3.0);
    const double cap = r.uniform(0.0, 4.0);
    const double w = r.uniform(0.0, 2.0);
    const std::vector<std::pair<RegularizerSpec, Vec>> cases_here = {
        {RegularizerSpec::box(lo, hi), v.cwiseMax(lo).cwiseMin(hi)},
        {RegularizerSpec::half_line(lo, cap), v.cwiseMax(lo).cwiseMin(Vec::Constant(n, cap)).cwiseMax(lo)},
        {RegularizerSpec::l1(w), soft_threshold(v, alpha * w)},
        {RegularizerSpec::zero(), v},
    };
    for (const auto& [reg, expect] : cases_here) {
      if (std::holds_alternative<HalfLineIndicator>(reg.kind) && (lo.array() > cap).any()) continue;
      const Vec p = prox(reg, v, alpha);
      worst = std::max(worst, (p - expect).lpNorm<Eigen::Infinity>());
      const double expansion = (p - prox(reg, v2, alpha)).norm() - (v - v2).norm();
      worst = std::max(worst, expansion);
    }
    const Vec head = v.head(1);
    const Vec tail = v.tail(n - 1);
    const RegularizerSpec prod = RegularizerSpec::product(
        {{1, RegularizerSpec::box(lo.head(1), hi.head(1))}, {n - 1, RegularizerSpec::l1(w)}});
    Vec expect(n);
    expect << head.cwiseMax(lo.head(1)).cwiseMin(hi.head(1)), soft_threshold(tail, alpha * w);
    worst = std::max(worst, (prox(prod, v, alpha) - expect).lpNorm<Eigen::Infinity>());
  }
  return finish("prox", cases, 1e-12 - worst, "worst_err=" + format_double(worst));
}

char random_char(RngStream& r) {
  static constexpr std::string_view alphabet = "0123456789:.-+eE \t\n\r xinfa";
  if (r.below(8) == 0) return static_cast<char>(r.below(256));
  return alphabet[r.below(alphabet.size())];
}

Dataset random_dataset(RngStream& r) {
  const Index rows = 1 + static_cast<Index>(r.below(5));
  const Index width = 1 + static_cast<Index>(r.below(6));
  Mat x = Mat::Zero(rows, width);
  Vec b(rows);
  for (Index i = 0; i < rows; ++i) {
    b[i] = r.uniform(-1e3, 1e3);
    for (Index j = 0; j < width; ++j) {
      if (r.below(2) == 0) x(i, j) = r.normal() * std::pow(10.0, r.uniform(-5.0, 5.0));
    }
  }
  // Keep the last column populated so the parsed width matches.
  for (Index i = 0; i < rows; ++i) {
    if (x(i, width - 1) == 0.0) x(i, width - 1) = 1.0;
  }
  return make_dataset(std::move(x), std::move(b));
}

SuiteResult parser_fuzz_suite(std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("verify/parser_fuzz");
  const std::size_t cases = 100000;
  std::size_t failures = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (std::size_t c = 0; c < cases; ++c) {
    const Dataset d = random_dataset(r);
    const std::string text = serialize_sparse_regression(d);
    if (c % 10 == 0) {
      try {
        const Dataset back = parse_sparse_regression_text(text);
        if (back.features != d.features || back.targets != d.targets ||
            serialize_sparse_regression(back) != text) {
          fail("round trip mismatch");
        }
      } catch (const std::exception& e) {
        fail(std::string("round trip threw: ") + e.what());
      }
    }
    std::string fuzzed = text;
    const int edits = 1 + static_cast<int>(r.below(5));
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = fuzzed.empty() ? 0 : r.below(fuzzed.size());
      switch (r.below(4)) {
        case 0:
          if (!fuzzed.empty()) fuzzed[pos] = random_char(r);
          break;
        case 1:
          if (!fuzzed.empty()) fuzzed.erase(pos, 1);
          break;
        case 2:
          fuzzed.insert(fuzzed.begin() + static_cast<std::ptrdiff_t>(pos), random_char(r));
          break;
        default:
          fuzzed.insert(pos, std::to_string(r.below(100000)));
          break;
      }
    }
    try {
      const Dataset parsed = parse_sparse_regression_text(fuzzed);
      const std::string canon = serialize_sparse_regression(parsed);
      if (serialize_sparse_regression(parse_sparse_regression_text(canon)) != canon) {
        fail("canonical form not stable");
      }
    } catch (const ParseError&) {
    } catch (const std::exception& e) {
      fail(std::string("unstructured error: ") + e.what());
    }
  }
  return {"parser_fuzz", failures == 0, cases, failures == 0 ? 0.0 : -static_cast<double>(failures),
          failures == 0 ? std::string() : first};
}

double simpson_mean_exp(double k, double lo, double hi, double shift, int intervals) {
  const double h = (hi - lo) / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::exp(k * (lo + i * h) - shift);
  }
  return sum * h / 3.0 / (hi - lo);
}

SuiteResult box_expectation_suite(std::uint64_t seed) {
  RngStream r = RngSpec{seed}.stream("verify/box_expectation");
  double worst = 0.0;
  const std::size_t cases = 100;
  for (std::size_t c = 0; c < cases; ++c) {
    const Index n = 1 + static_cast<Index>(r.below(4));
    const double mu = log_uniform(r, 0.05, 5.0);
    Box box{uniform_vec(r, n, -2.0, 1.0), Vec(n)};
    box.upper = box.lower + uniform_vec(r, n, 0.1, 2.0);
    Vec a = uniform_vec(r, n, -1.0, 1.0);
    for (Index j = 0; j < n; ++j) {
      const double span = std::abs(a[j]) * (box.upper[j] - box.lower[j]) / mu;
      if (span > 20.0) a[j] *= 20.0 / span;
    }
    const double cc = r.uniform(-1.0, 1.0);
    double log_quad = cc / mu;
    for (Index j = 0; j < n; ++j) {
      const double k = a[j] / mu;
      const double shift = std::max(k * box.lower[j], k * box.upper[j]);
      log_quad += shift + std::log(simpson_mean_exp(k, box.lower[j], box.upper[j], shift, 4000));
    }
    const double closed = linear_box_expectation(a, cc, box, mu).log_value;
    worst = std::max(worst, std::abs(std::expm1(closed - log_quad)));
  }
  return finish("box_expectation", cases, 1e-9 - worst, "worst_rel_err=" + format_double(worst));
}

}  // namespace

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
  const bool fault = options.planted_lip_fault;
  const std::uint64_t seed = options.seed;
  return {
      sandwich_suite(seed, fault),   monotonicity_suite(seed, fault), finite_difference_suite(seed),
      gradient_norm_suite(seed, fault), mu_gap_suite(seed, fault),    variance_suite(seed),
      prox_suite(seed),              parser_fuzz_suite(seed),         box_expectation_suite(seed),
  };
}

}  // namespace sspg::cli
