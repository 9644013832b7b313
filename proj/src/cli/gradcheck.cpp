#include <cmath>

#include "cli/setup.hpp"
#include "sspg/prox.hpp"
#include "sspg/smooth_core.hpp"

namespace sspg::cli {

namespace {

// Box supports become `count` uniform samples plus the projected anchor;
// pinned coordinates stay pinned.
MinSumMaxProblem sampled_surrogate(const MinSumMaxProblem& problem, int count, std::uint64_t seed) {
  MinSumMaxProblem out = problem;
  for (std::size_t i = 0; i < out.terms.size(); ++i) {
    MaxTermSpec& term = out.terms[i];
    const Box* box = std::get_if<Box>(&term.support);
    if (box == nullptr) continue;
    RngStream r = RngSpec{seed}.stream("gradcheck/support", 0, i);
    FiniteSet set;
    set.points.push_back(project(term.support, term.anchor));
    for (int k = 0; k < count; ++k) {
      Vec z(box->lower.size());
      for (Index j = 0; j < z.size(); ++j) z[j] = r.uniform(box->lower[j], box->upper[j]);
      set.points.push_back(std::move(z));
    }
    term.support = std::move(set);
  }
  return out;
}

struct Eval {
  double value = 0.0;
  Vec grad;
  double grad_mu = 0.0;
};

Eval evaluate(const MinSumMaxProblem& p, const Vec& y, double mu) {
  Eval e{p.smooth_part(y), p.smooth_part_grad(y), 0.0};
  const double n = static_cast<double>(p.size());
  for (const auto& t : p.terms) {
    const SmoothEval s = smooth_value_finite(t, y, mu);
    e.value += s.value / n;
    e.grad += s.grad_y / n;
    e.grad_mu += smooth_grad_mu(t, y, mu) / n;
  }
  return e;
}

double rel_error(double diff, double a, double b) { return diff / std::max({a, b, 1e-3}); }

}  // namespace

GradcheckReport gradcheck(const RunConfig& cfg) {
  validate_config(cfg);
  GradcheckReport rep;
  rep.points = cfg.gc_points;
  RunConfig c = cfg;
  c.estimator = cfg.experiment == "toy" ? "exact" : "gaussian";
  const Setup s = make_setup(c);
  const double mu = cfg.gc_mu;
  if (mu < 1e-6) {
    double l = 0.0;
    for (const auto& t : s.problem.terms) l = std::max(l, t.lip_value);
    rep.skipped = true;
    rep.warning = "mu = " + format_double(mu) + " is ill-conditioned (2 l^2 / mu = " +
                  format_double(2.0 * l * l / mu) + "); check skipped";
    return rep;
  }
  const MinSumMaxProblem p = sampled_surrogate(s.problem, cfg.gc_support, cfg.seed);
  const double h = cfg.gc_h;
  RngStream r = RngSpec{cfg.seed}.stream("gradcheck/points");
  for (int k = 0; k < cfg.gc_points; ++k) {
    Vec y = s.y0;
    for (Index j = 0; j < y.size(); ++j) y[j] += 0.5 * r.normal();
    y = prox(p.regularizer, y, 1.0);
    const Eval an = evaluate(p, y, mu);
    Vec fd(y.size());
    for (Index j = 0; j < y.size(); ++j) {
      Vec yp = y;
      Vec ym = y;
      yp[j] += h;
      ym[j] -= h;
      fd[j] = (evaluate(p, yp, mu).value - evaluate(p, ym, mu).value) / (2.0 * h);
    }
    const double fd_mu = (evaluate(p, y, mu + h).value - evaluate(p, y, mu - h).value) / (2.0 * h);
    rep.max_rel_error_y =
        std::max(rep.max_rel_error_y, rel_error((an.grad - fd).norm(), an.grad.norm(), fd.norm()));
    rep.max_rel_error_mu = std::max(
        rep.max_rel_error_mu, rel_error(std::abs(an.grad_mu - fd_mu), std::abs(an.grad_mu), std::abs(fd_mu)));
  }
  return rep;
}

}  // namespace sspg::cli
