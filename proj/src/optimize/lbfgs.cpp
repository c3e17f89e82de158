#include "rba/optimize/lbfgs.hpp"

#include <cmath>

#include "rba/common/error.hpp"

namespace rba::opt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

/// Minimizer of the cubic through (a, fa, dfa) and (b, fb, dfb); falls back
/// to bisection when the interpolant is degenerate or leaves the bracket.
double cubic_min(double a, double fa, double dfa, double b, double fb, double dfb) {
  const double d1 = dfa + dfb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - dfa * dfb;
  if (disc < 0.0) return 0.5 * (a + b);
  const double d2 = std::sqrt(disc) * (b > a ? 1.0 : -1.0);
  const double denom = dfb - dfa + 2.0 * d2;
  if (denom == 0.0) return 0.5 * (a + b);
  double t = b - (b - a) * (dfb + d2 - d1) / denom;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) return 0.5 * (a + b);
  return t;
}

}  // namespace

Lbfgs::Lbfgs(std::size_t dim, const Config& cfg) : cfg_(cfg), dim_(dim) {
  require(cfg.memory >= 1, "lbfgs: memory must be positive");
  require(0.0 < cfg.c1 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0, "lbfgs: need 0 < c1 < c2 < 1");
}

void Lbfgs::clear_history() { history_.clear(); }

std::vector<double> Lbfgs::direction(const std::vector<double>& g) const {
  std::vector<double> q(g);
  if (history_.empty()) {
    for (double& x : q) x = -x;
    return q;
  }
  const int m = static_cast<int>(history_.size());
  std::vector<double> alpha(m), rho(m);
  for (int i = m - 1; i >= 0; --i) {
    const auto& p = history_[i];
    rho[i] = 1.0 / dot(p.s, p.y);
    alpha[i] = rho[i] * dot(p.s, q);
    for (std::size_t j = 0; j < dim_; ++j) q[j] -= alpha[i] * p.y[j];
  }
  const auto& last = history_.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& x : q) x *= gamma;
  for (int i = 0; i < m; ++i) {
    const auto& p = history_[i];
    const double beta = rho[i] * dot(p.y, q);
    for (std::size_t j = 0; j < dim_; ++j) q[j] += (alpha[i] - beta) * p.s[j];
  }
  for (double& x : q) x = -x;
  return q;
}

Lbfgs::StepResult Lbfgs::step(std::vector<double>& x, double f0, std::vector<double>& g0,
                              const Objective& objective) {
  require(x.size() == dim_ && g0.size() == dim_, "lbfgs: dimension mismatch");
  StepResult result{f0, false, false};
  if (norm_inf(g0) <= cfg_.grad_tol) {
    result.converged = true;
    return result;
  }

  std::vector<double> x_trial(dim_), g_trial(dim_), g_best(dim_);

  // Strong Wolfe search along d (Nocedal & Wright 3.5/3.6). Returns the
  // accepted alpha or 0; on success x_trial/g_trial/f_trial hold the new
  // point.
  double f_trial = f0;
  auto phi = [&](double alpha, const std::vector<double>& d) {
    for (std::size_t j = 0; j < dim_; ++j) x_trial[j] = x[j] + alpha * d[j];
    f_trial = objective(x_trial, g_trial);
    return f_trial;
  };

  auto line_search = [&](const std::vector<double>& d, double alpha0) -> double {
    const double dphi0 = dot(g0, d);
    if (dphi0 >= 0.0) return 0.0;  // not a descent direction

    struct Eval {
      double a, f, df;
    };
    auto eval = [&](double a) -> Eval {
      const double f = phi(a, d);
      return {a, f, dot(g_trial, d)};
    };

    auto zoom = [&](Eval lo, Eval hi) -> double {
      for (int it = 0; it < cfg_.max_line_iters; ++it) {
        const double a = cubic_min(lo.a, lo.f, lo.df, hi.a, hi.f, hi.df);
        Eval e = eval(a);
        if (e.f > f0 + cfg_.c1 * a * dphi0 || e.f >= lo.f) {
          hi = e;
        } else {
          if (std::fabs(e.df) <= -cfg_.c2 * dphi0) return e.a;
          if (e.df * (hi.a - lo.a) >= 0.0) hi = lo;
          lo = e;
        }
        if (std::fabs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::fabs(lo.a))) break;
      }
      // Bracket collapsed: accept the low point if it at least satisfies
      // sufficient decrease.
      if (lo.a > 0.0 && lo.f <= f0 + cfg_.c1 * lo.a * dphi0) {
        phi(lo.a, d);
        return lo.a;
      }
      return 0.0;
    };

    Eval prev{0.0, f0, dphi0};
    double alpha = alpha0;
    for (int it = 0; it < cfg_.max_line_iters; ++it) {
      Eval e = eval(alpha);
      if (!std::isfinite(e.f)) {  // overshoot into overflow: shrink hard
        alpha *= 0.25;
        continue;
      }
      if (e.f > f0 + cfg_.c1 * alpha * dphi0 || (it > 0 && e.f >= prev.f)) return zoom(prev, e);
      if (std::fabs(e.df) <= -cfg_.c2 * dphi0) return e.a;
      if (e.df >= 0.0) return zoom(e, prev);
      prev = e;
      alpha = std::min(alpha * 2.0, 1e10);
    }
    return 0.0;
  };

  auto try_direction = [&](const std::vector<double>& d, double alpha0) -> double {
    return line_search(d, alpha0);
  };

  std::vector<double> d = direction(g0);
  double alpha0 = 1.0;
  if (first_step_ || history_.empty()) {
    const double gnorm = std::sqrt(dot(g0, g0));
    alpha0 = std::min(1.0, 1.0 / std::max(gnorm, 1e-12));
  }
  double alpha = try_direction(d, alpha0);

  if (alpha == 0.0 && !history_.empty()) {
    // Rejected step: drop the history and retry once along -g.
    clear_history();
    d = g0;
    for (double& v : d) v = -v;
    const double gnorm = std::sqrt(dot(g0, g0));
    alpha = try_direction(d, std::min(1.0, 1.0 / std::max(gnorm, 1e-12)));
  }
  if (alpha == 0.0) {
    result.converged = true;  // no acceptable step along steepest descent
    return result;
  }

  Pair pair;
  pair.s.resize(dim_);
  pair.y.resize(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    pair.s[j] = x_trial[j] - x[j];
    pair.y[j] = g_trial[j] - g0[j];
  }
  if (dot(pair.s, pair.y) > 0.0) {
    history_.push_back(std::move(pair));
    if (static_cast<int>(history_.size()) > cfg_.memory) history_.pop_front();
  }

  x = x_trial;
  g0 = g_trial;
  result.f = f_trial;
  result.moved = true;
  first_step_ = false;
  return result;
}

}  // namespace rba::opt
