#include "pinnode/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pinnode/errors.hpp"

namespace pinnode {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

AdamState::AdamState(std::size_t n, AdamOptions options) : opt_(options), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(std::span<double> theta, std::span<const double> grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) throw ContractViolation("adam: size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericalError("adam: non-finite gradient", steps_);
  ++steps_;
  beta1_power_ *= opt_.beta1;
  beta2_power_ *= opt_.beta2;
  const double c1 = 1.0 - beta1_power_;
  const double c2 = 1.0 - beta2_power_;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    m_[k] = opt_.beta1 * m_[k] + (1.0 - opt_.beta1) * grad[k];
    v_[k] = opt_.beta2 * v_[k] + (1.0 - opt_.beta2) * grad[k] * grad[k];
    const double mhat = m_[k] / c1;
    const double vhat = v_[k] / c2;
    theta[k] -= opt_.learning_rate * mhat / (std::sqrt(vhat) + opt_.epsilon);
  }
}

StageResult adam_run(const Objective& f, std::span<const double> theta0, long iterations, const AdamOptions& options,
                     const IterationCallback& callback) {
  StageResult res;
  std::vector<double> theta(theta0.begin(), theta0.end());
  std::vector<double> grad(theta.size());
  AdamState state(theta.size(), options);
  res.theta = theta;
  res.loss = std::numeric_limits<double>::infinity();

  for (long it = 0; it <= iterations; ++it) {
    const bool final_eval = it == iterations;
    const double loss = f(theta, final_eval ? std::span<double>{} : std::span<double>(grad));
    ++res.evaluations;
    if (std::isfinite(loss) && loss < res.loss) {
      res.loss = loss;
      res.theta = theta;
    }
    if (callback && !callback(it, loss, theta)) {
      res.stopped = true;
      break;
    }
    if (final_eval) break;
    if (!std::isfinite(loss)) throw NumericalError("adam: non-finite loss", it);
    state.step(theta, grad);
    res.iterations = it + 1;
  }
  return res;
}

std::string to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::max_iterations: return "max-iterations";
    case LbfgsStatus::line_search_failed: return "line-search-failed";
    case LbfgsStatus::stopped: return "stopped";
  }
  return "max-iterations";
}

bool LbfgsHistory::push(std::vector<double> s, std::vector<double> y) {
  const double sy = dot(s, y);
  if (!(sy > 0.0) || !std::isfinite(sy)) return false;
  if (static_cast<int>(s_.size()) == capacity_) {
    s_.erase(s_.begin());
    y_.erase(y_.begin());
    rho_.erase(rho_.begin());
  }
  rho_.push_back(1.0 / sy);
  s_.push_back(std::move(s));
  y_.push_back(std::move(y));
  return true;
}

std::vector<double> LbfgsHistory::direction(std::span<const double> g) const {
  std::vector<double> q(g.begin(), g.end());
  const std::size_t m = s_.size();
  std::vector<double> alpha(m);
  for (std::size_t i = m; i-- > 0;) {
    alpha[i] = rho_[i] * dot(s_[i], q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * y_[i][k];
  }
  if (m > 0) {
    const double gamma = dot(s_.back(), y_.back()) / dot(y_.back(), y_.back());
    for (double& x : q) x *= gamma;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho_[i] * dot(y_[i], q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += s_[i][k] * (alpha[i] - beta);
  }
  for (double& x : q) x = -x;
  return q;
}

void LbfgsHistory::clear() noexcept {
  s_.clear();
  y_.clear();
  rho_.clear();
}

namespace {

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;
  std::vector<double> grad;
};

// Minimizer of the cubic interpolating (f, f') at a and b, safeguarded to
// the middle 80% of the bracket; bisection when the data are unusable.
double cubic_step(const Probe& a, const Probe& b) {
  const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
  const double mid = 0.5 * (lo + hi);
  if (!std::isfinite(b.f) || !std::isfinite(b.dphi)) return mid;
  const double d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.dphi * b.dphi;
  if (!(disc >= 0.0)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double x = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
  if (!std::isfinite(x)) return mid;
  const double margin = 0.1 * (hi - lo);
  return std::clamp(x, lo + margin, hi - margin);
}

struct LineSearch {
  const Objective& f;
  const LbfgsOptions& opt;
  std::span<const double> x;
  std::span<const double> d;
  double f0;
  double dphi0;
  std::vector<double> trial;
  int evals = 0;

  Probe eval(double alpha) {
    Probe p;
    p.alpha = alpha;
    p.grad.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] + alpha * d[k];
    p.f = f(trial, p.grad);
    ++evals;
    p.dphi = std::isfinite(p.f) ? dot(p.grad, d) : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  bool armijo(const Probe& p) const { return std::isfinite(p.f) && p.f <= f0 + opt.c1 * p.alpha * dphi0; }
  bool curvature(const Probe& p) const { return std::abs(p.dphi) <= -opt.c2 * dphi0; }

  // Returns the accepted probe (the last one evaluated) or nothing; `best`
  // keeps the lowest Armijo-satisfying probe for the failure path.
  bool zoom(Probe lo, Probe hi, Probe& out, Probe& best) {
    while (evals < opt.max_line_search_evals) {
      const double a = cubic_step(lo, hi);
      Probe p = eval(a);
      if (armijo(p) && (!best.grad.size() || p.f < best.f)) best = p;
      if (!armijo(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (curvature(p)) {
          out = std::move(p);
          return true;
        }
        if (p.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(p);
      }
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
    }
    return false;
  }

  bool run(double alpha0, Probe& out, Probe& best) {
    Probe prev;
    prev.alpha = 0.0;
    prev.f = f0;
    prev.dphi = dphi0;
    double alpha = alpha0;
    for (int i = 0; evals < opt.max_line_search_evals; ++i) {
      Probe p = eval(alpha);
      if (armijo(p) && (!best.grad.size() || p.f < best.f)) best = p;
      if (!armijo(p) || (i > 0 && p.f >= prev.f)) return zoom(std::move(prev), std::move(p), out, best);
      if (curvature(p)) {
        out = std::move(p);
        return true;
      }
      if (p.dphi >= 0.0) return zoom(std::move(p), std::move(prev), out, best);
      prev = std::move(p);
      alpha *= 2.0;
    }
    return false;
  }
};

}  // namespace

LbfgsResult lbfgs_run(const Objective& f, std::span<const double> theta0, const LbfgsOptions& opt,
                      const IterationCallback& callback) {
  LbfgsResult res;
  const std::size_t n = theta0.size();
  std::vector<double> x(theta0.begin(), theta0.end());
  std::vector<double> g(n);
  double fx = f(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx)) throw NumericalError("lbfgs: non-finite loss at the starting point");
  res.theta = x;
  res.loss = fx;
  res.grad_max_norm = max_abs(g);

  LbfgsHistory hist(opt.history);
  for (long it = 0;; ++it) {
    if (max_abs(g) <= opt.tolerance) {
      res.status = LbfgsStatus::converged;
      break;
    }
    if (it >= opt.max_iterations) {
      res.status = LbfgsStatus::max_iterations;
      break;
    }
    std::vector<double> d = hist.direction(g);
    double dphi0 = dot(g, d);
    if (!(dphi0 < 0.0)) {
      hist.clear();
      d = hist.direction(g);
      dphi0 = dot(g, d);
    }
    const double alpha0 = hist.size() == 0 ? std::min(1.0, 1.0 / std::max(max_abs(g), 1e-300)) : 1.0;

    LineSearch ls{f, opt, x, d, fx, dphi0, std::vector<double>(n)};
    Probe accepted, best;
    bool ok = ls.run(alpha0, accepted, best);
    res.evaluations += ls.evals;
    bool reevaluate = false;
    if (!ok) {
      if (best.grad.empty() || !(best.f < fx)) {
        res.status = LbfgsStatus::line_search_failed;
        break;
      }
      accepted = std::move(best);
      reevaluate = true;
    }

    std::vector<double> s(n), y(n), x_new(n);
    for (std::size_t k = 0; k < n; ++k) {
      x_new[k] = x[k] + accepted.alpha * d[k];
      s[k] = x_new[k] - x[k];
      y[k] = accepted.grad[k] - g[k];
    }
    hist.push(std::move(s), std::move(y));
    x = std::move(x_new);
    g = std::move(accepted.grad);
    fx = accepted.f;
    if (reevaluate) {
      // The callback contract is "just evaluated at the new iterate".
      fx = f(x, g);
      ++res.evaluations;
    }
    res.iterations = it + 1;
    res.grad_max_norm = max_abs(g);
    if (fx < res.loss) {
      res.loss = fx;
      res.theta = x;
    }
    if (callback && !callback(it + 1, fx, x)) {
      res.status = LbfgsStatus::stopped;
      res.stopped = true;
      break;
    }
  }
  return res;
}

TwoStageResult two_stage_train(const Objective& f, std::span<const double> theta0, long adam_iterations,
                               const AdamOptions& adam, const LbfgsOptions& lbfgs,
                               const IterationCallback& adam_callback, const IterationCallback& lbfgs_callback) {
  if (adam_iterations < 0 || lbfgs.max_iterations < 0) throw ConfigError("iteration counts must be non-negative");
  TwoStageResult out;
  out.adam = adam_run(f, theta0, adam_iterations, adam, adam_callback);
  out.theta = out.adam.theta;
  out.loss = out.adam.loss;
  if (out.adam.stopped || lbfgs.max_iterations == 0) return out;
  out.lbfgs = lbfgs_run(f, out.adam.theta, lbfgs, lbfgs_callback);
  out.ran_lbfgs = true;
  if (out.lbfgs.loss <= out.loss) {
    out.theta = out.lbfgs.theta;
    out.loss = out.lbfgs.loss;
  }
  return out;
}

}  // namespace pinnode
