#include "pinnode/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pinnode/errors.hpp"
#include "pinnode/rng.hpp"

namespace pinnode {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<std::string> state_columns(const OdeProblem& p) {
  std::vector<std::string> cols;
  for (const auto& c : p.components) {
    cols.push_back(c);
    if (p.order == 2) cols.push_back("d" + c);
  }
  return cols;
}

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

}  // namespace

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 1) out.back() = b;
  return out;
}

Trajectory rk4_integrate(const OdeProblem& problem, double h, std::size_t n_steps) {
  if (!(h > 0.0)) throw ConfigError("rk4: step size must be positive");
  const auto d = static_cast<std::size_t>(problem.state_dimension());
  Trajectory traj;
  traj.dim = static_cast<int>(d);
  traj.columns = state_columns(problem);
  traj.method = "rk4";
  traj.times.reserve(n_steps + 1);
  traj.states.reserve((n_steps + 1) * d);

  std::vector<double> y = problem.initial_state(), k1(d), k2(d), k3(d), k4(d), tmp(d);
  double t = problem.t_start;
  traj.times.push_back(t);
  traj.states.insert(traj.states.end(), y.begin(), y.end());
  for (std::size_t n = 0; n < n_steps; ++n) {
    problem.rhs(t, y, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    problem.rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    problem.rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    problem.rhs(t + h, tmp, k4);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(tmp)) throw NumericalError("rk4: state blew up", static_cast<long>(n), t);
    y.swap(tmp);
    t = problem.t_start + static_cast<double>(n + 1) * h;
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), y.begin(), y.end());
    ++traj.accepted;
  }
  return traj;
}

Trajectory adaptive_rk45_integrate(const OdeProblem& problem, std::span<const double> grid,
                                   const Rk45Options& opt) {
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw ConfigError("rk45: tolerances must be positive");
  if (grid.empty()) throw ConfigError("rk45: empty output grid");
  if (grid.front() < problem.t_start) throw ConfigError("rk45: output grid starts before the initial time");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw ConfigError("rk45: output grid must be nondecreasing (no backward integration)");

  const auto d = static_cast<std::size_t>(problem.state_dimension());
  Trajectory traj;
  traj.dim = static_cast<int>(d);
  traj.columns = state_columns(problem);
  traj.method = "dopri5";
  traj.rtol = opt.rtol;
  traj.atol = opt.atol;
  traj.times.assign(grid.begin(), grid.end());
  traj.states.resize(grid.size() * d);

  std::vector<double> y = problem.initial_state(), y1(d), k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), tmp(d);
  std::vector<double> r1(d), r2(d), r3(d), r4(d), r5(d);
  double t = problem.t_start;
  const double t_final = grid.back();
  std::size_t next = 0;
  auto emit_exact = [&](double tt, std::span<const double> state) {
    while (next < grid.size() && grid[next] == tt) {
      std::copy(state.begin(), state.end(), traj.states.begin() + static_cast<std::ptrdiff_t>(next * d));
      ++next;
    }
  };
  emit_exact(t, y);
  if (next == grid.size()) return traj;

  auto wnorm = [&](std::span<const double> v, std::span<const double> ref) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(ref[i]);
      acc += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(d));
  };

  problem.rhs(t, y, k1);
  double h = opt.initial_step;
  if (h <= 0.0) {
    // Starting step from the scale of y and y' (Hairer, Norsett, Wanner).
    const double dn0 = wnorm(y, y), dn1 = wnorm(k1, y);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, t_final - t);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h0 * k1[i];
    problem.rhs(t + h0, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) k3[i] = k2[i] - k1[i];
    const double dn2 = wnorm(k3, y) / h0;
    const double m = std::max(dn1, dn2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min(h, t_final - t);

  const double span_len = std::max(std::abs(t_final - problem.t_start), 1.0);
  long steps = 0;
  while (next < grid.size()) {
    if (steps++ > opt.max_steps) throw StiffnessError("rk45: step budget exhausted", steps, t);
    if (h < 1e-14 * span_len) throw StiffnessError("rk45: step size underflow", steps, t);
    const bool last = t + h >= t_final;
    if (last) h = t_final - t;

    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    problem.rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    problem.rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    problem.rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    problem.rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < d; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    problem.rhs(t + h, tmp, k6);
    for (std::size_t i = 0; i < d; ++i)
      y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    problem.rhs(t + h, y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = std::sqrt(err / static_cast<double>(d));
    if (!std::isfinite(err) || !all_finite(y1)) {
      ++traj.rejected;
      h *= 0.2;
      continue;
    }

    if (err <= 1.0) {
      ++traj.accepted;
      const double t_new = last ? t_final : t + h;
      for (std::size_t i = 0; i < d; ++i) {
        r1[i] = y[i];
        r2[i] = y1[i] - y[i];
        r3[i] = h * k1[i] - r2[i];
        r4[i] = r2[i] - h * k7[i] - r3[i];
        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      while (next < grid.size() && grid[next] <= t_new) {
        const double th = h > 0.0 ? (grid[next] - t) / h : 1.0;
        const double th1 = 1.0 - th;
        for (std::size_t i = 0; i < d; ++i)
          traj.states[next * d + i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        ++next;
      }
      t = t_new;
      y.swap(y1);
      k1.swap(k7);  // first-same-as-last
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
      if (t_final - t > 0.0) h = std::min(h, t_final - t);
    } else {
      ++traj.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  return traj;
}

Trajectory adaptive_rk45_integrate(const OdeProblem& problem, double a, double b, std::size_t n,
                                   const Rk45Options& options) {
  if (b < a) throw ConfigError("rk45: backward integration (b < a) is not supported");
  if (a != problem.t_start) throw ConfigError("rk45: interval must start at the problem's initial time");
  const auto grid = linspace(a, b, n);
  return adaptive_rk45_integrate(problem, grid, options);
}

Trajectory reference_positions(const OdeProblem& problem, std::span<const double> grid, const Rk45Options& options) {
  Trajectory out;
  out.dim = problem.dimension;
  out.columns = problem.components;
  out.times.assign(grid.begin(), grid.end());
  out.states.resize(grid.size() * static_cast<std::size_t>(problem.dimension));
  std::vector<double> state(static_cast<std::size_t>(problem.state_dimension()));
  if (problem.has_analytic()) {
    out.method = "analytic";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      problem.analytic_state(grid[i], state);
      const auto pos = problem.positions(state);
      std::copy(pos.begin(), pos.end(), out.states.begin() + static_cast<std::ptrdiff_t>(i * pos.size()));
    }
    return out;
  }
  const Trajectory full = adaptive_rk45_integrate(problem, grid, options);
  out.method = full.method;
  out.rtol = full.rtol;
  out.atol = full.atol;
  out.accepted = full.accepted;
  out.rejected = full.rejected;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pos = problem.positions(full.state(i));
    std::copy(pos.begin(), pos.end(), out.states.begin() + static_cast<std::ptrdiff_t>(i * pos.size()));
  }
  return out;
}

ObservationSet add_gaussian_noise(const Trajectory& traj, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("noise level must be non-negative");
  ObservationSet obs;
  obs.times = traj.times;
  obs.values = traj.states;
  obs.sigma = sigma;
  for (int j = 0; j < traj.dim; ++j) obs.components.push_back(j);
  CounterRng rng(seed, /*stream=*/0x9015e);
  if (sigma > 0.0)
    for (double& v : obs.values) v += sigma * rng.normal();
  return obs;
}

}  // namespace pinnode
