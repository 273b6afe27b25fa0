#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinnode/problems.hpp"

namespace pinnode {

/// Sampled solution. `states` is row-major (size() x dim).
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  int dim = 0;
  std::vector<std::string> columns;
  std::string method;
  double rtol = 0.0;
  double atol = 0.0;
  long accepted = 0;
  long rejected = 0;

  std::size_t size() const { return times.size(); }
  std::span<const double> state(std::size_t i) const {
    return {states.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  double at(std::size_t i, int j) const { return states[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]; }
};

/// n equally spaced points on [a, b], endpoints included.
std::vector<double> linspace(double a, double b, std::size_t n);

/// Classical fourth-order Runge-Kutta on the reduced first-order system,
/// n_steps steps of size h from the problem's initial time. Throws
/// NumericalError carrying the last finite time when the state blows up.
Trajectory rk4_integrate(const OdeProblem& problem, double h, std::size_t n_steps);

struct Rk45Options {
  double rtol = 1e-9;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0: automatic
  long max_steps = 50'000'000;
};

/// Dormand-Prince 5(4) with step-size control, reporting the reduced state
/// at every grid time through the pair's continuous extension. The grid must
/// be nondecreasing and start at or after the initial time.
Trajectory adaptive_rk45_integrate(const OdeProblem& problem, std::span<const double> grid,
                                   const Rk45Options& options = {});
/// Convenience form over [a, b] with n output points; a must equal the
/// problem's initial time and b >= a.
Trajectory adaptive_rk45_integrate(const OdeProblem& problem, double a, double b, std::size_t n,
                                   const Rk45Options& options = {});

/// Position components on `grid`: the closed form when available, otherwise
/// a tight-tolerance Dormand-Prince solve.
Trajectory reference_positions(const OdeProblem& problem, std::span<const double> grid,
                               const Rk45Options& options = {});

/// Observed values x_j(t_i), possibly corrupted by additive noise.
struct ObservationSet {
  std::vector<double> times;
  std::vector<double> values;  // row-major (times.size() x components.size())
  std::vector<int> components;  // problem component indices observed
  double sigma = 0.0;

  bool empty() const { return times.empty(); }
  std::size_t size() const { return times.size(); }
  double at(std::size_t i, std::size_t c) const { return values[i * components.size() + c]; }
};

/// x_hat = x + sigma * eps with eps ~ N(0, 1) drawn independently per time
/// and per component; identical seeds give identical noise.
ObservationSet add_gaussian_noise(const Trajectory& traj, double sigma, std::uint64_t seed);

}  // namespace pinnode
