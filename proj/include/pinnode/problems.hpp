#pragma once

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pinnode/taylor2.hpp"

namespace pinnode {

/// An ODE system in residual form. Residuals are monic in the highest
/// derivative: r_j = u_j' - f_j(t, u) for first-order systems and
/// r_j = u_j'' - g_j(t, u, u') for second-order ones, so r vanishes exactly
/// on a solution and the explicit right-hand side is recovered as -r with
/// the highest derivative set to zero.
class OdeProblem {
 public:
  virtual ~OdeProblem() = default;

  std::string name;
  int dimension = 1;  // s
  int order = 1;      // 1 or 2
  double t_start = 0.0;
  double t_end = 1.0;
  std::vector<double> u0;  // u(t_start)
  std::vector<double> v0;  // u'(t_start), order-2 only
  std::map<std::string, double> params;
  std::vector<std::string> components;
  /// Characteristic time used to scale the network input.
  double time_scale = 1.0;
  /// Meaning of each entry of a positional loss-weight list, e.g.
  /// {"ode", "data", "ic:0", "ic:1"}.
  std::vector<std::string> weight_layout;
  std::vector<double> default_weights;

  virtual void residual(double t, std::span<const Taylor2<double>> u, std::span<double> r) const = 0;
  virtual void residual(double t, std::span<const Taylor2<Var>> u, std::span<Var> r) const = 0;

  virtual bool has_analytic() const { return false; }
  /// Reduced state (see state_dimension) of the closed-form solution.
  virtual void analytic_state(double t, std::span<double> state) const;

  /// s for first-order systems; 2s for second-order, laid out as
  /// (u_1, u_1', u_2, u_2', ...).
  int state_dimension() const { return dimension * order; }
  std::vector<double> initial_state() const;
  /// First-order reduction y' = F(t, y) built from the residual.
  void rhs(double t, std::span<const double> y, std::span<double> dy) const;
  /// Position components of a reduced state.
  std::vector<double> positions(std::span<const double> state) const;
};

using ProblemPtr = std::shared_ptr<const OdeProblem>;

/// Presets: "lorenz", "lotka-volterra", "mass-spring", "rlc". Overrides may
/// name any preset parameter plus "t_start", "t_end" and the initial values.
ProblemPtr make_problem(const std::string& name, const std::map<std::string, double>& overrides = {});
std::vector<std::string> problem_names();

// --- Lorenz -----------------------------------------------------------------

struct LorenzParams {
  double delta = 10.0;
  double rho = 15.0;
  double beta = 8.0 / 3.0;
};

std::array<double, 3> lorenz_rhs(const std::array<double, 3>& state, const LorenzParams& p);
/// V = x^2 + y^2 + (z - rho)^2.
double lorenz_energy(const std::array<double, 3>& state, double rho);
/// Constants of the bound dV/dt <= K V + C0: K = delta - 2, C0 = beta rho^2
/// (valid for delta >= 2).
struct LorenzEnergyBound {
  double k;
  double c0;
};
LorenzEnergyBound lorenz_energy_bound(const LorenzParams& p);

// --- Lotka-Volterra ---------------------------------------------------------

/// dx/dt = alpha x - beta x y, dy/dt = -gamma y + delta x y.
struct LotkaVolterraParams {
  double alpha = 15.0;
  double beta = 95.0;
  double gamma = 10.5;
  double delta = 57.0;
};

std::array<double, 2> lotka_volterra_rhs(const std::array<double, 2>& state, const LotkaVolterraParams& p = {});

// --- Coupled mass-spring ----------------------------------------------------

/// m1 x'' + (k1 + k2) x - k2 y = 0,  m2 y'' + k2 y - k2 x = 0.
struct MassSpringParams {
  double m1 = 2.0;
  double m2 = 1.0;
  double k1 = 4.0;
  double k2 = 2.0;
};

/// Monic residuals (x'' + 3x - y, y'' + 2y - 2x for the defaults).
std::array<double, 2> mass_spring_residual(double t, double x, double x2, double y, double y2,
                                           const MassSpringParams& p = {});
/// Reduction matrix A of u' = A u with u = (x, x', y, y').
std::array<std::array<double, 4>, 4> mass_spring_matrix(const MassSpringParams& p = {});
std::array<double, 4> mass_spring_reduction(const std::array<double, 4>& u, const MassSpringParams& p = {});
/// det(lambda I - A), by complex Gaussian elimination.
std::complex<double> mass_spring_characteristic(std::complex<double> lambda, const MassSpringParams& p = {});
/// x(t) = 2 cos t + cos 2t, y(t) = 4 cos t - cos 2t.
std::array<double, 2> mass_spring_analytic(double t);

// --- Parallel RLC circuit ---------------------------------------------------

struct RlcParams {
  double r = 20000.0;
  double l = 8.0;
  double c = 0.125e-6;
  double forcing = 0.0;  // constant f(t)
};

/// C v'' + v'/R + v/L - f(t). Throws ConfigError when R or L is zero.
double rlc_residual(double t, double v, double v1, double v2, const RlcParams& p = {});

struct DampingClass {
  enum class Kind { underdamped, overdamped, critically_damped };
  Kind kind;
  double threshold;  // sqrt(L / (4C))
};

DampingClass damping_classify(double r, double l, double c);
std::string to_string(DampingClass::Kind kind);

/// Closed-form free response (constant forcing) with v(0) = v0, v'(0) = dv0.
/// Returns (v, v').
std::array<double, 2> rlc_analytic(double t, double v0, double dv0, const RlcParams& p = {});

}  // namespace pinnode
