#include "pinnode/problems.hpp"

#include <cmath>
#include <utility>

#include "pinnode/errors.hpp"

namespace pinnode {

void OdeProblem::analytic_state(double, std::span<double>) const {
  throw ContractViolation("problem '" + name + "' has no closed-form solution");
}

std::vector<double> OdeProblem::initial_state() const {
  std::vector<double> y(static_cast<std::size_t>(state_dimension()));
  for (int j = 0; j < dimension; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (order == 1) {
      y[ju] = u0[ju];
    } else {
      y[2 * ju] = u0[ju];
      y[2 * ju + 1] = v0[ju];
    }
  }
  return y;
}

void OdeProblem::rhs(double t, std::span<const double> y, std::span<double> dy) const {
  const auto s = static_cast<std::size_t>(dimension);
  std::vector<Taylor2<double>> u(s);
  std::vector<double> r(s);
  for (std::size_t j = 0; j < s; ++j)
    u[j] = order == 1 ? Taylor2<double>{y[j], 0.0, 0.0} : Taylor2<double>{y[2 * j], y[2 * j + 1], 0.0};
  residual(t, u, r);
  for (std::size_t j = 0; j < s; ++j) {
    if (order == 1) {
      dy[j] = -r[j];
    } else {
      dy[2 * j] = y[2 * j + 1];
      dy[2 * j + 1] = -r[j];
    }
  }
}

std::vector<double> OdeProblem::positions(std::span<const double> state) const {
  std::vector<double> out(static_cast<std::size_t>(dimension));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = state[order == 1 ? j : 2 * j];
  return out;
}

namespace {

// Dispatches both residual overloads to one templated implementation.
template <class Derived>
class Model : public OdeProblem {
 public:
  void residual(double t, std::span<const Taylor2<double>> u, std::span<double> r) const override {
    static_cast<const Derived&>(*this).template eval<double>(t, u, r);
  }
  void residual(double t, std::span<const Taylor2<Var>> u, std::span<Var> r) const override {
    static_cast<const Derived&>(*this).template eval<Var>(t, u, r);
  }
};

double take(std::map<std::string, double>& overrides, const std::string& key, double fallback) {
  auto it = overrides.find(key);
  if (it == overrides.end()) return fallback;
  const double v = it->second;
  overrides.erase(it);
  return v;
}

class Lorenz final : public Model<Lorenz> {
 public:
  LorenzParams p;

  template <class S>
  void eval(double, std::span<const Taylor2<S>> u, std::span<S> r) const {
    const S& x = u[0].value;
    const S& y = u[1].value;
    const S& z = u[2].value;
    r[0] = u[0].d1 - p.delta * (y - x);
    r[1] = u[1].d1 - (x * (p.rho - z) - y);
    r[2] = u[2].d1 - (x * y - p.beta * z);
  }
};

class LotkaVolterra final : public Model<LotkaVolterra> {
 public:
  LotkaVolterraParams p;

  template <class S>
  void eval(double, std::span<const Taylor2<S>> u, std::span<S> r) const {
    const S& x = u[0].value;
    const S& y = u[1].value;
    const S xy = x * y;
    r[0] = u[0].d1 - (p.alpha * x - p.beta * xy);
    r[1] = u[1].d1 - (p.delta * xy - p.gamma * y);
  }
};

class MassSpring final : public Model<MassSpring> {
 public:
  MassSpringParams p;
  bool closed_form = false;

  template <class S>
  void eval(double, std::span<const Taylor2<S>> u, std::span<S> r) const {
    const S& x = u[0].value;
    const S& y = u[1].value;
    r[0] = u[0].d2 + ((p.k1 + p.k2) * x - p.k2 * y) / p.m1;
    r[1] = u[1].d2 + (p.k2 * y - p.k2 * x) / p.m2;
  }

  bool has_analytic() const override { return closed_form; }
  void analytic_state(double t, std::span<double> s) const override {
    if (!closed_form) OdeProblem::analytic_state(t, s);
    s[0] = 2.0 * std::cos(t) + std::cos(2.0 * t);
    s[1] = -2.0 * std::sin(t) - 2.0 * std::sin(2.0 * t);
    s[2] = 4.0 * std::cos(t) - std::cos(2.0 * t);
    s[3] = -4.0 * std::sin(t) + 2.0 * std::sin(2.0 * t);
  }
};

class Rlc final : public Model<Rlc> {
 public:
  RlcParams p;

  // rlc_residual divided by C, so the second derivative has unit coefficient.
  template <class S>
  void eval(double, std::span<const Taylor2<S>> u, std::span<S> r) const {
    const Taylor2<S>& v = u[0];
    r[0] = v.d2 + v.d1 / (p.r * p.c) + v.value / (p.l * p.c) - p.forcing / p.c;
  }

  bool has_analytic() const override { return true; }
  void analytic_state(double t, std::span<double> s) const override {
    const auto vv = rlc_analytic(t - t_start, u0[0], v0[0], p);
    s[0] = vv[0];
    s[1] = vv[1];
  }
};

void finish(OdeProblem& prob, std::map<std::string, double>& ov) {
  prob.t_start = take(ov, "t_start", prob.t_start);
  prob.t_end = take(ov, "t_end", prob.t_end);
  if (!ov.empty()) throw ConfigError("unknown parameter '" + ov.begin()->first + "' for problem '" + prob.name + "'");
  if (!(prob.t_end > prob.t_start)) throw ConfigError("problem domain must satisfy t_end > t_start");
}

}  // namespace

std::vector<std::string> problem_names() { return {"lorenz", "lotka-volterra", "mass-spring", "rlc"}; }

ProblemPtr make_problem(const std::string& name, const std::map<std::string, double>& overrides) {
  auto ov = overrides;
  if (name == "lorenz") {
    auto prob = std::make_shared<Lorenz>();
    prob->name = name;
    prob->dimension = 3;
    prob->t_start = 0.0;
    prob->t_end = 3.0;
    prob->p.delta = take(ov, "delta", prob->p.delta);
    prob->p.rho = take(ov, "rho", prob->p.rho);
    prob->p.beta = take(ov, "beta", prob->p.beta);
    prob->u0 = {take(ov, "x0", -8.0), take(ov, "y0", 7.0), take(ov, "z0", 27.0)};
    prob->params = {{"delta", prob->p.delta}, {"rho", prob->p.rho}, {"beta", prob->p.beta}};
    prob->components = {"x", "y", "z"};
    prob->weight_layout = {"data", "ode", "ic"};
    prob->default_weights = {1.0, 1.0, 1.0};
    finish(*prob, ov);
    return prob;
  }
  if (name == "lotka-volterra") {
    auto prob = std::make_shared<LotkaVolterra>();
    prob->name = name;
    prob->dimension = 2;
    prob->t_start = 0.0;
    prob->t_end = 1.0;
    prob->p.alpha = take(ov, "alpha", prob->p.alpha);
    prob->p.beta = take(ov, "beta", prob->p.beta);
    prob->p.gamma = take(ov, "gamma", prob->p.gamma);
    prob->p.delta = take(ov, "delta", prob->p.delta);
    prob->u0 = {take(ov, "x0", 0.5), take(ov, "y0", 0.075)};
    prob->params = {{"alpha", prob->p.alpha}, {"beta", prob->p.beta}, {"gamma", prob->p.gamma}, {"delta", prob->p.delta}};
    prob->components = {"x", "y"};
    prob->weight_layout = {"ode:0", "ode:1", "ic"};
    prob->default_weights = {1.0, 1.0, 1.0};
    finish(*prob, ov);
    return prob;
  }
  if (name == "mass-spring") {
    auto prob = std::make_shared<MassSpring>();
    prob->name = name;
    prob->dimension = 2;
    prob->order = 2;
    prob->t_start = 0.0;
    prob->t_end = 2.0 * 3.14159265358979323846;
    const MassSpringParams defaults;
    prob->p.m1 = take(ov, "m1", defaults.m1);
    prob->p.m2 = take(ov, "m2", defaults.m2);
    prob->p.k1 = take(ov, "k1", defaults.k1);
    prob->p.k2 = take(ov, "k2", defaults.k2);
    if (prob->p.m1 == 0.0 || prob->p.m2 == 0.0) throw ConfigError("mass-spring masses must be nonzero");
    prob->u0 = {take(ov, "x0", 3.0), take(ov, "y0", 3.0)};
    prob->v0 = {take(ov, "dx0", 0.0), take(ov, "dy0", 0.0)};
    prob->params = {{"m1", prob->p.m1}, {"m2", prob->p.m2}, {"k1", prob->p.k1}, {"k2", prob->p.k2}};
    prob->components = {"x", "y"};
    prob->weight_layout = {"ode", "ic"};
    prob->default_weights = {1.0, 1.0};
    finish(*prob, ov);
    prob->closed_form = prob->p.m1 == defaults.m1 && prob->p.m2 == defaults.m2 && prob->p.k1 == defaults.k1 &&
                        prob->p.k2 == defaults.k2 && prob->u0 == std::vector<double>{3.0, 3.0} &&
                        prob->v0 == std::vector<double>{0.0, 0.0} && prob->t_start == 0.0;
    return prob;
  }
  if (name == "rlc") {
    auto prob = std::make_shared<Rlc>();
    prob->name = name;
    prob->dimension = 1;
    prob->order = 2;
    prob->t_start = 0.0;
    prob->t_end = 0.05;
    prob->p.r = take(ov, "R", prob->p.r);
    prob->p.l = take(ov, "L", prob->p.l);
    prob->p.c = take(ov, "C", prob->p.c);
    prob->p.forcing = take(ov, "f", prob->p.forcing);
    rlc_residual(0.0, 0.0, 0.0, 0.0, prob->p);  // validates R, L
    if (!(prob->p.c > 0.0)) throw ConfigError("RLC capacitance must be positive");
    prob->u0 = {take(ov, "v0", 1.0)};
    prob->v0 = {take(ov, "dv0", 0.0)};
    prob->params = {{"R", prob->p.r}, {"L", prob->p.l}, {"C", prob->p.c}, {"f", prob->p.forcing}};
    prob->components = {"v"};
    prob->time_scale = std::sqrt(prob->p.l * prob->p.c);
    prob->weight_layout = {"ode", "data", "ic:0", "ic:1"};
    prob->default_weights = {1e-7, 1e3, 1.0, 1.0};
    finish(*prob, ov);
    return prob;
  }
  throw ConfigError("unknown problem preset '" + name + "' (expected lorenz, lotka-volterra, mass-spring or rlc)");
}

// --- free functions ----------------------------------------------------------

std::array<double, 3> lorenz_rhs(const std::array<double, 3>& s, const LorenzParams& p) {
  const auto [x, y, z] = s;
  return {p.delta * (y - x), x * (p.rho - z) - y, x * y - p.beta * z};
}

double lorenz_energy(const std::array<double, 3>& s, double rho) {
  return s[0] * s[0] + s[1] * s[1] + (s[2] - rho) * (s[2] - rho);
}

LorenzEnergyBound lorenz_energy_bound(const LorenzParams& p) {
  // dV/dt = 2 delta x y - 2 delta x^2 - 2 y^2 - 2 beta z^2 + 2 rho beta z
  //       <= (delta - 2) V + beta rho^2   after 2xy <= x^2 + y^2 and
  //          completing the square in w = z - rho.
  if (p.delta < 2.0) throw ConfigError("energy bound derivation assumes delta >= 2");
  return {p.delta - 2.0, p.beta * p.rho * p.rho};
}

std::array<double, 2> lotka_volterra_rhs(const std::array<double, 2>& s, const LotkaVolterraParams& p) {
  const double xy = s[0] * s[1];
  return {p.alpha * s[0] - p.beta * xy, p.delta * xy - p.gamma * s[1]};
}

std::array<double, 2> mass_spring_residual(double, double x, double x2, double y, double y2,
                                           const MassSpringParams& p) {
  return {x2 + ((p.k1 + p.k2) * x - p.k2 * y) / p.m1, y2 + (p.k2 * y - p.k2 * x) / p.m2};
}

std::array<std::array<double, 4>, 4> mass_spring_matrix(const MassSpringParams& p) {
  return {{{0.0, 1.0, 0.0, 0.0},
           {-(p.k1 + p.k2) / p.m1, 0.0, p.k2 / p.m1, 0.0},
           {0.0, 0.0, 0.0, 1.0},
           {p.k2 / p.m2, 0.0, -p.k2 / p.m2, 0.0}}};
}

std::array<double, 4> mass_spring_reduction(const std::array<double, 4>& u, const MassSpringParams& p) {
  const auto A = mass_spring_matrix(p);
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) out[i] += A[i][j] * u[j];
  return out;
}

std::complex<double> mass_spring_characteristic(std::complex<double> lambda, const MassSpringParams& p) {
  const auto A = mass_spring_matrix(p);
  std::array<std::array<std::complex<double>, 4>, 4> M{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) M[i][j] = (i == j ? lambda : 0.0) - A[i][j];
  std::complex<double> det = 1.0;
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < 4; ++i)
      if (std::abs(M[i][k]) > std::abs(M[piv][k])) piv = i;
    if (M[piv][k] == 0.0) return 0.0;
    if (piv != k) {
      std::swap(M[piv], M[k]);
      det = -det;
    }
    det *= M[k][k];
    for (std::size_t i = k + 1; i < 4; ++i) {
      const auto f = M[i][k] / M[k][k];
      for (std::size_t j = k; j < 4; ++j) M[i][j] -= f * M[k][j];
    }
  }
  return det;
}

std::array<double, 2> mass_spring_analytic(double t) {
  return {2.0 * std::cos(t) + std::cos(2.0 * t), 4.0 * std::cos(t) - std::cos(2.0 * t)};
}

double rlc_residual(double, double v, double v1, double v2, const RlcParams& p) {
  if (p.r == 0.0) throw ConfigError("RLC resistance must be nonzero");
  if (p.l == 0.0) throw ConfigError("RLC inductance must be nonzero");
  return p.c * v2 + v1 / p.r + v / p.l - p.forcing;
}

DampingClass damping_classify(double r, double l, double c) {
  if (!(l > 0.0) || !(c > 0.0)) throw ConfigError("damping classification needs L, C > 0");
  const double threshold = std::sqrt(l / (4.0 * c));
  if (std::abs(r - threshold) <= 1e-12 * threshold) return {DampingClass::Kind::critically_damped, threshold};
  return {r > threshold ? DampingClass::Kind::underdamped : DampingClass::Kind::overdamped, threshold};
}

std::string to_string(DampingClass::Kind kind) {
  switch (kind) {
    case DampingClass::Kind::underdamped: return "underdamped";
    case DampingClass::Kind::overdamped: return "overdamped";
    case DampingClass::Kind::critically_damped: return "critically-damped";
  }
  return "underdamped";
}

std::array<double, 2> rlc_analytic(double t, double v0, double dv0, const RlcParams& p) {
  // v'' + 2 alpha v' + w0^2 v = f / C, particular solution v_p = L f.
  const double alpha = 1.0 / (2.0 * p.r * p.c);
  const double w0sq = 1.0 / (p.l * p.c);
  const double vp = p.l * p.forcing;
  const double w = v0 - vp;
  const double dw = dv0;
  const double decay = std::exp(-alpha * t);
  switch (damping_classify(p.r, p.l, p.c).kind) {
    case DampingClass::Kind::underdamped: {
      const double wd = std::sqrt(w0sq - alpha * alpha);
      const double a = w, b = (dw + alpha * w) / wd;
      const double cs = std::cos(wd * t), sn = std::sin(wd * t);
      return {vp + decay * (a * cs + b * sn), decay * ((b * wd - alpha * a) * cs - (alpha * b + a * wd) * sn)};
    }
    case DampingClass::Kind::overdamped: {
      const double root = std::sqrt(alpha * alpha - w0sq);
      const double r1 = -alpha + root, r2 = -alpha - root;
      const double c1 = (dw - r2 * w) / (r1 - r2), c2 = w - c1;
      const double e1 = std::exp(r1 * t), e2 = std::exp(r2 * t);
      return {vp + c1 * e1 + c2 * e2, r1 * c1 * e1 + r2 * c2 * e2};
    }
    case DampingClass::Kind::critically_damped: {
      const double a = w, b = dw + alpha * w;
      return {vp + (a + b * t) * decay, (b - alpha * (a + b * t)) * decay};
    }
  }
  return {0.0, 0.0};
}

}  // namespace pinnode
