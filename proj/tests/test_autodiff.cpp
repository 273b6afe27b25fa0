#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pinnode/errors.hpp"
#include "pinnode/objective.hpp"
#include "pinnode/tape.hpp"
#include "pinnode/taylor2.hpp"

using namespace pinnode;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Plain-double definitions, written independently of the library.
double ref_f(Primitive p, double x) {
  switch (p) {
    case Primitive::identity: return x;
    case Primitive::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Primitive::tanh: return std::tanh(x);
    case Primitive::sin: return std::sin(x);
    case Primitive::cos: return std::cos(x);
    case Primitive::relu: return x > 0 ? x : 0.0;
    case Primitive::swish: return x / (1.0 + std::exp(-x));
    case Primitive::exp: return std::exp(x);
    case Primitive::softplus: return std::log1p(std::exp(x));
  }
  return 0.0;
}

const Primitive kSmooth[] = {Primitive::identity, Primitive::sigmoid, Primitive::tanh, Primitive::sin,
                             Primitive::cos,      Primitive::swish,   Primitive::exp,  Primitive::softplus};

}  // namespace

TEST_CASE("seed_input gives (t, 1, 0)") {
  for (double t : {0.0, 2.5, -1.0}) {
    const auto s = seed_input(t);
    CHECK(s.value == t);
    CHECK(s.d1 == 1.0);
    CHECK(s.d2 == 0.0);
  }
  const auto c = constant_taylor(4.0);
  CHECK(c.d1 == 0.0);
  CHECK(c.d2 == 0.0);
}

TEST_CASE("taylor_apply examples") {
  auto s = taylor_apply(Primitive::sin, Taylor2<double>{0.0, 1.0, 0.0});
  CHECK(s.value == doctest::Approx(0.0));
  CHECK(s.d1 == doctest::Approx(1.0));
  CHECK(s.d2 == doctest::Approx(0.0));

  auto t = taylor_apply(Primitive::tanh, Taylor2<double>{0.0, 1.0, 0.0});
  CHECK(t.value == 0.0);
  CHECK(t.d1 == 1.0);
  CHECK(t.d2 == 0.0);

  auto h = taylor_apply(Primitive::sin, Taylor2<double>{std::numbers::pi / 2, 1.0, 0.0});
  CHECK(h.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(h.d1) < 1e-15);
  CHECK(h.d2 == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("unknown primitive name is a configuration error") {
  CHECK_THROWS_AS(parse_primitive("gelu"), ConfigError);
  CHECK(parse_primitive("sine") == Primitive::sin);
  CHECK(parse_primitive("sin") == Primitive::sin);
  CHECK(to_string(Primitive::sin) == "sine");
}

TEST_CASE("primitive jets match finite differences of the plain functions") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  const double h = 1e-4;
  for (Primitive p : kSmooth) {
    for (int k = 0; k < 50; ++k) {
      const double x = u(gen);
      const Jet3 j = primitive_jet(p, x);
      CHECK(rel(j.f, ref_f(p, x)) < 1e-14);
      const double d1 = (ref_f(p, x + h) - ref_f(p, x - h)) / (2 * h);
      const double d2 = (ref_f(p, x + h) - 2 * ref_f(p, x) + ref_f(p, x - h)) / (h * h);
      const Jet3 jp = primitive_jet(p, x + h), jm = primitive_jet(p, x - h);
      const double d3 = (jp.f2 - jm.f2) / (2 * h);
      CHECK(rel(j.f1, d1) < 1e-7);
      CHECK(rel(j.f2, d2) < 1e-5);
      CHECK(rel(j.f3, d3) < 1e-7);
    }
  }
}

TEST_CASE("relu conventions at zero") {
  const Jet3 j = primitive_jet(Primitive::relu, 0.0);
  CHECK(j.f == 0.0);
  CHECK(j.f1 == 0.0);
  CHECK(j.f2 == 0.0);
  CHECK(primitive_jet(Primitive::relu, 2.0).f1 == 1.0);
  CHECK(primitive_jet(Primitive::relu, 2.0).f2 == 0.0);
}

TEST_CASE("chain rule through compositions of three or more primitives") {
  // g(t) = softplus(sin(1.3 t) * tanh(0.7 t + 0.2)) + exp(-0.4 t) * sigmoid(t)
  const auto g_taylor = [](double t) {
    const Taylor2<double> x = seed_input(t);
    const auto a = taylor_apply(Primitive::sin, scale(1.3, x));
    const auto b = taylor_apply(Primitive::tanh, affine(0.7, x, 0.2));
    const auto c = taylor_apply(Primitive::softplus, a * b);
    const auto d = taylor_apply(Primitive::exp, scale(-0.4, x)) * taylor_apply(Primitive::sigmoid, x);
    return c + d;
  };
  const auto g = [](double t) {
    return std::log1p(std::exp(std::sin(1.3 * t) * std::tanh(0.7 * t + 0.2))) +
           std::exp(-0.4 * t) / (1.0 + std::exp(-t));
  };
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-4;
  for (int k = 0; k < 100; ++k) {
    const double t = u(gen);
    const auto v = g_taylor(t);
    CHECK(rel(v.value, g(t)) < 1e-14);
    CHECK(rel(v.d1, (g(t + h) - g(t - h)) / (2 * h)) < 1e-5);
    CHECK(rel(v.d2, (g(t + h) - 2 * g(t) + g(t - h)) / (h * h)) < 1e-5);
  }
}

TEST_CASE("backward examples") {
  Tape tape;
  const std::vector<double> theta{3.0, 4.0};
  auto p = tape.parameters(theta);
  auto g = tape.gradient(p[0] * p[1], 2);
  CHECK(g[0] == 4.0);
  CHECK(g[1] == 3.0);

  Tape tape2;
  const std::vector<double> theta2{1.0, -2.0};
  auto q = tape2.parameters(theta2);
  auto g2 = tape2.gradient(q[0] * q[0] + q[1] * q[1], 2);
  CHECK(g2[0] == 2.0);
  CHECK(g2[1] == -4.0);
}

TEST_CASE("backward from a constant or foreign output") {
  Tape tape;
  Var c(2.0);
  CHECK_THROWS_AS(tape.adjoints(c), ContractViolation);
  CHECK(tape.gradient(c, 2) == std::vector<double>{0.0, 0.0});
  Tape other;
  Var x = other.variable(1.0);
  CHECK_THROWS_AS(tape.adjoints(x * x), ContractViolation);
}

TEST_CASE("unvisited parameter slots get zero gradient") {
  Tape tape;
  const std::vector<double> theta{1.0, 2.0, 3.0};
  auto p = tape.parameters(theta);
  auto g = tape.gradient(sin(p[0]) * p[2], 3);
  CHECK(g[1] == 0.0);
  CHECK(g[0] == doctest::Approx(std::cos(1.0) * 3.0));
  CHECK(g[2] == doctest::Approx(std::sin(1.0)));
}

TEST_CASE("backward is linear") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> theta(6);
  for (double& x : theta) x = n(gen);
  const auto f = [](const std::vector<Var>& p) { return tanh(p[0] * p[1]) + exp(p[2]) * sin(p[3]); };
  const auto g = [](const std::vector<Var>& p) { return sqrt(p[4] * p[4] + 1.0) - log1p(p[5] * p[5]) * p[0]; };
  const double a = 1.7, b = -0.3;
  Tape t1, t2, t3;
  auto p1 = t1.parameters(theta), p2 = t2.parameters(theta), p3 = t3.parameters(theta);
  const auto gf = t1.gradient(f(p1), 6);
  const auto gg = t2.gradient(g(p2), 6);
  const auto gs = t3.gradient(a * f(p3) + b * g(p3), 6);
  for (int k = 0; k < 6; ++k) CHECK(std::abs(gs[k] - (a * gf[k] + b * gg[k])) < 1e-14);
}

TEST_CASE("derivative-containing loss differentiates correctly in theta") {
  // L(theta) = (d/dt [sin(w t + c) * a])^2 at t = 0.4, carried through Taylor2<Var>.
  const auto loss_tape = [](std::span<const double> th, std::span<double> grad) {
    Tape tape;
    auto p = tape.parameters(th);
    const Taylor2<Var> t{Var(0.4), Var(1.0), Var(0.0)};
    const auto z = affine(p[0], t, p[1]);
    const auto s = taylor_apply(Primitive::sin, z);
    const Var d1 = s.d1 * p[2];
    const Var d2 = s.d2 * p[2];
    const Var out = d1 * d1 + 0.5 * d2 * d2;
    if (!grad.empty()) {
      auto g = tape.gradient(out, th.size());
      std::copy(g.begin(), g.end(), grad.begin());
    }
    return out.value();
  };
  const std::vector<double> theta{1.3, -0.2, 0.8};
  CHECK(grad_check(loss_tape, theta, 1e-4) <= 1e-5);
}

TEST_CASE("grad_check on a quadratic") {
  const Objective quad = [](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      f += (k + 1.0) * x[k] * x[k] + x[k];
      if (!g.empty()) g[k] = 2.0 * (k + 1.0) * x[k] + 1.0;
    }
    return f;
  };
  std::vector<double> theta{0.3, -1.2, 2.0, 0.01};
  CHECK(grad_check(quad, theta, 1e-5) <= 1e-8);
}

TEST_CASE("grad_check rejects non-finite losses") {
  const Objective bad = [](std::span<const double>, std::span<double> g) {
    for (double& x : g) x = 0.0;
    return std::nan("");
  };
  std::vector<double> theta{1.0};
  CHECK_THROWS_AS(grad_check(bad, theta, 1e-4), NumericalError);
}

TEST_CASE("stable sigmoid and softplus at extreme arguments") {
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(primitive_jet(Primitive::softplus, 700.0).f1));
}
