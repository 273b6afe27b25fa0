#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pinnode/errors.hpp"
#include "pinnode/network.hpp"
#include "pinnode/rng.hpp"

using namespace pinnode;

namespace {

std::vector<double> random_theta(const NetworkSpec& spec, std::uint64_t seed, double sd = 0.8) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> th(spec.parameter_count());
  for (double& x : th) x = n(gen);
  return th;
}

}  // namespace

TEST_CASE("parameter count and layout") {
  NetworkSpec one = NetworkSpec::uniform(1, 1, Primitive::tanh, 1);
  CHECK(one.parameter_count() == 4);  // 1x1 hidden + 1x1 output, each with a bias

  NetworkSpec s = NetworkSpec::uniform(3, 40, Primitive::tanh, 2);
  CHECK(s.parameter_count() == (40 + 40) + (40 * 40 + 40) * 2 + (2 * 40 + 2));
  const auto layout = layer_layout(s);
  REQUIRE(layout.size() == 4);
  std::size_t expected = 0;
  for (const auto& L : layout) {
    CHECK(L.weight_offset == expected);
    CHECK(L.bias_offset == expected + static_cast<std::size_t>(L.rows * L.cols));
    expected = L.bias_offset + static_cast<std::size_t>(L.rows);
  }
  CHECK(expected == s.parameter_count());

  NetworkSpec f = NetworkSpec::uniform(2, 8, Primitive::sin, 2);
  f.feature_map.kind = FeatureMap::Kind::sinusoidal;
  f.feature_map.n = 10;
  CHECK(layer_layout(f)[0].cols == 10);
  f.feature_map.passthrough = true;
  CHECK(layer_layout(f)[0].cols == 11);
}

TEST_CASE("a single-neuron output layer over one input has length 2 and zero bias") {
  NetworkSpec s;
  s.widths = {};
  s.d_out = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);  // depth must be >= 1
  NetworkSpec one = NetworkSpec::uniform(1, 1, Primitive::tanh, 1);
  const auto p = init_params(one, 9);
  CHECK(p.theta.size() == 4);
  CHECK(p.theta[1] == 0.0);
  CHECK(p.theta[3] == 0.0);
}

TEST_CASE("invalid specs are configuration errors") {
  NetworkSpec s = NetworkSpec::uniform(2, 5, Primitive::exp, 1);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  NetworkSpec z = NetworkSpec::uniform(2, 0, Primitive::tanh, 1);
  CHECK_THROWS_AS(z.validate(), ConfigError);
  CHECK_THROWS_AS(parse_initializer("he-normal"), ConfigError);
  CHECK_THROWS_AS(parse_transform("clamp"), ConfigError);
}

TEST_CASE("Glorot normal variance over 1e5 draws") {
  // 25 -> 25 hidden layer repeated until we have >= 1e5 weights.
  NetworkSpec s = NetworkSpec::uniform(161, 25, Primitive::tanh, 25);
  s.d_in = 1;
  const auto th = init_params(s, 42).theta;
  const auto layout = layer_layout(s);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 1; l + 1 < layout.size(); ++l) {
    const auto& L = layout[l];
    REQUIRE(L.rows == 25);
    REQUIRE(L.cols == 25);
    for (int k = 0; k < L.rows * L.cols; ++k) {
      const double w = th[L.weight_offset + static_cast<std::size_t>(k)];
      sum += w;
      sq += w * w;
      ++n;
    }
    for (int i = 0; i < L.rows; ++i) CHECK(th[L.bias_offset + static_cast<std::size_t>(i)] == 0.0);
  }
  REQUIRE(n >= 100000);
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(var - 0.04) <= 0.05 * 0.04);
}

TEST_CASE("Glorot uniform stays in its bound and matches the variance") {
  NetworkSpec s = NetworkSpec::uniform(3, 30, Primitive::tanh, 1);
  s.initializer = Initializer::glorot_uniform;
  const auto th = init_params(s, 5).theta;
  const auto L = layer_layout(s)[1];
  const double bound = std::sqrt(6.0 / 60.0);
  double sq = 0.0;
  for (int k = 0; k < L.rows * L.cols; ++k) {
    const double w = th[L.weight_offset + static_cast<std::size_t>(k)];
    CHECK(std::abs(w) <= bound);
    sq += w * w;
  }
  CHECK(sq / (L.rows * L.cols) == doctest::Approx(2.0 / 60.0).epsilon(0.2));
}

TEST_CASE("initialization is deterministic per seed") {
  NetworkSpec s = NetworkSpec::uniform(3, 20, Primitive::sin, 3);
  CHECK(init_params(s, 7).theta == init_params(s, 7).theta);
  CHECK(init_params(s, 7).theta != init_params(s, 8).theta);
}

TEST_CASE("forward examples") {
  NetworkSpec s = NetworkSpec::uniform(2, 6, Primitive::tanh, 2);
  NetworkParams zero{std::vector<double>(s.parameter_count(), 0.0)};
  for (double t : {-1.0, 0.0, 3.3}) {
    const auto u = forward(s, zero, t);
    for (const auto& c : u) {
      CHECK(c.value == 0.0);
      CHECK(c.d1 == 0.0);
      CHECK(c.d2 == 0.0);
    }
  }
  s.transforms = {{TransformKind::hard_ic, 0.0, 3.0, std::nullopt}, {TransformKind::hard_ic, 0.0, -1.0, std::nullopt}};
  for (double t : {0.0, 0.7, 5.0}) {
    const auto u = forward(s, zero, t);
    CHECK(u[0].value == 3.0);
    CHECK(u[0].d1 == 0.0);
    CHECK(u[1].value == -1.0);
  }
}

TEST_CASE("sinusoidal features at t = 0") {
  NetworkSpec s = NetworkSpec::uniform(1, 3, Primitive::tanh, 1);
  s.feature_map.kind = FeatureMap::Kind::sinusoidal;
  s.feature_map.n = 10;
  const auto f = input_features<double>(s, seed_input(0.0));
  REQUIRE(f.size() == 10);
  for (int k = 1; k <= 10; ++k) {
    CHECK(f[static_cast<std::size_t>(k - 1)].value == 0.0);
    CHECK(f[static_cast<std::size_t>(k - 1)].d1 == doctest::Approx(k));
  }
}

TEST_CASE("hard-ic exactness for 100 random parameter vectors") {
  NetworkSpec s = NetworkSpec::uniform(3, 12, Primitive::sin, 2);
  s.transforms = {{TransformKind::hard_ic, 0.25, 0.5, std::nullopt}, {TransformKind::hard_ic, 0.25, 0.075, std::nullopt}};
  NetworkSpec s2 = NetworkSpec::uniform(2, 9, Primitive::tanh, 2);
  s2.transforms = {{TransformKind::hard_ic, 0.0, 3.0, 0.0}, {TransformKind::hard_ic, 0.0, 3.0, -1.5}};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto u = forward<double>(s, random_theta(s, seed, 2.0), seed_input(0.25));
    CHECK(u[0].value == 0.5);
    CHECK(u[1].value == 0.075);
    const auto v = forward<double>(s2, random_theta(s2, seed, 2.0), seed_input(0.0));
    CHECK(v[0].value == 3.0);
    CHECK(v[0].d1 == 0.0);
    CHECK(v[1].value == 3.0);
    CHECK(v[1].d1 == -1.5);
  }
}

TEST_CASE("positivity transform over 1e4 random (theta, t)") {
  NetworkSpec s = NetworkSpec::uniform(2, 8, Primitive::tanh, 1);
  s.transforms = {{TransformKind::positivity, 0.0, 0.0, std::nullopt}};
  CounterRng rng(99);
  int bad = 0;
  for (int k = 0; k < 100; ++k) {
    const auto th = random_theta(s, static_cast<std::uint64_t>(k), 3.0);
    for (int i = 0; i < 100; ++i) {
      const double t = rng.uniform(-20.0, 20.0);
      if (!(forward<double>(s, th, seed_input(t))[0].value > 0.0)) ++bad;
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("recursion fidelity against a hand-rolled two-layer tanh network") {
  NetworkSpec s = NetworkSpec::uniform(2, 7, Primitive::tanh, 2);
  const auto L = layer_layout(s);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto th = random_theta(s, seed + 100);
    const double t = -1.0 + 0.37 * static_cast<double>(seed);
    // h1 = tanh(W1 t + b1), h2 = tanh(W2 h1 + b2), out = W3 h2 + b3, W column-major.
    double h1[7], h2[7], out[2];
    for (int i = 0; i < 7; ++i) h1[i] = std::tanh(th[L[0].weight_offset + i] * t + th[L[0].bias_offset + i]);
    for (int i = 0; i < 7; ++i) {
      double a = th[L[1].bias_offset + i];
      for (int j = 0; j < 7; ++j) a += th[L[1].weight_offset + i + 7 * j] * h1[j];
      h2[i] = std::tanh(a);
    }
    for (int i = 0; i < 2; ++i) {
      double a = th[L[2].bias_offset + i];
      for (int j = 0; j < 7; ++j) a += th[L[2].weight_offset + i + 2 * j] * h2[j];
      out[i] = a;
    }
    const auto u = forward<double>(s, th, seed_input(t));
    CHECK(std::abs(u[0].value - out[0]) <= 1e-12);
    CHECK(std::abs(u[1].value - out[1]) <= 1e-12);
  }
}

TEST_CASE("network time derivatives match finite differences") {
  for (Primitive act : {Primitive::tanh, Primitive::sin, Primitive::sigmoid, Primitive::swish}) {
    NetworkSpec s = NetworkSpec::uniform(3, 10, act, 2);
    s.feature_map.kind = FeatureMap::Kind::sinusoidal;
    s.feature_map.n = 4;
    s.feature_map.passthrough = true;
    s.input_scale = 1.5;
    s.input_offset = 0.2;
    s.transforms = {{TransformKind::hard_ic, 0.0, 1.0, 0.5}, {TransformKind::positivity, 0.0, 0.0, std::nullopt}};
    const auto th = random_theta(s, 17, 0.5);
    const double h = 1e-3;
    for (double t : {-0.9, 0.1, 0.6, 1.7}) {
      const auto u = forward<double>(s, th, seed_input(t));
      const auto at = [&](double dt, std::size_t j) { return forward<double>(s, th, seed_input(t + dt))[j].value; };
      for (std::size_t j = 0; j < 2; ++j) {
        // fourth-order central stencils
        const double d1 = (-at(2 * h, j) + 8 * at(h, j) - 8 * at(-h, j) + at(-2 * h, j)) / (12 * h);
        const double d2 =
            (-at(2 * h, j) + 16 * at(h, j) - 30 * u[j].value + 16 * at(-h, j) - at(-2 * h, j)) / (12 * h * h);
        CHECK(std::abs(u[j].d1 - d1) / std::max(1.0, std::abs(d1)) <= 1e-5);
        CHECK(std::abs(u[j].d2 - d2) / std::max(1.0, std::abs(d2)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("forward rejects mismatched theta") {
  NetworkSpec s = NetworkSpec::uniform(2, 4, Primitive::tanh, 1);
  std::vector<double> th(s.parameter_count() - 1, 0.0);
  CHECK_THROWS_AS(forward<double>(s, th, seed_input(0.0)), ContractViolation);
}
