#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pinnode/errors.hpp"
#include "pinnode/optimizers.hpp"

using namespace pinnode;

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Quadratic {
  int n;
  std::vector<double> a;  // SPD, row-major
  std::vector<double> b;

  Quadratic(int n_, std::uint64_t seed) : n(n_), a(static_cast<std::size_t>(n_ * n_)), b(static_cast<std::size_t>(n_)) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> m(a.size());
    for (double& x : m) x = z(gen);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = i == j ? 1.0 : 0.0;
        for (int k = 0; k < n; ++k) s += m[static_cast<std::size_t>(i * n + k)] * m[static_cast<std::size_t>(j * n + k)] / n;
        a[static_cast<std::size_t>(i * n + j)] = s;
      }
    for (double& x : b) x = z(gen);
  }

  // f = 0.5 x^T A x - b^T x
  Objective objective() const {
    return [this](std::span<const double> x, std::span<double> g) {
      double f = 0.0;
      for (int i = 0; i < n; ++i) {
        double ax = 0.0;
        for (int j = 0; j < n; ++j) ax += a[static_cast<std::size_t>(i * n + j)] * x[static_cast<std::size_t>(j)];
        f += 0.5 * x[static_cast<std::size_t>(i)] * ax - b[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        if (!g.empty()) g[static_cast<std::size_t>(i)] = ax - b[static_cast<std::size_t>(i)];
      }
      return f;
    };
  }
};

const Objective kRosenbrock = [](std::span<const double> x, std::span<double> g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  if (!g.empty()) {
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
};

}  // namespace

TEST_CASE("first Adam step has magnitude close to the learning rate") {
  AdamState st(4, {.learning_rate = 0.01});
  std::vector<double> theta{1.0, -2.0, 0.5, 3.0};
  const std::vector<double> g{0.3, -5.0, 1e-2, 100.0};
  const auto before = theta;
  st.step(theta, g);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double d = before[k] - theta[k];
    CHECK(std::abs(std::abs(d) - 0.01) <= 0.01 * 1e-5);
    CHECK((d > 0) == (g[k] > 0));
  }
  CHECK(st.steps() == 1);
}

TEST_CASE("zero gradient leaves theta unchanged") {
  AdamState st(3);
  std::vector<double> theta{1.0, 2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  for (int k = 0; k < 10; ++k) st.step(theta, g);
  CHECK(theta == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("Adam on (x - 3)^2 follows the scalar recurrence") {
  AdamState st(1, {.learning_rate = 0.1});
  std::vector<double> x{0.0};
  // independent scalar recurrence
  double y = 0.0, m = 0.0, v = 0.0, b1 = 1.0, b2 = 1.0;
  for (int k = 0; k < 2000; ++k) {
    const std::vector<double> g{2.0 * (x[0] - 3.0)};
    st.step(x, g);
    const double gy = 2.0 * (y - 3.0);
    m = 0.9 * m + 0.1 * gy;
    v = 0.999 * v + 0.001 * gy * gy;
    b1 *= 0.9;
    b2 *= 0.999;
    y -= 0.1 * (m / (1.0 - b1)) / (std::sqrt(v / (1.0 - b2)) + 1e-8);
  }
  CHECK(std::abs(x[0] - 3.0) <= 1e-3);
  CHECK(std::abs(x[0] - y) <= 1e-12);
}

TEST_CASE("Adam rejects non-finite gradients") {
  AdamState st(2);
  std::vector<double> theta{0.0, 0.0};
  const std::vector<double> g{1.0, std::nan("")};
  CHECK_THROWS_AS(st.step(theta, g), NumericalError);
}

TEST_CASE("Adam is deterministic") {
  Quadratic q(6, 3);
  const std::vector<double> x0(6, 0.5);
  const auto r1 = adam_run(q.objective(), x0, 300, {.learning_rate = 0.05});
  const auto r2 = adam_run(q.objective(), x0, 300, {.learning_rate = 0.05});
  CHECK(r1.theta == r2.theta);
  CHECK(r1.loss == r2.loss);
}

TEST_CASE("empty L-BFGS history gives the steepest descent direction exactly") {
  LbfgsHistory h(10);
  const std::vector<double> g{0.25, -3.0, 1e-9};
  const auto d = h.direction(g);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(d[k] == -g[k]);
  CHECK_FALSE(h.push({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}));  // s.y < 0 is rejected
  CHECK(h.size() == 0);
}

TEST_CASE("L-BFGS on a 10-d SPD quadratic") {
  Quadratic q(10, 21);
  const std::vector<double> x0(10, 0.0);
  const auto r = lbfgs_run(q.objective(), x0, {.max_iterations = 30});
  CHECK(r.grad_max_norm <= 1e-8);
  CHECK(r.iterations <= 30);
  CHECK(r.status == LbfgsStatus::converged);
}

TEST_CASE("L-BFGS on Rosenbrock from (-1.2, 1)") {
  const std::vector<double> x0{-1.2, 1.0};
  const auto r = lbfgs_run(kRosenbrock, x0, {.max_iterations = 200});
  CHECK(r.loss <= 1e-8);
  CHECK(r.iterations <= 200);
}

TEST_CASE("L-BFGS from a stationary point returns it") {
  Quadratic q(4, 2);
  // Solve A x = b by running to convergence first, then restart from there.
  const auto first = lbfgs_run(q.objective(), std::vector<double>(4, 0.0), {.tolerance = 1e-12});
  const auto r = lbfgs_run(q.objective(), first.theta, {.tolerance = 1e-8});
  CHECK(r.iterations <= 1);
  CHECK(r.theta == first.theta);
}

TEST_CASE("two-stage degenerate schedules") {
  Quadratic q(5, 9);
  const std::vector<double> x0(5, 1.0);
  const auto pure_lbfgs = two_stage_train(q.objective(), x0, 0, {}, {.max_iterations = 50});
  const auto direct = lbfgs_run(q.objective(), x0, {.max_iterations = 50});
  CHECK(pure_lbfgs.ran_lbfgs);
  CHECK(pure_lbfgs.theta == direct.theta);

  const auto pure_adam = two_stage_train(q.objective(), x0, 40, {.learning_rate = 0.01}, {.max_iterations = 0});
  const auto adam = adam_run(q.objective(), x0, 40, {.learning_rate = 0.01});
  CHECK_FALSE(pure_adam.ran_lbfgs);
  CHECK(pure_adam.theta == adam.theta);
}

TEST_CASE("two-stage on a quadratic reaches 1e-10") {
  // f = |x - c|^2, minimum 0
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - 0.1 * static_cast<double>(k);
      s += (k + 1.0) * d * d;
      if (!g.empty()) g[k] = 2.0 * (k + 1.0) * d;
    }
    return s;
  };
  const auto r = two_stage_train(f, std::vector<double>(8, 2.0), 100, {.learning_rate = 0.01}, {});
  CHECK(r.loss <= 1e-10);
  CHECK(r.lbfgs.loss <= r.adam.loss);
}

TEST_CASE("reported loss never exceeds the best loss observed") {
  Quadratic q(6, 5);
  double best = INFINITY;
  const IterationCallback track = [&](long, double loss, std::span<const double>) {
    best = std::min(best, loss);
    return true;
  };
  // A large learning rate makes Adam oscillate, so the last iterate is not the best.
  const auto r = two_stage_train(q.objective(), std::vector<double>(6, 3.0), 200, {.learning_rate = 0.8},
                                 {.max_iterations = 5}, track, track);
  CHECK(r.loss <= best);
  CHECK(r.loss == doctest::Approx(q.objective()(r.theta, {})).epsilon(1e-14));
  CHECK(max_abs(r.theta) < 1e6);
}

TEST_CASE("callback can stop a stage") {
  Quadratic q(3, 1);
  long seen = 0;
  const auto r = adam_run(q.objective(), std::vector<double>(3, 1.0), 1000, {},
                          [&](long it, double, std::span<const double>) {
                            seen = it;
                            return it < 9;
                          });
  CHECK(r.stopped);
  CHECK(seen == 9);
}
