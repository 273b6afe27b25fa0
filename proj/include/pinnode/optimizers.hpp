#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pinnode/objective.hpp"

namespace pinnode {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for Adam with bias correction.
class AdamState {
 public:
  AdamState(std::size_t n, AdamOptions options = {});

  /// One update of theta in place. Throws NumericalError (carrying the
  /// step index) if the gradient has a non-finite entry.
  void step(std::span<double> theta, std::span<const double> grad);

  long steps() const noexcept { return steps_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  const AdamOptions& options() const noexcept { return opt_; }

 private:
  AdamOptions opt_;
  std::vector<double> m_;
  std::vector<double> v_;
  long steps_ = 0;
  double beta1_power_ = 1.0;
  double beta2_power_ = 1.0;
};

inline void adam_step(AdamState& state, std::span<double> theta, std::span<const double> grad) {
  state.step(theta, grad);
}

/// Called once per iteration with the loss at the current iterate; return
/// false to stop early.
using IterationCallback = std::function<bool(long iteration, double loss, std::span<const double> theta)>;

struct StageResult {
  std::vector<double> theta;  // best iterate seen
  double loss = 0.0;          // loss at `theta`
  long iterations = 0;
  long evaluations = 0;
  bool stopped = false;  // callback asked to stop
};

/// `iterations` Adam updates. The loss is evaluated before each update and
/// once more at the final iterate; the best evaluated iterate is returned.
StageResult adam_run(const Objective& f, std::span<const double> theta0, long iterations, const AdamOptions& options,
                     const IterationCallback& callback = {});

struct LbfgsOptions {
  int history = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 25;
  double tolerance = 1e-8;  // on max |g_k|
  long max_iterations = 15000;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed, stopped };
std::string to_string(LbfgsStatus s);

struct LbfgsResult : StageResult {
  LbfgsStatus status = LbfgsStatus::max_iterations;
  double grad_max_norm = 0.0;
};

/// Limited-memory history of (s, y) = (delta theta, delta gradient) pairs.
class LbfgsHistory {
 public:
  explicit LbfgsHistory(int capacity) : capacity_(capacity) {}

  /// Stores the pair if s.y > 0; returns whether it was accepted.
  bool push(std::vector<double> s, std::vector<double> y);
  /// Two-loop recursion: -H g with H0 = (s.y / y.y) I from the newest pair,
  /// or -g exactly when the history is empty.
  std::vector<double> direction(std::span<const double> g) const;

  std::size_t size() const noexcept { return s_.size(); }
  void clear() noexcept;

 private:
  int capacity_;
  std::vector<std::vector<double>> s_, y_;
  std::vector<double> rho_;
};

/// L-BFGS with a strong-Wolfe line search. Terminates on max|g| <= tolerance,
/// the iteration cap, or a failed line search (reported in `status`, not
/// thrown). The callback runs after each accepted step, right after the
/// objective was evaluated at the new iterate.
LbfgsResult lbfgs_run(const Objective& f, std::span<const double> theta0, const LbfgsOptions& options = {},
                      const IterationCallback& callback = {});

struct TwoStageResult {
  StageResult adam;
  LbfgsResult lbfgs;
  std::vector<double> theta;
  double loss = 0.0;
  bool ran_lbfgs = false;
};

/// Adam for `adam_iterations` steps, then L-BFGS refinement from the best
/// Adam iterate (skipped when lbfgs.max_iterations == 0).
TwoStageResult two_stage_train(const Objective& f, std::span<const double> theta0, long adam_iterations,
                               const AdamOptions& adam, const LbfgsOptions& lbfgs,
                               const IterationCallback& adam_callback = {},
                               const IterationCallback& lbfgs_callback = {});

}  // namespace pinnode
