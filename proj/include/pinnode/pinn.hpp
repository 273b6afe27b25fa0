#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinnode/integrators.hpp"
#include "pinnode/kernel.hpp"
#include "pinnode/network.hpp"
#include "pinnode/optimizers.hpp"
#include "pinnode/problems.hpp"

namespace pinnode {

enum class CollocationStrategy { uniform_grid, uniform_random };

CollocationStrategy parse_collocation(std::string_view name);
std::string to_string(CollocationStrategy s);

struct CollocationSet {
  std::vector<double> points;
  CollocationStrategy strategy = CollocationStrategy::uniform_grid;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

/// n points on [a, b]: an endpoint-inclusive grid, or sorted uniform draws.
CollocationSet make_collocation(double a, double b, std::size_t n,
                                CollocationStrategy strategy = CollocationStrategy::uniform_grid,
                                std::uint64_t seed = 0);

/// Global weights plus per-component ones. Per-component vectors may be empty
/// (all ones); otherwise data and ode hold one entry per problem component
/// and ic holds one per initial condition (positions, then velocities).
struct LossWeights {
  double data = 1.0;
  double ode = 1.0;
  double ic = 1.0;
  std::vector<double> data_components;
  std::vector<double> ode_components;
  std::vector<double> ic_components;

  double data_weight(std::size_t j) const { return data_components.empty() ? 1.0 : data_components[j]; }
  double ode_weight(std::size_t j) const { return ode_components.empty() ? 1.0 : ode_components[j]; }
  double ic_weight(std::size_t k) const { return ic_components.empty() ? 1.0 : ic_components[k]; }

  /// Throws ConfigError on negative or non-finite weights or vectors whose
  /// length does not match the problem.
  void validate(const OdeProblem& problem) const;

  /// Maps a positional list through problem.weight_layout. Entries name a
  /// global weight ("ode") or one component ("ic:1"); slots the layout does
  /// not mention stay at 1.
  static LossWeights from_list(const OdeProblem& problem, std::span<const double> list);

  bool operator==(const LossWeights&) const = default;
};

struct LossBreakdown {
  double data = 0.0;
  double ode = 0.0;
  double ic = 0.0;
  double total = 0.0;
};

/// Weighted mean-square residual over the collocation points (per-equation
/// weights only; the global lambda is applied by the total).
double ode_residual_loss(const OdeProblem& problem, const NetworkSpec& spec, std::span<const double> theta,
                         const CollocationSet& colloc, const LossWeights& weights);
/// Weighted mean-square misfit; 0 for an empty set.
double data_loss(const OdeProblem& problem, const ObservationSet& obs, const NetworkSpec& spec,
                 std::span<const double> theta, const LossWeights& weights);
/// (1/s) sum_j w_j (u0_j - u_j(t0))^2, plus the velocity terms for
/// second-order problems.
double ic_loss(const OdeProblem& problem, const NetworkSpec& spec, std::span<const double> theta,
               const LossWeights& weights);

/// The composite loss on a fixed collocation and observation set. evaluate()
/// uses the batched kernel; evaluate_reference() records everything on one
/// scalar tape and is kept for testing.
class PinnLoss {
 public:
  PinnLoss(ProblemPtr problem, NetworkSpec spec, CollocationSet colloc, ObservationSet obs, LossWeights weights,
           KernelOptions kernel = {});

  /// Fills grad (if non-empty) with the gradient of the total.
  LossBreakdown evaluate(std::span<const double> theta, std::span<double> grad);
  LossBreakdown evaluate_reference(std::span<const double> theta, std::span<double> grad) const;

  /// Objective over the total; remembers the last breakdown.
  Objective objective();
  const LossBreakdown& last() const { return last_; }

  const OdeProblem& problem() const { return *problem_; }
  const NetworkSpec& spec() const { return spec_; }
  const CollocationSet& collocation() const { return colloc_; }
  const ObservationSet& observations() const { return obs_; }
  const LossWeights& weights() const { return weights_; }

 private:
  ProblemPtr problem_;
  NetworkSpec spec_;
  CollocationSet colloc_;
  ObservationSet obs_;
  LossWeights weights_;
  BatchedKernel kernel_;
  LossBreakdown last_;
};

/// Network predictions (after output transforms) at `times`, row-major
/// (times.size() x d_out).
std::vector<double> predict(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> times);

struct L2Error {
  double total = 0.0;
  std::vector<double> components;
};

/// ||pred - ref|| / ||ref||. Throws NumericalError for a zero reference or
/// ContractViolation for mismatched lengths.
double l2_relative_error(std::span<const double> pred, std::span<const double> ref);
/// Row-major (n x dim) inputs: stacked total and one value per column.
L2Error l2_relative_error(std::span<const double> pred, std::span<const double> ref, int dim);

struct TrainConfig {
  long epochs = 1000;  // Adam iterations
  AdamOptions adam;
  LbfgsOptions lbfgs{.max_iterations = 0};
  std::size_t colloc_count = 400;
  CollocationStrategy colloc_strategy = CollocationStrategy::uniform_grid;
  std::uint64_t seed = 1;
  long l2_every = 500;
  std::size_t eval_points = 1000;
  double divergence_threshold = 1e12;
  KernelOptions kernel;
  bool record_history = true;
};

struct HistoryRow {
  long iteration;
  char stage;  // 'a' Adam, 'l' L-BFGS
  LossBreakdown loss;
};

struct L2Sample {
  long iteration;
  double total;
  std::vector<double> components;
};

struct TrainReport {
  std::string problem;
  std::uint64_t seed = 0;
  std::vector<HistoryRow> history;
  std::vector<L2Sample> l2_history;
  std::vector<double> eval_times;
  std::vector<double> predicted;  // row-major (eval_times x d_out)
  std::vector<double> reference;
  std::vector<std::string> components;
  L2Error final_l2;
  LossBreakdown final_loss;  // at the returned parameters
  std::vector<double> theta;
  long adam_iterations = 0;
  long lbfgs_iterations = 0;
  std::string lbfgs_status;
  bool diverged = false;
  std::string divergence_reason;
  double wall_seconds = 0.0;
  std::string config_echo;
};

/// Initializes from (spec, seed), trains and evaluates against the reference
/// solution. The loss is recorded at every iteration and the L2 error every
/// `l2_every` iterations. A non-finite loss or one above the divergence
/// threshold stops training with `diverged` set; the history so far and the
/// best finite parameters are kept.
TrainReport train(ProblemPtr problem, const NetworkSpec& spec, const LossWeights& weights, const ObservationSet& obs,
                  const TrainConfig& config);

}  // namespace pinnode
