#include "pinnode/pinn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "pinnode/errors.hpp"
#include "pinnode/rng.hpp"

namespace pinnode {

CollocationStrategy parse_collocation(std::string_view name) {
  if (name == "uniform-grid" || name == "grid") return CollocationStrategy::uniform_grid;
  if (name == "uniform-random" || name == "random") return CollocationStrategy::uniform_random;
  throw ConfigError("unknown collocation strategy '" + std::string(name) + "'");
}

std::string to_string(CollocationStrategy s) {
  return s == CollocationStrategy::uniform_grid ? "uniform-grid" : "uniform-random";
}

CollocationSet make_collocation(double a, double b, std::size_t n, CollocationStrategy strategy,
                                std::uint64_t seed) {
  if (n == 0) throw ConfigError("collocation count must be positive");
  if (!(b > a)) throw ConfigError("collocation interval must have b > a");
  CollocationSet set;
  set.strategy = strategy;
  set.seed = seed;
  if (strategy == CollocationStrategy::uniform_grid) {
    set.points = n == 1 ? std::vector<double>{a} : linspace(a, b, n);
  } else {
    CounterRng rng(seed, 0xc011);
    set.points.resize(n);
    for (double& t : set.points) t = rng.uniform(a, b);
    std::sort(set.points.begin(), set.points.end());
  }
  return set;
}

// --- weights -----------------------------------------------------------------

void LossWeights::validate(const OdeProblem& problem) const {
  const auto s = static_cast<std::size_t>(problem.dimension);
  const auto check = [](double w, const char* what) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError(std::string("loss weight ") + what + " must be finite and >= 0");
  };
  check(data, "data");
  check(ode, "ode");
  check(ic, "ic");
  for (double w : data_components) check(w, "data:j");
  for (double w : ode_components) check(w, "ode:j");
  for (double w : ic_components) check(w, "ic:j");
  if (!data_components.empty() && data_components.size() != s)
    throw ConfigError("per-component data weights must have one entry per component");
  if (!ode_components.empty() && ode_components.size() != s)
    throw ConfigError("per-equation ode weights must have one entry per equation");
  if (!ic_components.empty() && ic_components.size() != s * static_cast<std::size_t>(problem.order))
    throw ConfigError("per-condition ic weights must have one entry per initial condition");
}

LossWeights LossWeights::from_list(const OdeProblem& problem, std::span<const double> list) {
  const auto& layout = problem.weight_layout;
  if (list.size() != layout.size())
    throw ConfigError("problem '" + problem.name + "' expects " + std::to_string(layout.size()) + " loss weights");
  const auto s = static_cast<std::size_t>(problem.dimension);
  LossWeights w;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string& slot = layout[k];
    const auto colon = slot.find(':');
    const std::string term = slot.substr(0, colon);
    if (colon == std::string::npos) {
      if (term == "data") w.data = list[k];
      else if (term == "ode") w.ode = list[k];
      else if (term == "ic") w.ic = list[k];
      else throw ContractViolation("bad weight layout entry '" + slot + "'");
      continue;
    }
    const auto j = static_cast<std::size_t>(std::stoul(slot.substr(colon + 1)));
    std::vector<double>* v = term == "data" ? &w.data_components
                             : term == "ode" ? &w.ode_components
                             : term == "ic"  ? &w.ic_components
                                             : nullptr;
    if (!v) throw ContractViolation("bad weight layout entry '" + slot + "'");
    const std::size_t len = term == "ic" ? s * static_cast<std::size_t>(problem.order) : s;
    if (v->empty()) v->assign(len, 1.0);
    if (j >= len) throw ContractViolation("weight layout index out of range in '" + slot + "'");
    (*v)[j] = list[k];
  }
  w.validate(problem);
  return w;
}

// --- per-point loss terms ------------------------------------------------------

namespace {

enum class PointKind { ode, data, ic };

struct Terms {
  const OdeProblem& problem;
  const ObservationSet& obs;
  const LossWeights& w;
  std::size_t n_colloc;

  // Unweighted-by-global contribution of one point to the component losses.
  template <class S>
  void add(PointKind kind, std::size_t index, double t, std::span<const Taylor2<S>> u, S& data, S& ode, S& ic) const {
    const auto s = static_cast<std::size_t>(problem.dimension);
    switch (kind) {
      case PointKind::ode: {
        std::vector<S> r(s);
        problem.residual(t, u, std::span<S>(r));
        const double inv = 1.0 / static_cast<double>(n_colloc);
        for (std::size_t j = 0; j < s; ++j) ode = ode + (w.ode_weight(j) * inv) * (r[j] * r[j]);
        break;
      }
      case PointKind::data: {
        const double inv = 1.0 / static_cast<double>(obs.size());
        for (std::size_t c = 0; c < obs.components.size(); ++c) {
          const auto j = static_cast<std::size_t>(obs.components[c]);
          const S d = obs.at(index, c) - u[j].value;
          data = data + (w.data_weight(j) * inv) * (d * d);
        }
        break;
      }
      case PointKind::ic: {
        const double inv = 1.0 / static_cast<double>(s);
        for (std::size_t j = 0; j < s; ++j) {
          const S d = problem.u0[j] - u[j].value;
          ic = ic + (w.ic_weight(j) * inv) * (d * d);
          if (problem.order == 2) {
            const S dv = problem.v0[j] - u[j].d1;
            ic = ic + (w.ic_weight(s + j) * inv) * (dv * dv);
          }
        }
        break;
      }
    }
  }
};

void check_observations(const OdeProblem& problem, const ObservationSet& obs) {
  for (double t : obs.times)
    if (!(t >= problem.t_start && t <= problem.t_end))
      throw ConfigError("observation time " + std::to_string(t) + " lies outside the problem domain");
  for (int c : obs.components)
    if (c < 0 || c >= problem.dimension) throw ConfigError("observed component index out of range");
  if (obs.values.size() != obs.times.size() * obs.components.size())
    throw ConfigError("observation values do not match times x components");
  for (double v : obs.values)
    if (!std::isfinite(v)) throw ConfigError("observation values must be finite");
}

std::vector<Taylor2<double>> eval_point(const NetworkSpec& spec, std::span<const double> theta, double t) {
  auto u = forward<double>(spec, theta, seed_input(t));
  for (const auto& x : u)
    if (!std::isfinite(x.value) || !std::isfinite(x.d1) || !std::isfinite(x.d2))
      throw NumericalError("non-finite network output at t = " + std::to_string(t), -1, t);
  return u;
}

}  // namespace

double ode_residual_loss(const OdeProblem& problem, const NetworkSpec& spec, std::span<const double> theta,
                         const CollocationSet& colloc, const LossWeights& weights) {
  if (colloc.size() == 0) throw ConfigError("collocation set is empty");
  ObservationSet none;
  const Terms terms{problem, none, weights, colloc.size()};
  double data = 0.0, ode = 0.0, ic = 0.0;
  for (std::size_t i = 0; i < colloc.size(); ++i) {
    const auto u = eval_point(spec, theta, colloc.points[i]);
    terms.add<double>(PointKind::ode, i, colloc.points[i], u, data, ode, ic);
  }
  return ode;
}

double data_loss(const OdeProblem& problem, const ObservationSet& obs, const NetworkSpec& spec,
                 std::span<const double> theta, const LossWeights& weights) {
  if (obs.empty()) return 0.0;
  check_observations(problem, obs);
  const Terms terms{problem, obs, weights, 0};
  double data = 0.0, ode = 0.0, ic = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto u = eval_point(spec, theta, obs.times[i]);
    terms.add<double>(PointKind::data, i, obs.times[i], u, data, ode, ic);
  }
  return data;
}

double ic_loss(const OdeProblem& problem, const NetworkSpec& spec, std::span<const double> theta,
               const LossWeights& weights) {
  ObservationSet none;
  const Terms terms{problem, none, weights, 0};
  double data = 0.0, ode = 0.0, ic = 0.0;
  const auto u = eval_point(spec, theta, problem.t_start);
  terms.add<double>(PointKind::ic, 0, problem.t_start, u, data, ode, ic);
  return ic;
}

// --- composite loss ------------------------------------------------------------

namespace {

// Point p of the kernel's time list: collocation points, then observations,
// then the initial time.
struct PointIndex {
  PointKind kind;
  std::size_t index;
};

PointIndex classify(std::size_t p, std::size_t n_colloc, std::size_t n_obs) {
  if (p < n_colloc) return {PointKind::ode, p};
  if (p < n_colloc + n_obs) return {PointKind::data, p - n_colloc};
  return {PointKind::ic, 0};
}

std::vector<double> kernel_times(const CollocationSet& colloc, const ObservationSet& obs, double t0) {
  std::vector<double> t = colloc.points;
  t.insert(t.end(), obs.times.begin(), obs.times.end());
  t.push_back(t0);
  return t;
}

}  // namespace

PinnLoss::PinnLoss(ProblemPtr problem, NetworkSpec spec, CollocationSet colloc, ObservationSet obs,
                   LossWeights weights, KernelOptions kernel)
    : problem_(std::move(problem)),
      spec_(std::move(spec)),
      colloc_(std::move(colloc)),
      obs_(std::move(obs)),
      weights_(std::move(weights)),
      kernel_(spec_, kernel_times(colloc_, obs_, problem_->t_start), kernel) {
  if (colloc_.size() == 0) throw ConfigError("collocation set is empty");
  if (spec_.d_out != problem_->dimension) throw ConfigError("network output width must equal the problem dimension");
  if (!spec_.transforms.empty() && spec_.transforms.size() != static_cast<std::size_t>(spec_.d_out))
    throw ConfigError("need one output transform per component");
  check_observations(*problem_, obs_);
  weights_.validate(*problem_);
}

LossBreakdown PinnLoss::evaluate(std::span<const double> theta, std::span<double> grad) {
  const std::size_t n_colloc = colloc_.size(), n_obs = obs_.size();
  const std::size_t npts = kernel_.size();
  const auto d_out = static_cast<std::size_t>(spec_.d_out);
  const Terms terms{*problem_, obs_, weights_, n_colloc};
  const std::span<const double> times = kernel_.times();

  LossBreakdown out;
  std::vector<double> contrib(npts * 3);
  if (grad.empty()) {
    std::vector<Taylor2<double>> n(npts * d_out);
    kernel_.forward(theta, n);
    for (std::size_t p = 0; p < npts; ++p) {
      const double t = times[p];
      const Taylor2<double> tt = seed_input(t);
      std::vector<Taylor2<double>> raw(n.begin() + static_cast<std::ptrdiff_t>(p * d_out),
                                       n.begin() + static_cast<std::ptrdiff_t>((p + 1) * d_out));
      for (const auto& x : raw)
        if (!std::isfinite(x.value) || !std::isfinite(x.d1) || !std::isfinite(x.d2))
          throw NumericalError("non-finite network output at t = " + std::to_string(t), -1, t);
      const auto u = apply_transforms<double>(spec_, tt, std::move(raw));
      const PointIndex pi = classify(p, n_colloc, n_obs);
      terms.add<double>(pi.kind, pi.index, t, u, contrib[3 * p], contrib[3 * p + 1], contrib[3 * p + 2]);
    }
  } else {
    const int nthreads = kernel_.thread_count();
    std::vector<Tape> tapes(static_cast<std::size_t>(nthreads));
    const PointHead head = [&](int tid, std::size_t p, std::span<const Taylor2<double>> trunk,
                               std::span<Taylor2<double>> adjoint, std::span<double> c) {
      const double t = times[p];
      Tape& tape = tapes[static_cast<std::size_t>(tid)];
      tape.clear();
      std::vector<Taylor2<Var>> raw(d_out);
      for (std::size_t j = 0; j < d_out; ++j) {
        const Taylor2<double>& x = trunk[j];
        if (!std::isfinite(x.value) || !std::isfinite(x.d1) || !std::isfinite(x.d2))
          throw NumericalError("non-finite network output at t = " + std::to_string(t), -1, t);
        raw[j] = {tape.variable(x.value), tape.variable(x.d1), tape.variable(x.d2)};
      }
      std::vector<Taylor2<Var>> leaves = raw;
      const Taylor2<Var> tt{Var(t), Var(1.0), Var(0.0)};
      const auto u = apply_transforms<Var>(spec_, tt, std::move(raw));
      Var data(0.0), ode(0.0), ic(0.0);
      const PointIndex pi = classify(p, n_colloc, n_obs);
      terms.add<Var>(pi.kind, pi.index, t, u, data, ode, ic);
      c[0] = data.value();
      c[1] = ode.value();
      c[2] = ic.value();
      const Var total = weights_.data * data + weights_.ode * ode + weights_.ic * ic;
      if (total.is_constant()) return;
      const std::vector<double>& a = tape.adjoints(total);
      for (std::size_t j = 0; j < d_out; ++j) {
        adjoint[j].value = leaves[j].value.is_constant() ? 0.0 : a[leaves[j].value.index()];
        adjoint[j].d1 = leaves[j].d1.is_constant() ? 0.0 : a[leaves[j].d1.index()];
        adjoint[j].d2 = leaves[j].d2.is_constant() ? 0.0 : a[leaves[j].d2.index()];
      }
    };
    kernel_.evaluate(theta, head, 3, contrib, grad);
  }
  for (std::size_t p = 0; p < npts; ++p) {
    out.data += contrib[3 * p];
    out.ode += contrib[3 * p + 1];
    out.ic += contrib[3 * p + 2];
  }
  out.total = weights_.data * out.data + weights_.ode * out.ode + weights_.ic * out.ic;
  last_ = out;
  return out;
}

LossBreakdown PinnLoss::evaluate_reference(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t n_colloc = colloc_.size(), n_obs = obs_.size();
  const Terms terms{*problem_, obs_, weights_, n_colloc};
  const std::vector<double> times = kernel_times(colloc_, obs_, problem_->t_start);
  Tape tape;
  const std::vector<Var> params = tape.parameters(theta);
  Var data(0.0), ode(0.0), ic(0.0);
  for (std::size_t p = 0; p < times.size(); ++p) {
    const double t = times[p];
    const Taylor2<Var> tt{Var(t), Var(1.0), Var(0.0)};
    const auto u = forward<Var>(spec_, std::span<const Var>(params), tt);
    for (const auto& x : u)
      if (!std::isfinite(x.value.value()) || !std::isfinite(x.d1.value()) || !std::isfinite(x.d2.value()))
        throw NumericalError("non-finite network output at t = " + std::to_string(t), -1, t);
    const PointIndex pi = classify(p, n_colloc, n_obs);
    terms.add<Var>(pi.kind, pi.index, t, u, data, ode, ic);
  }
  const Var total = weights_.data * data + weights_.ode * ode + weights_.ic * ic;
  if (!grad.empty()) {
    if (total.is_constant()) {
      std::fill(grad.begin(), grad.end(), 0.0);
    } else {
      const std::vector<double> g = tape.gradient(total, theta.size());
      std::copy(g.begin(), g.end(), grad.begin());
    }
  }
  return {data.value(), ode.value(), ic.value(), total.value()};
}

Objective PinnLoss::objective() {
  return [this](std::span<const double> theta, std::span<double> grad) { return evaluate(theta, grad).total; };
}

// --- metrics -------------------------------------------------------------------

std::vector<double> predict(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> times) {
  const auto d_out = static_cast<std::size_t>(spec.d_out);
  BatchedKernel kernel(spec, std::vector<double>(times.begin(), times.end()), {.threads = 1});
  std::vector<Taylor2<double>> n(times.size() * d_out);
  kernel.forward(theta, n);
  std::vector<double> out(times.size() * d_out);
  for (std::size_t p = 0; p < times.size(); ++p) {
    std::vector<Taylor2<double>> raw(n.begin() + static_cast<std::ptrdiff_t>(p * d_out),
                                     n.begin() + static_cast<std::ptrdiff_t>((p + 1) * d_out));
    const auto u = apply_transforms<double>(spec, seed_input(times[p]), std::move(raw));
    for (std::size_t j = 0; j < d_out; ++j) out[p * d_out + j] = u[j].value;
  }
  return out;
}

double l2_relative_error(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw ContractViolation("l2_relative_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = pred[i] - ref[i];
    num += d * d;
    den += ref[i] * ref[i];
  }
  if (!(den > 0.0)) throw NumericalError("relative L2 error is undefined for a zero reference");
  return std::sqrt(num) / std::sqrt(den);
}

L2Error l2_relative_error(std::span<const double> pred, std::span<const double> ref, int dim) {
  if (dim <= 0 || pred.size() != ref.size() || ref.size() % static_cast<std::size_t>(dim) != 0)
    throw ContractViolation("l2_relative_error: shape mismatch");
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t n = ref.size() / d;
  L2Error e;
  e.total = l2_relative_error(pred, ref);
  std::vector<double> pc(n), rc(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      pc[i] = pred[i * d + j];
      rc[i] = ref[i * d + j];
    }
    e.components.push_back(l2_relative_error(pc, rc));
  }
  return e;
}

// --- training -------------------------------------------------------------------

namespace {

std::vector<double> reference_on(const OdeProblem& problem, std::span<const double> grid) {
  const Trajectory ref = reference_positions(problem, grid);
  return ref.states;
}

}  // namespace

TrainReport train(ProblemPtr problem, const NetworkSpec& spec, const LossWeights& weights, const ObservationSet& obs,
                  const TrainConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (config.eval_points < 2) throw ConfigError("evaluation grid needs at least 2 points");
  spec.validate();

  TrainReport rep;
  rep.problem = problem->name;
  rep.seed = config.seed;
  rep.components = problem->components;
  rep.eval_times = linspace(problem->t_start, problem->t_end, config.eval_points);
  rep.reference = reference_on(*problem, rep.eval_times);
  const int dim = problem->dimension;

  PinnLoss loss(problem, spec, make_collocation(problem->t_start, problem->t_end, config.colloc_count,
                                                config.colloc_strategy, config.seed),
                obs, weights, config.kernel);
  const std::vector<double> theta0 = init_params(spec, config.seed).theta;

  const auto monitor = [&](char stage, long offset) {
    return [&, stage, offset](long it, double value, std::span<const double> theta) {
      const long global = offset + it;
      if (config.record_history) rep.history.push_back({global, stage, loss.last()});
      if (!std::isfinite(value) || value > config.divergence_threshold) {
        rep.diverged = true;
        rep.divergence_reason = std::isfinite(value) ? "loss exceeded the divergence threshold"
                                                     : "non-finite loss";
        return false;
      }
      if (config.l2_every > 0 && global % config.l2_every == 0) {
        const L2Error e = l2_relative_error(predict(spec, theta, rep.eval_times), rep.reference, dim);
        rep.l2_history.push_back({global, e.total, e.components});
      }
      return true;
    };
  };

  std::vector<double> best = theta0;
  try {
    const StageResult adam = adam_run(loss.objective(), theta0, config.epochs, config.adam, monitor('a', 0));
    rep.adam_iterations = adam.iterations;
    best = adam.theta;
    double best_loss = adam.loss;
    if (!rep.diverged && config.lbfgs.max_iterations > 0) {
      const LbfgsResult lb = lbfgs_run(loss.objective(), best, config.lbfgs, monitor('l', adam.iterations));
      rep.lbfgs_iterations = lb.iterations;
      rep.lbfgs_status = to_string(lb.status);
      if (lb.loss <= best_loss) best = lb.theta;
    }
  } catch (const NumericalError& e) {
    rep.diverged = true;
    rep.divergence_reason = e.what();
  }

  rep.theta = best;
  try {
    rep.final_loss = loss.evaluate(best, {});
    rep.predicted = predict(spec, best, rep.eval_times);
    rep.final_l2 = l2_relative_error(rep.predicted, rep.reference, dim);
  } catch (const NumericalError& e) {
    rep.diverged = true;
    if (rep.divergence_reason.empty()) rep.divergence_reason = e.what();
    rep.final_loss.total = std::numeric_limits<double>::quiet_NaN();
    rep.final_l2.total = std::numeric_limits<double>::quiet_NaN();
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

}  // namespace pinnode
