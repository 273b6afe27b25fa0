#include "pinnode/tape.hpp"

#include <cmath>

#include "pinnode/errors.hpp"

namespace pinnode {

Var Tape::push(double value, std::int32_t a, double da, std::int32_t b, double db) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{value, a, b, da, db});
  return Var(this, index, value);
}

Var Tape::variable(double value) { return push(value, -1, 0.0, -1, 0.0); }

Var Tape::parameter(double value, std::size_t slot) {
  Var v = push(value, -1, 0.0, -1, 0.0);
  slots_.emplace_back(v.index(), slot);
  return v;
}

std::vector<Var> Tape::parameters(std::span<const double> theta) {
  std::vector<Var> out;
  out.reserve(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) out.push_back(parameter(theta[k], k));
  return out;
}

Var Tape::unary(double value, const Var& a, double da) {
  if (a.is_constant()) return Var(value);
  if (a.tape() != this) throw ContractViolation("Var belongs to a different tape");
  return push(value, a.index(), da, -1, 0.0);
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant()) return unary(value, b, db);
  if (b.is_constant()) return unary(value, a, da);
  if (a.tape() != this || b.tape() != this) throw ContractViolation("Var belongs to a different tape");
  return push(value, a.index(), da, b.index(), db);
}

std::vector<double> Tape::adjoints(const Var& output) const {
  if (output.is_constant() || output.tape() != this)
    throw ContractViolation("backward: output is not a node of this tape");
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[static_cast<std::size_t>(output.index())] = 1.0;
  for (auto i = static_cast<std::ptrdiff_t>(output.index()); i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
  }
  return adj;
}

std::vector<double> Tape::gradient(const Var& output, std::size_t n_slots) const {
  std::vector<double> grad(n_slots, 0.0);
  if (output.is_constant()) return grad;
  const std::vector<double> adj = adjoints(output);
  for (const auto& [node, slot] : slots_) {
    if (slot >= n_slots) throw ContractViolation("gradient: parameter slot out of range");
    grad[slot] += adj[static_cast<std::size_t>(node)];
  }
  return grad;
}

void Tape::clear() noexcept {
  nodes_.clear();
  slots_.clear();
}

namespace {

Tape* tape_of(const Var& a, const Var& b) { return a.tape() != nullptr ? a.tape() : b.tape(); }

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (t == nullptr) return Var(a.value() + b.value());
  return t->binary(a.value() + b.value(), a, 1.0, b, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (t == nullptr) return Var(a.value() - b.value());
  return t->binary(a.value() - b.value(), a, 1.0, b, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  if (t == nullptr) return Var(a.value() * b.value());
  return t->binary(a.value() * b.value(), a, b.value(), b, a.value());
}

Var operator/(const Var& a, const Var& b) {
  Tape* t = tape_of(a, b);
  const double q = a.value() / b.value();
  if (t == nullptr) return Var(q);
  return t->binary(q, a, 1.0 / b.value(), b, -q / b.value());
}

Var operator-(const Var& a) {
  if (a.is_constant()) return Var(-a.value());
  return a.tape()->unary(-a.value(), a, -1.0);
}

namespace {

template <class F, class D>
Var apply_unary(const Var& x, F f, D df) {
  const double v = f(x.value());
  if (x.is_constant()) return Var(v);
  return x.tape()->unary(v, x, df(x.value(), v));
}

}  // namespace

Var sin(const Var& x) {
  return apply_unary(x, [](double v) { return std::sin(v); }, [](double v, double) { return std::cos(v); });
}

Var cos(const Var& x) {
  return apply_unary(x, [](double v) { return std::cos(v); }, [](double v, double) { return -std::sin(v); });
}

Var exp(const Var& x) {
  return apply_unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return apply_unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var log1p(const Var& x) {
  return apply_unary(x, [](double v) { return std::log1p(v); }, [](double v, double) { return 1.0 / (1.0 + v); });
}

Var tanh(const Var& x) {
  return apply_unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sqrt(const Var& x) {
  return apply_unary(x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Var sigmoid(const Var& x) {
  return apply_unary(x, [](double v) { return sigmoid(v); }, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& x) {
  return apply_unary(x, [](double v) { return softplus(v); }, [](double v, double) { return sigmoid(v); });
}

}  // namespace pinnode
