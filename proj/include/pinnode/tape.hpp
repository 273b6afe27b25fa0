#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pinnode {

class Tape;

/// Scalar handle into a reverse-mode Tape. A default-constructed or
/// double-constructed Var is a constant and lives on no tape; arithmetic
/// between constants never touches a tape.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::int32_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

/// Linear record of scalar operations. Each node stores at most two operand
/// indices with their local partials; operands always precede the node, so a
/// single backward sweep in reverse order yields every adjoint.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Independent leaf (not tied to a parameter slot).
  Var variable(double value);
  /// Leaf mapped to position `slot` of the flat parameter vector.
  Var parameter(double value, std::size_t slot);
  /// Convenience: one parameter leaf per entry of theta, slot = position.
  std::vector<Var> parameters(std::span<const double> theta);

  /// Adjoint of `output` with respect to every node on the tape.
  std::vector<double> adjoints(const Var& output) const;
  /// d(output)/d(theta_k) for k < n_slots; slots never referenced stay 0.
  std::vector<double> gradient(const Var& output, std::size_t n_slots) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  double value(std::int32_t index) const { return nodes_.at(static_cast<std::size_t>(index)).value; }
  void clear() noexcept;
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Node constructors used by the operator overloads.
  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

 private:
  struct Node {
    double value;
    std::int32_t a;
    std::int32_t b;
    double da;
    double db;
  };

  Var push(double value, std::int32_t a, double da, std::int32_t b, double db);

  std::vector<Node> nodes_;
  std::vector<std::pair<std::int32_t, std::size_t>> slots_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var sin(const Var& x);
Var cos(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var log1p(const Var& x);
Var tanh(const Var& x);
Var sqrt(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);

double sigmoid(double x) noexcept;
double softplus(double x) noexcept;

inline double value_of(double x) noexcept { return x; }
inline double value_of(const Var& x) noexcept { return x.value(); }

}  // namespace pinnode
