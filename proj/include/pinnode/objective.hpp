#pragma once

#include <functional>
#include <span>

namespace pinnode {

/// Scalar objective over a flat parameter vector. Returns f(theta); when
/// `grad` is non-empty it must also be filled with the gradient.
using Objective = std::function<double(std::span<const double> theta, std::span<double> grad)>;

/// Max over k of |analytic_k - fd_k| / max(1, |fd_k|), with fd_k the central
/// difference of step h in coordinate k. Throws NumericalError when any
/// evaluation is non-finite.
double grad_check(const Objective& f, std::span<const double> theta, double h);

}  // namespace pinnode
