#include <algorithm>
#include <cmath>
#include <vector>

#include "pinnode/errors.hpp"
#include "pinnode/objective.hpp"

namespace pinnode {

double grad_check(const Objective& f, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ContractViolation("grad_check: step must be positive");
  std::vector<double> grad(theta.size());
  const double f0 = f(theta, grad);
  if (!std::isfinite(f0)) throw NumericalError("grad_check: non-finite loss at theta");

  std::vector<double> probe(theta.begin(), theta.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    probe[k] = theta[k] + h;
    const double fp = f(probe, {});
    probe[k] = theta[k] - h;
    const double fm = f(probe, {});
    probe[k] = theta[k];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("grad_check: non-finite loss near theta", static_cast<long>(k));
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(grad[k] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace pinnode
