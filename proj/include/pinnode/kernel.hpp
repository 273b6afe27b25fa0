#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pinnode/network.hpp"

namespace pinnode {

struct KernelOptions {
  /// Points per block; blocks are the unit of parallel work and of the
  /// fixed-order gradient reduction.
  std::size_t chunk_size = 128;
  /// OpenMP threads; 0 uses the runtime default.
  int threads = 0;
};

/// Per-point loss head. Given the raw trunk outputs at point `point`
/// (before output transforms), writes the point's loss contributions and
/// the derivative of their sum with respect to each (value, d1, d2) output.
/// Called concurrently from several threads; `thread` indexes per-thread scratch.
using PointHead = std::function<void(int thread, std::size_t point, std::span<const Taylor2<double>> trunk,
                                     std::span<Taylor2<double>> adjoint, std::span<double> contrib)>;

/// Batched Taylor-2 evaluation of the network trunk over a fixed set of
/// input times, with a hand-derived reverse pass through the value, d1 and
/// d2 channels. Blocks of points run in parallel under OpenMP; per-block
/// gradients are summed in block order, so results do not depend on the
/// thread count.
class BatchedKernel {
 public:
  BatchedKernel(NetworkSpec spec, std::vector<double> times, KernelOptions options = {});
  ~BatchedKernel();
  BatchedKernel(BatchedKernel&&) noexcept;
  BatchedKernel& operator=(BatchedKernel&&) noexcept;

  const NetworkSpec& spec() const;
  std::span<const double> times() const;
  std::size_t size() const;
  int thread_count() const;

  /// Raw trunk outputs, out[p * d_out + j].
  void forward(std::span<const double> theta, std::span<Taylor2<double>> out);

  /// Runs forward, the head at every point, and the reverse pass. `contrib`
  /// holds size() * n_contrib entries (row per point); `grad` receives the
  /// gradient of the sum of all contributions.
  void evaluate(std::span<const double> theta, const PointHead& head, std::size_t n_contrib,
                std::span<double> contrib, std::span<double> grad);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pinnode
