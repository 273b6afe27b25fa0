// Loss-and-gradient throughput: scalar tape reference vs the batched kernel
// at several thread counts.

#include <benchmark/benchmark.h>

#include "pinnode/integrators.hpp"
#include "pinnode/pinn.hpp"

using namespace pinnode;

namespace {

PinnLoss make_loss(int width, std::size_t colloc, int threads) {
  const auto lz = make_problem("lorenz");
  NetworkSpec spec = NetworkSpec::uniform(3, width, Primitive::tanh, 3);
  spec.input_scale = 2.0 / (lz->t_end - lz->t_start);
  spec.input_offset = 0.5 * (lz->t_start + lz->t_end);
  const auto ref = reference_positions(*lz, linspace(lz->t_start, lz->t_end, 100));
  return PinnLoss(lz, spec, make_collocation(lz->t_start, lz->t_end, colloc), add_gaussian_noise(ref, 0.2, 1),
                  LossWeights{}, {.chunk_size = 128, .threads = threads});
}

void BM_TapeReference(benchmark::State& state) {
  PinnLoss loss = make_loss(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)), 1);
  const auto theta = init_params(loss.spec(), 1).theta;
  std::vector<double> grad(theta.size());
  for (auto _ : state) benchmark::DoNotOptimize(loss.evaluate_reference(theta, grad).total);
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Kernel(benchmark::State& state) {
  PinnLoss loss = make_loss(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)),
                            static_cast<int>(state.range(2)));
  const auto theta = init_params(loss.spec(), 1).theta;
  std::vector<double> grad(theta.size());
  for (auto _ : state) benchmark::DoNotOptimize(loss.evaluate(theta, grad).total);
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_TapeReference)->Args({40, 400})->Args({60, 600})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Kernel)
    ->ArgsProduct({{40, 60}, {400, 600}, {1, 2, 4}})
    ->ArgNames({"width", "points", "threads"})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
