// Serial vs OpenMP batch gradient on the same configuration. Both reduce in
// sample order, so the results are bit-identical; only wall time differs.
#include <benchmark/benchmark.h>

#include "freqctl/instances.hpp"
#include "freqctl/training.hpp"

using namespace freqctl;

namespace {

struct Setup {
  NetworkModel model = ieee39();
  CostModel cost = CostModel::random_quartic(39, 1);
  ControllerGains gains;
  ControlLaw law;
  TrainConfig cfg;

  explicit Setup(std::size_t horizon) {
    gains = ControllerGains::identity(model);
    gains.gamma_phi = model.susceptance().cwiseAbs2().cwiseInverse();
    MonotoneConfig mc;
    law = ControlLaw::monotone(MonotoneNet::identity_init(39, mc, 0));
    cfg.batch = 8;
    cfg.horizon = horizon;
  }
  ClosedLoop system() const { return ClosedLoop{model, law, gains, cost}; }
};

void BM_BatchSerial(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  const ClosedLoop sys = s.system();
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(sys, s.cfg, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.cfg.batch));
}

void BM_BatchParallel(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  const ClosedLoop sys = s.system();
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_parallel(sys, s.cfg, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.cfg.batch));
}

void BM_Rollout(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  const ClosedLoop sys = s.system();
  const Vector p = random_disturbance(39, 5.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rollout_with_tape(sys, p, s.cfg));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Rollout)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
