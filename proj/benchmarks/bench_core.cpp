#include <benchmark/benchmark.h>

#include "fedsense/nn.hpp"
#include "fedsense/protocol.hpp"
#include "fedsense/signal.hpp"
#include "fedsense/topology.hpp"

using namespace fedsense;

namespace {

std::vector<FeatureSample> bench_dataset(int n) {
  ChannelParams channel;
  Rng rng(1);
  return generate_sensor_dataset({400.0, 300.0}, channel, n, 0.5, rng);
}

void BM_GenerateSensorDataset(benchmark::State& state) {
  ChannelParams channel;
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(++seed);
    auto data = generate_sensor_dataset({400.0, 300.0}, channel, n, 0.5, rng);
    benchmark::DoNotOptimize(data);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GenerateSensorDataset)->Arg(100)->Arg(1000);

void BM_ForwardBatch(benchmark::State& state) {
  Rng rng(2);
  ModelParams model = init_model(rng);
  auto data = bench_dataset(static_cast<int>(state.range(0)));
  auto [x, labels] = pack_batch(data);
  for (auto _ : state) {
    auto p = forward_batch(model, x);
    benchmark::DoNotOptimize(p);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(32)->Arg(512)->Arg(4096);

void BM_TrainLocalEpoch(benchmark::State& state) {
  Rng rng(3);
  ModelParams model = init_model(rng);
  OptimizerState opt = init_optimizer(model);
  auto data = bench_dataset(static_cast<int>(state.range(0)));
  TrainConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng train_rng(++seed);
    train_local(model, opt, data, cfg, train_rng);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainLocalEpoch)->Arg(128)->Arg(480);

void BM_FederatedAverage(benchmark::State& state) {
  Rng rng(4);
  ModelParams own = init_model(rng);
  std::vector<ModelParams> received;
  for (int k = 0; k < state.range(0); ++k) received.push_back(init_model(rng));
  for (auto _ : state) {
    auto mean = federated_average(own, received);
    benchmark::DoNotOptimize(mean);
  }
}
BENCHMARK(BM_FederatedAverage)->Arg(1)->Arg(4)->Arg(19);

void BM_GridRound(benchmark::State& state) {
  SimConfig cfg;
  cfg.dataset.samples_per_sensor = 200;
  Topology grid = build_grid();
  Executor executor(static_cast<int>(state.range(0)));

  std::vector<SensorState> sensors(static_cast<std::size_t>(grid.size()));
  ChannelParams channel;
  for (int i = 0; i < grid.size(); ++i) {
    auto& s = sensors[static_cast<std::size_t>(i)];
    s.id = i;
    Rng rng(derive_seed(1, Stream::kDataset, static_cast<std::uint64_t>(i)));
    s.train_data = generate_sensor_dataset(grid.positions[static_cast<std::size_t>(i)],
                                           channel, 200, 0.5, rng);
    s.test_data = s.train_data;
    Rng init_rng(derive_seed(1, Stream::kModelInit, static_cast<std::uint64_t>(i)));
    s.model = init_model(init_rng);
    s.optimizer = init_optimizer(s.model);
  }
  auto global_test = global_test_set(sensors);
  auto [x, labels] = pack_batch(global_test);
  LinkModel link;
  int round = 0;
  for (auto _ : state) {
    auto outcome = run_round(sensors, grid, link, cfg.train, x, labels, ++round, 1, executor);
    benchmark::DoNotOptimize(outcome);
  }
}
BENCHMARK(BM_GridRound)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
