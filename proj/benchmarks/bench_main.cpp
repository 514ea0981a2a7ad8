#include <benchmark/benchmark.h>

#include <random>

#include "gcrl/agent.hpp"

namespace {

using namespace gcrl;

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_NetForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  Rng rng(1);
  DenseNet net({9, width, width, width, 1}, OutputActivation::kLinear, rng);
  const Matrix x = random_matrix(rng, 9, batch);
  const Matrix adjoint = Matrix::Ones(1, batch);
  ForwardCache cache;
  for (auto _ : state) {
    net.forward(x, cache);
    benchmark::DoNotOptimize(net.backward(cache, adjoint));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_NetForwardBackward)->Args({64, 128})->Args({256, 256})->Args({512, 1024});

struct Fixture {
  explicit Fixture(TargetKind kind, int n, int batch)
      : agent(Environment(EnvSpec::grid(10)), make_config(kind, n, batch)), env_rng(5) {
    agent.warmup(buffer, env_rng);
  }

  static AgentConfig make_config(TargetKind kind, int n, int batch) {
    AgentConfig c;
    c.gamma = 1.0 - 1.0 / 30.0;
    c.hidden = {64, 64, 64};
    c.batch_size = batch;
    c.target = {kind, n, 0.7};
    return c;
  }

  TrajectoryBuffer buffer;
  Agent agent;
  Rng env_rng;
};

void BM_ComputeTargets(benchmark::State& state) {
  const auto kind = static_cast<TargetKind>(state.range(0));
  Fixture f(kind, kind == TargetKind::kHer ? 1 : 10, 128);
  Rng rng(7);
  const auto batch = sample_segments(f.agent.env(), f.buffer, 128, f.agent.config().target.horizon_needed(),
                                     HindsightSpec{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(f.agent.compute_targets(batch));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_ComputeTargets)
    ->Arg(static_cast<int>(TargetKind::kHer))
    ->Arg(static_cast<int>(TargetKind::kMher))
    ->Arg(static_cast<int>(TargetKind::kTmherLambda))
    ->Arg(static_cast<int>(TargetKind::kRetrace));

void BM_TrainBatch(benchmark::State& state) {
  Fixture f(TargetKind::kTmherLambda, 10, static_cast<int>(state.range(0)));
  Rng rng(9);
  const auto batch = sample_segments(f.agent.env(), f.buffer, static_cast<std::size_t>(state.range(0)), 10,
                                     HindsightSpec{}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(f.agent.train_batch(batch, true));
}
BENCHMARK(BM_TrainBatch)->Arg(128)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
