#include <benchmark/benchmark.h>

#include <vector>

#include "pdgm/backward.hpp"
#include "pdgm/forward.hpp"
#include "pdgm/metrics.hpp"
#include "pdgm/mlp.hpp"
#include "pdgm/ratio_zzp.hpp"

using namespace pdgm;

namespace {

MlpArch desk_arch() {
  MlpArch a;
  a.in_dim = 4;
  a.out_dim = 2;
  a.hidden_width = 128;
  a.n_blocks = 4;
  a.time_embed_dim = 32;
  a.head = HeadKind::Softplus;
  a.time_horizon = 5.0;
  return a;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  const Mlp net = Mlp::initialize(desk_arch(), rng);
  const auto b = state.range(0);
  const Matrix x = random_matrix(4, b, 2);
  const Vector t = Vector::Constant(b, 2.5);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, t));
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_MlpForward)->Arg(512)->Arg(4096);

void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const Mlp net = Mlp::initialize(desk_arch(), rng);
  const auto b = state.range(0);
  const Matrix x = random_matrix(4, b, 2);
  const Vector t = Vector::Constant(b, 2.5);
  Vector grad = Vector::Zero(net.theta().size());
  MlpCache cache;
  for (auto _ : state) {
    const Matrix y = net.forward(x, t, cache);
    net.backward(cache, y, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(512);

void BM_ForwardSimulation(benchmark::State& state) {
  ProcessSpec spec;
  spec.kind = static_cast<ProcessKind>(state.range(0));
  spec.dim = 2;
  const State init{Vector::Zero(2), spec.kind == ProcessKind::ZigZag ? Vector::Ones(2)
                                                                     : Vector::Constant(2, 0.7)};
  std::uint64_t k = 0;
  for (auto _ : state) {
    Rng rng = Rng::stream(3, k++);
    benchmark::DoNotOptimize(simulate_forward(spec, init, 5.0, rng));
  }
}
BENCHMARK(BM_ForwardSimulation)
    ->Arg(static_cast<int>(ProcessKind::ZigZag))
    ->Arg(static_cast<int>(ProcessKind::Bouncy))
    ->Arg(static_cast<int>(ProcessKind::RandomizedHmc));

void BM_Mmd(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix x = random_matrix(n, 2, 4), y = random_matrix(n, 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(mmd(x, y));
}
BENCHMARK(BM_Mmd)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Wasserstein2(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix x = random_matrix(n, 2, 6), y = random_matrix(n, 2, 7);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein2(x, y));
}
BENCHMARK(BM_Wasserstein2)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_DjdZzpStep(benchmark::State& state) {
  ProcessSpec spec;
  spec.dim = 2;
  Rng init(8);
  const RatioModel model(spec, Mlp::initialize(desk_arch(), init));
  const auto b = state.range(0);
  Chains chains{random_matrix(2, b, 9), Matrix::Ones(2, b), {}};
  for (Eigen::Index j = 0; j < b; ++j) chains.rngs.push_back(Rng::stream(10, static_cast<std::uint64_t>(j)));
  BackwardStats stats;
  for (auto _ : state) djd_zzp_step(model, spec, chains, 1.0, 0.05, {}, stats);
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DjdZzpStep)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
