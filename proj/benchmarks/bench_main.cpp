#include <vector>

#include <benchmark/benchmark.h>

#include "fedbayes/data.hpp"
#include "fedbayes/model.hpp"
#include "fedbayes/privacy.hpp"
#include "fedbayes/pvi.hpp"
#include "fedbayes/rng.hpp"

namespace {

using namespace fedbayes;

void bench_step_rdp(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(step_rdp(0.02, 5.0));
}
BENCHMARK(bench_step_rdp);

void bench_epsilon(benchmark::State& state) {
  MomentsLedger ledger;
  const auto per_step = step_rdp(0.02, 5.0);
  for (int i = 0; i < 1000; ++i) ledger.accumulate(per_step);
  for (auto _ : state) benchmark::DoNotOptimize(epsilon(ledger, 1e-4));
}
BENCHMARK(bench_epsilon);

void bench_per_example_grad(benchmark::State& state) {
  Generator rng(1);
  const auto d = static_cast<std::size_t>(state.range(0));
  std::vector<double> w(d, 0.1);
  const auto shard = synthetic_logistic(d, 1, w, rng);
  VariationalParams vp;
  vp.mu.assign(d, 0.0);
  vp.rho.assign(d, -1.0);
  const auto noise = rng.normal_vector(d);
  for (auto _ : state) benchmark::DoNotOptimize(per_example_grad(vp, shard[0], noise));
}
BENCHMARK(bench_per_example_grad)->Arg(16)->Arg(128);

void bench_clip(benchmark::State& state) {
  Generator rng(2);
  const auto g = rng.normal_vector(128);
  for (auto _ : state) benchmark::DoNotOptimize(clip(g, 1.0));
}
BENCHMARK(bench_clip);

void bench_evaluate(benchmark::State& state) {
  Generator rng(3);
  const std::size_t d = 64;
  std::vector<double> w(d, 0.1);
  const auto test = synthetic_logistic(d, 1000, w, rng);
  const GaussianMoment q(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(q, test));
}
BENCHMARK(bench_evaluate);

void bench_partition(benchmark::State& state) {
  std::vector<Example> pool;
  pool.reserve(39074);
  for (int i = 0; i < 29696; ++i) pool.push_back(Example{{0.0}, -1});
  for (int i = 0; i < 9378; ++i) pool.push_back(Example{{0.0}, 1});
  PartitionSpec spec;
  spec.m_clients = 10;
  spec.rho = 0.7;
  spec.kappa = -3.0;
  spec.n_total_override = 39074;
  for (auto _ : state) {
    Generator rng(1);
    benchmark::DoNotOptimize(partition(pool, spec, rng));
  }
}
BENCHMARK(bench_partition);

void bench_local_round(benchmark::State& state) {
  Generator rng(4);
  const std::vector<double> w{1.0, -1.0, 0.5};
  const auto shard = synthetic_logistic(3, 500, w, rng);
  const auto q_old =
      to_natural(GaussianMoment(std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)));
  LocalOptConfig cfg;
  cfg.n_steps = 25;
  cfg.learning_rate = 1.0;
  cfg.minibatch.kind = MinibatchKind::fixed;
  cfg.minibatch.fixed_size = 100;
  LogisticLikelihood lik;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        local_optimize(lik, shard, GaussianNatural::zero(3), q_old, cfg, rng));
}
BENCHMARK(bench_local_round);

}  // namespace

BENCHMARK_MAIN();
