#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "mertoneq/closedform.hpp"
#include "mertoneq/compare.hpp"
#include "mertoneq/equilibrium.hpp"
#include "mertoneq/pde.hpp"
#include "mertoneq/rng.hpp"
#include "mertoneq/simulate.hpp"

using namespace mertoneq;

namespace {

MarketModel market() {
  return MarketModel::constant(1.0, 0.03, Eigen::VectorXd::Constant(1, 0.08), Eigen::MatrixXd::Constant(1, 1, 0.2));
}

void BM_NormalFill(benchmark::State& state) {
  const NormalStream s(7, 0);
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  std::uint32_t path = 0;
  for (auto _ : state) {
    s.fill(path++, 0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NormalFill)->Arg(256)->Arg(4096);

void BM_SimulatePaths(benchmark::State& state) {
  const auto m = market();
  const auto d = DiscountFunction::hyperbolic(1.0, 1.0, 1.0);
  const TimeGrid g(1.0, 200);
  const auto p = policy_power(solve_power(m, d, 1.0, 0.5, g), m, d);
  SimulationSettings s;
  s.paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(p, m, g, 1.0, s));
  // one item is one path step
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}
BENCHMARK(BM_SimulatePaths)->Arg(1000);

void BM_SolvePower(benchmark::State& state) {
  const auto m = market();
  const auto d = DiscountFunction::hyperbolic(1.0, 1.0, 1.0);
  const TimeGrid g(1.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_power(m, d, 1.0, 0.5, g));
}
BENCHMARK(BM_SolvePower)->Arg(200)->Arg(2000);

void BM_SolanoPower(benchmark::State& state) {
  const auto m = market();
  const TimeGrid g(1.0, 200);
  const Curve delta(0.0, 1.0, {0.1, 0.2});
  for (auto _ : state) benchmark::DoNotOptimize(solano_feedback_power(m, 1.0, 0.5, delta, g));
}
BENCHMARK(BM_SolanoPower)->Unit(benchmark::kMillisecond);

void BM_KarpLog(benchmark::State& state) {
  const auto m = market();
  const TimeGrid g(1.0, 200);
  const Curve delta(0.0, 1.0, {0.1, 0.2});
  for (auto _ : state) benchmark::DoNotOptimize(karp_openloop(m, Utility::log(1.0), delta, g));
}
BENCHMARK(BM_KarpLog)->Unit(benchmark::kMillisecond);

void BM_SolveTheta(benchmark::State& state) {
  const auto m = market();
  const auto d = DiscountFunction::hyperbolic(1.0, 1.0, 1.0);
  const auto u = Utility::power(1.0, 0.5);
  const auto n = static_cast<std::size_t>(state.range(0));
  const TimeGrid g(1.0, n);
  PdeSettings ps;
  ps.domain = default_domain(u, 1.0);
  ps.space_steps = n;
  for (auto _ : state) benchmark::DoNotOptimize(solve_theta(m, d, u, g, ps));
}
BENCHMARK(BM_SolveTheta)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
