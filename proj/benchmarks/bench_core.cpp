#include <benchmark/benchmark.h>

#include "csl/convexsplit.hpp"
#include "csl/divergences.hpp"
#include "csl/optim.hpp"
#include "csl/protocols.hpp"

namespace {

csl::DensityOperator mixed(int d_r, int d_a, std::uint64_t seed) {
  csl::RegisterLayout l({{"R", d_r}, {"A", d_a}});
  return std::get<csl::DensityOperator>(csl::sample(csl::SampleKind::MixedHilbertSchmidt, l, seed));
}

void BM_SandwichedDivergence(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  csl::Rng rng(1);
  csl::Matrix rho = csl::sample_mixed(csl::RegisterLayout::single("S", d), rng).matrix();
  csl::Matrix sigma = csl::sample_mixed(csl::RegisterLayout::single("S", d), rng).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(csl::d_alpha(rho, sigma, 1.5).value());
}
BENCHMARK(BM_SandwichedDivergence)->Arg(4)->Arg(16)->Arg(64);

void BM_SplitEquality(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  csl::DensityOperator rho = mixed(2, 2, 3);
  csl::DensityOperator sigma = csl::DensityOperator::maximally_mixed(csl::RegisterLayout::single("A", 2));
  csl::ConvexSplitInstance inst = csl::pinned_instance(rho, sigma, n);
  for (auto _ : state) benchmark::DoNotOptimize(csl::split_equality_check(inst).residual);
}
BENCHMARK(BM_SplitEquality)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

void BM_ImaxSdp(benchmark::State& state) {
  csl::DensityOperator rho = mixed(2, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(csl::imax_sdp(rho).value_bits);
}
BENCHMARK(BM_ImaxSdp)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_HypothesisTest(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  csl::Rng rng(7);
  csl::Matrix rho = csl::sample_mixed(csl::RegisterLayout::single("S", d), rng).matrix();
  csl::Matrix sigma = csl::sample_mixed(csl::RegisterLayout::single("S", d), rng).matrix();
  for (auto _ : state) benchmark::DoNotOptimize(csl::hypothesis_test(rho, sigma, 0.1).type2);
}
BENCHMARK(BM_HypothesisTest)->Arg(4)->Arg(16);

void BM_QssSimulate(benchmark::State& state) {
  csl::Vector phi = csl::Vector::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  csl::QSSInstance inst{csl::PureStateVector(phi, csl::RegisterLayout({{"R", 2}, {"A'", 2}})), 0.9,
                        static_cast<double>(state.range(0)) / 100.0};
  csl::OptimizerOptions o;
  o.restarts = 2;
  for (auto _ : state) benchmark::DoNotOptimize(csl::qss_simulate(inst, o).achieved_distance);
}
BENCHMARK(BM_QssSimulate)->Arg(80)->Arg(60)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
