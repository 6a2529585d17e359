#include <benchmark/benchmark.h>

#include <random>

#include "adafilter/exact_filter.hpp"
#include "adafilter/measures.hpp"
#include "adafilter/model.hpp"
#include "adafilter/particle_filter.hpp"

using namespace adafilter;

namespace {

AugmentedModel two_state_model(std::size_t grid_points) {
  std::vector<Param> grid;
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid.push_back({0.05 + 0.9 * static_cast<double>(i) / static_cast<double>(grid_points - 1)});
  }
  auto family = KernelFamily::affine(grid, Matrix::from_rows({{1.0, 0.0}, {0.3, 0.7}}),
                                     {Matrix::from_rows({{-1.0, 1.0}, {0.0, 0.0}})});
  return AugmentedModel(std::move(family), DiscreteMeasure::uniform(grid_points),
                        ObservationModel({0.0, 1.0}, 0.5), DiscreteMeasure::probability({0.5, 0.5}));
}

FiniteKernel random_kernel(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  for (auto& row : rows) {
    double s = 0.0;
    for (double& v : row) s += (v = u(rng));
    for (double& v : row) v /= s;
  }
  return FiniteKernel::from_rows(rows);
}

}  // namespace

static void BM_FilterStep(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto k = random_kernel(n, 1);
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = static_cast<double>(i);
  const ObservationModel obs(h, 1.0);
  FilterState s{DiscreteMeasure::uniform(n), 0.0};
  double y = 0.0;
  for (auto _ : st) {
    s = filter_step(k, obs, s, y);
    y = y > 0.5 ? 0.0 : 1.0;
    benchmark::DoNotOptimize(s.log_normalizer);
  }
}
BENCHMARK(BM_FilterStep)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

static void BM_AugmentedFilterStep(benchmark::State& st) {
  const auto model = two_state_model(static_cast<std::size_t>(st.range(0)));
  const auto y = simulate(model, 0, 1000, 7).observations;
  AugmentedFilter f(model);
  std::size_t t = 0;
  for (auto _ : st) {
    f.step(y[t++ % y.size()]);
    benchmark::DoNotOptimize(f.state().param_log_weights.data());
  }
}
BENCHMARK(BM_AugmentedFilterStep)->Arg(21)->Arg(201);

static void BM_PfStep(benchmark::State& st) {
  const auto model = two_state_model(21);
  const auto y = simulate(model, 10, 1000, 7).observations;
  auto e = pf_init(model, static_cast<std::size_t>(st.range(0)), 3);
  std::size_t t = 0;
  for (auto _ : st) {
    e = pf_step(model, e, y[t++ % y.size()]);
    benchmark::DoNotOptimize(e.log_weights.data());
  }
}
BENCHMARK(BM_PfStep)->Arg(1000)->Arg(10000);

static void BM_BirkhoffTau(benchmark::State& st) {
  const auto k = random_kernel(static_cast<std::size_t>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(birkhoff_tau(k));
}
BENCHMARK(BM_BirkhoffTau)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK_MAIN();
