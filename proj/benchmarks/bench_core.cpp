#include <benchmark/benchmark.h>

#include <vector>

#include "profmon/calibration.hpp"
#include "profmon/competitors.hpp"
#include "profmon/monitor.hpp"
#include "profmon/processes.hpp"

using namespace profmon;

namespace {

GaussianModel study1_model(std::size_t n) {
  return true_model(study_in_control(1), study_grid(1, n));
}

}  // namespace

static void ConditionalScore(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = study1_model(n);
  ConditionalScorer scorer(model);
  RngStream rng(7);
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(n), 256);
  sample_into(model, ys, rng);
  Eigen::Index col = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.score(ys.col(col)));
    col = (col + 1) % ys.cols();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(ConditionalScore)->Arg(10)->Arg(50)->Arg(200);

static void HotellingStatistic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = study1_model(n);
  RngStream rng(7);
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(n), 256);
  sample_into(model, ys, rng);
  Eigen::Index col = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t2_statistic(model, ys.col(col)));
    col = (col + 1) % ys.cols();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(HotellingStatistic)->Arg(10)->Arg(50)->Arg(200);

static void DrawProfile(benchmark::State& state) {
  ProcessSampler sampler(study_in_control(1), study_grid(1));
  RngStream rng(3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(sampler.dim()));
  for (auto _ : state) {
    sampler.draw(rng, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(DrawProfile);

static void BootstrapCalibrate(benchmark::State& state) {
  RngStream data_rng(11);
  std::vector<ProfileSample> historical;
  for (int i = 0; i < 1000; ++i) {
    historical.push_back(draw_profile(study_in_control(1), study_grid(1), data_rng));
  }
  BootstrapPlan plan;
  plan.b1 = static_cast<std::size_t>(state.range(0));
  plan.b2 = 5;
  plan.arl0 = 200;
  plan.m_star = 500;
  const std::vector<AggregationRule> rules{AggregationRule::Minimum,
                                           AggregationRule::GeometricMean};
  for (auto _ : state) {
    RngStream rng(5);
    benchmark::DoNotOptimize(bootstrap_calibrate(historical, plan, rules, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plan.m_prime()));
}
BENCHMARK(BootstrapCalibrate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void Arl0Series(benchmark::State& state) {
  const auto trunc = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(arl0_series(400, 5, trunc));
  }
}
BENCHMARK(Arl0Series)->Arg(1000)->Arg(1000000)->Arg(10000000)->Unit(benchmark::kMillisecond);

static void SimulateRunLength(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = m / 200 + 1;
  RngStream rng(9);
  std::vector<double> workspace;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_run_length(m, k, ReferenceDistribution::Uniform, rng, workspace));
  }
}
BENCHMARK(SimulateRunLength)->Arg(200)->Arg(2000)->Arg(20000);

BENCHMARK_MAIN();
