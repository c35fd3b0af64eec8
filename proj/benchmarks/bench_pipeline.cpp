#include <benchmark/benchmark.h>

#include <vector>

#include "qpjumps/analysis.h"
#include "qpjumps/config.h"
#include "qpjumps/fitting.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/pipeline.h"
#include "qpjumps/rng.h"

namespace {

qpj::ScenarioConfig one_second() { return qpj::parse_config("rng_seed = 1\nduration = 1\n"); }

void simulate_joint(benchmark::State& state) {
  const auto cfg = one_second();
  for (auto _ : state) {
    auto rng = qpj::stream_rng(cfg.rng_seed, 0);
    benchmark::DoNotOptimize(qpj::simulate_joint(cfg, rng));
  }
}
BENCHMARK(simulate_joint)->Unit(benchmark::kMillisecond);

void synthesize_iq(benchmark::State& state) {
  const auto cfg = one_second();
  auto rng = qpj::stream_rng(cfg.rng_seed, 0);
  const auto truth = qpj::simulate_joint(cfg, rng);
  for (auto _ : state) {
    auto noise = qpj::stream_rng(cfg.rng_seed, 1);
    benchmark::DoNotOptimize(qpj::synthesize_iq(truth, cfg.meas, noise));
  }
  state.SetItemsProcessed(state.iterations() * 200000);
}
BENCHMARK(synthesize_iq)->Unit(benchmark::kMillisecond);

void two_point_filter(benchmark::State& state) {
  const auto cfg = one_second();
  const auto sim = qpj::run_simulation(cfg);
  const double sep = qpj::snr_separation(cfg.meas);
  for (auto _ : state) benchmark::DoNotOptimize(qpj::two_point_filter(sim.iq, sep));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sim.iq.size()));
}
BENCHMARK(two_point_filter)->Unit(benchmark::kMillisecond);

void per_second_report(benchmark::State& state) {
  const auto cfg = one_second();
  const auto sim = qpj::run_simulation(cfg);
  const auto est = qpj::two_point_filter(sim.iq, qpj::snr_separation(cfg.meas));
  for (auto _ : state) benchmark::DoNotOptimize(qpj::per_second_report(est, 0.1));
}
BENCHMARK(per_second_report)->Unit(benchmark::kMillisecond);

void periodogram(benchmark::State& state) {
  auto rng = qpj::stream_rng(1, 0);
  const auto x = qpj::synthesize_psd_series({1.0, 1e-4, 1.4, 0.01}, static_cast<std::size_t>(state.range(0)), 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(qpj::periodogram(x, 1.0, 4));
}
BENCHMARK(periodogram)->Arg(4096)->Arg(1 << 17);

void fit_power_law(benchmark::State& state) {
  auto rng = qpj::stream_rng(1, 0);
  const auto x = qpj::synthesize_psd_series({1.0, 1e-4, 1.4, 0.01}, 4096, 1.0, rng);
  const auto p = qpj::periodogram(x, 1.0, 4);
  qpj::PsdFitOptions o;
  o.averaged_segments = 4;
  o.bootstrap_samples = 0;
  for (auto _ : state) benchmark::DoNotOptimize(qpj::fit_power_law(p.freqs, p.power, o));
}
BENCHMARK(fit_power_law)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
