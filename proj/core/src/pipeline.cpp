#include "qpjumps/pipeline.h"

#include "qpjumps/rng.h"

namespace qpj {

SimulationOutput run_simulation(const ScenarioConfig& config, bool keep_truth) {
  config.validate();
  auto chain_rng = stream_rng(config.rng_seed, 0);
  auto noise_rng = stream_rng(config.rng_seed, 1);
  SimulationOutput out;
  out.truth = simulate_joint(config, chain_rng);
  out.iq = synthesize_iq(out.truth, config.meas, noise_rng, keep_truth);
  return out;
}

StatsOutput run_stats(const IQRecord& iq, const MeasurementParams& meas, double window,
                      const ReportOptions& options) {
  StatsOutput out;
  out.estimate = two_point_filter(iq, snr_separation(meas));
  out.windows = per_second_report(out.estimate, window, options);
  return out;
}

}  // namespace qpj
