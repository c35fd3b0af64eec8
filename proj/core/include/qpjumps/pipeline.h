#pragma once

// The simulate -> filter -> statistics chain shared by the CLI commands and the
// named experiments, so a chain run through files equals one run in memory.

#include <vector>

#include "qpjumps/analysis.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/params.h"

namespace qpj {

struct SimulationOutput {
  TruthTrace truth;
  IQRecord iq;
};

// Chain on stream 0 of config.rng_seed, measurement noise on stream 1.
SimulationOutput run_simulation(const ScenarioConfig& config, bool keep_truth = false);

struct StatsOutput {
  StateEstimate estimate;
  std::vector<WindowStats> windows;
};

// Two-point filter at the separation implied by `meas`, then per-window statistics.
StatsOutput run_stats(const IQRecord& iq, const MeasurementParams& meas, double window,
                      const ReportOptions& options = {});

}  // namespace qpj
