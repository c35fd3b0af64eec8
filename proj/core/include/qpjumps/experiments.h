#pragma once

// Named experiments: presets over the scenario schema plus the analysis chain
// that turns each run into figure-ready tables.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qpjumps/params.h"

namespace qpj {

// quiet-noisy, qp-pulses, field-cool, recovery, psd.
const std::vector<std::string>& experiment_names();

// Preset `key = value` lines. Throws std::invalid_argument listing the known
// names when `name` is not one of them.
const std::vector<std::string>& experiment_preset(std::string_view name);

// Preset lines, then the user's file, then the overrides.
ScenarioConfig experiment_config(std::string_view name, std::string_view file_text,
                                 const std::vector<std::string>& overrides);

// Shared thresholds of the quiet/noisy classification.
double quiet_level(const QubitParams& qubit);     // mean ground dwell with no QPs, s
inline constexpr double kQuietFraction = 0.5;     // a second is quiet when tau_g > this x quiet_level

struct DataFile {
  std::string name;     // relative to the output directory
  std::string content;
};

struct ExperimentBundle {
  std::string name;
  ScenarioConfig config;
  std::vector<DataFile> files;
  std::vector<std::pair<std::string, std::string>> summary;  // also written as summary.csv
  std::vector<std::pair<std::string, std::uint64_t>> counts;
  bool fit_warning = false;
};

struct ExperimentOptions {
  unsigned workers = 1;
  bool emit_truth = false;
  double window = 1.0;  // s, statistics window
};

ExperimentBundle run_experiment(std::string_view name, const ScenarioConfig& config,
                                const ExperimentOptions& options = {});

// Looks up a summary entry; throws std::out_of_range when absent.
const std::string& summary_value(const ExperimentBundle& bundle, std::string_view key);

}  // namespace qpj
