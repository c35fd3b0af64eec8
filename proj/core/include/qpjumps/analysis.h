#pragma once

// Qubit trajectory recovery from I/Q records and the jump statistics built on
// it: dwell extraction, log-binned tau p(tau) histograms, the Poisson
// prediction, Bhattacharyya fidelity, polarization and cross-correlation.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qpjumps/jump_sim.h"

namespace qpj {

struct StateEstimate {
  double T_m = 0.0;
  std::vector<QubitState> states;
  std::vector<std::uint8_t> valid;  // 0 where the sample was blanked (NaN)
  double separation = 0.0;
  double to_excited_below = 0.0;  // declare g -> e when I < this
  double to_ground_above = 0.0;   // declare e -> g when I > this

  std::size_t size() const { return states.size(); }
};

// Hysteresis filter on the I quadrature (sigma = 1). A jump is declared when a
// sample lands within sigma/2 of the destination peak, i.e. beyond
// -separation + 1/2 (to e) or +separation - 1/2 (to g); otherwise the previous
// state is held. The first valid sample, and the first one after a blanked
// stretch, takes the state given by its sign. Requires separation > 1.
StateEstimate two_point_filter(const IQRecord& iq, double separation);

inline constexpr std::size_t kToEnd = std::numeric_limits<std::size_t>::max();

// Interior dwells, as sample counts. Runs touching the record edges or a blanked
// stretch are not bounded by two observed jumps and are dropped.
struct DwellSet {
  double T_m = 0.0;
  std::vector<std::int64_t> ground;
  std::vector<std::int64_t> excited;

  const std::vector<std::int64_t>& of(QubitState s) const { return s == QubitState::kGround ? ground : excited; }
  std::vector<double> durations(QubitState s) const;
};

DwellSet extract_dwells(const StateEstimate& est, std::size_t begin = 0, std::size_t end = kToEnd);

struct DwellHistogram {
  QubitState state = QubitState::kGround;
  double bins_per_decade = 10.0;
  std::vector<double> edges;   // seconds, uniform in log10
  std::vector<double> counts;  // M_i
  double total = 0.0;          // sum of M_i
  std::size_t dwell_count = 0;
  double mean_dwell = 0.0;                  // per-dwell arithmetic mean, s
  double mean_dwell_sample_weighted = 0.0;  // each in-dwell sample weighs once, s

  std::size_t bins() const { return counts.size(); }
  double log_bin_width() const { return 1.0 / bins_per_decade; }
  double center(std::size_t i) const;  // geometric bin center, s
};

// Every dwell of k samples adds k counts to the bin holding tau = k T_m, so the
// histogram tracks tau p(tau). Bins span [lo, hi) at `bins_per_decade` per decade.
DwellHistogram log_histogram(std::span<const std::int64_t> dwell_samples, double T_m, double bins_per_decade,
                             double lo, double hi, QubitState state = QubitState::kGround);

// Expected counts for exponential dwells with the histogram's mean, evaluated at
// each bin center: (Sigma Delta' / tau_bar) ln(10) tau (tau / tau_bar) exp(-tau / tau_bar).
std::vector<double> poisson_prediction(const DwellHistogram& hist);

struct FidelityReport {
  double F = 0.0;
  double one_minus_F = 1.0;
  std::vector<double> predicted;
};

// F = sum sqrt(M_i P_i) / sum M_i. Throws std::domain_error when sum M = 0.
FidelityReport fidelity(std::span<const double> measured, std::span<const double> predicted);

struct Polarization {
  double p_excited = 0.0;
  double sigma_z = 0.0;  // p_g - p_e
};

Polarization polarization(const StateEstimate& est, std::size_t begin = 0, std::size_t end = kToEnd);

// Pearson correlation with population standard deviations. Throws
// std::domain_error on constant input, std::invalid_argument on length mismatch.
double cross_correlation(std::span<const double> a, std::span<const double> b);

struct WindowStats {
  double t_start = 0.0;
  std::size_t ground_dwells = 0;
  std::size_t excited_dwells = 0;
  std::optional<double> tau_g;
  std::optional<double> tau_e;
  std::optional<double> F_g;
  std::optional<double> one_minus_F_g;
  std::optional<double> sigma_z;
  std::optional<DwellHistogram> hist_g;
  std::optional<DwellHistogram> hist_e;
};

struct ReportOptions {
  double bins_per_decade = 10.0;
  std::size_t min_dwells_for_fidelity = 20;
  unsigned workers = 1;
  bool keep_histograms = false;
};

// Statistics over consecutive non-overlapping windows. Throws
// std::invalid_argument when window < 100 T_m.
std::vector<WindowStats> per_second_report(const StateEstimate& est, double window, const ReportOptions& options = {});

// Excited-state lifetime and polarization versus time since the most recent QP
// injection, pooled over all pulses. tau_e in a bin is the time spent in e
// divided by the number of e -> g jumps observed there.
struct PostPulseBin {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double excited_time = 0.0;
  double observed_time = 0.0;
  std::size_t decays = 0;
  std::optional<double> tau_e;
  std::optional<double> p_excited;

  double t_center() const;
};

std::vector<PostPulseBin> post_pulse_profile(const StateEstimate& est, std::span<const double> injection_times,
                                             std::span<const double> bin_edges);

// Edges uniform in log10 between lo and hi with the given count of bins.
std::vector<double> log_spaced_edges(double lo, double hi, std::size_t bins);

}  // namespace qpj
