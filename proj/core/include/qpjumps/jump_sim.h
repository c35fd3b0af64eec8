#pragma once

// Joint continuous-time Markov chain of the QP count and the qubit state, plus
// the dispersive I/Q measurement record synthesized from it.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qpjumps/params.h"

namespace qpj {

enum class QubitState : std::uint8_t { kGround = 0, kExcited = 1 };

constexpr char state_char(QubitState s) { return s == QubitState::kGround ? 'g' : 'e'; }

// Half the separation of the two pointer states in units of the noise
// standard deviation: sqrt(2 n kappa T_m eta) chi / sqrt(chi^2 + kappa^2).
double snr_separation(const MeasurementParams& meas);

// Relaxation rate per unit relative QP density, sqrt(2 f_gap / f_ge) 4 pi^2 f_EL.
double qp_rate_coefficient(const QubitParams& qubit);

// e -> g rate with N quasiparticles in the array.
double gamma_eg(std::int64_t N, const QpKineticsParams& qp, const QubitParams& qubit);

// g -> e rate by detailed balance at temperature T_now.
double gamma_ge(std::int64_t N, const QpKineticsParams& qp, const QubitParams& qubit, double T_now);

struct TruthEntry {
  double time;
  std::int64_t N;
  QubitState state;
};

// Piecewise-constant ground truth. entries.front() is the initial condition at
// t = 0; each later entry marks a change of qubit state or QP count.
struct TruthTrace {
  double duration = 0.0;
  std::vector<TruthEntry> entries;
  std::vector<Pulse> pulses;  // resolved pulses, readout blanked around each
  double dead_time = 0.0;
  std::string scenario_hash;

  // Injection instant (end of the pulse) of pulse i.
  double injection_time(std::size_t i) const { return pulses[i].start + pulses[i].length; }
};

// Exact-jump simulation of the coupled chain over [0, config.duration]. QP
// reactions follow the kinetics propensities (g scaled by the optional slow
// modulator), the qubit flips at gamma_eg / gamma_ge of the current N and
// substrate temperature, and each pulse injects QPs and heats the substrate.
// The time-dependent upward rate is sampled by thinning against its value at
// the last event, which bounds it because the temperature only decays between pulses.
TruthTrace simulate_joint(const ScenarioConfig& config, std::mt19937_64& rng);

// Dispersive record, noise normalized to sigma = 1. Samples overlapping a
// pulse or its dead time are NaN in both quadratures.
struct IQRecord {
  double T_m = 0.0;
  std::vector<double> I;
  std::vector<double> Q;
  std::vector<double> truth_excited_fraction;  // optional, parallel to I

  std::size_t size() const { return I.size(); }
};

// One sample per T_m bin: I = (f_g - f_e) * separation + noise, Q = noise, where
// f_g, f_e are the exact fractions of the bin spent in each state. Ground maps
// to +I. `noise_scale` = 0 gives the noise-free record.
IQRecord synthesize_iq(const TruthTrace& truth, const MeasurementParams& meas, std::mt19937_64& rng,
                       bool keep_truth = false, double noise_scale = 1.0);

// Number of samples for a record: floor(duration / T_m).
std::size_t sample_count(double duration, double T_m);

}  // namespace qpj
