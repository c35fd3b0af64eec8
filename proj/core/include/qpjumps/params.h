#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qpjumps/units.h"

namespace qpj {

// Fluxonium qubit at its operating point. Energies as frequencies (Hz).
struct QubitParams {
  double f_ge = 665e6;                                          // transition frequency
  double f_gap = units::gap_frequency_from_voltage(0.4e-3);     // Delta / h
  double f_EL = 0.5e9;                                          // E_L / h (assumed, not measured)
  double gamma_other = 0.0;                                     // non-QP relaxation, 1/s
  double T_eff = 0.045;                                         // effective bath temperature, K
  double readout_gamma_factor = 1.0;                            // multiplier on gamma_eg under drive

  void validate() const;
};

// Dispersive readout chain. kappa and chi are angular (rad/s).
struct MeasurementParams {
  double n_bar = 2.5;
  double kappa = units::angular_from_hz(4.7e6);
  double chi = units::angular_from_hz(1.0e6);
  double T_m = 5e-6;
  double eta = 0.21;

  void validate() const;
};

// dx/dt = g - s x - r x^2 for the relative QP density x = N / N_cp.
struct QpKineticsParams {
  double g = 3.2e-4;    // 1/s
  double s = 8000.0;    // 1/s
  double r = 0.0;       // 1/s, acting on x^2
  double N_cp = 3.75e7;

  void validate() const;
};

// Substrate heating by a QP generation pulse.
struct ThermalParams {
  double P_diss = 1e-10;        // W
  double C_heat = 1e-11;        // J g^-1 K^-1
  double mass = 0.1;            // g
  double tau_th = 3e-3;         // s, substrate-to-sink equilibration
  std::optional<double> cond_G;     // W m^-1 K^-1
  std::optional<double> area_A;     // m^2
  std::optional<double> length_l;   // m
  double I_c = 280e-9;          // A
  double V_2Delta = 0.4e-3;     // V
  double capture_fraction = 1e-8;  // share of generated QPs that land in the array

  void validate() const;
};

// Slow two-state telegraph on the generation coefficient g. While "high", g is
// multiplied by high_factor; while "low", by low_factor.
struct GModulation {
  double low_factor = 0.0;
  double high_factor = 1.0;
  double mean_low_s = 1.0;
  double mean_high_s = 2.0;
  bool start_high = true;

  void validate() const;
};

// One QP generation pulse: readout is blanked for [start, start + length + dead_time),
// QPs are injected and the substrate heated at start + length.
struct Pulse {
  double start = 0.0;
  double length = 100e-6;
  double qp_count = 0.0;  // mean injected QPs; fractional part is stochastically rounded
};

// Periodic pulse sequence, expanded on demand.
struct PulseTrain {
  double first_start = 0.0;
  double period = 10.105e-3;
  double length = 100e-6;
  std::int64_t count = 0;
  std::optional<double> qp_count;  // unset: derive from thermal parameters

  void validate() const;
};

struct ScenarioConfig {
  QubitParams qubit;
  MeasurementParams meas;
  QpKineticsParams kinetics;
  std::optional<ThermalParams> thermal;
  std::optional<GModulation> modulation;
  double duration = 1.0;                // s
  std::vector<Pulse> pulses;            // explicit pulses
  std::optional<PulseTrain> pulse_train;
  double dead_time = 5e-6;              // readout blanking after each pulse, s
  std::optional<std::int64_t> initial_qp;  // unset: nearest integer to steady-state mean
  std::uint64_t rng_seed = 0;

  // Explicit pulses plus the expanded train, sorted by start time, with the
  // injected count resolved. Throws ConfigError on overlap or out-of-range pulses.
  std::vector<Pulse> resolved_pulses() const;
  void validate() const;
};

}  // namespace qpj
