#pragma once

// Physical constants (exact SI 2019 values) and the handful of unit conversions
// used across the library. Energies are carried as frequencies E/h in Hz and
// times in seconds everywhere.

#include <numbers>

namespace qpj::units {

inline constexpr double kPlanck = 6.62607015e-34;        // J s
inline constexpr double kBoltzmann = 1.380649e-23;       // J / K
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kMicro = 1e-6;
inline constexpr double kMilli = 1e-3;
inline constexpr double kMega = 1e6;
inline constexpr double kGiga = 1e9;

constexpr double angular_from_hz(double f_hz) { return kTwoPi * f_hz; }
constexpr double hz_from_angular(double omega) { return omega / kTwoPi; }

// h f / k_B, the temperature scale of a transition at frequency f.
constexpr double temperature_scale(double f_hz) { return kPlanck * f_hz / kBoltzmann; }

// Gap frequency Delta/h from the gap voltage V_2Delta = 2 Delta / e.
constexpr double gap_frequency_from_voltage(double v_2delta) {
  return kElementaryCharge * v_2delta / (2.0 * kPlanck);
}

// Pair-breaking energy 2 Delta in joules from the gap voltage.
constexpr double pair_energy_from_voltage(double v_2delta) { return kElementaryCharge * v_2delta; }

}  // namespace qpj::units
