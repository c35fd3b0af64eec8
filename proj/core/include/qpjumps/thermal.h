#pragma once

#include "qpjumps/params.h"

namespace qpj {

// Substrate temperature rise left behind by one QP generation pulse, relaxing
// exponentially back to the bath.
struct ThermalTransient {
  double delta_T = 0.0;  // K, initial rise
  double tau_th = 0.0;   // s

  double temperature_at(double T_base, double t_since_pulse) const;
};

// Delta E = P t_G, Delta T = Delta E / (C m). Throws std::domain_error for t_G < 0.
ThermalTransient thermal_transient(const ThermalParams& thermal, double t_G);

// P = I_c V_2Delta.
constexpr double junction_dissipation(double I_c, double V_2Delta) { return I_c * V_2Delta; }

// QPs generated per second, P / 2Delta.
double qp_generation_rate(const ThermalParams& thermal);

// Mean QPs landing in the array for a pulse of length t_G (rate x t_G x capture fraction).
double qp_generation_count(const ThermalParams& thermal, double t_G);

// tau_th = C l m / (G A) from the lumped conduction estimate dT/dt = -(G A / C l m) T.
double thermal_decay_constant(double C_heat, double length_l, double mass, double cond_G, double area_A);

// dT/dt for the same lumped estimate.
double conductive_cooling_rate(double temperature, double C_heat, double length_l, double mass, double cond_G,
                               double area_A);

}  // namespace qpj
