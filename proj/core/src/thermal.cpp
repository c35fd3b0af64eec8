#include "qpjumps/thermal.h"

#include <cmath>
#include <stdexcept>

#include "qpjumps/units.h"

namespace qpj {

double ThermalTransient::temperature_at(double T_base, double t_since_pulse) const {
  if (t_since_pulse < 0.0 || delta_T == 0.0) return T_base;
  return T_base + delta_T * std::exp(-t_since_pulse / tau_th);
}

ThermalTransient thermal_transient(const ThermalParams& thermal, double t_G) {
  if (t_G < 0.0) throw std::domain_error("thermal_transient: negative pulse length");
  const double energy = thermal.P_diss * t_G;
  return ThermalTransient{energy / (thermal.C_heat * thermal.mass), thermal.tau_th};
}

double qp_generation_rate(const ThermalParams& thermal) {
  return thermal.P_diss / units::pair_energy_from_voltage(thermal.V_2Delta);
}

double qp_generation_count(const ThermalParams& thermal, double t_G) {
  if (t_G < 0.0) throw std::domain_error("qp_generation_count: negative pulse length");
  return qp_generation_rate(thermal) * t_G * thermal.capture_fraction;
}

double thermal_decay_constant(double C_heat, double length_l, double mass, double cond_G, double area_A) {
  if (!(cond_G > 0.0 && area_A > 0.0)) throw std::domain_error("thermal_decay_constant: G and A must be positive");
  return C_heat * length_l * mass / (cond_G * area_A);
}

double conductive_cooling_rate(double temperature, double C_heat, double length_l, double mass, double cond_G,
                               double area_A) {
  return -temperature / thermal_decay_constant(C_heat, length_l, mass, cond_G, area_A);
}

}  // namespace qpj
