#include "qpjumps/thermometry.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qpjumps/units.h"

namespace qpj {

double polarization_to_temperature(double p_excited, double f_ge) {
  if (!(p_excited > 0.0 && p_excited < 0.5)) {
    throw std::domain_error("polarization_to_temperature: excited population must lie in (0, 0.5), got " +
                            std::to_string(p_excited));
  }
  if (!(f_ge > 0.0)) throw std::domain_error("polarization_to_temperature: f_ge must be positive");
  return units::temperature_scale(f_ge) / std::log((1.0 - p_excited) / p_excited);
}

double temperature_to_polarization(double temperature, double f_ge) {
  if (temperature < 0.0) throw std::domain_error("temperature_to_polarization: negative temperature");
  if (temperature == 0.0) return 0.0;
  const double boltzmann = std::exp(-units::temperature_scale(f_ge) / temperature);
  return boltzmann / (1.0 + boltzmann);
}

}  // namespace qpj
