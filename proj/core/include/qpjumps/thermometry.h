#pragma once

namespace qpj {

// Effective temperature of a two-level system with excited-state population
// p_excited and transition frequency f_ge: T = (h f / k_B) / ln((1 - p) / p).
// Throws std::domain_error unless 0 < p_excited < 0.5.
double polarization_to_temperature(double p_excited, double f_ge);

// Boltzmann excited population 1 / (1 + exp(h f / k_B T)). T = 0 gives 0.
double temperature_to_polarization(double temperature, double f_ge);

}  // namespace qpj
