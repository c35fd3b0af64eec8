#include "qpjumps/params.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpjumps/errors.h"
#include "qpjumps/thermal.h"

namespace qpj {
namespace {

void require(bool ok, const char* key, const std::string& rule, double got) {
  if (!ok || std::isnan(got)) {
    throw ConfigError(key, "must satisfy " + rule + " (got " + std::to_string(got) + ")");
  }
}

}  // namespace

void QubitParams::validate() const {
  require(f_ge > 0.0, "f_ge", "f_ge > 0", f_ge);
  require(f_gap > 0.0, "f_gap", "f_gap > 0", f_gap);
  require(f_EL > 0.0, "f_EL", "f_EL > 0", f_EL);
  require(gamma_other >= 0.0, "gamma_other", "gamma_other >= 0", gamma_other);
  require(T_eff > 0.0, "T_eff", "T_eff > 0", T_eff);
  require(readout_gamma_factor > 0.0, "readout_gamma_factor", "readout_gamma_factor > 0", readout_gamma_factor);
  require(f_ge < 2.0 * f_gap, "f_ge", "f_ge < 2 f_gap", f_ge);
}

void MeasurementParams::validate() const {
  require(n_bar >= 0.0, "n_bar", "n_bar >= 0", n_bar);
  require(kappa > 0.0, "kappa_2pi", "kappa > 0", kappa);
  require(chi >= 0.0, "chi_2pi", "chi >= 0", chi);
  require(T_m > 0.0, "T_m", "T_m > 0", T_m);
  require(eta > 0.0 && eta <= 1.0, "eta", "0 < eta <= 1", eta);
}

void QpKineticsParams::validate() const {
  require(g >= 0.0, "g", "g >= 0", g);
  require(s >= 0.0, "s", "s >= 0", s);
  require(r >= 0.0, "r", "r >= 0", r);
  require(N_cp >= 1.0, "N_cp", "N_cp >= 1", N_cp);
  if (g > 0.0 && s == 0.0 && r == 0.0) {
    throw ConfigError("s", "s and r cannot both be zero when g > 0 (no steady state)");
  }
}

void ThermalParams::validate() const {
  require(P_diss > 0.0, "P_diss", "P_diss > 0", P_diss);
  require(C_heat > 0.0, "C_heat", "C_heat > 0", C_heat);
  require(mass > 0.0, "mass", "mass > 0", mass);
  require(tau_th > 0.0, "tau_th", "tau_th > 0", tau_th);
  if (cond_G) require(*cond_G > 0.0, "cond_G", "cond_G > 0", *cond_G);
  if (area_A) require(*area_A > 0.0, "area_A", "area_A > 0", *area_A);
  if (length_l) require(*length_l > 0.0, "length_l", "length_l > 0", *length_l);
  require(I_c > 0.0, "I_c", "I_c > 0", I_c);
  require(V_2Delta > 0.0, "V_2Delta", "V_2Delta > 0", V_2Delta);
  require(capture_fraction >= 0.0, "capture_fraction", "capture_fraction >= 0", capture_fraction);
}

void GModulation::validate() const {
  require(low_factor >= 0.0, "g_low_factor", "g_low_factor >= 0", low_factor);
  require(high_factor >= 0.0, "g_high_factor", "g_high_factor >= 0", high_factor);
  require(mean_low_s > 0.0, "g_mean_low", "g_mean_low > 0", mean_low_s);
  require(mean_high_s > 0.0, "g_mean_high", "g_mean_high > 0", mean_high_s);
}

void PulseTrain::validate() const {
  require(count >= 0, "pulse_train_count", "pulse_train_count >= 0", static_cast<double>(count));
  require(first_start >= 0.0, "pulse_train_start", "pulse_train_start >= 0", first_start);
  require(length > 0.0, "pulse_train_length", "pulse_train_length > 0", length);
  require(period > length, "pulse_train_period", "pulse_train_period > pulse_train_length", period);
  if (qp_count) require(*qp_count >= 0.0, "pulse_train_qp", "pulse_train_qp >= 0", *qp_count);
}

std::vector<Pulse> ScenarioConfig::resolved_pulses() const {
  std::vector<Pulse> out = pulses;
  if (pulse_train && pulse_train->count > 0) {
    double qp = 0.0;
    if (pulse_train->qp_count) {
      qp = *pulse_train->qp_count;
    } else if (thermal) {
      qp = qp_generation_count(*thermal, pulse_train->length);
    } else {
      throw ConfigError("pulse_train_qp", "needed when thermal parameters are off");
    }
    out.reserve(out.size() + static_cast<std::size_t>(pulse_train->count));
    for (std::int64_t i = 0; i < pulse_train->count; ++i) {
      out.push_back(Pulse{pulse_train->first_start + static_cast<double>(i) * pulse_train->period,
                          pulse_train->length, qp});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Pulse& a, const Pulse& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Pulse& p = out[i];
    if (!(p.start >= 0.0 && p.length > 0.0 && p.qp_count >= 0.0)) {
      throw ConfigError("pulse", "pulse " + std::to_string(i) + " needs start >= 0, length > 0, qp_count >= 0");
    }
    if (p.start + p.length > duration) {
      throw ConfigError("pulse", "pulse " + std::to_string(i) + " ends after duration");
    }
    if (i > 0 && out[i - 1].start + out[i - 1].length + dead_time > p.start) {
      throw ConfigError("pulse", "pulse " + std::to_string(i) + " overlaps the previous pulse");
    }
  }
  return out;
}

void ScenarioConfig::validate() const {
  require(duration > 0.0, "duration", "duration > 0", duration);
  require(dead_time >= 0.0, "dead_time", "dead_time >= 0", dead_time);
  if (initial_qp) require(*initial_qp >= 0, "initial_qp", "initial_qp >= 0", static_cast<double>(*initial_qp));
  qubit.validate();
  meas.validate();
  kinetics.validate();
  if (thermal) thermal->validate();
  if (modulation) modulation->validate();
  if (pulse_train) pulse_train->validate();
  (void)resolved_pulses();
}

}  // namespace qpj
