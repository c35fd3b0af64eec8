#include "qpjumps/jump_sim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "qpjumps/config.h"
#include "qpjumps/kinetics.h"
#include "qpjumps/thermal.h"
#include "qpjumps/thermometry.h"
#include "qpjumps/units.h"

namespace qpj {

double snr_separation(const MeasurementParams& meas) {
  const double info = std::sqrt(2.0 * meas.n_bar * meas.kappa * meas.T_m * meas.eta);
  return info * meas.chi / std::hypot(meas.chi, meas.kappa);
}

double qp_rate_coefficient(const QubitParams& qubit) {
  constexpr double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
  return std::sqrt(2.0 * qubit.f_gap / qubit.f_ge) * four_pi_sq * qubit.f_EL;
}

double gamma_eg(std::int64_t N, const QpKineticsParams& qp, const QubitParams& qubit) {
  const double x = static_cast<double>(N) / qp.N_cp;
  return qubit.readout_gamma_factor * (x * qp_rate_coefficient(qubit) + qubit.gamma_other);
}

double gamma_ge(std::int64_t N, const QpKineticsParams& qp, const QubitParams& qubit, double T_now) {
  if (T_now <= 0.0) return 0.0;
  return gamma_eg(N, qp, qubit) * std::exp(-units::temperature_scale(qubit.f_ge) / T_now);
}

namespace {

// Excess substrate temperature, a sum of exponentials sharing one tau_th.
class SubstrateHeat {
 public:
  SubstrateHeat(double T_base, double tau) : T_base_(T_base), tau_(tau) {}

  double temperature(double t) const {
    if (excess_ == 0.0) return T_base_;
    return T_base_ + excess_ * std::exp(-(t - since_) / tau_);
  }
  void add(double t, double delta_T) {
    if (delta_T == 0.0) return;
    excess_ = (excess_ == 0.0 ? 0.0 : excess_ * std::exp(-(t - since_) / tau_)) + delta_T;
    since_ = t;
  }

 private:
  double T_base_;
  double tau_;
  double excess_ = 0.0;
  double since_ = 0.0;
};

std::int64_t stochastic_round(double mean, std::mt19937_64& rng) {
  const double whole = std::floor(mean);
  const double frac = mean - whole;
  std::int64_t n = static_cast<std::int64_t>(whole);
  if (frac > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < frac) ++n;
  }
  return n;
}

}  // namespace

TruthTrace simulate_joint(const ScenarioConfig& config, std::mt19937_64& rng) {
  TruthTrace trace;
  trace.duration = config.duration;
  trace.pulses = config.resolved_pulses();
  trace.dead_time = config.dead_time;
  trace.scenario_hash = config_hash(config);

  const QubitParams& qubit = config.qubit;
  const QpKineticsParams& qp = config.kinetics;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> exponential(1.0);

  bool mod_high = config.modulation ? config.modulation->start_high : true;
  auto g_scale = [&]() {
    if (!config.modulation) return 1.0;
    return mod_high ? config.modulation->high_factor : config.modulation->low_factor;
  };

  std::int64_t N = 0;
  if (config.initial_qp) {
    N = *config.initial_qp;
  } else if (qp.g > 0.0) {
    QpKineticsParams scaled = qp;
    scaled.g *= g_scale();
    N = std::llround(steady_state(scaled) * qp.N_cp);
  }
  const double p_e0 = temperature_to_polarization(qubit.T_eff, qubit.f_ge);
  QubitState state = uniform(rng) < p_e0 ? QubitState::kExcited : QubitState::kGround;
  trace.entries.push_back({0.0, N, state});

  SubstrateHeat heat(qubit.T_eff, config.thermal ? config.thermal->tau_th : 1.0);
  std::optional<ThermalTransient> per_pulse_heat;
  std::size_t next_pulse = 0;
  const double boltzmann_scale = units::temperature_scale(qubit.f_ge);

  double t = 0.0;
  while (true) {
    const double next_scheduled =
        next_pulse < trace.pulses.size() ? trace.injection_time(next_pulse) : std::numeric_limits<double>::infinity();
    const double horizon = std::min(next_scheduled, config.duration);

    const QpPropensities a_qp = qp_propensities(N, qp, g_scale());
    double a_mod = 0.0;
    if (config.modulation) a_mod = 1.0 / (mod_high ? config.modulation->mean_high_s : config.modulation->mean_low_s);
    const double down = gamma_eg(N, qp, qubit);
    // Upward rate only decays until the next pulse, so its current value bounds it.
    const double qubit_bound = state == QubitState::kExcited
                                   ? down
                                   : down * std::exp(-boltzmann_scale / heat.temperature(t));
    const double bound = a_qp.total() + a_mod + qubit_bound;

    double t_next = std::numeric_limits<double>::infinity();
    if (bound > 0.0) t_next = t + exponential(rng) / bound;

    if (t_next >= horizon) {
      if (horizon >= config.duration) break;
      // Scheduled injection at the end of a pulse.
      t = next_scheduled;
      const Pulse& pulse = trace.pulses[next_pulse++];
      const std::int64_t injected = stochastic_round(pulse.qp_count, rng);
      if (config.thermal) heat.add(t, thermal_transient(*config.thermal, pulse.length).delta_T);
      if (injected > 0) {
        N += injected;
        trace.entries.push_back({t, N, state});
      }
      continue;
    }

    t = t_next;
    double pick = uniform(rng) * bound;
    if (pick < a_qp.total()) {
      N = apply_qp_event(N, choose_qp_event(a_qp, pick / a_qp.total()));
      trace.entries.push_back({t, N, state});
      continue;
    }
    pick -= a_qp.total();
    if (pick < a_mod) {
      mod_high = !mod_high;
      continue;
    }
    pick -= a_mod;
    if (state == QubitState::kExcited) {
      state = QubitState::kGround;
      trace.entries.push_back({t, N, state});
    } else {
      const double up = down * std::exp(-boltzmann_scale / heat.temperature(t));
      if (pick < up) {
        state = QubitState::kExcited;
        trace.entries.push_back({t, N, state});
      }
    }
  }
  return trace;
}

std::size_t sample_count(double duration, double T_m) {
  // Relative slack so that e.g. 120 s / 5 us counts 24e6 samples despite rounding.
  return static_cast<std::size_t>(std::floor(duration / T_m * (1.0 + 1e-12)));
}

IQRecord synthesize_iq(const TruthTrace& truth, const MeasurementParams& meas, std::mt19937_64& rng,
                       bool keep_truth, double noise_scale) {
  IQRecord rec;
  rec.T_m = meas.T_m;
  const std::size_t n = sample_count(truth.duration, meas.T_m);
  rec.I.resize(n);
  rec.Q.resize(n);
  if (keep_truth) rec.truth_excited_fraction.resize(n);
  const double separation = snr_separation(meas);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto& e = truth.entries;
  std::size_t idx = 0;  // entry active at the current time
  std::size_t blank = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = static_cast<double>(k) * meas.T_m;
    const double b = static_cast<double>(k + 1) * meas.T_m;

    double excited_time = 0.0;
    double cursor = a;
    while (true) {
      const double next_change = idx + 1 < e.size() ? e[idx + 1].time : std::numeric_limits<double>::infinity();
      const double seg_end = std::min(b, next_change);
      if (e[idx].state == QubitState::kExcited) excited_time += seg_end - cursor;
      if (next_change < b) {
        cursor = next_change;
        ++idx;
      } else {
        break;
      }
    }
    const double f_e = std::clamp(excited_time / meas.T_m, 0.0, 1.0);
    if (keep_truth) rec.truth_excited_fraction[k] = f_e;

    // Edges within rounding of a bin boundary do not reach into the bin.
    const double slack = 1e-9 * meas.T_m;
    while (blank < truth.pulses.size() &&
           truth.pulses[blank].start + truth.pulses[blank].length + truth.dead_time <= a + slack) {
      ++blank;
    }
    const bool blanked = blank < truth.pulses.size() && truth.pulses[blank].start < b - slack;
    if (blanked) {
      rec.I[k] = nan;
      rec.Q[k] = nan;
      continue;
    }
    rec.I[k] = (1.0 - 2.0 * f_e) * separation + noise_scale * noise(rng);
    rec.Q[k] = noise_scale * noise(rng);
  }
  return rec;
}

}  // namespace qpj
