#include "qpjumps/experiments.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qpjumps/analysis.h"
#include "qpjumps/config.h"
#include "qpjumps/fitting.h"
#include "qpjumps/io.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/kinetics.h"
#include "qpjumps/pipeline.h"
#include "qpjumps/rng.h"
#include "qpjumps/thermometry.h"
#include "qpjumps/units.h"

namespace qpj {
namespace {

using Rows = std::vector<std::pair<std::string, std::string>>;

const std::vector<std::string> kQuietNoisy = {
    "duration = 120",
    "gamma_other = 2000",
    "g = 4e-6",
    "s = 100",
    "g_modulation = on",
    "g_low_factor = 0",
    "g_high_factor = 1",
    "g_mean_low = 1",
    "g_mean_high = 2",
};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

// Field cooling multiplies the trapping rate.
constexpr double kFieldCoolTrapping = 5.0;
constexpr double kThermalStartInTauSs = 8.0;

const std::vector<std::string>& presets_for(std::string_view name) {
  static const std::vector<std::string> quiet_noisy = kQuietNoisy;
  static const std::vector<std::string> qp_pulses = with(kQuietNoisy, {
                                                                          "thermal = on",
                                                                          "capture_fraction = 1.3e-8",
                                                                          "pulse_train_start = 1ms",
                                                                          "pulse_train_period = 10.105ms",
                                                                          "pulse_train_length = 100us",
                                                                          "pulse_train_count = 1000000",
                                                                      });
  static const std::vector<std::string> field_cool = with(kQuietNoisy, {"s = 500"});
  static const std::vector<std::string> recovery = {
      "duration = 100.55",
      "T_m = 1us",
      "n_bar = 12.5",
      "thermal = on",
      "pulse_train_start = 0",
      "pulse_train_period = 10.055ms",
      "pulse_train_length = 50us",
      "pulse_train_count = 10000",
      "pulse_train_qp = 6",
  };
  static const std::vector<std::string> psd = {"duration = 1"};
  if (name == "quiet-noisy") return quiet_noisy;
  if (name == "qp-pulses") return qp_pulses;
  if (name == "field-cool") return field_cool;
  if (name == "recovery") return recovery;
  if (name == "psd") return psd;
  std::string known;
  for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'; available: " + known);
}

std::string fmt(double v) { return io::format_value(v); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Time-averaged e -> g rate over the truth trace.
double mean_decay_rate(const TruthTrace& truth, const ScenarioConfig& config) {
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.entries.size(); ++i) {
    const double t0 = truth.entries[i].time;
    const double t1 = i + 1 < truth.entries.size() ? truth.entries[i + 1].time : truth.duration;
    acc += gamma_eg(truth.entries[i].N, config.kinetics, config.qubit) * (t1 - t0);
  }
  return acc / truth.duration;
}

struct WindowSummary {
  std::size_t windows = 0;
  std::size_t with_fidelity = 0;
  double median_one_minus_F = std::nan("");
  double correlation = std::nan("");
  double quiet_fraction = std::nan("");
  double mean_tau_g = std::nan("");
  double max_tau_g = std::nan("");
};

WindowSummary summarize(const std::vector<WindowStats>& windows, double quiet_threshold) {
  WindowSummary s;
  s.windows = windows.size();
  std::vector<double> one_minus_F, tau_g, log_fid, all_tau_g;
  std::size_t quiet = 0;
  for (const auto& w : windows) {
    if (w.tau_g) {
      all_tau_g.push_back(*w.tau_g);
      if (*w.tau_g > quiet_threshold) ++quiet;
    }
    if (w.one_minus_F_g && w.tau_g) {
      one_minus_F.push_back(*w.one_minus_F_g);
      tau_g.push_back(*w.tau_g);
      log_fid.push_back(-std::log10(std::max(*w.one_minus_F_g, 1e-15)));
    }
  }
  s.with_fidelity = one_minus_F.size();
  s.median_one_minus_F = median(one_minus_F);
  if (tau_g.size() >= 2) {
    try {
      s.correlation = cross_correlation(tau_g, log_fid);
    } catch (const std::domain_error&) {
    }
  }
  if (!all_tau_g.empty()) {
    s.quiet_fraction = static_cast<double>(quiet) / static_cast<double>(all_tau_g.size());
    double sum = 0.0;
    for (double v : all_tau_g) sum += v;
    s.mean_tau_g = sum / static_cast<double>(all_tau_g.size());
    s.max_tau_g = *std::max_element(all_tau_g.begin(), all_tau_g.end());
  }
  return s;
}

// Histogram files for the most and least Poissonian windows.
void add_extreme_histograms(const std::vector<WindowStats>& windows, ExperimentBundle& bundle) {
  const WindowStats* best = nullptr;
  const WindowStats* worst = nullptr;
  for (const auto& w : windows) {
    if (!w.F_g || !w.hist_g) continue;
    if (best == nullptr || *w.F_g > *best->F_g) best = &w;
    if (worst == nullptr || *w.F_g < *worst->F_g) worst = &w;
  }
  auto emit = [&](const WindowStats* w, const std::string& tag) {
    if (w == nullptr) return;
    bundle.files.push_back({"hist_" + tag + "_g.csv", io::histogram_csv(*w->hist_g, poisson_prediction(*w->hist_g))});
    if (w->hist_e && w->hist_e->total > 0.0) {
      bundle.files.push_back({"hist_" + tag + "_e.csv", io::histogram_csv(*w->hist_e, poisson_prediction(*w->hist_e))});
    }
    bundle.summary.emplace_back(tag + "_window_t_s", fmt(w->t_start));
  };
  emit(best, "poissonian");
  emit(worst, "non_poissonian");
}

StatsOutput simulate_and_report(const ScenarioConfig& config, const ExperimentOptions& options,
                                ExperimentBundle& bundle, const std::string& prefix, SimulationOutput* keep = nullptr) {
  SimulationOutput sim = run_simulation(config, false);
  ReportOptions ro;
  ro.workers = options.workers;
  ro.keep_histograms = true;
  StatsOutput stats = run_stats(sim.iq, config.meas, options.window, ro);
  bundle.files.push_back({prefix + "report.csv", io::report_csv(stats.windows)});
  if (options.emit_truth) bundle.files.push_back({prefix + "truth.csv", io::truth_csv(sim.truth)});
  bundle.counts.emplace_back(prefix + "truth_entries", sim.truth.entries.size());
  bundle.counts.emplace_back(prefix + "iq_samples", sim.iq.size());
  bundle.counts.emplace_back(prefix + "windows", stats.windows.size());
  if (keep != nullptr) *keep = std::move(sim);
  return stats;
}

void add_summary(ExperimentBundle& bundle, const std::string& prefix, const WindowSummary& s) {
  bundle.summary.emplace_back(prefix + "windows", std::to_string(s.windows));
  bundle.summary.emplace_back(prefix + "windows_with_fidelity", std::to_string(s.with_fidelity));
  bundle.summary.emplace_back(prefix + "median_one_minus_F", fmt(s.median_one_minus_F));
  bundle.summary.emplace_back(prefix + "correlation_tau_g_log_fidelity", fmt(s.correlation));
  bundle.summary.emplace_back(prefix + "quiet_fraction", fmt(s.quiet_fraction));
  bundle.summary.emplace_back(prefix + "mean_tau_g_s", fmt(s.mean_tau_g));
  bundle.summary.emplace_back(prefix + "max_tau_g_s", fmt(s.max_tau_g));
}

void quiet_noisy(const ScenarioConfig& config, const ExperimentOptions& options, ExperimentBundle& bundle) {
  const double threshold = kQuietFraction * quiet_level(config.qubit);
  SimulationOutput sim;
  const StatsOutput stats = simulate_and_report(config, options, bundle, "", &sim);
  add_extreme_histograms(stats.windows, bundle);
  const WindowSummary s = summarize(stats.windows, threshold);
  add_summary(bundle, "", s);
  bundle.summary.emplace_back("quiet_threshold_s", fmt(threshold));

  // Poisson control: fixed rate equal to the time-averaged decay rate of the run.
  ScenarioConfig control = config;
  control.qubit.gamma_other = mean_decay_rate(sim.truth, config) / config.qubit.readout_gamma_factor;
  control.kinetics.g = 0.0;
  control.initial_qp = 0;
  control.modulation.reset();
  control.pulses.clear();
  control.pulse_train.reset();
  control.thermal.reset();
  const StatsOutput cstats = simulate_and_report(control, options, bundle, "control_");
  const WindowSummary cs = summarize(cstats.windows, threshold);
  add_summary(bundle, "control_", cs);
  bundle.summary.emplace_back("control_gamma_other", fmt(control.qubit.gamma_other));
  bundle.summary.emplace_back("contrast_one_minus_F", fmt(s.median_one_minus_F / cs.median_one_minus_F));
}

void qp_pulses(const ScenarioConfig& config, const ExperimentOptions& options, ExperimentBundle& bundle) {
  const double level = quiet_level(config.qubit);
  const StatsOutput stats = simulate_and_report(config, options, bundle, "");
  add_extreme_histograms(stats.windows, bundle);
  const WindowSummary s = summarize(stats.windows, kQuietFraction * level);
  add_summary(bundle, "", s);
  std::size_t below = 0, counted = 0;
  for (const auto& w : stats.windows) {
    if (!w.tau_g) continue;
    ++counted;
    if (*w.tau_g < level) ++below;
  }
  bundle.summary.emplace_back("quiet_level_s", fmt(level));
  bundle.summary.emplace_back("pulses", std::to_string(config.resolved_pulses().size()));
  bundle.summary.emplace_back("fraction_below_quiet_level",
                              fmt(counted ? static_cast<double>(below) / static_cast<double>(counted) : std::nan("")));
}

void field_cool(const ScenarioConfig& config, const ExperimentOptions& options, ExperimentBundle& bundle) {
  const double threshold = kQuietFraction * quiet_level(config.qubit);
  const StatsOutput stats = simulate_and_report(config, options, bundle, "");
  add_summary(bundle, "", summarize(stats.windows, threshold));

  ScenarioConfig baseline = config;
  baseline.kinetics.s = config.kinetics.s / kFieldCoolTrapping;
  const StatsOutput bstats = simulate_and_report(baseline, options, bundle, "baseline_");
  add_summary(bundle, "baseline_", summarize(bstats.windows, threshold));
  bundle.summary.emplace_back("quiet_threshold_s", fmt(threshold));
  bundle.summary.emplace_back("trapping_factor", fmt(kFieldCoolTrapping));
}

void recovery(const ScenarioConfig& config, const ExperimentOptions& options, ExperimentBundle& bundle) {
  SimulationOutput sim = run_simulation(config, false);
  const StateEstimate est = two_point_filter(sim.iq, snr_separation(config.meas));
  if (options.emit_truth) bundle.files.push_back({"truth.csv", io::truth_csv(sim.truth)});
  bundle.counts.emplace_back("truth_entries", sim.truth.entries.size());
  bundle.counts.emplace_back("iq_samples", sim.iq.size());

  std::vector<double> injections;
  for (std::size_t i = 0; i < sim.truth.pulses.size(); ++i) injections.push_back(sim.truth.injection_time(i));
  bundle.counts.emplace_back("pulses", injections.size());
  if (injections.size() < 2) throw std::invalid_argument("recovery: needs at least two pulses");

  // Shortest gap between one injection and the next pulse bounds the analysed span.
  double span = config.duration - injections.back();
  for (std::size_t i = 0; i + 1 < sim.truth.pulses.size(); ++i) {
    span = std::min(span, sim.truth.pulses[i + 1].start - injections[i]);
  }
  if (!(span > 2.0 * config.dead_time)) throw std::invalid_argument("recovery: pulses leave no readout between them");
  const auto edges = log_spaced_edges(config.dead_time, span, 24);
  const auto bins = post_pulse_profile(est, injections, edges);

  constexpr std::size_t kMinDecays = 20;
  std::string table = "t_lo_s,t_hi_s,t_s,decays,tau_e_s,x_qp,p_excited,T_eff_K\n";
  std::vector<double> t, tau_e, w, t_temp, temp;
  for (const auto& b : bins) {
    double x = std::nan(""), T = std::nan("");
    const bool usable = b.tau_e && b.decays >= kMinDecays;
    if (usable) {
      try {
        x = density_from_lifetime(*b.tau_e, config.qubit);
        t.push_back(b.t_center());
        tau_e.push_back(*b.tau_e);
        // Relative variance of a rate from n decays is 1/n.
        w.push_back(static_cast<double>(b.decays) * *b.tau_e * *b.tau_e);
      } catch (const std::domain_error&) {
      }
    }
    if (b.p_excited && *b.p_excited > 0.0 && *b.p_excited < 0.5) {
      T = polarization_to_temperature(*b.p_excited, config.qubit.f_ge);
    }
    table += fmt(b.t_lo) + "," + fmt(b.t_hi) + "," + fmt(b.t_center()) + "," + std::to_string(b.decays) + "," +
             fmt(b.tau_e.value_or(std::nan(""))) + "," + fmt(x) + "," + fmt(b.p_excited.value_or(std::nan(""))) + "," +
             fmt(T) + "\n";
  }
  bundle.files.push_back({"tau_e.csv", table});
  bundle.counts.emplace_back("fitted_bins", t.size());

  FitOptions fo;
  fo.workers = options.workers;
  fo.bootstrap_seed = config.rng_seed;
  const RecoveryFit rf = fit_recovery(t, tau_e, config.qubit, fo, w);
  const double x_bar_cfg = steady_state(config.kinetics);
  Rows rr = {
      {"tau_ss_s", fmt(rf.tau_ss)},
      {"x_bar", fmt(rf.x_bar)},
      {"x0", fmt(rf.x0)},
      {"se_tau_ss_s", fmt(rf.se_tau_ss)},
      {"se_x_bar", fmt(rf.se_x_bar)},
      {"se_x0", fmt(rf.se_x0)},
      {"g_eff_per_s", fmt(rf.g_eff())},
      {"residual_norm", fmt(rf.residual_norm)},
      {"tau_identifiable", rf.tau_identifiable ? "1" : "0"},
      {"configured_tau_ss_s", fmt(tau_ss(config.kinetics, x_bar_cfg))},
      {"configured_x_bar", fmt(x_bar_cfg)},
  };
  bundle.files.push_back({"recovery_fit.csv", io::key_value_csv(rr)});
  std::string resid = "t_s,input,model,residual\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    resid += fmt(t[i]) + "," + fmt(rf.x[i]) + "," + fmt(rf.model(t[i])) + "," + fmt(rf.x[i] - rf.model(t[i])) + "\n";
  }
  bundle.files.push_back({"recovery_residuals.csv", resid});
  if (!rf.tau_identifiable) bundle.fit_warning = true;
  for (const auto& kv : rr) bundle.summary.push_back(kv);

  // The polarization follows the substrate only once the injected QPs are gone.
  const double thermal_start = kThermalStartInTauSs * rf.tau_ss;
  for (const auto& b : bins) {
    if (b.t_lo < thermal_start || !b.p_excited || b.decays < kMinDecays) continue;
    if (!(*b.p_excited > 0.0 && *b.p_excited < 0.5)) continue;
    t_temp.push_back(b.t_center());
    temp.push_back(polarization_to_temperature(*b.p_excited, config.qubit.f_ge));
  }
  bundle.summary.emplace_back("thermal_fit_start_s", fmt(thermal_start));
  if (temp.size() >= 4) {
    const ThermalFit tf = fit_thermal(t_temp, temp, fo);
    Rows tr = {
        {"T_base_K", fmt(tf.T_base)},     {"delta_T_K", fmt(tf.delta_T)},       {"tau_th_s", fmt(tf.tau_th)},
        {"se_T_base_K", fmt(tf.se_T_base)}, {"se_delta_T_K", fmt(tf.se_delta_T)}, {"se_tau_th_s", fmt(tf.se_tau_th)},
        {"residual_norm", fmt(tf.residual_norm)}, {"warning", tf.warning ? "1" : "0"},
    };
    bundle.files.push_back({"thermal_fit.csv", io::key_value_csv(tr)});
    std::string tres = "t_s,input,model,residual\n";
    for (std::size_t i = 0; i < t_temp.size(); ++i) {
      tres += fmt(t_temp[i]) + "," + fmt(temp[i]) + "," + fmt(tf.model(t_temp[i])) + "," +
              fmt(temp[i] - tf.model(t_temp[i])) + "\n";
    }
    bundle.files.push_back({"thermal_residuals.csv", tres});
    if (tf.warning) bundle.fit_warning = true;
    bundle.summary.emplace_back("thermal_T_base_K", fmt(tf.T_base));
    bundle.summary.emplace_back("thermal_delta_T_K", fmt(tf.delta_T));
    bundle.summary.emplace_back("thermal_tau_th_s", fmt(tf.tau_th));
  }
}

std::string spectrum_csv(const Periodogram& p, const PsdModel& model) {
  std::string out = "f_hz,power,model\n";
  for (std::size_t i = 1; i < p.freqs.size(); ++i) {
    out += fmt(p.freqs[i]) + "," + fmt(p.power[i]) + "," + fmt(model(p.freqs[i])) + "\n";
  }
  return out;
}

// Synthetic slow-fluctuation records at desk scale: 4096 one-second samples.
constexpr std::size_t kPsdPoints = 4096;
constexpr double kPsdDt = 1.0;
constexpr std::size_t kPsdSegments = 4;
constexpr PsdModel kPowerLawTruth{1.0, 1e-4, 1.4, 0.01};
constexpr double kTelegraphRate = 0.01;
constexpr double kTelegraphWhite = 0.1;

void psd(const ScenarioConfig& config, const ExperimentOptions& options, ExperimentBundle& bundle) {
  PsdFitOptions fo;
  fo.workers = options.workers;
  fo.bootstrap_seed = config.rng_seed;
  fo.averaged_segments = kPsdSegments;
  auto fit_series = [&](const std::vector<double>& series, const std::string& tag) {
    const Periodogram p = periodogram(series, kPsdDt, kPsdSegments);
    const std::span<const double> f(p.freqs.data() + 1, p.freqs.size() - 1);
    const std::span<const double> s(p.power.data() + 1, p.power.size() - 1);
    const PsdFit fit = fit_power_law(f, s, fo);
    bundle.files.push_back({"psd_" + tag + ".csv", spectrum_csv(p, fit.model)});
    std::string series_csv = "t_s,value\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      series_csv += fmt(static_cast<double>(i) * kPsdDt) + "," + fmt(series[i]) + "\n";
    }
    bundle.files.push_back({"series_" + tag + ".csv", series_csv});
    bundle.summary.emplace_back(tag + "_A", fmt(fit.model.A));
    bundle.summary.emplace_back(tag + "_B", fmt(fit.model.B));
    bundle.summary.emplace_back(tag + "_alpha", fmt(fit.model.alpha));
    bundle.summary.emplace_back(tag + "_C", fmt(fit.model.C));
    bundle.summary.emplace_back(tag + "_se_alpha", fmt(fit.standard_error.alpha));
    bundle.summary.emplace_back(tag + "_residual_norm", fmt(fit.residual_norm));
    bundle.summary.emplace_back(tag + "_power_law_significant", fit.power_law_significant ? "1" : "0");
    bundle.counts.emplace_back(tag + "_points", series.size());
  };
  auto rng_a = stream_rng(config.rng_seed, 0);
  fit_series(synthesize_psd_series(kPowerLawTruth, kPsdPoints, kPsdDt, rng_a), "powerlaw");
  auto rng_b = stream_rng(config.rng_seed, 1);
  fit_series(synthesize_telegraph_series(kPsdPoints, kPsdDt, kTelegraphRate, 1.0, kTelegraphWhite, rng_b), "telegraph");
  bundle.summary.emplace_back("powerlaw_true_alpha", fmt(kPowerLawTruth.alpha));
  bundle.summary.emplace_back("telegraph_true_alpha", fmt(2.0));
}

// Largest pulse count whose last blanked stretch still ends inside the run.
void clip_train(ScenarioConfig& config) {
  if (!config.pulse_train) return;
  PulseTrain& tr = *config.pulse_train;
  const double room = config.duration - tr.first_start - tr.length - config.dead_time;
  const auto fit = room < 0.0 ? 0 : static_cast<std::int64_t>(std::floor(room / tr.period * (1.0 + 1e-12))) + 1;
  tr.count = std::min(tr.count, fit);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"quiet-noisy", "qp-pulses", "field-cool", "recovery", "psd"};
  return names;
}

const std::vector<std::string>& experiment_preset(std::string_view name) { return presets_for(name); }

ScenarioConfig experiment_config(std::string_view name, std::string_view file_text,
                                 const std::vector<std::string>& overrides) {
  std::vector<std::string> base = presets_for(name);
  if (file_text.find("rng_seed") == std::string_view::npos) {
    bool seeded = false;
    for (const auto& o : overrides) seeded = seeded || o.find("rng_seed") != std::string::npos;
    if (!seeded) base.insert(base.begin(), "rng_seed = 1");
  }
  return parse_config_layered(base, file_text, overrides, [&](ScenarioConfig& config) {
    if (name == "qp-pulses") clip_train(config);
    if (name == "recovery" && config.pulse_train) {
      const PulseTrain& tr = *config.pulse_train;
      config.duration = tr.first_start + static_cast<double>(tr.count) * tr.period;
    }
  });
}

double quiet_level(const QubitParams& qubit) {
  const double up = qubit.readout_gamma_factor * qubit.gamma_other *
                    std::exp(-units::temperature_scale(qubit.f_ge) / qubit.T_eff);
  return up > 0.0 ? 1.0 / up : std::numeric_limits<double>::infinity();
}

ExperimentBundle run_experiment(std::string_view name, const ScenarioConfig& config, const ExperimentOptions& options) {
  presets_for(name);
  ExperimentBundle bundle;
  bundle.name = std::string(name);
  bundle.config = config;
  if (name == "quiet-noisy") quiet_noisy(config, options, bundle);
  if (name == "qp-pulses") qp_pulses(config, options, bundle);
  if (name == "field-cool") field_cool(config, options, bundle);
  if (name == "recovery") recovery(config, options, bundle);
  if (name == "psd") psd(config, options, bundle);
  bundle.files.push_back({"summary.csv", io::key_value_csv(bundle.summary)});
  bundle.files.push_back({"config.txt", serialize_config(config)});
  return bundle;
}

const std::string& summary_value(const ExperimentBundle& bundle, std::string_view key) {
  for (const auto& [k, v] : bundle.summary) {
    if (k == key) return v;
  }
  throw std::out_of_range("summary has no entry '" + std::string(key) + "'");
}

}  // namespace qpj
