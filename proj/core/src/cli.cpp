#include "qpjumps/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <system_error>

#include <CLI11.hpp>

#include "qpjumps/analysis.h"
#include "qpjumps/config.h"
#include "qpjumps/errors.h"
#include "qpjumps/experiments.h"
#include "qpjumps/fitting.h"
#include "qpjumps/io.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/manifest.h"
#include "qpjumps/pipeline.h"

namespace qpj::cli {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned workers = 1;
  bool emit_truth = false;
  std::vector<std::string> sets;
};

// Collects outputs and writes them, then the manifest, into the output directory.
class OutputSet {
 public:
  OutputSet(const Globals& g, std::string command)
      : dir_(g.out_dir), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    if (!g.config_path.empty()) manifest_.inputs.push_back(g.config_path);
  }

  void input(const std::string& path) { manifest_.inputs.push_back(path); }
  void config(const ScenarioConfig& c) {
    manifest_.config_hash = config_hash(c);
    manifest_.rng_seed = c.rng_seed;
  }
  void count(const std::string& stage, std::uint64_t n) { manifest_.counts.emplace_back(stage, n); }

  void file(const std::string& name, std::string content) {
    const fs::path path = dir_ / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_file_atomic(path, content);
    manifest_.outputs.push_back({name, fnv1a64_hex(content), content.size()});
  }

  void finish() {
    manifest_.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_file_atomic(dir_ / std::string(kManifestName), manifest_json(manifest_));
  }

 private:
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

void prepare_out_dir(const Globals& g) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec || !fs::is_directory(g.out_dir)) {
    throw std::system_error(ec ? ec : std::make_error_code(std::errc::not_a_directory),
                            "cannot use output directory " + g.out_dir);
  }
}

std::vector<std::string> overrides_of(const Globals& g) {
  std::vector<std::string> o = g.sets;
  if (g.seed) o.push_back("rng_seed = " + std::to_string(*g.seed));
  return o;
}

std::string config_text(const Globals& g) { return g.config_path.empty() ? std::string() : io::read_file(g.config_path); }

// Full scenario: rng_seed and duration must come from the file, --set or --seed.
ScenarioConfig scenario(const Globals& g) { return parse_config(config_text(g), overrides_of(g)); }

// Analysis commands only need the measurement and qubit sections.
ScenarioConfig analysis_config(const Globals& g) {
  return parse_config_layered({"rng_seed = 0", "duration = 1"}, config_text(g), overrides_of(g));
}

IQRecord load_record(const std::string& path) {
  IQRecord rec = io::decode_iq_record(io::read_file(path));
  if (rec.size() == 0) throw FormatError(16, "record holds no samples");
  return rec;
}

std::string window_tag(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

std::string residuals_csv(std::span<const double> x, std::span<const double> input,
                          const std::function<double(double)>& model) {
  std::string out = "x,input,model,residual\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = model(x[i]);
    out += io::format_value(x[i]) + "," + io::format_value(input[i]) + "," + io::format_value(m) + "," +
           io::format_value(input[i] - m) + "\n";
  }
  return out;
}

const std::vector<double>& required_column(const io::CsvTable& t, const std::string& name) {
  try {
    return t.column(name);
  } catch (const FormatError&) {
    throw FormatError(1, "input has no column '" + name + "'");
  }
}

int cmd_simulate(const Globals& g, std::ostream& out) {
  const ScenarioConfig cfg = scenario(g);
  prepare_out_dir(g);
  OutputSet set(g, "simulate");
  set.config(cfg);
  const SimulationOutput sim = run_simulation(cfg, false);
  set.file("record.qjiq", io::encode_iq_record(sim.iq));
  if (g.emit_truth) set.file("record.truth.csv", io::truth_csv(sim.truth));
  set.file("config.txt", serialize_config(cfg));
  set.count("truth_entries", sim.truth.entries.size());
  set.count("pulses", sim.truth.pulses.size());
  set.count("iq_samples", sim.iq.size());
  set.finish();
  out << "wrote " << sim.iq.size() << " samples to " << (fs::path(g.out_dir) / "record.qjiq").string() << "\n";
  return kOk;
}

int cmd_filter(const Globals& g, const std::string& record, std::ostream& out) {
  const ScenarioConfig cfg = analysis_config(g);
  const IQRecord iq = load_record(record);
  prepare_out_dir(g);
  OutputSet set(g, "filter");
  set.input(record);
  set.config(cfg);
  const StateEstimate est = two_point_filter(iq, snr_separation(cfg.meas));
  set.file("states.csv", io::states_csv(est));
  const Polarization p = polarization(est);
  set.file("filter_summary.csv", io::key_value_csv({{"separation", io::format_value(est.separation)},
                                                    {"to_excited_below", io::format_value(est.to_excited_below)},
                                                    {"to_ground_above", io::format_value(est.to_ground_above)},
                                                    {"p_excited", io::format_value(p.p_excited)},
                                                    {"sigma_z", io::format_value(p.sigma_z)}}));
  set.count("iq_samples", iq.size());
  set.count("states", est.size());
  set.finish();
  out << "filtered " << est.size() << " samples, p_e = " << io::format_value(p.p_excited) << "\n";
  return kOk;
}

int cmd_stats(const Globals& g, const std::string& record, double window, double bins_per_decade,
              std::size_t min_dwells, std::ostream& out) {
  const ScenarioConfig cfg = analysis_config(g);
  const IQRecord iq = load_record(record);
  prepare_out_dir(g);
  OutputSet set(g, "stats");
  set.input(record);
  set.config(cfg);
  ReportOptions ro;
  ro.workers = g.workers;
  ro.keep_histograms = true;
  ro.bins_per_decade = bins_per_decade;
  ro.min_dwells_for_fidelity = min_dwells;
  const StatsOutput stats = run_stats(iq, cfg.meas, window, ro);
  set.file("report.csv", io::report_csv(stats.windows));
  std::size_t hist_files = 0;
  for (std::size_t i = 0; i < stats.windows.size(); ++i) {
    const WindowStats& w = stats.windows[i];
    for (const auto* h : {&w.hist_g, &w.hist_e}) {
      if (!h->has_value() || (*h)->total <= 0.0) continue;
      const DwellHistogram& hist = **h;
      set.file("histograms/window_" + window_tag(i) + "_" + state_char(hist.state) + ".csv",
               io::histogram_csv(hist, poisson_prediction(hist)));
      ++hist_files;
    }
  }
  set.count("iq_samples", iq.size());
  set.count("windows", stats.windows.size());
  set.count("histograms", hist_files);
  set.finish();
  out << "analysed " << stats.windows.size() << " windows\n";
  return kOk;
}

int cmd_fit_psd(const Globals& g, const std::string& input, const std::string& column, double dt,
                std::size_t segments, std::ostream& out) {
  const io::CsvTable table = io::parse_csv(io::read_file(input));
  const std::vector<double>& series = required_column(table, column);
  if (!(dt > 0.0)) {
    const auto& t = required_column(table, table.header.front());
    if (t.size() < 2) throw FormatError(2, "need at least two rows to infer the sample spacing");
    dt = t[1] - t[0];
    if (!(dt > 0.0)) throw FormatError(2, "first column is not increasing; pass --dt");
  }
  prepare_out_dir(g);
  OutputSet set(g, "fit-psd");
  set.input(input);
  const Periodogram p = periodogram(series, dt, segments);
  const std::span<const double> f(p.freqs.data() + 1, p.freqs.size() - 1);
  const std::span<const double> s(p.power.data() + 1, p.power.size() - 1);
  PsdFitOptions fo;
  fo.workers = g.workers;
  if (g.seed) fo.bootstrap_seed = *g.seed;
  fo.averaged_segments = segments;
  const PsdFit fit = fit_power_law(f, s, fo);
  set.file("psd.csv", [&] {
    std::string csv = "f_hz,power\n";
    for (std::size_t i = 0; i < p.freqs.size(); ++i) {
      csv += io::format_value(p.freqs[i]) + "," + io::format_value(p.power[i]) + "\n";
    }
    return csv;
  }());
  set.file("psd_fit.csv", io::key_value_csv({{"A", io::format_value(fit.model.A)},
                                             {"B", io::format_value(fit.model.B)},
                                             {"alpha", io::format_value(fit.model.alpha)},
                                             {"C", io::format_value(fit.model.C)},
                                             {"se_A", io::format_value(fit.standard_error.A)},
                                             {"se_B", io::format_value(fit.standard_error.B)},
                                             {"se_alpha", io::format_value(fit.standard_error.alpha)},
                                             {"se_C", io::format_value(fit.standard_error.C)},
                                             {"residual_norm", io::format_value(fit.residual_norm)},
                                             {"power_law_significant", fit.power_law_significant ? "1" : "0"},
                                             {"segments", std::to_string(p.segments)}}));
  set.file("residuals.csv", residuals_csv(f, s, [&](double x) { return fit.model(x); }));
  set.count("samples", series.size());
  set.count("frequencies", f.size());
  set.finish();
  out << "alpha = " << io::format_value(fit.model.alpha) << "\n";
  return kOk;
}

int cmd_fit_recovery(const Globals& g, const std::string& input, const std::string& t_col,
                     const std::string& tau_col, const std::string& weight_col, std::ostream& out) {
  const ScenarioConfig cfg = analysis_config(g);
  const io::CsvTable table = io::parse_csv(io::read_file(input));
  const auto& t_all = required_column(table, t_col);
  const auto& tau_all = required_column(table, tau_col);
  const std::vector<double>* w_all = weight_col.empty() ? nullptr : &required_column(table, weight_col);
  std::vector<double> t, tau, w;
  for (std::size_t i = 0; i < t_all.size(); ++i) {
    if (!std::isfinite(t_all[i]) || !std::isfinite(tau_all[i]) || !(tau_all[i] > 0.0)) continue;
    if (w_all && !((*w_all)[i] > 0.0)) continue;
    t.push_back(t_all[i]);
    tau.push_back(tau_all[i]);
    // Weights are decay counts; the variance of a density scales as tau_e^-2 / n.
    if (w_all) w.push_back((*w_all)[i] * tau_all[i] * tau_all[i]);
  }
  prepare_out_dir(g);
  OutputSet set(g, "fit-recovery");
  set.input(input);
  set.config(cfg);
  FitOptions fo;
  fo.workers = g.workers;
  if (g.seed) fo.bootstrap_seed = *g.seed;
  const RecoveryFit fit = fit_recovery(t, tau, cfg.qubit, fo, w);
  set.file("recovery_fit.csv", io::key_value_csv({{"tau_ss_s", io::format_value(fit.tau_ss)},
                                                  {"x_bar", io::format_value(fit.x_bar)},
                                                  {"x0", io::format_value(fit.x0)},
                                                  {"se_tau_ss_s", io::format_value(fit.se_tau_ss)},
                                                  {"se_x_bar", io::format_value(fit.se_x_bar)},
                                                  {"se_x0", io::format_value(fit.se_x0)},
                                                  {"g_eff_per_s", io::format_value(fit.g_eff())},
                                                  {"residual_norm", io::format_value(fit.residual_norm)},
                                                  {"tau_identifiable", fit.tau_identifiable ? "1" : "0"}}));
  set.file("residuals.csv", residuals_csv(t, fit.x, [&](double x) { return fit.model(x); }));
  set.count("points", t.size());
  set.finish();
  out << "tau_ss = " << io::format_value(fit.tau_ss) << " s, x_bar = " << io::format_value(fit.x_bar) << "\n";
  if (!fit.tau_identifiable) {
    out << "warning: data carry no resolvable decay\n";
    return kFitWarned;
  }
  return kOk;
}

int cmd_fit_thermal(const Globals& g, const std::string& input, const std::string& t_col, const std::string& T_col,
                    std::ostream& out) {
  const io::CsvTable table = io::parse_csv(io::read_file(input));
  const auto& t_all = required_column(table, t_col);
  const auto& T_all = required_column(table, T_col);
  std::vector<double> t, T;
  for (std::size_t i = 0; i < t_all.size(); ++i) {
    if (!std::isfinite(t_all[i]) || !std::isfinite(T_all[i])) continue;
    t.push_back(t_all[i]);
    T.push_back(T_all[i]);
  }
  prepare_out_dir(g);
  OutputSet set(g, "fit-thermal");
  set.input(input);
  FitOptions fo;
  fo.workers = g.workers;
  if (g.seed) fo.bootstrap_seed = *g.seed;
  const ThermalFit fit = fit_thermal(t, T, fo);
  set.file("thermal_fit.csv", io::key_value_csv({{"T_base_K", io::format_value(fit.T_base)},
                                                 {"delta_T_K", io::format_value(fit.delta_T)},
                                                 {"tau_th_s", io::format_value(fit.tau_th)},
                                                 {"se_T_base_K", io::format_value(fit.se_T_base)},
                                                 {"se_delta_T_K", io::format_value(fit.se_delta_T)},
                                                 {"se_tau_th_s", io::format_value(fit.se_tau_th)},
                                                 {"residual_norm", io::format_value(fit.residual_norm)},
                                                 {"warning", fit.warning ? "1" : "0"}}));
  set.file("residuals.csv", residuals_csv(t, T, [&](double x) { return fit.model(x); }));
  set.count("points", t.size());
  set.finish();
  out << "tau_th = " << io::format_value(fit.tau_th) << " s, delta_T = " << io::format_value(fit.delta_T) << " K\n";
  if (fit.warning) {
    out << "warning: data are not predominantly monotone in the fitted direction\n";
    return kFitWarned;
  }
  return kOk;
}

int cmd_snr(const Globals& g, std::ostream& out) {
  const ScenarioConfig cfg = analysis_config(g);
  const double sep = snr_separation(cfg.meas);
  out << "I_over_sigma," << io::format_value(sep) << "\n";
  out << "peak_separation_2I_over_sigma," << io::format_value(2.0 * sep) << "\n";
  return kOk;
}

int cmd_experiment(const Globals& g, const std::string& name, std::ostream& out) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("experiment", "unknown experiment '" + name + "'; available: " + known);
  }
  const ScenarioConfig cfg = experiment_config(name, config_text(g), overrides_of(g));
  prepare_out_dir(g);
  OutputSet set(g, "experiment " + name);
  set.config(cfg);
  ExperimentOptions eo;
  eo.workers = g.workers;
  eo.emit_truth = g.emit_truth;
  ExperimentBundle bundle = run_experiment(name, cfg, eo);
  for (auto& f : bundle.files) set.file(f.name, std::move(f.content));
  for (const auto& [k, v] : bundle.counts) set.count(k, v);
  set.finish();
  for (const auto& [k, v] : bundle.summary) out << k << "," << v << "\n";
  return bundle.fit_warning ? kFitWarned : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasiparticle-driven quantum jump simulator and analysis pipeline", "qpjumps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Scenario file (flat key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed, overrides rng_seed");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads for windows and bootstrap")
      ->capture_default_str()
      ->check(CLI::Range(1U, 1024U));
  app.add_flag("--emit-truth", g.emit_truth, "Also write the ground-truth trace");
  app.add_option("--set", g.sets, "Extra 'key = value' config line, repeatable")->take_all();

  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write the I/Q record");

  std::string record;
  auto* filter = app.add_subcommand("filter", "Two-point filter an I/Q record into states");
  filter->add_option("record", record, "I/Q record file")->required();

  auto* stats = app.add_subcommand("stats", "Dwell histograms and per-window statistics of a record");
  double window = 1.0, bpd = 10.0;
  std::size_t min_dwells = 20;
  stats->add_option("record", record, "I/Q record file")->required();
  stats->add_option("--window", window, "Window length in seconds")->capture_default_str();
  stats->add_option("--bins-per-decade", bpd, "Histogram resolution")->capture_default_str();
  stats->add_option("--min-dwells", min_dwells, "Dwells needed before F is reported")->capture_default_str();

  std::string input, column = "value", t_col = "t_s", y_col, weight_col;
  double dt = 0.0;
  std::size_t segments = 1;
  auto* fpsd = app.add_subcommand("fit-psd", "Periodogram and power-law fit of a CSV series");
  fpsd->add_option("input", input, "CSV file")->required();
  fpsd->add_option("--column", column, "Series column")->capture_default_str();
  fpsd->add_option("--dt", dt, "Sample spacing in seconds (default: from the first column)");
  fpsd->add_option("--segments", segments, "Averaged segments")->capture_default_str()->check(CLI::PositiveNumber);

  auto* frec = app.add_subcommand("fit-recovery", "Exponential recovery fit of tau_e(t)");
  frec->add_option("input", input, "CSV file")->required();
  frec->add_option("--time-column", t_col, "Time column")->capture_default_str();
  frec->add_option("--tau-column", y_col, "Lifetime column (default tau_e_s)");
  frec->add_option("--weight-column", weight_col, "Decay-count column for weighting");

  auto* fth = app.add_subcommand("fit-thermal", "Exponential fit of temperature vs time");
  fth->add_option("input", input, "CSV file")->required();
  fth->add_option("--time-column", t_col, "Time column")->capture_default_str();
  fth->add_option("--temperature-column", y_col, "Temperature column (default T_eff_K)");

  auto* snr = app.add_subcommand("snr", "Pointer-state separation of the readout");

  std::string name;
  auto* exp = app.add_subcommand("experiment", "Run a named experiment and write its figure data");
  exp->add_option("name", name, "quiet-noisy, qp-pulses, field-cool, recovery or psd")->required();

  auto* ref = app.add_subcommand("config-reference", "Print the configuration key reference");
  ref->group("");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*sim) return cmd_simulate(g, out);
    if (*filter) return cmd_filter(g, record, out);
    if (*stats) return cmd_stats(g, record, window, bpd, min_dwells, out);
    if (*fpsd) return cmd_fit_psd(g, input, column, dt, segments, out);
    if (*frec) return cmd_fit_recovery(g, input, t_col, y_col.empty() ? "tau_e_s" : y_col, weight_col, out);
    if (*fth) return cmd_fit_thermal(g, input, t_col, y_col.empty() ? "T_eff_K" : y_col, out);
    if (*snr) return cmd_snr(g, out);
    if (*exp) return cmd_experiment(g, name, out);
    if (*ref) {
      out << config_reference_markdown();
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormatError;
  } catch (const FitError& e) {
    err << "fit did not converge: " << e.what() << "\n";
    return kFitFailed;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kFormatError;
  } catch (const std::domain_error& e) {
    err << "data error: " << e.what() << "\n";
    return kFormatError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace qpj::cli
