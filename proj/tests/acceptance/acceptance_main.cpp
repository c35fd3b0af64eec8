// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "qpjumps/cli.h"
#include "qpjumps/experiments.h"
#include "qpjumps/fitting.h"
#include "qpjumps/io.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/kinetics.h"
#include "qpjumps/manifest.h"
#include "qpjumps/rng.h"
#include "qpjumps/thermal.h"
#include "qpjumps/thermometry.h"

using namespace qpj;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 11;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [out of band]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

double summary(const ExperimentBundle& b, const std::string& key) { return std::stod(summary_value(b, key)); }

Outcome criterion_1() {
  Outcome o;
  const double two_i = 2.0 * snr_separation(MeasurementParams{});
  o.check(within(two_i, 5.2, 0.05), "2I/sigma = " + num(two_i) + " (5.2 +/- 0.05)");
  return o;
}

Outcome criterion_2() {
  Outcome o;
  const double T = polarization_to_temperature(0.33, 665e6);
  o.check(within(T, 0.045, 0.0005), "T_eff = " + num(T * 1e3) + " mK (45 +/- 0.5)");
  return o;
}

Outcome criterion_3() {
  Outcome o;
  ThermalParams th;
  const double P = junction_dissipation(th.I_c, th.V_2Delta);
  o.check(within(P, 1.12e-10, 0.01e-10), "P = " + num(P) + " W");
  const double rate = qp_generation_rate(th) * 1e-6;
  o.check(within(rate, 1.6e6, 0.1e6), "QP rate = " + num(rate) + " /us");
  const double dT = thermal_transient(th, 100e-6).delta_T;
  o.check(within(dT, 0.010, 0.0005), "dT = " + num(dT * 1e3) + " mK");
  const double tau = thermal_decay_constant(8.3e-5, 3e-3, 0.1, 500.0, 2.5e-6);
  o.check(within(tau, 20e-6, 2e-6), "tau_th = " + num(tau * 1e6) + " us");
  return o;
}

Outcome criterion_4() {
  Outcome o;
  const QpKineticsParams k;  // g = 3.2e-4, s = 8000, r = 0
  const double x = steady_state(k);
  const double tau = tau_ss(k, x);
  const double g_eff = x / tau;
  o.check(within(x, 4e-8, 0.25 * 4e-8), "x_bar = " + num(x));
  o.check(within(tau, 125e-6, 0.25 * 125e-6), "tau_ss = " + num(tau * 1e6) + " us");
  o.check(within(g_eff, 3.2e-4, 0.25 * 3.2e-4), "g_eff = " + num(g_eff) + " /s");
  return o;
}

Outcome criterion_5() {
  Outcome o;
  const auto cfg = experiment_config("recovery", "", {"rng_seed = " + std::to_string(kSeed)});
  const auto b = run_experiment("recovery", cfg);
  const double pulses = static_cast<double>(cfg.pulse_train->count);
  const double tau = summary(b, "tau_ss_s"), tau0 = summary(b, "configured_tau_ss_s");
  const double x = summary(b, "x_bar"), x0 = summary(b, "configured_x_bar");
  o.check(pulses >= 1e4, "pulses = " + num(pulses));
  o.check(std::abs(tau - tau0) <= 0.10 * tau0, "tau_ss = " + num(tau * 1e6) + " us vs " + num(tau0 * 1e6));
  o.check(std::abs(x - x0) <= 0.25 * x0, "x_bar = " + num(x) + " vs " + num(x0));
  return o;
}

// Criteria 6 and 7 share one quiet-noisy run.
ExperimentBundle quiet_noisy() {
  return run_experiment("quiet-noisy", experiment_config("quiet-noisy", "", {"rng_seed = " + std::to_string(kSeed)}));
}

Outcome criterion_6(const ExperimentBundle& b) {
  Outcome o;
  const double control_F = 1.0 - summary(b, "control_median_one_minus_F");
  const double contrast = summary(b, "median_one_minus_F") / summary(b, "control_median_one_minus_F");
  o.check(control_F > 0.95, "constant-N median F = " + num(control_F) + " (> 0.95)");
  o.check(contrast >= 10.0, "median 1-F contrast = " + num(contrast) + "x (>= 10)");
  return o;
}

Outcome criterion_7(const ExperimentBundle& b) {
  Outcome o;
  const double windows = summary(b, "windows_with_fidelity");
  const double r = summary(b, "correlation_tau_g_log_fidelity");
  const double quiet = summary(b, "quiet_fraction");
  o.check(windows >= 100, "seconds = " + num(windows));
  o.check(quiet > 0.0 && quiet < 1.0, "quiet fraction = " + num(quiet));
  o.check(r > 0.5, "corr(tau_g, -log10(1-F)) = " + num(r) + " (> 0.5)");
  return o;
}

Outcome criterion_8() {
  Outcome o;
  const auto b = run_experiment("psd", experiment_config("psd", "", {"rng_seed = " + std::to_string(kSeed)}));
  const double a = summary(b, "powerlaw_alpha"), t = summary(b, "telegraph_alpha");
  o.check(within(a, 1.4, 0.15), "power-law alpha = " + num(a));
  o.check(within(t, 2.0, 0.15), "telegraph alpha = " + num(t));
  return o;
}

Outcome criterion_9() {
  Outcome o;
  // ODE against the analytic linearization.
  QpKineticsParams k;
  const double xb = steady_state(k), tau = tau_ss(k, xb);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(10e-6 * i);
  const auto x = evolve_ode(1.01 * xb, k, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, oracle::rel(x[i], linearized(1.01 * xb, xb, tau, grid[i])));
  o.check(worst < 1e-6, "ODE vs linearized max rel = " + num(worst));

  // Stationary QP count against the generator-matrix oracle.
  const std::size_t samples = 10000;
  const double spacing = 2e-3;
  auto rng = stream_rng(kSeed, 0);
  const auto trace = sample_birth_death(0, k, spacing * (samples + 20), rng);
  std::vector<double> observed(51, 0.0);
  std::size_t e = 0;
  std::int64_t N = trace.initial_N;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = spacing * static_cast<double>(i + 20);
    while (e < trace.events.size() && trace.events[e].time <= t) N = trace.events[e++].N;
    observed[std::min<std::size_t>(static_cast<std::size_t>(N), 50)] += 1.0;
  }
  const auto pi = oracle::birth_death_stationary(k.g * k.N_cp / 2.0, k.s, 0.0, 50);
  std::vector<double> expected(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) expected[i] = samples * pi[i];
  const double p = oracle::chi_square_p_value(observed, expected);
  o.check(p > 0.01, "birth-death chi-square p = " + num(p));

  // Noise-free filter on a grid-aligned alternating trace.
  std::mt19937_64 draw(kSeed);
  std::uniform_int_distribution<int> len(1, 60);
  TruthTrace tr;
  std::vector<std::int64_t> runs;
  double t = 0.0;
  const MeasurementParams m;
  for (int i = 0; i < 2000; ++i) {
    runs.push_back(len(draw));
    tr.entries.push_back({t, 0, i % 2 ? QubitState::kExcited : QubitState::kGround});
    t += m.T_m * static_cast<double>(runs.back());
  }
  tr.entries.push_back({t, 0, QubitState::kGround});
  tr.duration = t + 10 * m.T_m;
  auto noise = stream_rng(kSeed, 1);
  const auto dwells = extract_dwells(two_point_filter(synthesize_iq(tr, m, noise, false, 0.0), snr_separation(m)));
  std::vector<std::int64_t> g, ex;
  for (std::size_t i = 1; i < runs.size(); ++i) (i % 2 ? ex : g).push_back(runs[i]);
  o.check(dwells.ground == g && dwells.excited == ex, "noise-free filter " + std::string(dwells.ground == g && dwells.excited == ex ? "exact" : "mismatch"));

  // Parseval.
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_p = 0.0;
  for (std::size_t n : {16, 100, 1023, 4096}) {
    std::vector<double> s(n);
    for (auto& v : s) v = nd(draw) + 3.0;
    const auto per = periodogram(s, 0.37);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    worst_p = std::max(worst_p, oracle::rel(std::accumulate(per.power.begin(), per.power.end(), 0.0) * per.df, var));
  }
  o.check(worst_p < 1e-9, "Parseval max rel = " + num(worst_p));
  return o;
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Outcome criterion_10(const fs::path& work) {
  Outcome o;
  fs::remove_all(work);
  fs::create_directories(work);
  io::write_file_atomic(work / "scenario.txt",
                        "rng_seed = 4\nduration = 0.5\ng_modulation = on\ng_mean_low = 0.1\ng_mean_high = 0.1\n");
  const std::string cfg = (work / "scenario.txt").string();
  // Identical command lines twice; the first output tree is set aside in between.
  const fs::path d = work / "run";
  bool ok = true;
  for (const char* keep : {"a", "b"}) {
    ok = ok && run_cli({"--config", cfg, "--out", (d / "sim").string(), "--emit-truth", "simulate"}) == 0;
    ok = ok && run_cli({"--config", cfg, "--out", (d / "stats").string(), "stats", "--window", "0.1",
                        (d / "sim/record.qjiq").string()}) == 0;
    ok = ok && run_cli({"--out", (d / "filter").string(), "filter", (d / "sim/record.qjiq").string()}) == 0;
    ok = ok && run_cli({"--seed", "3", "--out", (d / "psd").string(), "experiment", "psd"}) == 0;
    fs::rename(d, work / keep);
  }
  o.check(ok, "commands exit 0");
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(work / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), work / "a");
    const auto other = work / "b" / rel;
    if (rel.filename() == kManifestName) {
      auto ma = parse_manifest(io::read_file(entry.path()));
      auto mb = parse_manifest(io::read_file(other));
      ma.wall_clock_s = mb.wall_clock_s = 0.0;
      if (manifest_json(ma) != manifest_json(mb)) ++differing;
    } else if (!fs::exists(other) || io::read_file(entry.path()) != io::read_file(other)) {
      ++differing;
    }
    ++files;
  }
  o.check(files > 10 && differing == 0, num(static_cast<double>(files)) + " files compared, " +
                                            num(static_cast<double>(differing)) + " differ");
  fs::remove_all(work);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "qpjumps_acceptance";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--workdir") work = argv[i + 1];
  }

  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ("
              << num(secs) << " s)" << std::endl;
  };

  report(1, criterion_1);
  report(2, criterion_2);
  report(3, criterion_3);
  report(4, criterion_4);
  report(5, criterion_5);
  ExperimentBundle qn;
  bool qn_ok = true;
  std::string qn_error;
  try {
    qn = quiet_noisy();
  } catch (const std::exception& e) {
    qn_ok = false;
    qn_error = e.what();
  }
  auto need_qn = [&](auto f) {
    return [&, f]() -> Outcome {
      if (!qn_ok) throw std::runtime_error(qn_error);
      return f(qn);
    };
  };
  report(6, need_qn(criterion_6));
  report(7, need_qn(criterion_7));
  report(8, criterion_8);
  report(9, criterion_9);
  report(10, [&] { return criterion_10(work); });

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
