#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "qpjumps/cli.h"
#include "qpjumps/config.h"
#include "qpjumps/errors.h"
#include "qpjumps/experiments.h"
#include "qpjumps/io.h"
#include "qpjumps/manifest.h"
#include "qpjumps/pipeline.h"

using namespace qpj;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("qpjumps_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write(const std::string& path, const std::string& text) { io::write_file_atomic(path, text); }

IQRecord small_record() {
  IQRecord r;
  r.T_m = 5e-6;
  r.I = {1.5, -2.25, std::numeric_limits<double>::quiet_NaN(), 3.0};
  r.Q = {0.0, 1e-300, std::numeric_limits<double>::quiet_NaN(), -7.0};
  return r;
}

std::uint64_t format_offset(const std::string& bytes) {
  try {
    io::decode_iq_record(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  return std::numeric_limits<std::uint64_t>::max();
}

}  // namespace

TEST(IqRecord, EncodeDecodeRoundTrip) {
  const auto r = small_record();
  const auto bytes = io::encode_iq_record(r);
  ASSERT_EQ(bytes.size(), io::kIqHeaderSize + 16 * r.size());
  EXPECT_EQ(bytes.substr(0, 4), "QJIQ");
  const auto back = io::decode_iq_record(bytes);
  EXPECT_EQ(back.T_m, r.T_m);
  ASSERT_EQ(back.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::isnan(r.I[i])) {
      EXPECT_TRUE(std::isnan(back.I[i]) && std::isnan(back.Q[i]));
    } else {
      EXPECT_EQ(back.I[i], r.I[i]);
      EXPECT_EQ(back.Q[i], r.Q[i]);
    }
  }
  EXPECT_EQ(io::encode_iq_record(back), bytes);
}

TEST(IqRecord, LittleEndianLayout) {
  const auto bytes = io::encode_iq_record(small_record());
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, low byte first
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 4);  // sample count
  double tm = 0.0;
  std::memcpy(&tm, bytes.data() + 8, 8);
  EXPECT_EQ(tm, 5e-6);
}

TEST(IqRecord, FormatErrorsCarryOffsets) {
  const auto good = io::encode_iq_record(small_record());
  EXPECT_EQ(format_offset(""), 0U);
  EXPECT_EQ(format_offset("QJI"), 0U);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(format_offset(bad), 0U);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(format_offset(bad), 4U);
  bad = good;
  const double neg = -1.0;
  std::memcpy(bad.data() + 8, &neg, 8);
  EXPECT_EQ(format_offset(bad), 8U);
  EXPECT_EQ(format_offset(good.substr(0, good.size() - 3)), 16U);
  EXPECT_EQ(format_offset(good + "xx"), 16U);
}

TEST(Csv, WritersUseDocumentedHeaders) {
  TruthTrace tr;
  tr.duration = 1.0;
  tr.entries = {{0.0, 1, QubitState::kGround}, {0.5, 1, QubitState::kExcited}};
  EXPECT_EQ(io::truth_csv(tr), "time_s,state,N\n0,g,1\n0.5,e,1\n");
  QpEventTrace qt;
  qt.events = {{0.25, QpEvent::kPairGeneration, 2}};
  EXPECT_EQ(io::qp_trace_csv(qt).substr(0, 15), "time_s,event,N\n");
  std::vector<WindowStats> w(1);
  EXPECT_EQ(io::report_csv(w).substr(0, 39), "t_s,tau_g_s,tau_e_s,F,one_minus_F,sigma");
  EXPECT_EQ(io::format_value(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(io::format_value(std::numeric_limits<double>::quiet_NaN()), "nan");
  const std::vector<double> t{0, 1}, x{4e-8, 5e-8};
  EXPECT_EQ(io::ode_csv(t, x), "time_s,x_qp\n0,4e-08\n1,5e-08\n");
}

TEST(Csv, ParseAndReportLineNumbers) {
  const auto t = io::parse_csv("a,b\n1,2\n3,nan\n,5\n");
  EXPECT_EQ(t.rows(), 3U);
  EXPECT_EQ(t.column("a")[1], 3.0);
  EXPECT_TRUE(std::isnan(t.column("b")[1]));
  EXPECT_TRUE(std::isnan(t.column("a")[2]));
  try {
    io::parse_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 3U);
  }
  try {
    io::parse_csv("a,b\n1,2\n3,x\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 3U);
  }
  EXPECT_THROW(t.column("zz"), FormatError);
}

TEST(Files, AtomicWriteReplaces) {
  TempDir dir("atomic");
  write(dir / "f.txt", "one");
  write(dir / "f.txt", "two");
  EXPECT_EQ(io::read_file(dir / "f.txt"), "two");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++n;
  EXPECT_EQ(n, 1U);
  EXPECT_THROW(write(dir / "missing/f.txt", "x"), std::runtime_error);
}

TEST(Manifest, RoundTripAndVerify) {
  TempDir dir("manifest");
  write(dir / "a.csv", "x\n1\n");
  RunManifest m;
  m.command = "stats";
  m.config_hash = "0123456789abcdef";
  m.rng_seed = 18446744073709551615ULL;
  m.inputs = {"record.qjiq"};
  m.outputs = {{"a.csv", fnv1a64_hex("x\n1\n"), 4}};
  m.wall_clock_s = 0.5;
  m.counts = {{"samples", 200000}};
  const auto back = parse_manifest(manifest_json(m));
  EXPECT_EQ(back.tool_version, "1.0.0");
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.rng_seed, m.rng_seed);
  EXPECT_EQ(back.outputs[0].hash, m.outputs[0].hash);
  EXPECT_EQ(back.counts, m.counts);
  EXPECT_EQ(manifest_json(back), manifest_json(m));
  EXPECT_TRUE(verify_outputs(m, dir.path()).empty());
  write(dir / "a.csv", "x\n2\n");
  EXPECT_EQ(verify_outputs(m, dir.path()), std::vector<std::string>{"a.csv"});
  EXPECT_THROW(parse_manifest("{"), FormatError);
  EXPECT_THROW(parse_manifest("{}"), FormatError);
}

TEST(Cli, SnrPrintsSeparation) {
  const auto r = run_cli({"snr"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("peak_separation_2I_over_sigma,5.18"), std::string::npos) << r.out;
}

TEST(Cli, SimulateWritesRecordTruthAndManifest) {
  TempDir dir("simulate");
  write(dir / "c.txt", "rng_seed = 7\nduration = 0.001\n");
  const auto r = run_cli({"--config", dir / "c.txt", "--out", dir / "o", "--emit-truth", "simulate"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto iq = io::decode_iq_record(io::read_file(dir / "o/record.qjiq"));
  EXPECT_EQ(iq.size(), 200U);
  EXPECT_EQ(io::read_file(dir / "o/record.truth.csv").substr(0, 15), "time_s,state,N\n");
  const auto m = parse_manifest(io::read_file(dir / "o/manifest.json"));
  EXPECT_EQ(m.command, "simulate");
  EXPECT_EQ(m.rng_seed, 7U);
  EXPECT_TRUE(verify_outputs(m, dir.path() / "o").empty());
}

TEST(Cli, PaperDefaultSecondHas200000Samples) {
  TempDir dir("second");
  write(dir / "c.txt", "rng_seed = 7\nduration = 1\n");
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir.path().string(), "simulate"}).code, 0);
  EXPECT_EQ(io::decode_iq_record(io::read_file(dir / "record.qjiq")).size(), 200000U);
}

TEST(Cli, SeedFlagOverridesFile) {
  TempDir dir("seedflag");
  write(dir / "c.txt", "rng_seed = 7\nduration = 0.01\n");
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir / "a", "simulate"}).code, 0);
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--seed", "8", "--out", dir / "b", "simulate"}).code, 0);
  EXPECT_NE(io::read_file(dir / "a/record.qjiq"), io::read_file(dir / "b/record.qjiq"));
  EXPECT_EQ(parse_manifest(io::read_file(dir / "b/manifest.json")).rng_seed, 8U);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  TempDir dir("determinism");
  write(dir / "c.txt", "rng_seed = 3\nduration = 0.5\ng_modulation = on\ng_mean_low = 0.1\ng_mean_high = 0.1\n");
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir / sub, "--emit-truth", "simulate"}).code, 0);
    ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir / (std::string(sub) + "s"), "stats", "--window", "0.1",
                   dir / (std::string(sub) + "/record.qjiq")})
                  .code,
              0);
  }
  for (const char* f : {"record.qjiq", "record.truth.csv", "config.txt"}) {
    EXPECT_EQ(io::read_file(dir / (std::string("a/") + f)), io::read_file(dir / (std::string("b/") + f))) << f;
  }
  EXPECT_EQ(io::read_file(dir / "as/report.csv"), io::read_file(dir / "bs/report.csv"));
  const auto ma = parse_manifest(io::read_file(dir / "a/manifest.json"));
  const auto mb = parse_manifest(io::read_file(dir / "b/manifest.json"));
  ASSERT_EQ(ma.outputs.size(), mb.outputs.size());
  for (std::size_t i = 0; i < ma.outputs.size(); ++i) EXPECT_EQ(ma.outputs[i].hash, mb.outputs[i].hash);
}

TEST(Cli, FilterWritesStates) {
  TempDir dir("filter");
  write(dir / "c.txt", "rng_seed = 3\nduration = 0.001\n");
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir.path().string(), "simulate"}).code, 0);
  const auto r = run_cli({"--out", dir / "f", "filter", dir / "record.qjiq"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto states = io::read_file(dir / "f/states.csv");
  EXPECT_EQ(states.substr(0, 10), "t_s,state\n");
  EXPECT_EQ(std::count(states.begin(), states.end(), '\n'), 201);
}

TEST(Cli, StatsMatchesExperimentChain) {
  TempDir dir("compose");
  std::string text;
  for (const auto& line : experiment_preset("quiet-noisy")) {
    if (line.rfind("duration", 0) != 0 && line.rfind("rng_seed", 0) != 0) text += line + "\n";
  }
  text += "duration = 6\nrng_seed = 5\n";
  write(dir / "c.txt", text);
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir / "sim", "simulate"}).code, 0);
  const auto stats = run_cli({"--config", dir / "c.txt", "--out", dir / "stats", "stats", dir / "sim/record.qjiq"});
  ASSERT_EQ(stats.code, 0) << stats.err;
  const auto exp = run_cli({"--config", dir / "c.txt", "--out", dir / "exp", "experiment", "quiet-noisy"});
  ASSERT_EQ(exp.code, 0) << exp.err;
  const auto report = io::read_file(dir / "stats/report.csv");
  EXPECT_EQ(report, io::read_file(dir / "exp/report.csv"));
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 7);

  // The same chain in memory.
  const auto cfg = parse_config(text);
  const auto sim = run_simulation(cfg);
  EXPECT_EQ(io::encode_iq_record(sim.iq), io::read_file(dir / "sim/record.qjiq"));
  EXPECT_EQ(io::report_csv(run_stats(sim.iq, cfg.meas, 1.0).windows), report);
}

TEST(Cli, StatsWritesHistogramPairs) {
  TempDir dir("hist");
  write(dir / "c.txt", "rng_seed = 3\nduration = 0.2\n");
  ASSERT_EQ(run_cli({"--config", dir / "c.txt", "--out", dir.path().string(), "simulate"}).code, 0);
  ASSERT_EQ(run_cli({"--out", dir / "s", "stats", "--window", "0.1", dir / "record.qjiq"}).code, 0);
  for (const char* f : {"histograms/window_00000_g.csv", "histograms/window_00001_e.csv"}) {
    EXPECT_EQ(io::read_file(dir / (std::string("s/") + f)).substr(0, 22), "bin_lo_s,bin_hi_s,M,P\n") << f;
  }
}

TEST(Cli, ExitCodes) {
  TempDir dir("exits");
  write(dir / "bad.txt", "rng_seed = 1\nduration = 1\neta = 1.5\n");
  auto r = run_cli({"--config", dir / "bad.txt", "--out", dir / "o", "simulate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("eta"), std::string::npos);

  r = run_cli({"--out", dir / "o", "experiment", "nope"});
  EXPECT_EQ(r.code, 2);
  for (const auto& name : experiment_names()) EXPECT_NE(r.err.find(name), std::string::npos) << name;

  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"--workers", "0", "snr"}).code, 2);

  write(dir / "empty.qjiq", "");
  r = run_cli({"--out", dir / "o", "stats", dir / "empty.qjiq"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("offset 0"), std::string::npos) << r.err;

  IQRecord none;
  none.T_m = 5e-6;
  write(dir / "zero.qjiq", io::encode_iq_record(none));
  EXPECT_EQ(run_cli({"--out", dir / "o", "stats", dir / "zero.qjiq"}).code, 3);

  auto corrupt = io::encode_iq_record(small_record());
  corrupt[5] = 7;
  write(dir / "corrupt.qjiq", corrupt);
  r = run_cli({"--out", dir / "o", "stats", dir / "corrupt.qjiq"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("offset 4"), std::string::npos) << r.err;

  write(dir / "short.csv", "t_s,T_eff_K\n0,0.05\n1,0.04\n");
  EXPECT_EQ(run_cli({"--out", dir / "o", "fit-thermal", dir / "short.csv"}).code, 3);
  EXPECT_EQ(run_cli({"--out", dir / "o", "stats", dir / "missing.qjiq"}).code, 1);
}

TEST(Cli, FitCommands) {
  TempDir dir("fits");
  std::string thermal = "t_s,T_eff_K\n";
  for (int i = 0; i < 20; ++i) {
    const double t = 0.5e-3 * i;
    thermal += io::format_value(t) + "," + io::format_value(0.045 + 0.01 * std::exp(-t / 3e-3)) + "\n";
  }
  write(dir / "thermal.csv", thermal);
  auto r = run_cli({"--out", dir / "th", "fit-thermal", dir / "thermal.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "th/residuals.csv"));
  EXPECT_TRUE(fs::exists(dir / "th/manifest.json"));

  const std::string flat = "t_s,T_eff_K\n0,0.060\n1,0.050\n2,0.051\n3,0.052\n4,0.053\n5,0.054\n6,0.055\n7,0.056\n";
  write(dir / "warn.csv", flat);
  EXPECT_EQ(run_cli({"--out", dir / "w", "fit-thermal", dir / "warn.csv"}).code, 5);

  std::string series = "t_s,value\n";
  auto rng = std::mt19937_64(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 1024; ++i) series += std::to_string(i) + "," + io::format_value(n(rng)) + "\n";
  write(dir / "series.csv", series);
  r = run_cli({"--out", dir / "psd", "fit-psd", "--segments", "2", dir / "series.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto psd = io::parse_csv(io::read_file(dir / "psd/psd.csv"));
  EXPECT_EQ(psd.rows(), 257U);

  std::string rec = "t_s,tau_e_s\n";
  for (int i = 0; i < 12; ++i) {
    const double t = 20e-6 * (i + 1);
    const double x = 4e-8 + 3e-7 * std::exp(-t / 125e-6);
    rec += io::format_value(t) + "," + io::format_value(1.0 / (x * qp_rate_coefficient(QubitParams{}))) + "\n";
  }
  write(dir / "rec.csv", rec);
  r = run_cli({"--out", dir / "rec", "fit-recovery", dir / "rec.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fit = io::read_file(dir / "rec/recovery_fit.csv");
  const auto at = fit.find("tau_ss_s,");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NEAR(std::stod(fit.substr(at + 9)), 125e-6, 125e-12);
}

TEST(Experiments, NamesAndPresets) {
  EXPECT_EQ(experiment_names(), (std::vector<std::string>{"quiet-noisy", "qp-pulses", "field-cool", "recovery", "psd"}));
  EXPECT_THROW(experiment_preset("nope"), std::invalid_argument);
  const auto fc = experiment_config("field-cool", "", {});
  const auto qn = experiment_config("quiet-noisy", "", {});
  EXPECT_DOUBLE_EQ(fc.kinetics.s, 5.0 * qn.kinetics.s);
  EXPECT_EQ(experiment_config("quiet-noisy", "", {"rng_seed = 9"}).rng_seed, 9U);
  const auto qp = experiment_config("qp-pulses", "duration = 1\n", {});
  ASSERT_TRUE(qp.pulse_train.has_value());
  EXPECT_LE(qp.pulse_train->first_start + static_cast<double>(qp.pulse_train->count) * qp.pulse_train->period,
            1.0 + qp.pulse_train->period);
  EXPECT_NO_THROW(qp.validate());
}

TEST(Experiments, PsdBundle) {
  const auto b = run_experiment("psd", experiment_config("psd", "", {"rng_seed = 11"}));
  EXPECT_NEAR(std::stod(summary_value(b, "powerlaw_alpha")), 1.4, 0.15);
  EXPECT_NEAR(std::stod(summary_value(b, "telegraph_alpha")), 2.0, 0.15);
  EXPECT_THROW(summary_value(b, "nope"), std::out_of_range);
}

TEST(Experiments, QpPulsesSuppressEverySecond) {
  const auto b = run_experiment("qp-pulses", experiment_config("qp-pulses", "", {"rng_seed = 11"}));
  EXPECT_EQ(std::stod(summary_value(b, "fraction_below_quiet_level")), 1.0);
  EXPECT_LT(std::stod(summary_value(b, "max_tau_g_s")), std::stod(summary_value(b, "quiet_level_s")));
}

TEST(Experiments, FieldCoolingAddsQuietSeconds) {
  const auto b = run_experiment("field-cool", experiment_config("field-cool", "", {"rng_seed = 11"}));
  EXPECT_GT(std::stod(summary_value(b, "quiet_fraction")), std::stod(summary_value(b, "baseline_quiet_fraction")));
}
