#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.h"
#include "qpjumps/io.h"
#include "qpjumps/kinetics.h"
#include "qpjumps/rng.h"

using namespace qpj;

namespace {

QpKineticsParams kinetics(double g, double s, double r, double N_cp = 3.75e7) {
  QpKineticsParams p;
  p.g = g;
  p.s = s;
  p.r = r;
  p.N_cp = N_cp;
  return p;
}

std::int64_t count_at(const QpEventTrace& trace, double t) {
  std::int64_t N = trace.initial_N;
  for (const auto& ev : trace.events) {
    if (ev.time > t) break;
    N = ev.N;
  }
  return N;
}

// Samples N every `spacing` seconds along one long trajectory.
std::vector<double> stationary_counts(const QpKineticsParams& p, std::size_t samples, double spacing,
                                      std::uint64_t seed, std::size_t n_max) {
  auto rng = stream_rng(seed, 0);
  const double burn_in = 20.0 * spacing;
  const auto trace = sample_birth_death(0, p, burn_in + spacing * static_cast<double>(samples), rng);
  std::vector<double> hist(n_max + 1, 0.0);
  std::size_t k = 0;
  std::int64_t N = trace.initial_N;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = burn_in + spacing * static_cast<double>(i);
    while (k < trace.events.size() && trace.events[k].time <= t) N = trace.events[k++].N;
    hist[std::min<std::size_t>(static_cast<std::size_t>(N), n_max)] += 1.0;
  }
  return hist;
}

}  // namespace

TEST(SteadyState, Examples) {
  EXPECT_NEAR(steady_state(kinetics(3.2e-4, 8000, 0)), 4.0e-8, 1e-20);
  EXPECT_EQ(steady_state(kinetics(0, 100, 7)), 0.0);
  EXPECT_NEAR(steady_state(kinetics(1, 0, 4)), 0.5, 1e-15);
  EXPECT_THROW(steady_state(kinetics(1, 0, 0)), std::domain_error);
}

TEST(SteadyState, RootResidualProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lg(-8, 2), ls(-2, 5), lr(-3, 12);
  for (int i = 0; i < 2000; ++i) {
    const auto p = kinetics(std::pow(10, lg(rng)), i % 5 == 0 ? 0.0 : std::pow(10, ls(rng)),
                            i % 7 == 0 ? 0.0 : std::pow(10, lr(rng)));
    if (p.s == 0 && p.r == 0) continue;
    const double x = steady_state(p);
    EXPECT_GE(x, 0.0);
    EXPECT_LT(std::abs(p.g - p.s * x - p.r * x * x), 1e-15 * p.g) << p.g << " " << p.s << " " << p.r;
  }
}

TEST(TauSs, Examples) {
  EXPECT_NEAR(tau_ss(kinetics(3.2e-4, 8000, 0), 4e-8), 125e-6, 1e-18);
  EXPECT_NEAR(tau_ss(kinetics(0, 0, 4), 0.5), 0.25, 1e-15);
  EXPECT_NEAR(tau_ss(kinetics(0, 1000, 1e10), 1e-7), 1.0 / 3000.0, 1e-15);
  EXPECT_THROW(tau_ss(kinetics(0, 0, 0), 0.0), std::domain_error);
}

TEST(Linearized, Examples) {
  EXPECT_EQ(linearized(3.0, 1.0, 2.0, 0.0), 3.0);
  EXPECT_NEAR(linearized(3.0, 1.0, 2.0, 1e4), 1.0, 1e-15);
  EXPECT_NEAR(linearized(2.0 * 4e-8, 4e-8, 125e-6, 125e-6), 4e-8 * (1.0 + std::exp(-1.0)), 1e-22);
}

TEST(EvolveOde, FixedPointStays) {
  const auto p = kinetics(3.2e-4, 8000, 1e3);
  const double xb = steady_state(p);
  std::vector<double> t{0, 1e-4, 1e-3, 1e-2};
  for (double x : evolve_ode(xb, p, t)) EXPECT_NEAR(x, xb, 1e-10 * xb);
}

TEST(EvolveOde, FrozenDynamics) {
  std::vector<double> t{0, 1, 2, 3};
  for (double x : evolve_ode(0.7, kinetics(0, 0, 0), t)) EXPECT_EQ(x, 0.7);
}

TEST(EvolveOde, MatchesLinearizationForSmallPerturbation) {
  const auto p = kinetics(3.2e-4, 8000, 0);
  const double xb = steady_state(p);
  const double tau = tau_ss(p, xb);
  std::vector<double> t;
  for (int i = 0; i <= 50; ++i) t.push_back(i * 20e-6);
  const auto x = evolve_ode(1.01 * xb, p, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_LT(oracle::rel(x[i], linearized(1.01 * xb, xb, tau, t[i])), 1e-6) << t[i];
  }
}

TEST(EvolveOde, ConvergesWithinTenRelaxationTimes) {
  // Recombination-dominated kinetics relax faster than linear far from x_bar,
  // so every start in [0, 10 x_bar] is within 1e-4 after 10 tau_ss.
  const auto p = kinetics(1e-3, 0.0, 1e4);
  const double xb = steady_state(p);
  const double tau = tau_ss(p, xb);
  for (double f : {0.0, 0.1, 0.5, 0.9, 1.5, 2.0, 5.0, 10.0}) {
    std::vector<double> t{0.0, 10.0 * tau};
    const auto x = evolve_ode(f * xb, p, t);
    EXPECT_LT(oracle::rel(x[1], xb), 1e-4) << f;
  }
}

TEST(EvolveOde, LinearKineticsKeepExactExponentialResidue) {
  // With r = 0 the residue after 10 tau_ss is exactly |x0/x_bar - 1| e^-10,
  // which exceeds 1e-4 for x0 above ~3.2 x_bar.
  const auto p = kinetics(3.2e-4, 8000, 0);
  const double xb = steady_state(p);
  const double tau = tau_ss(p, xb);
  for (double f : {0.0, 0.1, 0.5, 2.0, 5.0, 10.0}) {
    std::vector<double> t{0.0, 10.0 * tau};
    const auto x = evolve_ode(f * xb, p, t);
    EXPECT_NEAR(oracle::rel(x[1], xb), std::abs(f - 1.0) * std::exp(-10.0), 1e-9) << f;
  }
}

TEST(EvolveOde, MonotoneFromAboveAndNonNegative) {
  const auto p = kinetics(1e-3, 100, 1e6);
  const double xb = steady_state(p);
  std::vector<double> t;
  for (int i = 0; i <= 200; ++i) t.push_back(i * 1e-4);
  const auto x = evolve_ode(50 * xb, p, t);
  for (std::size_t i = 1; i < x.size(); ++i) {
    EXPECT_LE(x[i], x[i - 1]);
    EXPECT_GE(x[i], xb * (1 - 1e-12));
  }
  EXPECT_THROW(evolve_ode(-1e-9, p, t), std::domain_error);
}

TEST(BirthDeath, PureDecayMeanDwell) {
  const auto p = kinetics(0, 8000, 0);
  auto rng = stream_rng(2, 0);
  double sum = 0.0, sum2 = 0.0;
  const int runs = 20000;
  for (int i = 0; i < runs; ++i) {
    const auto tr = sample_birth_death(1, p, 1.0, rng);
    ASSERT_EQ(tr.events.size(), 1U);
    EXPECT_EQ(tr.events[0].N, 0);
    sum += tr.events[0].time;
    sum2 += tr.events[0].time * tr.events[0].time;
  }
  const double mean = sum / runs;
  const double se = std::sqrt((sum2 / runs - mean * mean) / runs);
  EXPECT_LT(std::abs(mean - 1.0 / 8000.0), 3.0 * se);
}

TEST(BirthDeath, AbsorbingOnlyWithoutGeneration) {
  auto rng = stream_rng(2, 0);
  EXPECT_TRUE(sample_birth_death(0, kinetics(0, 8000, 0), 1.0, rng).events.empty());
  EXPECT_FALSE(sample_birth_death(0, kinetics(3.2e-4, 8000, 0), 1.0, rng).events.empty());
}

TEST(BirthDeath, StationaryMatchesMatrixOracle) {
  const auto p = kinetics(3.2e-4, 8000, 0);
  const int n_max = 50;
  const auto pi = oracle::birth_death_stationary(p.g * p.N_cp / 2.0, p.s, 0.0, n_max);
  const auto observed = stationary_counts(p, 10000, 2e-3, 17, n_max);
  std::vector<double> expected(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) expected[i] = 1e4 * pi[i];
  EXPECT_GT(oracle::chi_square_p_value(observed, expected), 0.01);
  double mean = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) mean += static_cast<double>(i) * pi[i];
  EXPECT_NEAR(mean, 1.5, 1e-9);  // g N_cp / s, the paper regime of 1-2 QPs
}

TEST(BirthDeath, StationaryWithRecombinationMatchesMatrixOracle) {
  const auto p = kinetics(3.2e-4, 8000, 1.5e11);
  const auto pi = oracle::birth_death_stationary(p.g * p.N_cp / 2.0, p.s, p.r / (2.0 * p.N_cp), 50);
  const auto observed = stationary_counts(p, 10000, 2e-3, 23, 50);
  std::vector<double> expected(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) expected[i] = 1e4 * pi[i];
  EXPECT_GT(oracle::chi_square_p_value(observed, expected), 0.01);
}

TEST(BirthDeath, EnsembleMeanFollowsOde) {
  const auto p = kinetics(3.2e-4, 8000, 0);
  const std::int64_t N0 = 20;
  const std::vector<double> checkpoints{25e-6, 50e-6, 100e-6, 200e-6, 400e-6};
  const int runs = 10000;
  std::vector<double> sum(checkpoints.size(), 0.0), sum2(checkpoints.size(), 0.0);
  auto rng = stream_rng(31, 0);
  for (int i = 0; i < runs; ++i) {
    const auto tr = sample_birth_death(N0, p, checkpoints.back(), rng);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const double n = static_cast<double>(count_at(tr, checkpoints[c]));
      sum[c] += n;
      sum2[c] += n * n;
    }
  }
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), checkpoints.begin(), checkpoints.end());
  const auto x = evolve_ode(static_cast<double>(N0) / p.N_cp, p, grid);
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const double mean = sum[c] / runs;
    const double se = std::sqrt((sum2[c] / runs - mean * mean) / runs);
    EXPECT_LT(std::abs(mean - x[c + 1] * p.N_cp), 3.0 * se) << "t=" << checkpoints[c];
  }
}

TEST(BirthDeath, TraceInvariantsProperty) {
  std::mt19937_64 draw(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto p = kinetics(u(draw) * 1e-3, 10.0 + u(draw) * 1e4, u(draw) < 0.5 ? 0.0 : u(draw) * 1e12,
                            1e6 + u(draw) * 1e8);
    const auto N0 = static_cast<std::int64_t>(u(draw) * 30);
    auto rng = stream_rng(i, 0);
    const auto tr = sample_birth_death(N0, p, 0.01, rng);
    std::int64_t N = N0;
    double t = 0.0;
    for (const auto& ev : tr.events) {
      EXPECT_GT(ev.time, t);
      EXPECT_LE(ev.time, 0.01);
      EXPECT_GE(ev.N, 0);
      switch (ev.kind) {
        case QpEvent::kPairGeneration: EXPECT_EQ(ev.N, N + 2); break;
        case QpEvent::kSingleLoss: EXPECT_EQ(ev.N, N - 1); break;
        case QpEvent::kRecombination: EXPECT_EQ(ev.N, N - 2); break;
        case QpEvent::kInjection: ADD_FAILURE() << "no injections in a bare chain"; break;
      }
      N = ev.N;
      t = ev.time;
    }
  }
}

TEST(BirthDeath, Propensities) {
  const auto p = kinetics(3.2e-4, 8000, 1e10);
  const auto a = qp_propensities(3, p, 0.5);
  EXPECT_DOUBLE_EQ(a.pair_generation, 0.5 * 3.2e-4 * 3.75e7 / 2.0);
  EXPECT_DOUBLE_EQ(a.single_loss, 3 * 8000.0);
  EXPECT_DOUBLE_EQ(a.recombination, 1e10 * 3 * 2 / (2.0 * 3.75e7));
  EXPECT_EQ(qp_propensities(1, p).recombination, 0.0);
  EXPECT_EQ(apply_qp_event(3, QpEvent::kPairGeneration), 5);
  EXPECT_EQ(apply_qp_event(3, QpEvent::kSingleLoss), 2);
  EXPECT_EQ(apply_qp_event(3, QpEvent::kRecombination), 1);
}

TEST(BirthDeath, SameSeedSameTrace) {
  const auto p = kinetics(3.2e-4, 8000, 0);
  auto a = stream_rng(5, 0);
  auto b = stream_rng(5, 0);
  EXPECT_EQ(io::qp_trace_csv(sample_birth_death(2, p, 0.05, a)), io::qp_trace_csv(sample_birth_death(2, p, 0.05, b)));
}
