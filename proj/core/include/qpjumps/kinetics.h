#pragma once

// Relative quasiparticle density dynamics, dx/dt = g - s x - r x^2, and its
// discrete stochastic counterpart on the QP count N = x N_cp.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "qpjumps/params.h"

namespace qpj {

// Non-negative root of g - s x - r x^2 = 0. Throws std::domain_error when
// g > 0 and s = r = 0 (density grows without bound).
double steady_state(const QpKineticsParams& params);

// Linear relaxation time about x_bar: 1 / (s + 2 r x_bar).
double tau_ss(const QpKineticsParams& params, double x_bar);

// Fixed-step RK4 solution sampled at t_grid, with x(t_grid[0]) = x0. The step
// never exceeds 1/100 of the fastest local relaxation time.
std::vector<double> evolve_ode(double x0, const QpKineticsParams& params, std::span<const double> t_grid);

// x_bar + (x0 - x_bar) exp(-t / tau).
double linearized(double x0, double x_bar, double tau, double t);

enum class QpEvent : std::uint8_t { kPairGeneration, kSingleLoss, kRecombination, kInjection };

std::string_view to_string(QpEvent event);

struct QpEventRecord {
  double time;
  QpEvent kind;
  std::int64_t N;  // count after the event
};

struct QpEventTrace {
  std::int64_t initial_N = 0;
  double duration = 0.0;
  std::vector<QpEventRecord> events;
};

// Per-reaction rates for the discrete chain. Pair generation adds 2 QPs,
// single loss removes 1, recombination removes 2. `g_scale` multiplies g.
struct QpPropensities {
  double pair_generation = 0.0;
  double single_loss = 0.0;
  double recombination = 0.0;

  double total() const { return pair_generation + single_loss + recombination; }
};

QpPropensities qp_propensities(std::int64_t N, const QpKineticsParams& params, double g_scale = 1.0);

// Applies one reaction (not injection) to N.
std::int64_t apply_qp_event(std::int64_t N, QpEvent kind);

// Draws which reaction fires given the propensities and a uniform u in [0, 1).
QpEvent choose_qp_event(const QpPropensities& a, double u);

// Exact stochastic simulation of the QP count on [0, duration].
QpEventTrace sample_birth_death(std::int64_t N0, const QpKineticsParams& params, double duration,
                                std::mt19937_64& rng);

}  // namespace qpj
