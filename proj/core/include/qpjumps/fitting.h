#pragma once

// Spectral and relaxation fits: the power-law spectrum A / (B + (2 pi f)^alpha) + C
// of slow lifetime fluctuations, exponential QP recovery after injection, and
// exponential thermal relaxation. Standard errors come from a seeded residual
// bootstrap.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qpjumps/params.h"

namespace qpj {

struct Periodogram {
  std::vector<double> freqs;  // Hz, DC first
  std::vector<double> power;  // one-sided density, units^2 / Hz
  double df = 0.0;
  double variance = 0.0;      // of the detrended input (segment average with Welch)
  std::size_t segments = 1;
};

// One-sided density periodogram of a uniformly sampled series after mean
// removal; NaN entries are replaced by the mean first. With segments > 1 the
// series is split into that many equal, non-overlapping pieces whose
// periodograms are averaged. sum(power) * df equals the variance. Throws
// std::invalid_argument when fewer than 16 samples per segment are available.
Periodogram periodogram(std::span<const double> series, double dt, std::size_t segments = 1);

struct PsdModel {
  double A = 0.0;
  double B = 0.0;
  double alpha = 2.0;
  double C = 0.0;

  double operator()(double f_hz) const;
};

struct PsdFit {
  PsdModel model;
  PsdModel standard_error;
  double residual_norm = 0.0;  // in natural-log power
  std::size_t evaluations = 0;
  // False when a flat floor explains the data as well (F-test at 0.1%); the
  // model is then A = 0 with C the geometric-mean level.
  bool power_law_significant = true;
};

struct FitOptions {
  std::size_t bootstrap_samples = 200;
  std::uint64_t bootstrap_seed = 20150301;
  unsigned workers = 1;
};

struct PsdFitOptions : FitOptions {
  // Segments averaged into each periodogram ordinate. 0 means the input is an
  // exact spectrum; otherwise the known bias of the log of an averaged
  // exponential variate is removed before fitting.
  std::size_t averaged_segments = 0;
};

// Least squares in log power over (ln A, ln B, alpha, ln C) with alpha held in
// [0.5, 3]. A simplex is started from each alpha in {0.5, 0.75, ..., 3}; the
// global best wins, unless a nested F-test finds the power-law term
// insignificant against a flat floor. Entries with f <= 0 are skipped. Requires >= 8 points over
// >= 1.5 decades (std::invalid_argument). Throws FitError if the winning start
// did not converge within its evaluation budget.
PsdFit fit_power_law(std::span<const double> freqs, std::span<const double> power, const PsdFitOptions& options = {});

// Relative QP density giving an excited-state lifetime tau_e by inverting the
// QP relaxation law. Throws std::domain_error when 1/tau_e is below the background.
double density_from_lifetime(double tau_e, const QubitParams& qubit);

struct RecoveryFit {
  double tau_ss = 0.0;
  double x_bar = 0.0;
  double x0 = 0.0;
  double se_tau_ss = 0.0;
  double se_x_bar = 0.0;
  double se_x0 = 0.0;
  double residual_norm = 0.0;
  bool tau_identifiable = true;  // false when the data carry no decay
  std::vector<double> x;         // densities the model was fitted to

  double g_eff() const { return x_bar / tau_ss; }
  double model(double t) const;
};

// Maps each tau_e(t) to x_qp(t) and fits x_bar + (x0 - x_bar) exp(-t / tau_ss).
// Needs >= 5 points with tau_e > 0. Optional positive `weights` (for example the
// decay count behind each tau_e) turn it into weighted least squares.
RecoveryFit fit_recovery(std::span<const double> times, std::span<const double> tau_e, const QubitParams& qubit,
                         const FitOptions& options = {}, std::span<const double> weights = {});

// Same fit applied directly to densities (no lifetime inversion).
RecoveryFit fit_recovery_density(std::span<const double> times, std::span<const double> x,
                                 const FitOptions& options = {}, std::span<const double> weights = {});

struct ThermalFit {
  double T_base = 0.0;
  double delta_T = 0.0;
  double tau_th = 0.0;
  double se_T_base = 0.0;
  double se_delta_T = 0.0;
  double se_tau_th = 0.0;
  double residual_norm = 0.0;
  bool warning = false;  // data are not predominantly monotone in the fitted direction

  double model(double t) const;
};

// T_base + delta_T exp(-t / tau_th). Needs >= 4 points.
ThermalFit fit_thermal(std::span<const double> times, std::span<const double> temperatures,
                       const FitOptions& options = {});

// Series whose expected periodogram is `model` (Gaussian Fourier amplitudes).
std::vector<double> synthesize_psd_series(const PsdModel& model, std::size_t n, double dt, std::mt19937_64& rng);

// Point samples of a symmetric random telegraph signal (+/- amplitude, Poisson
// switching at `switch_rate` per second) plus white Gaussian noise.
std::vector<double> synthesize_telegraph_series(std::size_t n, double dt, double switch_rate, double amplitude,
                                                double white_sigma, std::mt19937_64& rng);

}  // namespace qpj
