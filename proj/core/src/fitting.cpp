#include "qpjumps/fitting.h"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qpjumps/errors.h"
#include "qpjumps/jump_sim.h"
#include "qpjumps/optimize.h"
#include "qpjumps/parallel.h"
#include "qpjumps/rng.h"
#include "qpjumps/units.h"

namespace qpj {
namespace {

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// |X_k|^2 for k = 0..n/2 of the unnormalized forward DFT.
std::vector<double> spectrum_magnitude_sq(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<double> mag(static_cast<std::size_t>(n / 2 + 1));
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return mag;
}

// Inverse of the unnormalized forward DFT for a Hermitian half spectrum.
std::vector<double> inverse_real_dft(std::vector<std::complex<double>> half, std::size_t n) {
  std::vector<double> x(n);
  auto* in = reinterpret_cast<fftw_complex*>(half.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, x.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (double& v : x) v /= static_cast<double>(n);
  return x;
}

double mean_ignoring_nan(std::span<const double> v) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += x;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// y = c0 + c1 exp(-t / tau) with (c0, c1) eliminated by linear least squares.
struct ExponentialFit {
  double tau = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double rss = 0.0;
  bool identifiable = true;
};

struct LinearPart {
  double c0, c1, rss;
};

LinearPart solve_linear(std::span<const double> t, std::span<const double> y, std::span<const double> w,
                        double tau, double t_ref) {
  // Basis 1 and exp(-(t - t_ref) / tau) for conditioning, then rescaled to t = 0.
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double n = 0.0, s_e = 0.0, s_ee = 0.0, s_y = 0.0, s_ey = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double wi = weight(i);
    const double e = std::exp(-(t[i] - t_ref) / tau);
    n += wi;
    s_e += wi * e;
    s_ee += wi * e * e;
    s_y += wi * y[i];
    s_ey += wi * e * y[i];
  }
  const double det = n * s_ee - s_e * s_e;
  double a = 0.0, b = 0.0;
  if (std::abs(det) > 1e-14 * n * s_ee && s_ee > 0.0) {
    a = (s_ee * s_y - s_e * s_ey) / det;
    b = (n * s_ey - s_e * s_y) / det;
  } else {
    a = s_y / n;
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - a - b * std::exp(-(t[i] - t_ref) / tau);
    rss += weight(i) * r * r;
  }
  return {a, b * std::exp(t_ref / tau), rss};
}

ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y, std::span<const double> w) {
  const auto [t_min_it, t_max_it] = std::minmax_element(t.begin(), t.end());
  const double t_min = *t_min_it;
  const double span = *t_max_it - t_min;
  if (!(span > 0.0)) throw std::invalid_argument("exponential fit: times must not all coincide");
  if (!w.empty()) {
    if (w.size() != t.size()) throw std::invalid_argument("exponential fit: weight length mismatch");
    for (double wi : w) {
      if (!(wi > 0.0) || !std::isfinite(wi)) throw std::invalid_argument("exponential fit: weights must be positive");
    }
  }

  double w_sum = 0.0, wy_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    w_sum += wi;
    wy_sum += wi * y[i];
  }
  const double mean_y = wy_sum / w_sum;
  double rss_const = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) rss_const += (w.empty() ? 1.0 : w[i]) * (y[i] - mean_y) * (y[i] - mean_y);

  constexpr std::size_t kGrid = 96;
  const double ln_lo = std::log(span * 1e-4);
  const double ln_hi = std::log(span * 1e2);
  std::vector<double> grid(kGrid), rss(kGrid);
  std::size_t best = 0;
  for (std::size_t i = 0; i < kGrid; ++i) {
    grid[i] = ln_lo + (ln_hi - ln_lo) * static_cast<double>(i) / static_cast<double>(kGrid - 1);
    rss[i] = solve_linear(t, y, w, std::exp(grid[i]), t_min).rss;
    if (rss[i] < rss[best]) best = i;
  }

  ExponentialFit fit;
  double ln_tau = grid[best];
  if (best > 0 && best + 1 < kGrid) {
    auto objective = [&](double ln_t) { return solve_linear(t, y, w, std::exp(ln_t), t_min).rss; };
    std::uintmax_t iterations = 200;
    const auto [x, fx] = boost::math::tools::brent_find_minima(objective, grid[best - 1], grid[best + 1],
                                                               std::numeric_limits<double>::digits / 2, iterations);
    if (fx <= rss[best]) ln_tau = x;
  } else {
    fit.identifiable = false;
  }
  fit.tau = std::exp(ln_tau);
  const LinearPart lin = solve_linear(t, y, w, fit.tau, t_min);
  fit.c0 = lin.c0;
  fit.c1 = lin.c1;
  fit.rss = lin.rss;
  const double scale = std::max(std::abs(mean_y), std::numeric_limits<double>::min());
  if (rss_const <= 1e-24 * scale * scale * w_sum || rss_const - lin.rss <= 1e-10 * rss_const) {
    fit.identifiable = false;
  }
  return fit;
}

// Residual bootstrap around fitted values; returns per-parameter sample stddev.
// With weights, residuals are resampled on the standardized scale r sqrt(w).
template <typename Refit>
std::vector<double> residual_bootstrap(std::span<const double> fitted, std::span<const double> residuals,
                                       const FitOptions& options, std::size_t parameters, Refit refit,
                                       std::span<const double> weights = {}) {
  std::vector<double> pool(residuals.begin(), residuals.end());
  if (!weights.empty()) {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] *= std::sqrt(weights[i]);
  }
  std::vector<std::vector<double>> draws(options.bootstrap_samples);
  parallel_for(options.bootstrap_samples, options.workers, [&](std::size_t b) {
    std::mt19937_64 rng = stream_rng(options.bootstrap_seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> y(fitted.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = pool[pick(rng)];
      y[i] = fitted[i] + (weights.empty() ? r : r / std::sqrt(weights[i]));
    }
    try {
      draws[b] = refit(y);
    } catch (const std::exception&) {
      draws[b].clear();
    }
  });
  std::vector<double> se(parameters, 0.0);
  for (std::size_t p = 0; p < parameters; ++p) {
    std::vector<double> column;
    for (const auto& d : draws) {
      if (d.size() == parameters && std::isfinite(d[p])) column.push_back(d[p]);
    }
    se[p] = sample_stddev(column);
  }
  return se;
}

}  // namespace

Periodogram periodogram(std::span<const double> series, double dt, std::size_t segments) {
  if (!(dt > 0.0)) throw std::invalid_argument("periodogram: dt must be positive");
  segments = std::max<std::size_t>(segments, 1);
  const std::size_t seg_len = series.size() / segments;
  if (seg_len < 16) throw std::invalid_argument("periodogram: need at least 16 samples per segment");

  const double fill = mean_ignoring_nan(series);
  Periodogram p;
  p.segments = segments;
  p.df = 1.0 / (static_cast<double>(seg_len) * dt);
  const std::size_t half = seg_len / 2;
  p.freqs.resize(half + 1);
  p.power.assign(half + 1, 0.0);
  for (std::size_t k = 0; k <= half; ++k) p.freqs[k] = static_cast<double>(k) * p.df;

  for (std::size_t s = 0; s < segments; ++s) {
    std::vector<double> x(series.begin() + static_cast<std::ptrdiff_t>(s * seg_len),
                          series.begin() + static_cast<std::ptrdiff_t>((s + 1) * seg_len));
    for (double& v : x) {
      if (std::isnan(v)) v = fill;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(seg_len);
    double var = 0.0;
    for (double& v : x) {
      v -= mean;
      var += v * v;
    }
    p.variance += var / static_cast<double>(seg_len) / static_cast<double>(segments);
    const std::vector<double> mag = spectrum_magnitude_sq(x);
    const double norm = dt / static_cast<double>(seg_len) / static_cast<double>(segments);
    for (std::size_t k = 0; k <= half; ++k) {
      const bool unpaired = k == 0 || (seg_len % 2 == 0 && k == half);
      p.power[k] += (unpaired ? 1.0 : 2.0) * mag[k] * norm;
    }
  }
  return p;
}

double PsdModel::operator()(double f_hz) const {
  return A / (B + std::pow(units::kTwoPi * f_hz, alpha)) + C;
}

PsdFit fit_power_law(std::span<const double> freqs, std::span<const double> power, const PsdFitOptions& options) {
  if (freqs.size() != power.size()) throw std::invalid_argument("fit_power_law: length mismatch");
  std::vector<double> omega, log_p, f_used;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (freqs[i] > 0.0 && power[i] > 0.0 && std::isfinite(power[i])) {
      omega.push_back(units::kTwoPi * freqs[i]);
      log_p.push_back(std::log(power[i]));
      f_used.push_back(freqs[i]);
    }
  }
  if (omega.size() < 8) throw std::invalid_argument("fit_power_law: need at least 8 positive-frequency points");
  const auto [w_lo_it, w_hi_it] = std::minmax_element(omega.begin(), omega.end());
  if (std::log10(*w_hi_it / *w_lo_it) < 1.5 - 1e-12) {
    throw std::invalid_argument("fit_power_law: frequencies must span at least 1.5 decades");
  }
  if (options.averaged_segments > 0) {
    // E[ln of a mean of K unit exponentials] = digamma(K) - ln K.
    const double k = static_cast<double>(options.averaged_segments);
    const double bias = boost::math::digamma(k) - std::log(k);
    for (double& v : log_p) v -= bias;
  }

  constexpr double kAlphaLo = 0.5, kAlphaHi = 3.0;
  auto log_model = [&](std::span<const double> th, double w) {
    const double a = std::exp(th[0]), b = std::exp(th[1]), c = std::exp(th[3]);
    return std::log(a / (b + std::pow(w, th[2])) + c);
  };
  auto cost_of = [&](std::span<const double> th, std::span<const double> target) {
    if (th[2] < kAlphaLo || th[2] > kAlphaHi) return HUGE_VAL;
    for (std::size_t i : {0, 1, 3}) {
      if (std::abs(th[i]) > 700.0) return HUGE_VAL;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
      const double r = target[i] - log_model(th, omega[i]);
      s += r * r;
    }
    return s;
  };

  // Seed heuristics: white floor from the top decile, knee at the lowest frequency.
  std::vector<std::size_t> order(omega.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return omega[a] < omega[b]; });
  auto median_log = [&](std::size_t from, std::size_t to) {
    std::vector<double> v;
    for (std::size_t i = from; i < to; ++i) v.push_back(log_p[order[i]]);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const std::size_t n = omega.size();
  const std::size_t tail = std::max<std::size_t>(n / 10, 3);
  const double log_floor = median_log(n - tail, n);
  const double log_low = median_log(0, std::min<std::size_t>(5, n));
  const double w_low = omega[order[std::min<std::size_t>(2, n - 1)]];
  const double w_min = omega[order[0]];

  SimplexOptions simplex;
  simplex.initial_step = {1.0, 2.0, 0.1, 1.0};
  // An exact model spectrum drives the cost to rounding level; stop there.
  simplex.absolute_tolerance = 1e-24 * static_cast<double>(omega.size());

  auto fit_from = [&](std::span<const double> target, std::vector<double> start) {
    return nelder_mead([&](std::span<const double> th) { return cost_of(th, target); }, std::move(start), simplex);
  };

  SimplexResult best;
  best.value = HUGE_VAL;
  std::size_t evaluations = 0;
  for (int step = 0; step <= 10; ++step) {
    const double alpha = kAlphaLo + 0.25 * step;
    const double floor = std::exp(log_floor) * 0.5;
    const double b0 = std::pow(w_min, alpha);
    const double excess = std::max(std::exp(log_low) - floor, std::exp(log_low) * 1e-3);
    const double a0 = excess * (b0 + std::pow(w_low, alpha));
    SimplexResult r = fit_from(log_p, {std::log(a0), std::log(b0), alpha, std::log(floor)});
    evaluations += r.evaluations;
    if (r.value < best.value) best = std::move(r);
  }
  if (!best.converged) {
    throw FitError("fit_power_law: simplex did not converge within its evaluation budget", best.x, best.value);
  }

  PsdFit fit;
  fit.model = {std::exp(best.x[0]), std::exp(best.x[1]), best.x[2], std::exp(best.x[3])};
  fit.residual_norm = std::sqrt(best.value);
  fit.evaluations = evaluations;

  // Nested comparison against a flat floor, whose least-squares level in log
  // space is the mean log power.
  auto floor_fit = [&](const std::vector<double>& y, double& cost) {
    const double level = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    cost = 0.0;
    for (double v : y) cost += (v - level) * (v - level);
    return level;
  };
  auto floor_preferred = [&](double cost_floor, double cost_full) {
    if (n <= 4 || !(cost_full > 0.0)) return false;
    const double dof = static_cast<double>(n - 4);
    const double f_stat = ((cost_floor - cost_full) / 3.0) / (cost_full / dof);
    const boost::math::fisher_f dist(3.0, dof);
    return f_stat < boost::math::quantile(dist, 0.999);
  };
  double cost_floor = 0.0;
  const double log_level = floor_fit(log_p, cost_floor);
  if (floor_preferred(cost_floor, best.value)) {
    fit.power_law_significant = false;
    fit.model.A = 0.0;
    fit.model.C = std::exp(log_level);
    fit.residual_norm = std::sqrt(cost_floor);
    if (options.bootstrap_samples > 1) {
      std::vector<double> fitted(n, log_level), resid(n);
      for (std::size_t i = 0; i < n; ++i) resid[i] = log_p[i] - log_level;
      const std::vector<double> se = residual_bootstrap(fitted, resid, options, 1, [&](const std::vector<double>& y) {
        double unused = 0.0;
        return std::vector<double>{std::exp(floor_fit(y, unused))};
      });
      fit.standard_error = {0.0, 0.0, 0.0, se[0]};
    }
    return fit;
  }

  if (options.bootstrap_samples > 1) {
    std::vector<double> fitted(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      fitted[i] = log_model(best.x, omega[i]);
      resid[i] = log_p[i] - fitted[i];
    }
    const std::vector<double> se = residual_bootstrap(fitted, resid, options, 4, [&](const std::vector<double>& y) {
      SimplexResult r = fit_from(y, best.x);
      return std::vector<double>{std::exp(r.x[0]), std::exp(r.x[1]), r.x[2], std::exp(r.x[3])};
    });
    fit.standard_error = {se[0], se[1], se[2], se[3]};
  }
  return fit;
}

double density_from_lifetime(double tau_e, const QubitParams& qubit) {
  if (!(tau_e > 0.0)) throw std::domain_error("density_from_lifetime: lifetime must be positive");
  const double rate = 1.0 / (tau_e * qubit.readout_gamma_factor);
  if (rate < qubit.gamma_other) {
    throw std::domain_error("density_from_lifetime: decay rate below the background rate gamma_other");
  }
  return (rate - qubit.gamma_other) / qp_rate_coefficient(qubit);
}

double RecoveryFit::model(double t) const {
  if (!(tau_ss > 0.0)) return x_bar;
  return x_bar + (x0 - x_bar) * std::exp(-t / tau_ss);
}

RecoveryFit fit_recovery_density(std::span<const double> times, std::span<const double> x,
                                 const FitOptions& options, std::span<const double> weights) {
  if (times.size() != x.size()) throw std::invalid_argument("fit_recovery: length mismatch");
  if (times.size() < 5) throw std::invalid_argument("fit_recovery: need at least 5 time bins");
  const ExponentialFit e = fit_exponential(times, x, weights);
  RecoveryFit fit;
  fit.tau_ss = e.tau;
  fit.x_bar = e.c0;
  fit.x0 = e.c0 + e.c1;
  fit.residual_norm = std::sqrt(e.rss);
  fit.tau_identifiable = e.identifiable;
  fit.x.assign(x.begin(), x.end());

  if (options.bootstrap_samples > 1 && e.identifiable) {
    std::vector<double> fitted(times.size()), resid(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      fitted[i] = fit.model(times[i]);
      resid[i] = x[i] - fitted[i];
    }
    const auto se = residual_bootstrap(
        fitted, resid, options, 3,
        [&](const std::vector<double>& y) {
          const ExponentialFit b = fit_exponential(times, y, weights);
          return std::vector<double>{b.tau, b.c0, b.c0 + b.c1};
        },
        weights);
    fit.se_tau_ss = se[0];
    fit.se_x_bar = se[1];
    fit.se_x0 = se[2];
  }
  return fit;
}

RecoveryFit fit_recovery(std::span<const double> times, std::span<const double> tau_e, const QubitParams& qubit,
                         const FitOptions& options, std::span<const double> weights) {
  if (times.size() != tau_e.size()) throw std::invalid_argument("fit_recovery: length mismatch");
  std::vector<double> x(tau_e.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = density_from_lifetime(tau_e[i], qubit);
  return fit_recovery_density(times, x, options, weights);
}

double ThermalFit::model(double t) const {
  if (!(tau_th > 0.0)) return T_base;
  return T_base + delta_T * std::exp(-t / tau_th);
}

ThermalFit fit_thermal(std::span<const double> times, std::span<const double> temperatures, const FitOptions& options) {
  if (times.size() != temperatures.size()) throw std::invalid_argument("fit_thermal: length mismatch");
  if (times.size() < 4) throw std::invalid_argument("fit_thermal: need at least 4 points");
  const ExponentialFit e = fit_exponential(times, temperatures, {});
  ThermalFit fit;
  fit.T_base = e.c0;
  fit.delta_T = e.identifiable ? e.c1 : 0.0;
  fit.tau_th = e.tau;
  if (!e.identifiable) {
    fit.T_base = std::accumulate(temperatures.begin(), temperatures.end(), 0.0) / static_cast<double>(times.size());
  }
  fit.residual_norm = std::sqrt(e.rss);

  // Share of successive steps moving in the direction of the fitted relaxation.
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::size_t agree = 0, moves = 0;
  const double direction = fit.delta_T >= 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const double d = temperatures[order[i]] - temperatures[order[i - 1]];
    if (d == 0.0) continue;
    ++moves;
    if (d * direction > 0.0) ++agree;
  }
  fit.warning = moves > 0 && 2 * agree < moves;

  if (options.bootstrap_samples > 1 && e.identifiable) {
    std::vector<double> fitted(times.size()), resid(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      fitted[i] = fit.model(times[i]);
      resid[i] = temperatures[i] - fitted[i];
    }
    const auto se = residual_bootstrap(fitted, resid, options, 3, [&](const std::vector<double>& y) {
      const ExponentialFit b = fit_exponential(times, y, {});
      return std::vector<double>{b.c0, b.c1, b.tau};
    });
    fit.se_T_base = se[0];
    fit.se_delta_T = se[1];
    fit.se_tau_th = se[2];
  }
  return fit;
}

std::vector<double> synthesize_psd_series(const PsdModel& model, std::size_t n, double dt, std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("synthesize_psd_series: need at least 2 samples");
  std::normal_distribution<double> z(0.0, 1.0);
  const double df = 1.0 / (static_cast<double>(n) * dt);
  std::vector<std::complex<double>> half(n / 2 + 1);
  for (std::size_t k = 1; k < half.size(); ++k) {
    const double s = model(static_cast<double>(k) * df);
    if (n % 2 == 0 && k == n / 2) {
      half[k] = {std::sqrt(s * static_cast<double>(n) / dt) * z(rng), 0.0};
    } else {
      const double a = std::sqrt(s * static_cast<double>(n) / (4.0 * dt));
      const double re = a * z(rng);
      const double im = a * z(rng);
      half[k] = {re, im};
    }
  }
  return inverse_real_dft(std::move(half), n);
}

std::vector<double> synthesize_telegraph_series(std::size_t n, double dt, double switch_rate, double amplitude,
                                                double white_sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const double flip = 0.5 * (1.0 - std::exp(-2.0 * switch_rate * dt));
  double level = u(rng) < 0.5 ? amplitude : -amplitude;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && u(rng) < flip) level = -level;
    out[i] = level + white_sigma * z(rng);
  }
  return out;
}

}  // namespace qpj
