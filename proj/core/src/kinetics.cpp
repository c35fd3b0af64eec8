#include "qpjumps/kinetics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpj {

double steady_state(const QpKineticsParams& params) {
  const double g = params.g;
  const double s = params.s;
  const double r = params.r;
  if (g == 0.0) return 0.0;
  if (s == 0.0 && r == 0.0) throw std::domain_error("steady_state: s = r = 0 with g > 0 has no steady state");
  if (r == 0.0) return g / s;
  // Rationalized root, free of cancellation when 4 r g << s^2.
  return 2.0 * g / (s + std::sqrt(s * s + 4.0 * r * g));
}

double tau_ss(const QpKineticsParams& params, double x_bar) {
  const double rate = params.s + 2.0 * params.r * x_bar;
  if (!(rate > 0.0)) throw std::domain_error("tau_ss: s + 2 r x_bar = 0, relaxation time is infinite");
  return 1.0 / rate;
}

std::vector<double> evolve_ode(double x0, const QpKineticsParams& params, std::span<const double> t_grid) {
  if (x0 < 0.0) throw std::domain_error("evolve_ode: negative initial density");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("evolve_ode: time grid must be increasing");
  }
  std::vector<double> out;
  out.reserve(t_grid.size());
  if (t_grid.empty()) return out;

  const double g = params.g, s = params.s, r = params.r;
  auto rhs = [g, s, r](double x) { return g - s * x - r * x * x; };

  double x_bar = 0.0;
  if (g == 0.0 || s > 0.0 || r > 0.0) x_bar = steady_state(params);
  const double fastest = s + 2.0 * r * std::max(x0, x_bar);
  const double h_max = fastest > 0.0 ? 0.01 / fastest : 0.0;

  double x = x0;
  out.push_back(x);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double span = t_grid[i] - t_grid[i - 1];
    const auto steps = h_max > 0.0 ? static_cast<std::int64_t>(std::ceil(span / h_max)) : std::int64_t{1};
    const double h = span / static_cast<double>(steps);
    for (std::int64_t k = 0; k < steps; ++k) {
      const double k1 = rhs(x);
      const double k2 = rhs(x + 0.5 * h * k1);
      const double k3 = rhs(x + 0.5 * h * k2);
      const double k4 = rhs(x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.push_back(x);
  }
  return out;
}

double linearized(double x0, double x_bar, double tau, double t) {
  if (!(tau > 0.0)) throw std::domain_error("linearized: tau must be positive");
  return x_bar + (x0 - x_bar) * std::exp(-t / tau);
}

std::string_view to_string(QpEvent event) {
  switch (event) {
    case QpEvent::kPairGeneration: return "pair_generation";
    case QpEvent::kSingleLoss: return "single_loss";
    case QpEvent::kRecombination: return "recombination";
    case QpEvent::kInjection: return "injection";
  }
  return "unknown";
}

QpPropensities qp_propensities(std::int64_t N, const QpKineticsParams& params, double g_scale) {
  const double n = static_cast<double>(N);
  QpPropensities a;
  a.pair_generation = 0.5 * g_scale * params.g * params.N_cp;
  a.single_loss = params.s * n;
  a.recombination = N >= 2 ? params.r * n * (n - 1.0) / (2.0 * params.N_cp) : 0.0;
  return a;
}

std::int64_t apply_qp_event(std::int64_t N, QpEvent kind) {
  switch (kind) {
    case QpEvent::kPairGeneration: return N + 2;
    case QpEvent::kSingleLoss: return N - 1;
    case QpEvent::kRecombination: return N - 2;
    case QpEvent::kInjection: break;
  }
  throw std::invalid_argument("apply_qp_event: injection carries its own count");
}

QpEvent choose_qp_event(const QpPropensities& a, double u) {
  const double target = u * a.total();
  if (target < a.pair_generation) return QpEvent::kPairGeneration;
  if (target < a.pair_generation + a.single_loss || a.recombination == 0.0) return QpEvent::kSingleLoss;
  return QpEvent::kRecombination;
}

QpEventTrace sample_birth_death(std::int64_t N0, const QpKineticsParams& params, double duration,
                                std::mt19937_64& rng) {
  if (N0 < 0) throw std::domain_error("sample_birth_death: negative initial count");
  QpEventTrace trace;
  trace.initial_N = N0;
  trace.duration = duration;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> exponential(1.0);

  double t = 0.0;
  std::int64_t N = N0;
  while (true) {
    const QpPropensities a = qp_propensities(N, params);
    const double total = a.total();
    if (total <= 0.0) break;
    t += exponential(rng) / total;
    if (t > duration) break;
    const QpEvent kind = choose_qp_event(a, uniform(rng));
    N = apply_qp_event(N, kind);
    trace.events.push_back({t, kind, N});
  }
  return trace;
}

}  // namespace qpj
