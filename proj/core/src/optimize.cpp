#include "qpjumps/optimize.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qpj {
namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

bool spread_small(const std::vector<Vertex>& simplex, const SimplexOptions& o) {
  const double lo = simplex.front().f;
  const double hi = simplex.back().f;
  return hi - lo <= o.relative_tolerance * std::abs(lo) + o.absolute_tolerance;
}

// One Nelder-Mead run. Returns true on convergence; `best` is updated either way.
bool run_simplex(const Objective& f, const std::vector<double>& x0, const std::vector<double>& step,
                 const SimplexOptions& o, std::size_t& evaluations, Vertex& best) {
  const std::size_t n = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = f(x);
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({x0, eval(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = x0;
    x[i] += step[i];
    simplex.push_back({x, eval(x)});
  }
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  std::vector<double> centroid(n), trial(n), trial2(n);

  bool converged = false;
  while (evaluations < o.max_evaluations) {
    std::sort(simplex.begin(), simplex.end(), by_value);
    if (spread_small(simplex, o)) {
      converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    Vertex& worst = simplex.back();
    for (std::size_t i = 0; i < n; ++i) trial[i] = centroid[i] + (centroid[i] - worst.x[i]);
    const double f_reflect = eval(trial);

    if (f_reflect < simplex.front().f) {
      for (std::size_t i = 0; i < n; ++i) trial2[i] = centroid[i] + 2.0 * (centroid[i] - worst.x[i]);
      const double f_expand = eval(trial2);
      if (f_expand < f_reflect) {
        worst = {trial2, f_expand};
      } else {
        worst = {trial, f_reflect};
      }
      continue;
    }
    if (f_reflect < simplex[n - 1].f) {
      worst = {trial, f_reflect};
      continue;
    }
    const bool outside = f_reflect < worst.f;
    for (std::size_t i = 0; i < n; ++i) {
      trial2[i] = outside ? centroid[i] + 0.5 * (trial[i] - centroid[i]) : centroid[i] + 0.5 * (worst.x[i] - centroid[i]);
    }
    const double f_contract = eval(trial2);
    if (f_contract < std::min(f_reflect, worst.f)) {
      worst = {trial2, f_contract};
      continue;
    }
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
      simplex[v].f = eval(simplex[v].x);
    }
  }
  std::sort(simplex.begin(), simplex.end(), by_value);
  if (simplex.front().f < best.f) best = simplex.front();
  return converged;
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& options) {
  const std::size_t n = x0.size();
  std::vector<double> step = options.initial_step;
  if (step.size() != n) {
    step.resize(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = 0.1 * std::max(std::abs(x0[i]), 1.0);
  }
  std::size_t evaluations = 0;
  Vertex best{x0, HUGE_VAL};
  bool converged = run_simplex(f, x0, step, options, evaluations, best);
  for (std::size_t r = 0; converged && r < options.max_restarts; ++r) {
    const double before = best.f;
    converged = run_simplex(f, best.x, step, options, evaluations, best);
    if (before - best.f <= options.relative_tolerance * std::abs(best.f) + options.absolute_tolerance) break;
  }
  return SimplexResult{best.x, best.f, evaluations, converged};
}

}  // namespace qpj
