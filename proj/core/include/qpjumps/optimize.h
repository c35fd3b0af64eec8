#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qpj {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
  std::vector<double> initial_step;  // per coordinate; empty means 0.1 * max(|x|, 1)
  std::size_t max_evaluations = 40000;
  double relative_tolerance = 1e-13;  // on the spread of objective values over the simplex
  double absolute_tolerance = 1e-30;
  std::size_t max_restarts = 6;       // fresh simplex around the best point after convergence
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Nelder-Mead downhill simplex (standard reflection/expansion/contraction/shrink
// coefficients), restarted from the incumbent until a restart stops improving.
SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& options = {});

}  // namespace qpj
