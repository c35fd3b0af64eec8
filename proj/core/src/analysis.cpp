#include "qpjumps/analysis.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qpjumps/parallel.h"

namespace qpj {

StateEstimate two_point_filter(const IQRecord& iq, double separation) {
  if (!(separation > 1.0)) throw std::invalid_argument("two_point_filter: separation must exceed 1 sigma");
  StateEstimate est;
  est.T_m = iq.T_m;
  est.separation = separation;
  est.to_excited_below = -separation + 0.5;
  est.to_ground_above = separation - 0.5;
  est.states.resize(iq.size(), QubitState::kGround);
  est.valid.resize(iq.size(), 0);

  bool have_state = false;
  QubitState current = QubitState::kGround;
  for (std::size_t k = 0; k < iq.size(); ++k) {
    const double v = iq.I[k];
    if (std::isnan(v)) {
      have_state = false;
      est.states[k] = current;
      continue;
    }
    est.valid[k] = 1;
    if (!have_state) {
      current = v >= 0.0 ? QubitState::kGround : QubitState::kExcited;
      have_state = true;
    } else if (current == QubitState::kGround && v < est.to_excited_below) {
      current = QubitState::kExcited;
    } else if (current == QubitState::kExcited && v > est.to_ground_above) {
      current = QubitState::kGround;
    }
    est.states[k] = current;
  }
  return est;
}

std::vector<double> DwellSet::durations(QubitState s) const {
  const auto& k = of(s);
  std::vector<double> out(k.size());
  std::transform(k.begin(), k.end(), out.begin(), [this](std::int64_t n) { return static_cast<double>(n) * T_m; });
  return out;
}

DwellSet extract_dwells(const StateEstimate& est, std::size_t begin, std::size_t end) {
  end = std::min(end, est.size());
  DwellSet out;
  out.T_m = est.T_m;
  std::size_t k = begin;
  while (k < end) {
    // One stretch of consecutive valid samples.
    while (k < end && !est.valid[k]) ++k;
    const std::size_t seg_begin = k;
    while (k < end && est.valid[k]) ++k;
    const std::size_t seg_end = k;
    if (seg_end == seg_begin) continue;

    struct Run {
      QubitState state;
      std::int64_t length;
    };
    std::vector<Run> runs;
    for (std::size_t i = seg_begin; i < seg_end; ++i) {
      if (runs.empty() || runs.back().state != est.states[i]) {
        runs.push_back({est.states[i], 1});
      } else {
        ++runs.back().length;
      }
    }
    for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
      (runs[r].state == QubitState::kGround ? out.ground : out.excited).push_back(runs[r].length);
    }
  }
  return out;
}

double DwellHistogram::center(std::size_t i) const { return std::sqrt(edges[i] * edges[i + 1]); }

DwellHistogram log_histogram(std::span<const std::int64_t> dwell_samples, double T_m, double bins_per_decade,
                             double lo, double hi, QubitState state) {
  if (!(T_m > 0.0 && bins_per_decade > 0.0 && lo > 0.0 && hi > lo)) {
    throw std::invalid_argument("log_histogram: need T_m > 0, bins_per_decade > 0 and 0 < lo < hi");
  }
  DwellHistogram h;
  h.state = state;
  h.bins_per_decade = bins_per_decade;
  const double decades = std::log10(hi / lo);
  const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil(decades * bins_per_decade - 1e-9)));
  h.edges.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i) {
    h.edges[i] = lo * std::pow(10.0, static_cast<double>(i) / bins_per_decade);
  }
  h.counts.assign(nbins, 0.0);

  double sum_tau = 0.0;
  double sum_weighted = 0.0;
  for (const std::int64_t k : dwell_samples) {
    if (k <= 0) throw std::invalid_argument("log_histogram: dwell lengths must be positive");
    const double tau = static_cast<double>(k) * T_m;
    const double pos = std::log10(tau / lo) * bins_per_decade;
    const auto idx = static_cast<std::size_t>(std::clamp(std::floor(pos + 1e-9), 0.0, static_cast<double>(nbins - 1)));
    h.counts[idx] += static_cast<double>(k);
    h.total += static_cast<double>(k);
    sum_tau += tau;
    sum_weighted += tau * static_cast<double>(k);
  }
  h.dwell_count = dwell_samples.size();
  if (h.dwell_count > 0) {
    h.mean_dwell = sum_tau / static_cast<double>(h.dwell_count);
    h.mean_dwell_sample_weighted = sum_weighted / h.total;
  }
  return h;
}

std::vector<double> poisson_prediction(const DwellHistogram& hist) {
  if (!(hist.mean_dwell > 0.0 && hist.total > 0.0)) {
    throw std::domain_error("poisson_prediction: histogram has no dwells");
  }
  const double tau_bar = hist.mean_dwell;
  const double scale = hist.total * hist.log_bin_width() / tau_bar * std::numbers::ln10;
  std::vector<double> p(hist.bins());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double tau = hist.center(i);
    p[i] = scale * tau * (tau / tau_bar) * std::exp(-tau / tau_bar);
  }
  return p;
}

FidelityReport fidelity(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size()) throw std::invalid_argument("fidelity: length mismatch");
  double overlap = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (measured[i] < 0.0 || predicted[i] < 0.0) throw std::domain_error("fidelity: negative count");
    overlap += std::sqrt(measured[i] * predicted[i]);
    total += measured[i];
  }
  if (!(total > 0.0)) throw std::domain_error("fidelity: measured histogram is empty");
  FidelityReport r;
  r.F = overlap / total;
  r.one_minus_F = 1.0 - r.F;
  r.predicted.assign(predicted.begin(), predicted.end());
  return r;
}

Polarization polarization(const StateEstimate& est, std::size_t begin, std::size_t end) {
  end = std::min(end, est.size());
  std::size_t valid = 0;
  std::size_t excited = 0;
  for (std::size_t k = begin; k < end; ++k) {
    if (!est.valid[k]) continue;
    ++valid;
    if (est.states[k] == QubitState::kExcited) ++excited;
  }
  if (valid == 0) throw std::domain_error("polarization: no valid samples");
  Polarization p;
  p.p_excited = static_cast<double>(excited) / static_cast<double>(valid);
  p.sigma_z = 1.0 - 2.0 * p.p_excited;
  return p;
}

double cross_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cross_correlation: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("cross_correlation: need at least two points");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  if (var_a == 0.0 || var_b == 0.0) throw std::domain_error("cross_correlation: constant series");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

std::vector<WindowStats> per_second_report(const StateEstimate& est, double window, const ReportOptions& options) {
  if (!(window >= 100.0 * est.T_m * (1.0 - 1e-12))) {
    throw std::invalid_argument("per_second_report: window must hold at least 100 samples");
  }
  const auto per_window = static_cast<std::size_t>(std::llround(window / est.T_m));
  const std::size_t windows = est.size() / per_window;
  std::vector<WindowStats> out(windows);

  parallel_for(windows, options.workers, [&](std::size_t w) {
    const std::size_t begin = w * per_window;
    const std::size_t end = begin + per_window;
    WindowStats& ws = out[w];
    ws.t_start = static_cast<double>(begin) * est.T_m;

    const DwellSet dwells = extract_dwells(est, begin, end);
    ws.ground_dwells = dwells.ground.size();
    ws.excited_dwells = dwells.excited.size();
    const double lo = est.T_m;
    const double hi = static_cast<double>(per_window) * est.T_m;
    if (!dwells.ground.empty()) {
      DwellHistogram hg = log_histogram(dwells.ground, est.T_m, options.bins_per_decade, lo, hi, QubitState::kGround);
      ws.tau_g = hg.mean_dwell;
      if (dwells.ground.size() >= options.min_dwells_for_fidelity) {
        const FidelityReport f = fidelity(hg.counts, poisson_prediction(hg));
        ws.F_g = f.F;
        ws.one_minus_F_g = f.one_minus_F;
      }
      if (options.keep_histograms) ws.hist_g = std::move(hg);
    }
    if (!dwells.excited.empty()) {
      DwellHistogram he = log_histogram(dwells.excited, est.T_m, options.bins_per_decade, lo, hi, QubitState::kExcited);
      ws.tau_e = he.mean_dwell;
      if (options.keep_histograms) ws.hist_e = std::move(he);
    }
    const bool any_valid = std::any_of(est.valid.begin() + static_cast<std::ptrdiff_t>(begin),
                                       est.valid.begin() + static_cast<std::ptrdiff_t>(end),
                                       [](std::uint8_t v) { return v != 0; });
    if (any_valid) ws.sigma_z = polarization(est, begin, end).sigma_z;
  });
  return out;
}

double PostPulseBin::t_center() const { return std::sqrt(t_lo * t_hi); }

std::vector<double> log_spaced_edges(double lo, double hi, std::size_t bins) {
  if (!(lo > 0.0 && hi > lo && bins > 0)) throw std::invalid_argument("log_spaced_edges: need 0 < lo < hi, bins > 0");
  std::vector<double> edges(bins + 1);
  const double step = std::log10(hi / lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo * std::pow(10.0, step * static_cast<double>(i));
  edges.back() = hi;
  return edges;
}

std::vector<PostPulseBin> post_pulse_profile(const StateEstimate& est, std::span<const double> injection_times,
                                             std::span<const double> bin_edges) {
  if (bin_edges.size() < 2) throw std::invalid_argument("post_pulse_profile: need at least one bin");
  std::vector<PostPulseBin> bins(bin_edges.size() - 1);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].t_lo = bin_edges[i];
    bins[i].t_hi = bin_edges[i + 1];
  }
  auto bin_of = [&](double t) -> std::ptrdiff_t {
    if (t < bin_edges.front() || t >= bin_edges.back()) return -1;
    const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), t);
    return std::distance(bin_edges.begin(), it) - 1;
  };

  std::size_t pulse = 0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (!est.valid[k]) continue;
    const double t_start = static_cast<double>(k) * est.T_m;
    while (pulse + 1 < injection_times.size() && injection_times[pulse + 1] <= t_start) ++pulse;
    if (injection_times.empty() || injection_times[pulse] > t_start) continue;
    const double since = t_start - injection_times[pulse];

    const std::ptrdiff_t b = bin_of(since + 0.5 * est.T_m);
    if (b >= 0) {
      bins[b].observed_time += est.T_m;
      if (est.states[k] == QubitState::kExcited) bins[b].excited_time += est.T_m;
    }
    // A decay is counted at the boundary between two valid samples, in the bin
    // that holds the last excited sample so that time and decays share a bin.
    if (k > 0 && est.valid[k - 1] && est.states[k - 1] == QubitState::kExcited &&
        est.states[k] == QubitState::kGround) {
      const std::ptrdiff_t jb = bin_of(since - 0.5 * est.T_m);
      if (jb >= 0) ++bins[jb].decays;
    }
  }
  for (auto& bin : bins) {
    if (bin.decays > 0) bin.tau_e = bin.excited_time / static_cast<double>(bin.decays);
    if (bin.observed_time > 0.0) bin.p_excited = bin.excited_time / bin.observed_time;
  }
  return bins;
}

}  // namespace qpj
