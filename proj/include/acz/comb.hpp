#pragma once

// Dressed-state comb modulation under XY8^n: predicted dip positions, dip
// detection on a residual trace, and the residual's dominant frequency.

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "acz/error.hpp"
#include "acz/lowpass.hpp"
#include "acz/signal_model.hpp"

namespace acz {

enum class CombRule {
  /// interval * W = m + 1/2
  half_integer,
  /// interval * W = m + 1/2 +- 1/8 (XY8 phase pattern, window signs + - - +)
  xy8_pattern,
};

/// tau period of the comb for XY8^n: the interval tau/(4n) advances by 1/W.
inline double comb_period(int n, double detuning, double rabi) {
  if (n < 1) throw DomainError("XY8 repetition count must be >= 1");
  const double w = std::hypot(detuning, rabi);
  if (!(w > 0.0)) throw DomainError("comb period needs a non-zero drive");
  return 4.0 * n / w;
}

/// Predicted dip positions (us) in [tau_min, tau_max], sorted.
inline std::vector<double> predicted_comb_dips(int n, double detuning, double rabi, double tau_min, double tau_max,
                                               CombRule rule = CombRule::half_integer) {
  const double period = comb_period(n, detuning, rabi);
  std::vector<double> offsets;
  if (rule == CombRule::half_integer)
    offsets = {0.5};
  else
    offsets = {0.375, 0.625};
  std::vector<double> out;
  for (int m = 0; m * period <= tau_max; ++m)
    for (double o : offsets) {
      const double t = (m + o) * period;
      if (t >= tau_min && t <= tau_max) out.push_back(t);
    }
  std::sort(out.begin(), out.end());
  return out;
}

/// Local minima of `residual` deeper than `fraction` times the deepest one.
inline std::vector<double> find_dips(const std::vector<double>& tau, const std::vector<double>& residual,
                                     double fraction = 0.25) {
  if (tau.size() != residual.size()) throw DomainError("tau and residual lengths differ");
  if (tau.size() < 3) return {};
  const double deepest = *std::min_element(residual.begin(), residual.end());
  if (!(deepest < 0.0)) return {};
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < tau.size(); ++i)
    if (residual[i] < residual[i - 1] && residual[i] <= residual[i + 1] && residual[i] < fraction * deepest)
      out.push_back(tau[i]);
  return out;
}

/// Local minima whose prominence within +-`window` (us) is at least `fraction`
/// of the most prominent one. Suppresses shallow wiggles on a sloped residual.
inline std::vector<double> find_prominent_dips(const std::vector<double>& tau, const std::vector<double>& residual,
                                               double window, double fraction = 0.3) {
  if (tau.size() != residual.size()) throw DomainError("tau and residual lengths differ");
  if (!(window > 0.0)) throw DomainError("dip window must be positive");
  const std::size_t n = tau.size();
  if (n < 3) return {};
  std::vector<std::pair<double, double>> cand;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(residual[i] < residual[i - 1] && residual[i] <= residual[i + 1])) continue;
    double left = residual[i], right = residual[i];
    for (std::size_t j = i; j-- > 0 && tau[i] - tau[j] <= window;) left = std::max(left, residual[j]);
    for (std::size_t j = i + 1; j < n && tau[j] - tau[i] <= window; ++j) right = std::max(right, residual[j]);
    cand.emplace_back(tau[i], std::min(left, right) - residual[i]);
  }
  double top = 0.0;
  for (const auto& c : cand) top = std::max(top, c.second);
  std::vector<double> out;
  if (!(top > 0.0)) return out;
  for (const auto& c : cand)
    if (c.second >= fraction * top) out.push_back(c.first);
  return out;
}

struct DipMatch {
  std::size_t found = 0;
  std::size_t matched = 0;
  double worst_distance = 0.0;  ///< us, over found dips
};

/// Distance from each found dip to the nearest prediction.
inline DipMatch match_dips(const std::vector<double>& found, const std::vector<double>& predicted,
                           double tolerance) {
  DipMatch m;
  m.found = found.size();
  for (double f : found) {
    double best = INFINITY;
    for (double p : predicted) best = std::min(best, std::abs(f - p));
    m.worst_distance = std::max(m.worst_distance, best);
    if (best <= tolerance) ++m.matched;
  }
  return m;
}

/// Frequency (MHz) of the strongest non-DC bin of a uniformly sampled series.
inline double dominant_frequency(const std::vector<double>& tau, const std::vector<double>& y) {
  const double step = detail::uniform_step(tau);
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = y[i] - mean;
  std::vector<std::complex<double>> spec(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::size_t best = 1;
  for (std::size_t k = 2; k < spec.size(); ++k)
    if (std::norm(spec[k]) > std::norm(spec[best])) best = k;
  return static_cast<double>(best) / (static_cast<double>(n) * step);
}

}  // namespace acz
