#pragma once

// Frequency-domain low-pass for uniformly sampled contrast traces.
//
// The series is detrended by a least-squares quintic, mirror-extended to an
// even periodic sequence of length 2N - 2, and every Fourier bin above the
// cutoff is zeroed. The trend is added back, so constants and slow polynomial
// drifts pass unchanged. The quintic keeps the slope kink at the mirror
// points small, which matters when only a few bins lie below the cutoff.

#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "acz/error.hpp"
#include "acz/signal_model.hpp"

namespace acz {

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline double uniform_step(const std::vector<double>& tau) {
  if (tau.size() < 3) throw DomainError("low-pass filter needs at least 3 samples");
  const double step = (tau.back() - tau.front()) / static_cast<double>(tau.size() - 1);
  if (!(step > 0.0)) throw DomainError("tau grid must be strictly increasing");
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (std::abs((tau[i] - tau[i - 1]) - step) > 1e-6 * step) throw DomainError("low-pass filter needs a uniform tau grid");
  return step;
}

inline constexpr int lowpass_trend_degree = 5;

// Least-squares polynomial on the sample index mapped to [-1, 1].
inline std::vector<double> polynomial_trend(const std::vector<double>& y, int degree) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const int deg = std::min<int>(degree, static_cast<int>(n) - 1);
  Eigen::MatrixXd a(n, deg + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    // Legendre recurrence keeps the columns well conditioned
    a(i, 0) = 1.0;
    if (deg >= 1) a(i, 1) = x;
    for (int k = 2; k <= deg; ++k) a(i, k) = ((2.0 * k - 1.0) * x * a(i, k - 1) - (k - 1.0) * a(i, k - 2)) / k;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd fit = a * a.colPivHouseholderQr().solve(b);
  return {fit.data(), fit.data() + n};
}

}  // namespace detail

/// Keeps frequency content below `cutoff` (MHz, i.e. cycles per us).
inline SignalTrace lowpass_filter(const SignalTrace& trace, double cutoff) {
  const double step = detail::uniform_step(trace.tau);
  const double nyquist = 0.5 / step;
  if (!(cutoff > 0.0)) throw DomainError("cutoff must be positive");
  if (cutoff >= nyquist) throw DomainError("cutoff must lie below the Nyquist frequency of the grid");

  const std::size_t n = trace.size();
  const std::vector<double>& y = trace.contrast;

  const std::vector<double> trend = detail::polynomial_trend(y, detail::lowpass_trend_degree);

  const std::size_t m = 2 * n - 2;
  std::vector<double> buf(m);
  for (std::size_t i = 0; i < n; ++i) buf[i] = y[i] - trend[i];
  for (std::size_t i = n; i < m; ++i) buf[i] = buf[m - i];

  const std::size_t bins = m / 2 + 1;
  std::vector<std::complex<double>> spec(bins);
  auto* spec_ptr = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan forward, backward;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.data(), spec_ptr, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec_ptr, buf.data(), FFTW_ESTIMATE);
  }
  fftw_execute(forward);
  const double df = 1.0 / (static_cast<double>(m) * step);
  for (std::size_t k = 0; k < bins; ++k)
    if (static_cast<double>(k) * df > cutoff) spec[k] = 0.0;
  fftw_execute(backward);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  SignalTrace out = trace;
  for (std::size_t i = 0; i < n; ++i) out.contrast[i] = buf[i] / static_cast<double>(m) + trend[i];
  char note[128];
  std::snprintf(note, sizeof note, "brick-wall cutoff=%.9g MHz, quintic detrend, mirror-padded", cutoff);
  out.meta["lowpass"] = note;
  return out;
}

}  // namespace acz
