#pragma once

// Fitting contrast traces to the damped-cosine signal model and turning the
// fitted frequencies into microwave amplitudes, spectra and maps.
//
// Model, parameters p = (f, T2, C, offset):
//   S(tau) = offset - C/2 + C/2 cos(2 pi f tau) exp(-k tau / T2)
// with k = 2 for AC Zeeman echo traces and k = 1 for Rabi traces. With
// offset = 1 this is the closed-form signal exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acz/error.hpp"
#include "acz/least_squares.hpp"
#include "acz/measurement.hpp"
#include "acz/parallel.hpp"
#include "acz/signal_model.hpp"
#include "acz/spin_dynamics.hpp"

namespace acz {

enum FitParam { fit_frequency = 0, fit_t2 = 1, fit_contrast = 2, fit_offset = 3 };

struct FitOptions {
  double decay_factor = 2.0;
  std::optional<double> fixed_t2;
  std::optional<double> fixed_contrast;
  /// Inverse-variance weights when the trace carries sigma.
  bool use_weights = true;
  /// Upper end of the frequency scan; default half the median sampling rate.
  std::optional<double> max_frequency;
  /// Number of scan candidates polished by Levenberg-Marquardt.
  int starts = 4;
  LsqOptions lsq{};
};

struct FitResult {
  Eigen::Vector4d params = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  ///< zero rows/cols for fixed parameters
  std::array<bool, 4> free{true, true, true, true};
  double residual_variance = 0.0;  ///< sum r^2 / (N - p) on unweighted residuals
  double reduced_chi2 = 0.0;       ///< weighted; equals residual_variance when unweighted
  bool weighted = false;
  bool converged = false;
  int iterations = 0;
  std::size_t points = 0;
  std::string message;

  double frequency() const { return params(fit_frequency); }
  double t2() const { return params(fit_t2); }
  double contrast() const { return params(fit_contrast); }
  double offset() const { return params(fit_offset); }
  double error(int k) const { return std::sqrt(std::max(covariance(k, k), 0.0)); }
  double frequency_error() const { return error(fit_frequency); }
};

inline double damped_cosine(double tau, const Eigen::Vector4d& p, double k) {
  const double e = std::exp(-k * tau / p(fit_t2));
  return p(fit_offset) - 0.5 * p(fit_contrast) + 0.5 * p(fit_contrast) * std::cos(two_pi * p(fit_frequency) * tau) * e;
}

/// d S / d p at tau.
inline Eigen::Vector4d damped_cosine_gradient(double tau, const Eigen::Vector4d& p, double k) {
  const double t2 = p(fit_t2), c = p(fit_contrast);
  const double e = std::exp(-k * tau / t2);
  const double arg = two_pi * p(fit_frequency) * tau;
  const double co = std::cos(arg), si = std::sin(arg);
  Eigen::Vector4d g;
  g(fit_frequency) = -0.5 * c * si * two_pi * tau * e;
  g(fit_t2) = 0.5 * c * co * e * k * tau / (t2 * t2);
  g(fit_contrast) = 0.5 * (co * e - 1.0);
  g(fit_offset) = 1.0;
  return g;
}

namespace detail {

struct ScanCandidate {
  double f, t2, contrast, offset, sse;
};

inline double median_step(const std::vector<double>& tau) {
  std::vector<double> d;
  for (std::size_t i = 1; i < tau.size(); ++i) d.push_back(tau[i] - tau[i - 1]);
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

// Periodogram-style scan over (f, T2). For each pair the model is linear in
// (offset - C/2, C/2), so those are solved in closed form (weighted) and the
// best distinct frequencies are kept. Works on non-uniform grids.
inline std::vector<ScanCandidate> profile_scan(const std::vector<double>& tau, const std::vector<double>& y,
                                               const std::vector<double>& w, const FitOptions& o, int keep) {
  const double span = tau.back() - tau.front();
  const double fmax = o.max_frequency.value_or(0.5 / median_step(tau));
  const double df = 1.0 / (8.0 * span);
  const int nf = std::clamp(static_cast<int>(std::ceil(fmax / df)), 8, 20000);
  std::vector<double> t2s;
  if (o.fixed_t2)
    t2s = {*o.fixed_t2};
  else
    for (int i = 0; i < 9; ++i) t2s.push_back(span * std::pow(10.0, -1.3 + 0.4 * i));

  std::vector<ScanCandidate> best;  // best per frequency index
  best.reserve(static_cast<std::size_t>(nf) + 1);
  const std::size_t n = tau.size();
  std::vector<double> u(n);
  for (int j = 0; j <= nf; ++j) {
    const double f = fmax * j / nf;
    ScanCandidate bc{f, 0.0, 0.0, 0.0, INFINITY};
    for (double t2 : t2s) {
      double sw = 0, su = 0, suu = 0, sy = 0, suy = 0;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = std::cos(two_pi * f * tau[i]) * std::exp(-o.decay_factor * tau[i] / t2);
        sw += w[i];
        su += w[i] * u[i];
        suu += w[i] * u[i] * u[i];
        sy += w[i] * y[i];
        suy += w[i] * u[i] * y[i];
      }
      double a, b;
      if (o.fixed_contrast) {
        b = 0.5 * *o.fixed_contrast;
        a = (sy - b * su) / sw;
      } else {
        const double det = sw * suu - su * su;
        if (!(det > 1e-14 * sw * suu)) continue;
        b = (sw * suy - su * sy) / det;
        a = (sy - b * su) / sw;
        if (!(b > 0.0)) continue;
      }
      double sse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - a - b * u[i];
        sse += w[i] * r * r;
      }
      if (sse < bc.sse) bc = {f, t2, 2.0 * b, a + b, sse};
    }
    best.push_back(bc);
  }
  // local minima of the scan, deepest first
  std::vector<ScanCandidate> mins;
  for (std::size_t j = 0; j < best.size(); ++j) {
    const double l = j > 0 ? best[j - 1].sse : INFINITY;
    const double r = j + 1 < best.size() ? best[j + 1].sse : INFINITY;
    if (std::isfinite(best[j].sse) && best[j].sse <= l && best[j].sse <= r) mins.push_back(best[j]);
  }
  std::sort(mins.begin(), mins.end(), [](const auto& a, const auto& b) { return a.sse < b.sse; });
  if (static_cast<int>(mins.size()) > keep) mins.resize(static_cast<std::size_t>(keep));
  return mins;
}

}  // namespace detail

/// Fits a contrast trace to the damped-cosine model.
inline FitResult fit_acz_trace(const SignalTrace& trace, const FitOptions& o = {}) {
  check_grid(trace.tau);
  if (trace.tau.size() < 5) throw DomainError("fit needs at least 5 points");
  if (trace.contrast.size() != trace.tau.size()) throw DomainError("trace columns differ in length");
  if (!(trace.tau.back() > trace.tau.front())) throw DomainError("degenerate tau grid");
  if (o.fixed_t2 && !(*o.fixed_t2 > 0.0)) throw DomainError("fixed T2 must be positive");
  if (o.fixed_contrast && !(*o.fixed_contrast > 0.0)) throw DomainError("fixed contrast must be positive");

  const std::size_t n = trace.size();
  const bool weighted = o.use_weights && trace.sigma.size() == n && trace.has_sigma();
  std::vector<double> w(n, 1.0);
  if (weighted)
    for (std::size_t i = 0; i < n; ++i) {
      if (!(trace.sigma[i] > 0.0)) throw DomainError("weighted fit needs sigma > 0 at every point");
      w[i] = 1.0 / (trace.sigma[i] * trace.sigma[i]);
    }

  FitResult out;
  out.points = n;
  out.weighted = weighted;
  out.free = {true, !o.fixed_t2.has_value(), !o.fixed_contrast.has_value(), true};
  std::vector<int> idx;
  for (int k = 0; k < 4; ++k)
    if (out.free[static_cast<std::size_t>(k)]) idx.push_back(k);
  const auto np = static_cast<Eigen::Index>(idx.size());
  if (static_cast<Eigen::Index>(n) <= np) throw DomainError("fit needs more points than free parameters");

  const double span = trace.tau.back() - trace.tau.front();
  const double fmax = o.max_frequency.value_or(0.5 / detail::median_step(trace.tau));
  Eigen::Vector4d lo{0.0, 1e-3 * span, 0.0, 0.0};
  Eigen::Vector4d hi{2.0 * fmax, 1e4 * span, 1.0, 2.0};

  auto full = [&](const Eigen::VectorXd& x, Eigen::Vector4d base) {
    for (Eigen::Index j = 0; j < np; ++j) base(idx[static_cast<std::size_t>(j)]) = x(j);
    return base;
  };
  Eigen::Vector4d fixed{0.0, o.fixed_t2.value_or(1.0), o.fixed_contrast.value_or(0.05), 1.0};
  Eigen::VectorXd sw(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) sw(static_cast<Eigen::Index>(i)) = std::sqrt(w[i]);

  ResidualFn resid = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector4d p = full(x, fixed);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      r(ii) = sw(ii) * (damped_cosine(trace.tau[i], p, o.decay_factor) - trace.contrast[i]);
    }
    return r;
  };
  JacobianFn jac = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector4d p = full(x, fixed);
    Eigen::MatrixXd j(static_cast<Eigen::Index>(n), np);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector4d g = damped_cosine_gradient(trace.tau[i], p, o.decay_factor);
      for (Eigen::Index c = 0; c < np; ++c)
        j(static_cast<Eigen::Index>(i), c) = sw(static_cast<Eigen::Index>(i)) * g(idx[static_cast<std::size_t>(c)]);
    }
    return j;
  };
  Eigen::VectorXd xlo(np), xhi(np);
  for (Eigen::Index j = 0; j < np; ++j) {
    xlo(j) = lo(idx[static_cast<std::size_t>(j)]);
    xhi(j) = hi(idx[static_cast<std::size_t>(j)]);
  }

  const auto cands = detail::profile_scan(trace.tau, trace.contrast, w, o, std::max(o.starts, 1));
  if (cands.empty()) {
    out.message = "no admissible starting point";
    return out;
  }
  LsqResult best;
  best.cost = INFINITY;
  for (const auto& c : cands) {
    Eigen::Vector4d p0{c.f, c.t2, c.contrast, c.offset};
    Eigen::VectorXd x0(np);
    for (Eigen::Index j = 0; j < np; ++j) x0(j) = p0(idx[static_cast<std::size_t>(j)]);
    LsqResult r = levenberg_marquardt(resid, jac, x0, xlo, xhi, o.lsq);
    if (r.cost < best.cost) best = std::move(r);
  }

  out.params = full(best.x, fixed);
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.message = best.message;
  double raw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = damped_cosine(trace.tau[i], out.params, o.decay_factor) - trace.contrast[i];
    raw += r * r;
  }
  const double dof = static_cast<double>(n) - static_cast<double>(np);
  out.residual_variance = raw / dof;
  out.reduced_chi2 = weighted ? best.cost / dof : out.residual_variance;

  const Eigen::MatrixXd jtj = best.jacobian.transpose() * best.jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) {
    out.covariance.setConstant(NAN);
    out.converged = false;
    out.message = "singular normal matrix";
    return out;
  }
  Eigen::MatrixXd cov = lu.inverse();
  if (!weighted) cov *= out.residual_variance;
  for (Eigen::Index a = 0; a < np; ++a)
    for (Eigen::Index b = 0; b < np; ++b)
      out.covariance(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) = cov(a, b);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

/// Rabi traces: same model with single-exponential decay.
inline FitResult fit_rabi_trace(const SignalTrace& trace, FitOptions o = {}) {
  o.decay_factor = 1.0;
  return fit_acz_trace(trace, o);
}

// ---------------------------------------------------------------------------
// Amplitude inversion
// ---------------------------------------------------------------------------

struct AmplitudeEstimate {
  double rabi = 0.0;         ///< MHz
  double field = 0.0;        ///< mT
  double field_error = 0.0;  ///< mT, first-order propagation
};

/// Inverts the AC Zeeman shift. approx: Omega = sqrt(2 delta f);
/// exact: Omega = sqrt(f^2 + 2 f delta). f_error propagates linearly.
inline AmplitudeEstimate amplitude_from_shift(double f_acz, double detuning, const PhysicalConstants& k = {},
                                              ShiftMode mode = ShiftMode::approx, double f_error = 0.0) {
  detail::require_finite(f_acz, "f_acz");
  detail::require_finite(detuning, "detuning");
  if (f_acz < 0.0) throw DomainError("AC Zeeman shift must be non-negative");
  if (!(detuning > 0.0)) throw DomainError("detuning must be positive");
  if (!(f_error >= 0.0)) throw DomainError("frequency error must be non-negative");
  AmplitudeEstimate a;
  a.rabi = mode == ShiftMode::approx ? std::sqrt(2.0 * detuning * f_acz)
                                     : std::sqrt(f_acz * f_acz + 2.0 * f_acz * detuning);
  a.field = field_from_rabi(a.rabi, k);
  if (f_acz > 0.0) {
    // dOmega/df: delta/Omega (approx), (f + delta)/Omega (exact)
    const double d_rabi = (mode == ShiftMode::approx ? detuning : f_acz + detuning) / a.rabi;
    a.field_error = field_from_rabi(d_rabi * f_error, k);
  } else {
    a.field_error = field_from_rabi(std::sqrt(2.0 * detuning * f_error), k);
  }
  return a;
}

struct ResponsePoint {
  double f_mw = 0.0;
  double detuning = 0.0;
  double f_acz = 0.0;
  double f_acz_error = 0.0;
  double field = 0.0;
  double field_error = 0.0;
  bool ok = false;
  std::string message;
};

/// Fits every trace and converts to amplitude with detuning = f_nv - f_mw.
/// Failures are recorded per point.
inline std::vector<ResponsePoint> frequency_response(const std::vector<SignalTrace>& traces, const std::vector<double>& f_mw,
                                                     double f_nv, const FitOptions& o = {},
                                                     ShiftMode mode = ShiftMode::approx,
                                                     const PhysicalConstants& k = {}, unsigned threads = 0) {
  if (traces.size() != f_mw.size()) throw DomainError("one drive frequency per trace required");
  std::vector<ResponsePoint> out(traces.size());
  parallel_for(
      traces.size(),
      [&](std::size_t i) {
        ResponsePoint& r = out[i];
        r.f_mw = f_mw[i];
        r.detuning = f_nv - f_mw[i];
        try {
          if (!(r.detuning > 0.0)) throw DomainError("drive frequency above resonance");
          const FitResult fit = fit_acz_trace(traces[i], o);
          r.f_acz = fit.frequency();
          r.f_acz_error = fit.frequency_error();
          const auto a = amplitude_from_shift(r.f_acz, r.detuning, k, mode, r.f_acz_error);
          r.field = a.field;
          r.field_error = a.field_error;
          r.ok = fit.converged && std::isfinite(r.field_error);
          r.message = fit.message;
        } catch (const std::exception& e) {
          r.ok = false;
          r.message = e.what();
        }
      },
      threads);
  return out;
}

// ---------------------------------------------------------------------------
// Maps
// ---------------------------------------------------------------------------

namespace detail {

template <class ToField>
FieldMap fit_map(const std::vector<SignalTrace>& traces, int width, int height, double pixel_size, const FitOptions& o,
                 ToField&& to_field, unsigned threads) {
  if (width < 1 || height < 1) throw DomainError("map needs positive dimensions");
  if (traces.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw DomainError("one trace per pixel required");
  for (const auto& t : traces)
    if (t.tau != traces.front().tau) throw DomainError("pixel traces must share a tau grid");
  FieldMap m;
  m.width = width;
  m.height = height;
  m.pixel_size = pixel_size;
  m.values.assign(traces.size(), 0.0);
  m.mask.assign(traces.size(), 0);
  parallel_for(
      traces.size(),
      [&](std::size_t i) {
        try {
          const FitResult fit = fit_acz_trace(traces[i], o);
          if (!fit.converged || !(fit.frequency() > 0.0)) return;
          const double v = to_field(fit.frequency());
          if (std::isfinite(v)) {
            m.values[i] = v;
            m.mask[i] = 1;
          }
        } catch (const std::exception&) {
        }
      },
      threads);
  if (std::none_of(m.mask.begin(), m.mask.end(), [](auto v) { return v != 0; }))
    throw DatasetError("every pixel fit failed");
  return m;
}

}  // namespace detail

/// Per-pixel AC Zeeman fits converted to amplitude; failed pixels masked.
inline FieldMap fit_acz_map(const std::vector<SignalTrace>& traces, int width, int height, double detuning,
                            const FitOptions& o = {}, ShiftMode mode = ShiftMode::approx,
                            const PhysicalConstants& k = {}, double pixel_size = 1.0, unsigned threads = 0) {
  return detail::fit_map(
      traces, width, height, pixel_size, o,
      [&](double f) { return amplitude_from_shift(f, detuning, k, mode).field; }, threads);
}

/// Per-pixel Rabi fits; the fitted frequency is the resonant Rabi frequency.
inline FieldMap fit_rabi_map(const std::vector<SignalTrace>& traces, int width, int height, FitOptions o = {},
                             const PhysicalConstants& k = {}, double pixel_size = 1.0, unsigned threads = 0) {
  o.decay_factor = 1.0;
  return detail::fit_map(
      traces, width, height, pixel_size, o, [&](double f) { return field_from_rabi(f, k); }, threads);
}

}  // namespace acz
