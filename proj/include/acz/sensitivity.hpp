#pragma once

// Amplitude sensitivity: Jacobian-based standard error, integration-time and
// pulse-count scaling fits, single-tau sensitivity and its optimum.
//
// eta is carried internally in mT*sqrt(s); multiply by 1e3 for uT/sqrt(Hz).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "acz/error.hpp"
#include "acz/estimation.hpp"
#include "acz/measurement.hpp"
#include "acz/signal_model.hpp"
#include "acz/spin_dynamics.hpp"
#include "acz/t2_scaling.hpp"

namespace acz {

inline constexpr double mt_sqrt_s_to_ut_per_sqrt_hz = 1e3;

namespace detail {

inline void require_sensing(const SignalModelParams& p) {
  validate(p);
  if (!(p.detuning > 0.0)) throw DomainError("sensitivity needs detuning > 0");
}

}  // namespace detail

/// dS_i/dB for the closed-form signal (approximate shift), per mT:
///   -gamma k pi (Omega / delta) tau sin(pi Omega^2 tau / delta) e^{-2 tau/T2} C,
/// k = rabi_factor. The sign is that of the true derivative; only J^2 enters
/// the standard error.
inline std::vector<double> jacobian_b(const std::vector<double>& tau, const SignalModelParams& p,
                                      const PhysicalConstants& k = {}) {
  detail::require_sensing(p);
  std::vector<double> j;
  j.reserve(tau.size());
  const double pre = k.gamma_e * k.rabi_factor * std::numbers::pi * p.rabi / p.detuning * p.contrast;
  const double a = std::numbers::pi * p.rabi * p.rabi / p.detuning;
  for (double t : tau) {
    detail::require_finite(t, "tau");
    j.push_back(-pre * t * std::sin(a * t) * decay_envelope(t, p.t2));
  }
  return j;
}

/// sigma_B = sqrt(sigma^2 / sum J_i^2).
inline double sigma_b(double residual_variance, const std::vector<double>& j) {
  if (!(residual_variance >= 0.0)) throw DomainError("residual variance must be non-negative");
  double s = 0.0;
  for (double v : j) s += v * v;
  if (!(s > 0.0)) throw SingularDesignError("Jacobian is zero at every sample; B is not identifiable");
  return std::sqrt(residual_variance / s);
}

// ---------------------------------------------------------------------------
// Scaling fits
// ---------------------------------------------------------------------------

struct SigmaSample {
  double time = 0.0;   ///< integration time T, s
  double sigma = 0.0;  ///< sigma_B, mT
};

struct EtaFit {
  double eta = 0.0;     ///< mT sqrt(s)
  double sigma0 = 0.0;  ///< mT
  double rms_residual = 0.0;
};

/// sigma_B(T) = eta T^{-1/2} + sigma0 with eta, sigma0 >= 0 (two-variable NNLS).
inline EtaFit fit_eta(const std::vector<SigmaSample>& s) {
  if (s.size() < 3) throw DomainError("fit_eta needs at least 3 samples");
  double tmin = INFINITY, tmax = 0.0;
  for (const auto& x : s) {
    if (!(x.time > 0.0) || !(x.sigma >= 0.0)) throw DomainError("samples need T > 0 and sigma >= 0");
    tmin = std::min(tmin, x.time);
    tmax = std::max(tmax, x.time);
  }
  if (tmax < 10.0 * tmin * (1.0 - 1e-12)) throw DomainError("samples must span at least one decade in T");
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0 / std::sqrt(s[static_cast<std::size_t>(i)].time);
    a(i, 1) = 1.0;
    b(i) = s[static_cast<std::size_t>(i)].sigma;
  }
  auto rms = [&](double e, double z) { return std::sqrt((a * Eigen::Vector2d{e, z} - b).squaredNorm() / n); };
  Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
  if (x(0) >= 0.0 && x(1) >= 0.0) return {x(0), x(1), rms(x(0), x(1))};
  // active-set fallback: one parameter at zero
  const double e_only = std::max(0.0, a.col(0).dot(b) / a.col(0).squaredNorm());
  const double z_only = std::max(0.0, b.mean());
  const double r1 = rms(e_only, 0.0), r2 = rms(0.0, z_only);
  return r1 <= r2 ? EtaFit{e_only, 0.0, r1} : EtaFit{0.0, z_only, r2};
}

struct PowerLaw {
  double prefactor = 0.0;
  double exponent = 0.0;
};

/// y = a x^b by linear regression in log-log space.
inline PowerLaw fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("power-law fit needs at least 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("power-law fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw DomainError("power-law fit needs at least two distinct abscissae");
  const double b = sxy / sxx;
  return {std::exp(my - b * mx), b};
}

/// eta = eta0 N^{-p}; returns p.
inline double fit_pulse_scaling(const std::vector<double>& n_pi, const std::vector<double>& eta) {
  if (n_pi.size() < 3) throw DomainError("pulse scaling needs at least 3 pulse counts");
  return -fit_power_law(n_pi, eta).exponent;
}

/// T2 = T2_ref (N / N_ref)^s; returns s.
inline double fit_t2_scaling(const std::vector<double>& n_pi, const std::vector<double>& t2) {
  return fit_power_law(n_pi, t2).exponent;
}

// ---------------------------------------------------------------------------
// Single-tau sensitivity and its optimum
// ---------------------------------------------------------------------------

struct EtaValue {
  double value = 0.0;     ///< mT sqrt(s); +inf when `infinite`
  bool infinite = false;  ///< no first-order signal at this tau
};

/// eta(tau) = sigma_s sqrt(2 tau + tau_read) / |J(tau)| with the readout
/// cycle in us, i.e. delta sigma_s sqrt(2 tau + tau_read) /
/// (gamma k pi Omega tau C |sin(pi Omega^2 tau/delta)| e^{-2 tau/T2}).
inline EtaValue eta_single(double tau, const SignalModelParams& p, const CameraModel& cam,
                           const PhysicalConstants& k = {}) {
  detail::require_sensing(p);
  validate(cam);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  const double j = std::abs(jacobian_b({tau}, p, k)[0]);
  if (!(j > 1e-300) || std::abs(std::sin(std::numbers::pi * p.rabi * p.rabi / p.detuning * tau)) < 1e-12)
    return {std::numeric_limits<double>::infinity(), true};
  const double eta_us = cam.sigma_s * std::sqrt(2.0 * tau + cam.tau_read) / j;  // mT sqrt(us)
  return {eta_us * 1e-3, false};
}

struct EtaBest {
  double eta = 0.0;  ///< mT sqrt(s)
  double tau_star = 0.0;
  bool infinite = false;
};

/// Minimum of eta_single over a log grid on [tau_min, tau_max], polished by
/// golden-section search inside the winning bracket. Ties go to smaller tau.
inline EtaBest eta_best(const SignalModelParams& p, const CameraModel& cam, const PhysicalConstants& k = {},
                        double tau_min = 0.01, double tau_max = 100.0, int grid = 400) {
  detail::require_sensing(p);
  if (!(tau_min > 0.0 && tau_max > tau_min)) throw DomainError("invalid tau range");
  if (grid < 100) throw DomainError("eta_best grid needs at least 100 points");
  if (p.rabi == 0.0) return {std::numeric_limits<double>::infinity(), tau_min, true};
  std::vector<double> t(static_cast<std::size_t>(grid)), e(t.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = tau_min * std::pow(tau_max / tau_min, static_cast<double>(i) / (grid - 1));
    e[i] = eta_single(t[i], p, cam, k).value;
    if (e[i] < e[best]) best = i;
  }
  if (!std::isfinite(e[best])) throw DomainError("eta_single is infinite on the whole grid");
  double a = t[best > 0 ? best - 1 : 0], b = t[std::min(best + 1, t.size() - 1)];
  auto f = [&](double x) { return eta_single(x, p, cam, k).value; };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * b; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  EtaBest r{e[best], t[best], false};
  const double xm = 0.5 * (a + b), fm = f(xm);
  if (fm < r.eta) r = {fm, xm, false};
  return r;
}

/// sigma_s that makes eta_best equal `target` (mT sqrt(s)); eta is linear in sigma_s.
inline double sigma_s_for_eta_best(double target, const SignalModelParams& p, CameraModel cam,
                                   const PhysicalConstants& k = {}, double tau_min = 0.01, double tau_max = 100.0) {
  if (!(target > 0.0)) throw DomainError("target sensitivity must be positive");
  cam.sigma_s = 1.0;
  const auto b = eta_best(p, cam, k, tau_min, tau_max);
  if (b.infinite) throw DomainError("no signal: cannot calibrate sigma_s");
  return target / b.eta;
}

// ---------------------------------------------------------------------------
// sigma_B(T) pipeline
// ---------------------------------------------------------------------------

enum class VarianceSource {
  /// sigma^2(T) from the residuals of the fit at that T
  per_dataset,
  /// sigma^2 from the longest run, scaled as T_ref / T
  reference_scaled,
};

struct PipelineOptions {
  std::vector<double> times{1, 3, 10, 30, 100};  ///< integration times, s
  int trials = 1;                                ///< noisy datasets averaged per T
  VarianceSource variance = VarianceSource::reference_scaled;
  FitOptions fit{};
  std::uint64_t stream = 0;
};

struct PipelineResult {
  std::vector<SigmaSample> samples;
  EtaFit eta;
  double sum_j2 = 0.0;
};

/// Noisy datasets at each integration time -> fits -> residual variance ->
/// sigma_B(T) -> eta. `clean` is the noiseless trace on the sensing grid and
/// the Jacobian is evaluated at `p`.
inline PipelineResult sigma_b_pipeline(const SignalTrace& clean, const SignalModelParams& p, const CameraModel& cam,
                                       const PipelineOptions& o, const PhysicalConstants& k = {}) {
  if (o.times.empty() || o.trials < 1) throw DomainError("pipeline needs integration times and trials >= 1");
  const auto j = jacobian_b(clean.tau, p, k);
  PipelineResult out;
  for (double v : j) out.sum_j2 += v * v;
  std::vector<double> var(o.times.size(), 0.0);
  for (std::size_t ti = 0; ti < o.times.size(); ++ti) {
    double acc = 0.0;
    for (int tr = 0; tr < o.trials; ++tr) {
      const std::uint64_t stream = o.stream * 1000003ULL + ti * 7919ULL + static_cast<std::uint64_t>(tr);
      const auto noisy = synth_noisy_trace(clean, cam, o.times[ti], stream);
      acc += fit_acz_trace(noisy, o.fit).residual_variance;
    }
    var[ti] = acc / o.trials;
  }
  if (o.variance == VarianceSource::reference_scaled) {
    const auto ref = std::max_element(o.times.begin(), o.times.end()) - o.times.begin();
    const double t_ref = o.times[static_cast<std::size_t>(ref)], v_ref = var[static_cast<std::size_t>(ref)];
    for (std::size_t ti = 0; ti < o.times.size(); ++ti) var[ti] = v_ref * t_ref / o.times[ti];
  }
  for (std::size_t ti = 0; ti < o.times.size(); ++ti) out.samples.push_back({o.times[ti], sigma_b(var[ti], j)});
  out.eta = fit_eta(out.samples);
  return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct SensitivityReport {
  std::vector<SigmaSample> sigma_b_samples;
  double eta = 0.0;     ///< mT sqrt(s)
  double sigma0 = 0.0;  ///< mT
  std::optional<double> p;
  std::optional<double> s_t2;
  double eta_best = 0.0;  ///< mT sqrt(s)
  double tau_star = 0.0;  ///< us
  std::vector<std::pair<int, double>> eta_by_pulses;          ///< (N_pi, eta mT sqrt(s))
  std::vector<std::pair<double, double>> eta_best_by_detuning;  ///< (delta MHz, eta mT sqrt(s))
  std::map<std::string, std::string> assumptions;
};

/// key = value lines; tables as indexed keys.
inline std::string to_key_value(const SensitivityReport& r) {
  std::ostringstream os;
  os.precision(9);
  os << "eta_ut_per_sqrt_hz = " << r.eta * mt_sqrt_s_to_ut_per_sqrt_hz << '\n';
  os << "sigma0_mt = " << r.sigma0 << '\n';
  if (r.p) os << "p = " << *r.p << '\n';
  if (r.s_t2) os << "s_t2 = " << *r.s_t2 << '\n';
  os << "eta_best_ut_per_sqrt_hz = " << r.eta_best * mt_sqrt_s_to_ut_per_sqrt_hz << '\n';
  os << "tau_star_us = " << r.tau_star << '\n';
  for (std::size_t i = 0; i < r.sigma_b_samples.size(); ++i)
    os << "sigma_b[" << i << "] = " << r.sigma_b_samples[i].time << " s, " << r.sigma_b_samples[i].sigma << " mT\n";
  for (const auto& [n, e] : r.eta_by_pulses)
    os << "eta_by_pulses[" << n << "] = " << e * mt_sqrt_s_to_ut_per_sqrt_hz << '\n';
  for (std::size_t i = 0; i < r.eta_best_by_detuning.size(); ++i)
    os << "eta_best_by_detuning[" << i << "] = " << r.eta_best_by_detuning[i].first << " MHz, "
       << r.eta_best_by_detuning[i].second * mt_sqrt_s_to_ut_per_sqrt_hz << '\n';
  for (const auto& [key, v] : r.assumptions) os << "assumption." << key << " = " << v << '\n';
  return os.str();
}

}  // namespace acz
