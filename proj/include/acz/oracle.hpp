#pragma once

// Brute-force integrators used to validate the closed-form propagator.
// Not used on any production path.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

#include "acz/spin_dynamics.hpp"

namespace acz {

struct OracleOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// Upper bound on the step; unset means the controller decides.
  std::optional<double> max_step;
};

namespace detail {

// (Re c+, Im c+, Re c-, Im c-)
using RealState = std::array<double, 4>;

inline RealState to_real(const SpinState& s) {
  return {s.c_plus.real(), s.c_plus.imag(), s.c_minus.real(), s.c_minus.imag()};
}

inline SpinState from_real(const RealState& x) {
  return {cplx{x[0], x[1]}, cplx{x[2], x[3]}};
}

// d psi/dt = -i pi M(t) psi for a Hermitian 2x2 M with real diagonal (d, -d)
// and off-diagonal m01 = conj(m10).
inline void hermitian_rhs(double d, cplx m01, const RealState& x, RealState& dxdt) {
  const cplx cp{x[0], x[1]};
  const cplx cm{x[2], x[3]};
  const cplx k{0.0, -std::numbers::pi};
  const cplx dp = k * (d * cp + m01 * cm);
  const cplx dm = k * (std::conj(m01) * cp - d * cm);
  dxdt = {dp.real(), dp.imag(), dm.real(), dm.imag()};
}

template <class System>
SpinState integrate_oracle(System&& rhs, const SpinState& initial, double duration,
                           const OracleOptions& opt, double natural_step) {
  namespace odeint = boost::numeric::odeint;
  if (!(opt.rel_tol > 1e-12 && opt.rel_tol <= 1e-6))
    throw DomainError("oracle tolerance must lie in (1e-12, 1e-6]");
  if (duration < 0.0) throw DomainError("duration must be non-negative");
  RealState x = to_real(initial);
  if (duration == 0.0) return initial;

  using Stepper = odeint::runge_kutta_dopri5<RealState>;
  const double max_dt = opt.max_step.value_or(duration);
  auto controlled = odeint::make_controlled(opt.abs_tol, opt.rel_tol, max_dt, Stepper{});
  const double dt0 = std::min(natural_step, max_dt);
  try {
    odeint::integrate_adaptive(controlled, rhs, x, 0.0, duration, dt0);
  } catch (const std::exception& e) {
    throw ConvergenceError(std::string("oracle integration failed: ") + e.what());
  }
  for (double v : x)
    if (!std::isfinite(v)) throw ConvergenceError("oracle integration diverged");
  return from_real(x);
}

}  // namespace detail

/// Numerically integrates the constant rotating-frame (RWA) Hamiltonian.
inline SpinState rwa_frame_oracle(const SpinState& initial, const DriveParams& drive,
                                  double duration, const OracleOptions& opt = {}) {
  detail::require_finite(drive);
  const cplx m01 = drive.rabi * std::polar(1.0, -drive.phase);
  auto rhs = [&](const detail::RealState& x, detail::RealState& dxdt, double) {
    detail::hermitian_rhs(drive.detuning, m01, x, dxdt);
  };
  const double w = std::max(std::hypot(drive.detuning, drive.rabi), 1e-3);
  return detail::integrate_oracle(rhs, initial, duration, opt, 0.01 / w);
}

struct LabFrameDrive {
  double resonance = 0.0;        ///< f0 = f_NV, MHz
  double rabi = 0.0;             ///< rotating-frame Rabi frequency; lab coupling is 2*rabi*cos(...)
  double drive_frequency = 0.0;  ///< f_mw, MHz
  double phase = 0.0;            ///< rad
};

/// Integrates the lab-frame Schrodinger equation with a cosine drive (no RWA)
/// and returns the state transformed into the frame rotating at the drive
/// frequency, directly comparable with propagate_segment using
/// detuning = resonance - drive_frequency. The step is bounded by
/// 1/(50 f_mw) unless opt.max_step says otherwise.
inline SpinState lab_frame_oracle(const SpinState& initial, const LabFrameDrive& d,
                                  double duration, OracleOptions opt = {}) {
  detail::require_finite(d.resonance, "resonance");
  detail::require_finite(d.rabi, "rabi");
  detail::require_finite(d.drive_frequency, "drive_frequency");
  detail::require_finite(d.phase, "phase");
  if (d.drive_frequency <= 0.0) throw DomainError("drive frequency must be positive");
  if (!opt.max_step) opt.max_step = 1.0 / (50.0 * d.drive_frequency);

  auto rhs = [&](const detail::RealState& x, detail::RealState& dxdt, double t) {
    const double coupling = 2.0 * d.rabi * std::cos(two_pi * d.drive_frequency * t + d.phase);
    detail::hermitian_rhs(d.resonance, cplx{coupling, 0.0}, x, dxdt);
  };
  const SpinState lab = detail::integrate_oracle(rhs, initial, duration, opt, *opt.max_step);
  // psi_rot = exp(i 2 pi f_mw S_z t) psi_lab
  const double half = std::numbers::pi * d.drive_frequency * duration;
  return {lab.c_plus * std::polar(1.0, half), lab.c_minus * std::polar(1.0, -half)};
}

}  // namespace acz
