#pragma once

// Rotating-frame dynamics of a driven two-level system.
//
// Units throughout: frequencies in MHz, times in us, fields in mT. Every
// accumulated phase is 2*pi*f*t with f in MHz and t in us.
//
// The state is written in the S_z eigenbasis {|+>, |->}. In a frame rotating
// at the drive frequency the (RWA) Hamiltonian in frequency units is
//
//   H = 1/2 [[ delta,              rabi e^{-i phase} ],
//            [ rabi e^{i phase},  -delta            ]]
//
// and d psi/dt = -2 pi i H psi.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "acz/error.hpp"

namespace acz {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct SpinState {
  cplx c_plus{0.0, 0.0};
  cplx c_minus{1.0, 0.0};

  static SpinState plus() { return {cplx{1.0, 0.0}, cplx{0.0, 0.0}}; }
  static SpinState minus() { return {cplx{0.0, 0.0}, cplx{1.0, 0.0}}; }

  double norm() const { return std::sqrt(std::norm(c_plus) + std::norm(c_minus)); }
  double population_plus() const { return std::norm(c_plus); }
  double population_minus() const { return std::norm(c_minus); }
};

struct DriveParams {
  double detuning = 0.0;  ///< f_NV - f_mw, MHz (signed)
  double rabi = 0.0;      ///< Omega >= 0, MHz
  double phase = 0.0;     ///< rad
};

struct PhysicalConstants {
  double gamma_e = 28.02495;  ///< MHz/mT (electron gyromagnetic ratio / 2 pi)
  double rabi_factor = 1.0 / std::numbers::sqrt2;

  /// NV m_s = 0 / -1 effective two-level system: Omega = gamma B / sqrt(2).
  static PhysicalConstants nv() { return {}; }
  /// True spin-1/2: Omega = gamma B / 2.
  static PhysicalConstants two_level() { return {28.02495, 0.5}; }
};

/// 2x2 operator acting on SpinState. Used for both propagators and ideal
/// rotations; composition follows matrix product order (a * b applies b first).
struct SpinOperator {
  cplx m00{1.0, 0.0};
  cplx m01{0.0, 0.0};
  cplx m10{0.0, 0.0};
  cplx m11{1.0, 0.0};

  static SpinOperator identity() { return {}; }

  SpinState apply(const SpinState& s) const {
    return {m00 * s.c_plus + m01 * s.c_minus, m10 * s.c_plus + m11 * s.c_minus};
  }

  friend SpinOperator operator*(const SpinOperator& a, const SpinOperator& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
};

namespace detail {

inline void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite parameter: ") + name);
}

inline void require_finite(const DriveParams& d) {
  require_finite(d.detuning, "detuning");
  require_finite(d.rabi, "rabi");
  require_finite(d.phase, "phase");
  if (d.rabi < 0.0) throw DomainError("rabi frequency must be non-negative");
}

}  // namespace detail

/// Exact rotating-frame propagator for a constant drive held for `duration`.
///
/// Generalized Rabi rotation at W = sqrt(delta^2 + rabi^2) about the axis
/// (sin t cos phase, sin t sin phase, cos t) with cos t = delta/W.
inline SpinOperator propagator(const DriveParams& drive, double duration) {
  detail::require_finite(drive);
  detail::require_finite(duration, "duration");
  if (duration < 0.0) throw DomainError("duration must be non-negative");

  const double w = std::hypot(drive.detuning, drive.rabi);
  if (w == 0.0 || duration == 0.0) return SpinOperator::identity();

  const double cos_t = drive.detuning / w;
  const double sin_t = drive.rabi / w;
  const double arg = std::numbers::pi * w * duration;
  const double c = std::cos(arg);
  const double s = std::sin(arg);
  const cplx i{0.0, 1.0};
  const cplx e_minus = std::polar(1.0, -drive.phase);
  const cplx e_plus = std::polar(1.0, drive.phase);

  return {cplx{c, -cos_t * s}, -i * sin_t * e_minus * s, -i * sin_t * e_plus * s,
          cplx{c, cos_t * s}};
}

inline SpinState propagate_segment(const SpinState& state, const DriveParams& drive,
                                   double duration) {
  return propagator(drive, duration).apply(state);
}

/// Instantaneous resonant rotation by `angle` about the in-plane axis at `phase`.
inline SpinOperator rotation(double angle, double phase) {
  detail::require_finite(angle, "angle");
  detail::require_finite(phase, "phase");
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  const cplx i{0.0, 1.0};
  return {cplx{c, 0.0}, -i * s * std::polar(1.0, -phase), -i * s * std::polar(1.0, phase),
          cplx{c, 0.0}};
}

/// diag(e^{-i a/2}, e^{+i a/2}): relative phase a accumulated by |-> over |+>.
inline SpinOperator z_phase(double angle) {
  return {std::polar(1.0, -0.5 * angle), cplx{}, cplx{}, std::polar(1.0, 0.5 * angle)};
}

struct DressedEnergies {
  double plus;
  double minus;
};

/// Eigenenergies of the rotating-frame Hamiltonian, reported as frequencies (MHz).
inline DressedEnergies dressed_energies(double detuning, double rabi) {
  detail::require_finite(detuning, "detuning");
  detail::require_finite(rabi, "rabi");
  const double half = 0.5 * std::hypot(detuning, rabi);
  return {half, -half};
}

enum class ShiftMode { exact, approx };

struct AczShift {
  double value = 0.0;            ///< MHz
  bool outside_validity = false; ///< approx mode used with detuning < k * rabi
};

inline constexpr double default_approx_guard = 5.0;

/// AC Zeeman shift. Exact: sqrt(delta^2 + rabi^2) - delta. Approx: rabi^2 / (2 delta).
inline AczShift ac_zeeman_shift(double detuning, double rabi, ShiftMode mode,
                                double guard = default_approx_guard) {
  detail::require_finite(detuning, "detuning");
  detail::require_finite(rabi, "rabi");
  if (rabi < 0.0) throw DomainError("rabi frequency must be non-negative");

  if (mode == ShiftMode::exact) {
    // Rationalized form avoids cancellation when detuning >> rabi.
    if (detuning > 0.0) return {rabi * rabi / (std::hypot(detuning, rabi) + detuning), false};
    return {std::hypot(detuning, rabi) - detuning, false};
  }

  if (!(detuning > 0.0)) throw DomainError("approximate AC Zeeman shift needs detuning > 0");
  return {rabi * rabi / (2.0 * detuning), detuning < guard * rabi};
}

inline double rabi_from_field(double field_mt, const PhysicalConstants& k = {}) {
  detail::require_finite(field_mt, "field");
  if (field_mt < 0.0) throw DomainError("microwave field amplitude must be non-negative");
  return k.gamma_e * k.rabi_factor * field_mt;
}

inline double field_from_rabi(double rabi, const PhysicalConstants& k = {}) {
  detail::require_finite(rabi, "rabi");
  if (rabi < 0.0) throw DomainError("rabi frequency must be non-negative");
  return rabi / (k.gamma_e * k.rabi_factor);
}

}  // namespace acz
