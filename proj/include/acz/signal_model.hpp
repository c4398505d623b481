#pragma once

// Contrast-vs-tau signals: the closed form used for fitting, and a full
// phase-averaged simulation through the exact segment propagators.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acz/error.hpp"
#include "acz/parallel.hpp"
#include "acz/pulse_sequences.hpp"
#include "acz/spin_dynamics.hpp"
#include "acz/t2_scaling.hpp"

namespace acz {

struct SignalModelParams {
  double rabi = 7.76;       ///< signal Rabi frequency Omega, MHz
  double detuning = 140.0;  ///< MHz
  double t2 = 3.2;          ///< us
  double contrast = 0.05;   ///< PL contrast C, (0, 1]
  double f_nv = 2560.0;     ///< MHz, lab-frame checks only
};

inline void validate(const SignalModelParams& p) {
  detail::require_finite(p.rabi, "rabi");
  detail::require_finite(p.detuning, "detuning");
  if (!(p.t2 > 0.0)) throw DomainError("T2 must be positive");
  if (!(p.contrast > 0.0 && p.contrast <= 1.0)) throw DomainError("contrast must lie in (0, 1]");
  if (p.rabi < 0.0) throw DomainError("rabi frequency must be non-negative");
}

struct SignalTrace {
  std::vector<double> tau;       ///< us, strictly increasing
  std::vector<double> contrast;  ///< normalized PL
  std::vector<double> sigma;     ///< per-point standard deviation (0 when noiseless)
  double integration_time = 0.0; ///< s
  std::map<std::string, std::string> meta;

  std::size_t size() const { return tau.size(); }
  bool has_sigma() const {
    for (double s : sigma)
      if (s > 0.0) return true;
    return false;
  }
};

inline void check_grid(const std::vector<double>& tau) {
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!std::isfinite(tau[i]) || tau[i] < 0.0) throw DomainError("tau grid must be finite and non-negative");
    if (i > 0 && !(tau[i] > tau[i - 1])) throw DomainError("tau grid must be strictly increasing");
  }
}

inline double decay_envelope(double tau, double t2, double factor = 2.0) {
  return std::exp(-factor * tau / t2);
}

/// S(tau) = 1 - (1 - cos(2 pi f_ACZ tau) e^{-2 tau / T2}) C / 2
inline double closed_form_signal(double tau, const SignalModelParams& p, ShiftMode mode = ShiftMode::approx) {
  validate(p);
  const double f = ac_zeeman_shift(p.detuning, p.rabi, mode).value;
  return 1.0 - 0.5 * p.contrast * (1.0 - std::cos(two_pi * f * tau) * decay_envelope(tau, p.t2));
}

inline SignalTrace closed_form_trace(const std::vector<double>& tau, const SignalModelParams& p,
                                     ShiftMode mode = ShiftMode::approx) {
  check_grid(tau);
  SignalTrace t;
  t.tau = tau;
  t.contrast.reserve(tau.size());
  for (double x : tau) t.contrast.push_back(closed_form_signal(x, p, mode));
  t.sigma.assign(tau.size(), 0.0);
  t.meta["generator"] = "closed_form";
  t.meta["shift_mode"] = mode == ShiftMode::exact ? "exact" : "approx";
  return t;
}

// ---------------------------------------------------------------------------
// Full simulation
// ---------------------------------------------------------------------------

struct SimulationOptions {
  /// Initial signal phases 2 pi k / N with N = round(2 pi / phase_step).
  double phase_step = 0.01;
  /// NV resonance minus control frequency, MHz. Free evolution and finite
  /// control pulses see it; the NV-signal detuning stays as given.
  double static_detuning = 0.0;
  bool apply_decay = true;
  /// Envelope e^{-factor tau / T2}; 2 for the ACZ echo, 1 for Rabi decay.
  double decay_factor = 2.0;
  /// When set, T2 comes from the sequence's pi-pulse count instead of params.
  std::optional<T2Scaling> t2_scaling;
};

namespace detail {

inline std::size_t phase_grid_size(double step) {
  if (!(step > 0.0 && step <= 0.1)) throw DomainError("phase grid step must lie in (0, 0.1]");
  return static_cast<std::size_t>(std::llround(two_pi / step));
}

// Sequence reduced to fixed operators interleaved with phase-dependent
// signal windows: fixed[0] W_0 fixed[1] W_1 ... fixed[n].
struct CompiledSequence {
  struct Window {
    SpinOperator base;   // propagator at phase 0 in the signal frame
    cplx frame_plus;     // e^{+i pi kappa T}
    cplx frame_minus;    // e^{-i pi kappa T}
    double phase_offset; // -2 pi kappa t_start + drive phase
  };
  std::vector<SpinOperator> fixed;
  std::vector<Window> windows;

  SpinState run(const SpinState& initial, double phi0) const {
    SpinState s = fixed[0].apply(initial);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto& w = windows[k];
      const double phi = phi0 + w.phase_offset;
      const cplx em = std::polar(1.0, -phi);
      const SpinOperator u{w.base.m00 * w.frame_plus, w.base.m01 * em * w.frame_plus,
                           w.base.m10 * std::conj(em) * w.frame_minus, w.base.m11 * w.frame_minus};
      s = fixed[k + 1].apply(u.apply(s));
    }
    return s;
  }
};

inline CompiledSequence compile(const PulseSequence& seq, const DriveParams& signal, double static_detuning) {
  detail::require_finite(signal);
  detail::require_finite(static_detuning, "static_detuning");
  CompiledSequence c;
  SpinOperator acc = SpinOperator::identity();
  // signal source frequency relative to the control frame: f_c - f_s
  const double kappa = signal.detuning - static_detuning;
  for (const auto& s : seq.segments) {
    switch (s.kind) {
      case SegmentKind::control_pulse: {
        const DriveParams d = s.drive.value_or(DriveParams{});
        if (s.ideal_angle)
          acc = rotation(*s.ideal_angle, d.phase) * acc;
        else
          acc = propagator({static_detuning + d.detuning, d.rabi, d.phase}, s.duration) * acc;
        break;
      }
      case SegmentKind::wait:
        acc = propagator({static_detuning, 0.0, 0.0}, s.duration) * acc;
        break;
      case SegmentKind::signal_window: {
        c.fixed.push_back(acc);
        acc = SpinOperator::identity();
        const double half = std::numbers::pi * kappa * s.duration;
        c.windows.push_back({propagator({signal.detuning, signal.rabi, 0.0}, s.duration),
                             std::polar(1.0, half), std::polar(1.0, -half),
                             -two_pi * kappa * s.start + signal.phase});
        break;
      }
    }
  }
  c.fixed.push_back(acc);
  return c;
}

}  // namespace detail

/// Readout population of |-> after the sequence, starting from |->, for one
/// initial signal phase.
inline double simulate_population(const PulseSequence& seq, const DriveParams& signal, double phi0,
                                  double static_detuning = 0.0) {
  const auto c = detail::compile(seq, signal, static_detuning);
  return c.run(SpinState::minus(), phi0).population_minus();
}

/// Readout population of |-> averaged over a uniform grid of initial signal phases.
inline double phase_averaged_population(const PulseSequence& seq, const DriveParams& signal,
                                        const SimulationOptions& opt = {}) {
  const std::size_t n = detail::phase_grid_size(opt.phase_step);
  const auto c = detail::compile(seq, signal, opt.static_detuning);
  const SpinState init = SpinState::minus();
  if (c.windows.empty()) return c.run(init, 0.0).population_minus();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    sum += c.run(init, two_pi * static_cast<double>(k) / static_cast<double>(n)).population_minus();
  return sum / static_cast<double>(n);
}

/// Maps a readout population onto normalized PL: the coherent part
/// (2 P - 1) decays with e^{-factor tau / T2}, then S = 1 - C (1 - P_eff).
inline double population_to_contrast(double population, double tau, double t2, double contrast,
                                      const SimulationOptions& opt) {
  const double env = opt.apply_decay ? decay_envelope(tau, t2, opt.decay_factor) : 1.0;
  return 1.0 - 0.5 * contrast * (1.0 - env * (2.0 * population - 1.0));
}

inline double simulate_signal(const PulseSequence& seq, const DriveParams& signal, const SignalModelParams& p,
                              const SimulationOptions& opt = {}) {
  validate(p);
  const double t2 = opt.t2_scaling ? opt.t2_scaling->at(seq.n_pi) : p.t2;
  const double pop = phase_averaged_population(seq, signal, opt);
  return population_to_contrast(pop, seq.tau, t2, p.contrast, opt);
}

using SequenceFactory = std::function<PulseSequence(double tau)>;

/// Simulates a full tau sweep; points are independent and evaluated in parallel.
inline SignalTrace simulate_trace(const SequenceFactory& make, const std::vector<double>& tau,
                                  const DriveParams& signal, const SignalModelParams& p,
                                  const SimulationOptions& opt = {}, unsigned threads = 0) {
  check_grid(tau);
  validate(p);
  SignalTrace t;
  t.tau = tau;
  t.contrast.assign(tau.size(), 0.0);
  t.sigma.assign(tau.size(), 0.0);
  parallel_for(
      tau.size(), [&](std::size_t i) { t.contrast[i] = simulate_signal(make(tau[i]), signal, p, opt); }, threads);
  t.meta["generator"] = "simulate_signal";
  return t;
}

/// Ramsey (pi/2 - window - pi/2) probability of ending in |+>, with the
/// pi factors of the exact segment propagator:
///   P+ = (cos(pi D t) cos(pi W t) + cos th sin(pi D t) sin(pi W t))^2
///      + sin^2 th sin^2(pi W t) sin^2(pi D t + 2 pi f_nv t_half_pi - phi)
/// with W = sqrt(D^2 + Omega^2) and phi the signal phase at the window start.
inline double transition_probability(double tau, double rabi, double detuning, double phi, double tau_half_pi,
                                     double f_nv = 0.0) {
  for (double v : {tau, rabi, detuning, phi, tau_half_pi, f_nv}) detail::require_finite(v, "argument");
  const double w = std::hypot(detuning, rabi);
  const double cos_t = w > 0.0 ? detuning / w : 1.0;
  const double sin_t = w > 0.0 ? rabi / w : 0.0;
  const double a = std::numbers::pi * detuning * tau;
  const double b = std::numbers::pi * w * tau;
  const double first = std::cos(a) * std::cos(b) + cos_t * std::sin(a) * std::sin(b);
  const double mix = sin_t * std::sin(b) * std::sin(a + two_pi * f_nv * tau_half_pi - phi);
  return first * first + mix * mix;
}

}  // namespace acz
