#pragma once

// Pulse protocols as explicit, time-stamped segment lists.
//
// Control pulses are resonant with the NV transition, so in the control
// frame they are drives with zero detuning. Signal windows carry the
// off-resonant drive; their drive parameters are placeholders that the
// simulator replaces with the actual signal drive and the phase carried by
// a free-running source.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acz/error.hpp"
#include "acz/spin_dynamics.hpp"

namespace acz {

enum class SegmentKind { control_pulse, signal_window, wait };

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::control_pulse: return "control_pulse";
    case SegmentKind::signal_window: return "signal_window";
    case SegmentKind::wait: return "wait";
  }
  return "?";
}

struct Segment {
  SegmentKind kind = SegmentKind::wait;
  double start = 0.0;     ///< us from sequence start
  double duration = 0.0;  ///< us
  std::optional<DriveParams> drive;
  /// Zero-duration perfect rotation by this angle (ideal control pulses only).
  std::optional<double> ideal_angle;
  int pulse = -1;  ///< index into PulseSequence::pulses, -1 for non-pulse segments
  std::string label;

  double end() const { return start + duration; }
};

/// One logical control rotation; a composite pulse spans several segments.
struct ControlPulse {
  double angle = 0.0;
  double phase = 0.0;
  std::size_t first_segment = 0;
  std::size_t segment_count = 0;
};

enum class Protocol { cp2, xy8, rabi, ramsey, custom };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::cp2: return "cp2";
    case Protocol::xy8: return "xy8";
    case Protocol::rabi: return "rabi";
    case Protocol::ramsey: return "ramsey";
    case Protocol::custom: return "custom";
  }
  return "?";
}

struct PulseSequence {
  Protocol protocol = Protocol::custom;
  std::vector<Segment> segments;
  std::vector<ControlPulse> pulses;
  double tau = 0.0;         ///< sweep parameter, us
  int n_pi = 0;             ///< number of pi pulses
  int repetitions = 0;      ///< XY8 block count n (1 for CP2)
  double total_duration = 0.0;

  double free_evolution() const {
    double t = 0.0;
    for (const auto& s : segments)
      if (s.kind != SegmentKind::control_pulse) t += s.duration;
    return t;
  }
  double signal_time() const {
    double t = 0.0;
    for (const auto& s : segments)
      if (s.kind == SegmentKind::signal_window) t += s.duration;
    return t;
  }
  std::size_t signal_window_count() const {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](auto& s) {
      return s.kind == SegmentKind::signal_window;
    }));
  }
};

// ---------------------------------------------------------------------------
// Composite pulses
// ---------------------------------------------------------------------------

struct SubPulse {
  double angle;  ///< nominal rotation, rad
  double phase;  ///< rad, relative to the logical pulse phase
};

struct CompositePulseSpec {
  double target_angle = std::numbers::pi;
  double control_rabi = 0.0;
  std::vector<SubPulse> sub_pulses;

  /// Ideal operator of the composite (every angle scaled by 1 + length_error).
  SpinOperator op(double length_error = 0.0, double base_phase = 0.0) const {
    SpinOperator u = SpinOperator::identity();
    for (const auto& p : sub_pulses) u = rotation(p.angle * (1.0 + length_error), p.phase + base_phase) * u;
    return u;
  }
  double total_duration() const {
    double a = 0.0;
    for (const auto& p : sub_pulses) a += p.angle;
    return control_rabi > 0.0 ? a / (two_pi * control_rabi) : 0.0;
  }
};

namespace detail {

// Inverse of sin(x)/x on [0, pi], where it decreases monotonically from 1 to 0.
inline double inverse_sinc(double v) {
  if (v <= 0.0) return std::numbers::pi;
  if (v >= 1.0) return 0.0;
  double lo = 0.0, hi = std::numbers::pi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double s = mid == 0.0 ? 1.0 : std::sin(mid) / mid;
    (s > v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// SCROFULOUS composite rotation (Cummins, Llewellyn & Jones, PRA 67, 042308):
///   theta1 = theta3 = sinc^-1(2 cos(theta/2) / pi)
///   phi1   = phi3   = arccos(-pi cos(theta1) / (2 theta1 sin(theta/2)))
///   theta2 = pi,  phi2 = phi1 - arccos(-pi / (2 theta1))
/// For a pi target this gives 180_60 180_300 180_60 (degrees).
inline CompositePulseSpec build_scrofulous(double target_angle, double control_rabi) {
  if (!(target_angle > 0.0 && target_angle <= std::numbers::pi))
    throw DomainError("SCROFULOUS target angle must lie in (0, pi]");
  const double pi = std::numbers::pi;
  const double t1 = detail::inverse_sinc(2.0 * std::cos(0.5 * target_angle) / pi);
  const double p1 = std::acos(std::clamp(-pi * std::cos(t1) / (2.0 * t1 * std::sin(0.5 * target_angle)), -1.0, 1.0));
  const double p2 = p1 - std::acos(std::clamp(-pi / (2.0 * t1), -1.0, 1.0));
  return {target_angle, control_rabi, {{t1, p1}, {pi, p2}, {t1, p1}}};
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

enum class PulseStyle { ideal, plain, scrofulous };

struct ControlSettings {
  double rabi = 10.0;  ///< nominal control Rabi frequency, MHz
  PulseStyle style = PulseStyle::ideal;
  /// Fractional pulse-length error: every rotation is (1 + length_error) times nominal.
  double length_error = 0.0;
};

namespace detail {

class SequenceBuilder {
 public:
  SequenceBuilder(Protocol p, const ControlSettings& c) : c_(c) {
    seq_.protocol = p;
    if (c.style != PulseStyle::ideal && !(c.rabi > 0.0))
      throw DomainError("finite control pulses need a positive control Rabi frequency");
    require_finite(c.length_error, "length_error");
  }

  void pulse(double angle, double phase, std::string label) {
    ControlPulse cp{angle, phase, seq_.segments.size(), 0};
    const double scale = 1.0 + c_.length_error;
    auto add = [&](double a, double ph, std::string lbl) {
      Segment s;
      s.kind = SegmentKind::control_pulse;
      s.start = now_;
      s.pulse = static_cast<int>(seq_.pulses.size());
      s.label = std::move(lbl);
      if (c_.style == PulseStyle::ideal) {
        s.ideal_angle = a * scale;
        s.drive = DriveParams{0.0, 0.0, ph};
      } else {
        s.duration = a / (two_pi * c_.rabi);
        s.drive = DriveParams{0.0, c_.rabi * scale, ph};
      }
      now_ += s.duration;
      seq_.segments.push_back(std::move(s));
      ++cp.segment_count;
    };
    if (c_.style == PulseStyle::scrofulous) {
      const auto spec = build_scrofulous(angle, c_.rabi);
      int k = 0;
      for (const auto& sp : spec.sub_pulses) add(sp.angle, phase + sp.phase, label + "/" + std::to_string(++k));
    } else {
      add(angle, phase, std::move(label));
    }
    if (std::abs(angle - std::numbers::pi) < 1e-12) ++seq_.n_pi;
    seq_.pulses.push_back(cp);
  }

  void gap(SegmentKind kind, double duration, std::string label) {
    Segment s;
    s.kind = kind;
    s.start = now_;
    s.duration = duration;
    s.label = std::move(label);
    if (kind == SegmentKind::signal_window) s.drive = DriveParams{};
    now_ += duration;
    seq_.segments.push_back(std::move(s));
  }

  PulseSequence finish(double tau, int repetitions) {
    seq_.tau = tau;
    seq_.repetitions = repetitions;
    double total = 0.0;
    for (const auto& s : seq_.segments) total += s.duration;
    seq_.total_duration = total;
    return std::move(seq_);
  }

 private:
  ControlSettings c_;
  PulseSequence seq_;
  double now_ = 0.0;
};

// pi/2 - [pi pulses with free gaps] - pi/2(phase + pi). Gap 0 and the last gap
// are half intervals; between pulses the interval is 2 tau / N. Signal windows
// fill every second inter-pulse gap starting with the one after the first pi.
inline PulseSequence build_decoupling(Protocol protocol, const std::vector<double>& pi_phases,
                                      double tau, const ControlSettings& c, int repetitions) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  const double pi = std::numbers::pi;
  const auto n = pi_phases.size();
  const double interval = 2.0 * tau / static_cast<double>(n);
  SequenceBuilder b(protocol, c);
  b.pulse(pi / 2.0, 0.0, "pi/2");
  b.gap(SegmentKind::wait, 0.5 * interval, "free");
  for (std::size_t k = 0; k < n; ++k) {
    b.pulse(pi, pi_phases[k], std::abs(pi_phases[k]) < 1e-12 ? "pi_x" : "pi_y");
    if (k + 1 < n) {
      if (k % 2 == 0)
        b.gap(SegmentKind::signal_window, interval, "signal");
      else
        b.gap(SegmentKind::wait, interval, "free");
    }
  }
  b.gap(SegmentKind::wait, 0.5 * interval, "free");
  b.pulse(pi / 2.0, pi, "pi/2 readout");
  return b.finish(tau, repetitions);
}

}  // namespace detail

inline constexpr std::array<double, 8> xy8_phases{0.0,
                                                  std::numbers::pi / 2,
                                                  0.0,
                                                  std::numbers::pi / 2,
                                                  std::numbers::pi / 2,
                                                  0.0,
                                                  std::numbers::pi / 2,
                                                  0.0};

/// Carr-Purcell 2: pi/2 - tau/2 - pi - [signal tau] - pi - tau/2 - pi/2(inverted).
inline PulseSequence build_cp2(double tau, const ControlSettings& c = {}) {
  return detail::build_decoupling(Protocol::cp2, {0.0, 0.0}, tau, c, 1);
}

inline PulseSequence build_cp2(double tau, double control_rabi, bool ideal_pulses) {
  return build_cp2(tau, ControlSettings{control_rabi, ideal_pulses ? PulseStyle::ideal : PulseStyle::plain, 0.0});
}

/// XY8 repeated n times: 8n pi pulses at interval tau/(4n), 4n signal windows.
inline PulseSequence build_xy8n(int n, double tau, const ControlSettings& c = {}) {
  if (n < 1) throw DomainError("XY8 repetition count must be >= 1");
  std::vector<double> phases;
  phases.reserve(8 * static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) phases.insert(phases.end(), xy8_phases.begin(), xy8_phases.end());
  return detail::build_decoupling(Protocol::xy8, phases, tau, c, n);
}

inline PulseSequence build_xy8n(int n, double tau, double control_rabi, bool ideal_pulses) {
  return build_xy8n(n, tau, ControlSettings{control_rabi, ideal_pulses ? PulseStyle::ideal : PulseStyle::plain, 0.0});
}

/// CP2 for n_pi == 2, XY8^(n_pi/8) otherwise.
inline PulseSequence build_for_pulse_count(int n_pi, double tau, const ControlSettings& c = {}) {
  if (n_pi == 2) return build_cp2(tau, c);
  if (n_pi < 8 || n_pi % 8 != 0) throw DomainError("pi-pulse count must be 2 or a multiple of 8");
  return build_xy8n(n_pi / 8, tau, c);
}

/// pi/2 - [signal tau] - pi/2 with finite resonant pulses (no echo).
inline PulseSequence build_ramsey(double tau, double control_rabi) {
  if (!(tau >= 0.0)) throw DomainError("tau must be non-negative");
  detail::SequenceBuilder b(Protocol::ramsey, {control_rabi, PulseStyle::plain, 0.0});
  b.pulse(std::numbers::pi / 2.0, 0.0, "pi/2");
  b.gap(SegmentKind::signal_window, tau, "signal");
  b.pulse(std::numbers::pi / 2.0, 0.0, "pi/2");
  return b.finish(tau, 0);
}

/// One resonant drive of each duration; tau of each sequence is the duration.
inline std::vector<PulseSequence> build_rabi(const std::vector<double>& durations, double control_rabi) {
  if (!(control_rabi > 0.0)) throw DomainError("control Rabi frequency must be positive");
  std::vector<PulseSequence> out;
  out.reserve(durations.size());
  for (double d : durations) {
    if (!(d >= 0.0)) throw DomainError("Rabi durations must be non-negative");
    PulseSequence s;
    s.protocol = Protocol::rabi;
    Segment seg;
    seg.kind = SegmentKind::control_pulse;
    seg.duration = d;
    seg.drive = DriveParams{0.0, control_rabi, 0.0};
    seg.pulse = 0;
    seg.label = "rabi";
    s.segments.push_back(seg);
    s.pulses.push_back({two_pi * control_rabi * d, 0.0, 0, 1});
    s.tau = d;
    s.total_duration = d;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation and export
// ---------------------------------------------------------------------------

struct SequenceDiagnostics {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline SequenceDiagnostics validate_sequence(const PulseSequence& seq) {
  SequenceDiagnostics d;
  auto flag = [&](std::string v) {
    if (std::find(d.violations.begin(), d.violations.end(), v) == d.violations.end())
      d.violations.push_back(std::move(v));
  };
  const double scale = std::max({1.0, seq.total_duration, seq.tau});
  const double eps = 1e-9 * scale;

  double sum = 0.0;
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const auto& s = seq.segments[i];
    if (!std::isfinite(s.duration) || s.duration < 0.0) flag("negative duration");
    if (s.kind == SegmentKind::wait && s.drive) flag("wait carries a drive");
    if (s.kind != SegmentKind::wait && !s.drive) flag("missing drive");
    if (s.ideal_angle && s.duration != 0.0) flag("ideal pulse with duration");
    if (i > 0 && s.start < seq.segments[i - 1].end() - eps) flag("overlap");
    sum += s.duration;
  }
  if (std::abs(sum - seq.total_duration) > eps) flag("total duration != sum of segments");

  if (seq.protocol != Protocol::cp2 && seq.protocol != Protocol::xy8) return d;

  // pi pulses in time order
  std::vector<const ControlPulse*> pis;
  for (const auto& p : seq.pulses)
    if (std::abs(p.angle - std::numbers::pi) < 1e-12) pis.push_back(&p);
  if (static_cast<int>(pis.size()) != seq.n_pi) flag("n_pi != pi pulse count");

  const int n = seq.repetitions;
  const int expected_pis = seq.protocol == Protocol::cp2 ? 2 : 8 * n;
  if (seq.n_pi != expected_pis) flag(seq.protocol == Protocol::cp2 ? "cp2 needs 2 pi pulses" : "n_pi != 8n");

  const double interval = seq.protocol == Protocol::cp2 ? seq.tau : seq.tau / (4.0 * n);
  for (std::size_t k = 0; k + 1 < pis.size(); ++k) {
    const auto& a = *pis[k];
    const auto& b = *pis[k + 1];
    const double gap = seq.segments[b.first_segment].start -
                       seq.segments[a.first_segment + a.segment_count - 1].end();
    if (std::abs(gap - interval) > eps)
      flag(seq.protocol == Protocol::cp2 ? "interval != tau" : "interval != tau/(4n)");
  }

  if (seq.protocol == Protocol::xy8) {
    for (std::size_t k = 0; k < pis.size(); ++k)
      if (std::abs(pis[k]->phase - xy8_phases[k % 8]) > 1e-12) flag("XY8 phase pattern");
  }

  const std::size_t windows = seq.signal_window_count();
  const std::size_t expected_windows = seq.protocol == Protocol::cp2 ? 1 : 4 * static_cast<std::size_t>(n);
  if (windows != expected_windows) flag("signal window count");
  if (std::abs(seq.signal_time() - seq.tau) > eps) flag("signal time != tau");

  // signal windows must not overlap any control pulse
  for (const auto& w : seq.segments) {
    if (w.kind != SegmentKind::signal_window) continue;
    for (const auto& c : seq.segments) {
      if (c.kind != SegmentKind::control_pulse) continue;
      const double lo = std::max(w.start, c.start);
      const double hi = std::min(w.end(), c.end());
      if (hi - lo > eps) flag("overlap");
    }
  }
  return d;
}

/// One segment per line: kind start duration detuning rabi phase [angle] label.
inline std::string export_sequence(const PulseSequence& seq) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "# acz-sequence v1 protocol=%s tau_us=%.9g n_pi=%d total_us=%.9g\n",
                to_string(seq.protocol), seq.tau, seq.n_pi, seq.total_duration);
  os << buf;
  os << "# kind start_us duration_us detuning_mhz rabi_mhz phase_rad ideal_angle_rad label\n";
  for (const auto& s : seq.segments) {
    const DriveParams d = s.drive.value_or(DriveParams{});
    char angle[32] = "-";
    if (s.ideal_angle) std::snprintf(angle, sizeof angle, "%.9g", *s.ideal_angle);
    std::snprintf(buf, sizeof buf, "%s %.9g %.9g %.9g %.9g %.9g %s %s\n", to_string(s.kind), s.start,
                  s.duration, d.detuning, d.rabi, d.phase, angle, s.label.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace acz
