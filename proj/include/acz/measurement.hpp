#pragma once

// Measurement synthesis: readout noise with integration-time bookkeeping,
// an omega-antenna field map, and a resonator amplitude response.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "acz/error.hpp"
#include "acz/signal_model.hpp"

namespace acz {

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator keyed by (seed, stream, index); independent of evaluation order.
inline std::mt19937_64 keyed_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t k = splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
  return std::mt19937_64{k};
}

// ---------------------------------------------------------------------------
// Readout noise
// ---------------------------------------------------------------------------

enum class NoiseMode { gaussian, poisson };

struct CameraModel {
  double tau_read = 64.0;        ///< us per readout
  double counts_bright = 1.0e4;  ///< mean counts per readout (poisson mode)
  double sigma_s = 0.01;         ///< per-readout noise on normalized contrast
  std::uint64_t seed = 1;
  NoiseMode noise = NoiseMode::gaussian;
};

inline void validate(const CameraModel& c) {
  if (!(c.tau_read > 0.0) || !std::isfinite(c.tau_read)) throw DomainError("tau_read must be positive");
  if (!(c.sigma_s >= 0.0) || !std::isfinite(c.sigma_s)) throw DomainError("sigma_s must be non-negative");
  if (!(c.counts_bright > 0.0) || !std::isfinite(c.counts_bright)) throw DomainError("counts_bright must be positive");
}

/// One repetition sweeps the whole grid once: sum over points of (factor*tau + tau_read), us.
inline double repetition_time(const std::vector<double>& tau, double tau_read, double tau_factor = 2.0) {
  double t = 0.0;
  for (double x : tau) t += tau_factor * x + tau_read;
  return t;
}

/// Adds readout noise for a total measurement time (s) spread uniformly over
/// the grid. Every point gets reps = floor(T / repetition_time) readouts and
/// noise sigma_s / sqrt(reps). `stream` separates traces sharing one seed;
/// `tau_factor` is 2 for echo sequences (2 tau per shot) and 1 for Rabi.
inline SignalTrace synth_noisy_trace(const SignalTrace& clean, const CameraModel& cam, double total_time_s,
                                     std::uint64_t stream = 0, double tau_factor = 2.0) {
  validate(cam);
  if (!(total_time_s > 0.0) || !std::isfinite(total_time_s)) throw DomainError("total_time must be positive");
  if (clean.contrast.size() != clean.tau.size()) throw DomainError("trace columns differ in length");
  const double cycle_us = repetition_time(clean.tau, cam.tau_read, tau_factor);
  const double reps_f = std::floor(total_time_s * 1e6 / cycle_us);
  if (reps_f < 1.0) throw DomainError("total_time too short for a single repetition of the grid");
  const double reps = reps_f;

  SignalTrace out = clean;
  out.sigma.assign(clean.size(), 0.0);
  if (cam.noise == NoiseMode::gaussian) {
    const double sd = cam.sigma_s / std::sqrt(reps);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      out.sigma[i] = sd;
      if (sd > 0.0) {
        auto rng = keyed_rng(cam.seed, stream, i);
        std::normal_distribution<double> g(0.0, sd);
        out.contrast[i] = clean.contrast[i] + g(rng);
      }
    }
  } else {
    const double bright = cam.counts_bright * reps;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const double mean = std::max(clean.contrast[i], 0.0) * bright;
      auto rng = keyed_rng(cam.seed, stream, i);
      std::poisson_distribution<long long> p(mean);
      out.contrast[i] = static_cast<double>(p(rng)) / bright;
      out.sigma[i] = std::sqrt(std::max(mean, 1.0)) / bright;
    }
  }
  out.integration_time = reps * cycle_us * 1e-6;
  out.meta["repetitions"] = std::to_string(static_cast<long long>(reps));
  out.meta["noise"] = cam.noise == NoiseMode::gaussian ? "gaussian" : "poisson";
  return out;
}

// ---------------------------------------------------------------------------
// Omega-antenna field map
// ---------------------------------------------------------------------------

struct FieldMap {
  int width = 0;
  int height = 0;
  double pixel_size = 1.0;  ///< um
  double origin_x = 0.0;    ///< um, centre of pixel (0, 0)
  double origin_y = 0.0;
  std::vector<double> values;         ///< mT, row-major (y outer)
  std::vector<std::uint8_t> mask;     ///< 1 = valid

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * width + ix]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * width + ix]; }
  bool valid(int ix, int iy) const { return mask[static_cast<std::size_t>(iy) * width + ix] != 0; }
  double x(int ix) const { return origin_x + ix * pixel_size; }
  double y(int iy) const { return origin_y + iy * pixel_size; }
};

inline void validate(const FieldMap& m) {
  if (m.width < 1 || m.height < 1) throw DomainError("field map needs positive dimensions");
  const auto n = static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height);
  if (m.values.size() != n || m.mask.size() != n) throw DomainError("field map storage does not match dimensions");
  for (std::size_t i = 0; i < n; ++i)
    if (m.mask[i] && !(m.values[i] >= 0.0)) throw DomainError("field map value negative on a valid pixel");
}

struct MapRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t valid = 0;
  double ratio() const { return max / min; }
};

inline MapRange map_range(const FieldMap& m) {
  MapRange r{INFINITY, -INFINITY, 0};
  for (std::size_t i = 0; i < m.values.size(); ++i)
    if (m.mask[i]) {
      r.min = std::min(r.min, m.values[i]);
      r.max = std::max(r.max, m.values[i]);
      ++r.valid;
    }
  if (r.valid == 0) throw DatasetError("field map has no valid pixels");
  return r;
}

enum class FieldComponent { magnitude, in_plane, normal };

struct OmegaAntenna {
  double outer_diameter = 250.0;  ///< um
  double inner_diameter = 100.0;  ///< um
  double current = 0.05;          ///< A
  double gap_width = 20.0;        ///< um, opening of the ring where the leads attach
  double lead_length = 400.0;     ///< um
  int filaments = 16;             ///< concentric filaments across the strip
  int arc_segments = 720;         ///< straight pieces per filament
  bool loop_only = false;         ///< closed circular filaments, no gap, no leads
  double standoff = 1.0;          ///< um, NV plane below the antenna plane
  FieldComponent component = FieldComponent::magnitude;
};

struct PixelGrid {
  int width = 24;
  int height = 24;
  double pixel_size = 4.0;  ///< um
  double center_x = 0.0;    ///< um, relative to the ring centre
  double center_y = 0.0;
};

using Vec3 = std::array<double, 3>;

namespace detail {

inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Field (mT) at p of a straight filament a -> b carrying `current` A; lengths in um.
// B = mu0 I / (4 pi) (r1 x r2)(|r1| + |r2|) / (|r1||r2|(|r1||r2| + r1.r2)); mu0/(4 pi) = 1e-7
// with 1/um = 1e6/m gives 0.1 T = 100 mT per (A/um).
inline void add_segment_field(const Vec3& p, const Vec3& a, const Vec3& b, double current, Vec3& out) {
  const Vec3 r1 = sub(a, p), r2 = sub(b, p);
  const double n1 = std::sqrt(dot(r1, r1)), n2 = std::sqrt(dot(r2, r2));
  const double den = n1 * n2 * (n1 * n2 + dot(r1, r2));
  if (!(den > 1e-18)) return;  // point on the filament line
  const double k = 100.0 * current * (n1 + n2) / den;
  const Vec3 c = cross(r1, r2);
  for (int i = 0; i < 3; ++i) out[i] += k * c[i];
}

struct Filament {
  std::vector<Vec3> points;
};

// The ring is centred at the origin with its gap on the -y side; current runs
// counter-clockwise from the right-hand lead to the left-hand lead.
inline std::vector<Filament> omega_filaments(const OmegaAntenna& g) {
  const double r_in = 0.5 * g.inner_diameter, r_out = 0.5 * g.outer_diameter;
  std::vector<Filament> out;
  for (int f = 0; f < g.filaments; ++f) {
    const double r = r_in + (r_out - r_in) * (f + 0.5) / g.filaments;
    Filament fil;
    const double pi = std::numbers::pi;
    const double half_gap = g.loop_only ? 0.0 : std::asin(std::min(1.0, 0.5 * g.gap_width / r));
    const double a0 = -0.5 * pi + half_gap, a1 = 1.5 * pi - half_gap;
    if (!g.loop_only) fil.points.push_back({r * std::cos(a0), -g.lead_length, 0.0});
    for (int k = 0; k <= g.arc_segments; ++k) {
      const double a = a0 + (a1 - a0) * k / g.arc_segments;
      fil.points.push_back({r * std::cos(a), r * std::sin(a), 0.0});
    }
    if (!g.loop_only) fil.points.push_back({r * std::cos(a1), -g.lead_length, 0.0});
    out.push_back(std::move(fil));
  }
  return out;
}

}  // namespace detail

/// Field vector (mT) of the antenna at point p (um, antenna plane at z = 0).
inline Vec3 omega_field(const OmegaAntenna& g, const Vec3& p) {
  Vec3 b{0.0, 0.0, 0.0};
  const double per = g.current / g.filaments;
  for (const auto& fil : detail::omega_filaments(g))
    for (std::size_t k = 0; k + 1 < fil.points.size(); ++k)
      detail::add_segment_field(p, fil.points[k], fil.points[k + 1], per, b);
  return b;
}

inline void validate(const OmegaAntenna& g) {
  if (!(g.inner_diameter > 0.0 && g.outer_diameter > g.inner_diameter))
    throw DomainError("antenna needs 0 < inner diameter < outer diameter");
  if (g.filaments < 1 || g.arc_segments < 8) throw DomainError("antenna discretization too coarse");
  if (!std::isfinite(g.current) || !std::isfinite(g.standoff)) throw DomainError("non-finite antenna parameter");
  if (!(g.gap_width >= 0.0) || !(g.lead_length > 0.0)) throw DomainError("invalid gap or lead length");
}

/// Microwave amplitude over a pixel grid in the NV plane z = -standoff.
inline FieldMap synth_field_map(const OmegaAntenna& g, const PixelGrid& grid = {}) {
  validate(g);
  if (grid.width < 1 || grid.height < 1 || !(grid.pixel_size > 0.0)) throw DomainError("grid resolution must be positive");
  FieldMap m;
  m.width = grid.width;
  m.height = grid.height;
  m.pixel_size = grid.pixel_size;
  m.origin_x = grid.center_x - 0.5 * (grid.width - 1) * grid.pixel_size;
  m.origin_y = grid.center_y - 0.5 * (grid.height - 1) * grid.pixel_size;
  const auto n = static_cast<std::size_t>(grid.width) * grid.height;
  m.values.assign(n, 0.0);
  m.mask.assign(n, 1);
  const auto fils = detail::omega_filaments(g);
  const double per = g.current / g.filaments;
  for (int iy = 0; iy < m.height; ++iy)
    for (int ix = 0; ix < m.width; ++ix) {
      const Vec3 p{m.x(ix), m.y(iy), -g.standoff};
      Vec3 b{0.0, 0.0, 0.0};
      for (const auto& fil : fils)
        for (std::size_t k = 0; k + 1 < fil.points.size(); ++k)
          detail::add_segment_field(p, fil.points[k], fil.points[k + 1], per, b);
      double v = 0.0;
      switch (g.component) {
        case FieldComponent::magnitude: v = std::sqrt(detail::dot(b, b)); break;
        case FieldComponent::in_plane: v = std::hypot(b[0], b[1]); break;
        case FieldComponent::normal: v = std::abs(b[2]); break;
      }
      m.at(ix, iy) = v;
    }
  return m;
}

/// On-axis field (mT) of a circular loop of radius a (um) at height z (um).
inline double loop_axis_field(double current, double radius, double z) {
  const double mu0 = 4e-7 * std::numbers::pi;
  return 1e3 * 1e6 * mu0 * current * radius * radius / (2.0 * std::pow(radius * radius + z * z, 1.5));
}

// ---------------------------------------------------------------------------
// Resonator response
// ---------------------------------------------------------------------------

struct ResonatorResponse {
  double f0 = 2370.0;        ///< MHz
  double q_factor = 10.0;
  double coupling = 0.0;     ///< off-resonant baseline as a fraction of the peak
  double drive_amp = 0.8;    ///< mT at resonance
  double ripple_depth = 0.0; ///< relative standing-wave modulation
  double ripple_period = 40.0; ///< MHz
};

inline void validate(const ResonatorResponse& r) {
  if (!(r.f0 > 0.0) || !(r.q_factor > 0.0)) throw DomainError("resonator needs f0 > 0 and Q > 0");
  if (!(r.coupling >= 0.0 && r.coupling <= 1.0)) throw DomainError("coupling must lie in [0, 1]");
  if (!(r.drive_amp >= 0.0)) throw DomainError("drive amplitude must be non-negative");
  if (!(r.ripple_depth >= 0.0 && r.ripple_depth < 1.0)) throw DomainError("ripple depth must lie in [0, 1)");
  if (!(r.ripple_period > 0.0)) throw DomainError("ripple period must be positive");
}

/// Field amplitude (mT) at one drive frequency (MHz).
inline double resonator_amplitude(const ResonatorResponse& r, double f) {
  if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("frequency must be positive");
  const double x = 2.0 * r.q_factor * (f - r.f0) / r.f0;
  const double lorentz = 1.0 / std::sqrt(1.0 + x * x);
  const double ripple = 1.0 + r.ripple_depth * std::cos(two_pi * (f - r.f0) / r.ripple_period);
  return r.drive_amp * (r.coupling + (1.0 - r.coupling) * lorentz) * ripple;
}

inline std::vector<double> synth_resonator_amplitude(const ResonatorResponse& r, const std::vector<double>& f) {
  validate(r);
  std::vector<double> out;
  out.reserve(f.size());
  for (double x : f) out.push_back(resonator_amplitude(r, x));
  return out;
}

}  // namespace acz
