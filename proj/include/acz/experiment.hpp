#pragma once

// Scenario orchestration: config -> clean traces -> noise -> dataset on disk,
// and the reverse path dataset -> fits -> summary tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acz/comb.hpp"
#include "acz/error.hpp"
#include "acz/estimation.hpp"
#include "acz/io.hpp"
#include "acz/lowpass.hpp"
#include "acz/measurement.hpp"
#include "acz/parallel.hpp"
#include "acz/pulse_sequences.hpp"
#include "acz/sensitivity.hpp"
#include "acz/signal_model.hpp"
#include "acz/t2_scaling.hpp"
#include "acz/version.hpp"

namespace acz {

enum class Scenario { amplitude_sweep, frequency_sweep, imaging, sensitivity_scan, comb_study };
enum class Generator { closed_form, simulate };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::amplitude_sweep: return "amplitude-sweep";
    case Scenario::frequency_sweep: return "frequency-sweep";
    case Scenario::imaging: return "imaging";
    case Scenario::sensitivity_scan: return "sensitivity-scan";
    case Scenario::comb_study: return "comb-study";
  }
  return "?";
}

/// Uniform or log-spaced grid, or an explicit list.
struct Grid {
  std::vector<double> explicit_values;
  double start = 0.0;
  double stop = 1.0;
  int points = 2;
  bool log = false;

  static Grid linear(double a, double b, int n) { return {{}, a, b, n, false}; }
  static Grid logarithmic(double a, double b, int n) { return {{}, a, b, n, true}; }

  std::vector<double> values() const {
    if (!explicit_values.empty()) return explicit_values;
    if (points < 2) return {start};
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      const double u = static_cast<double>(i) / (points - 1);
      v[static_cast<std::size_t>(i)] = log ? start * std::pow(stop / start, u) : start + (stop - start) * u;
    }
    return v;
  }
};

struct ProtocolConfig {
  Protocol sequence = Protocol::cp2;  ///< cp2 or xy8
  int n = 1;                          ///< XY8 repetitions
  Grid tau = Grid::linear(0.1, 4.0, 40);
  ControlSettings control{};
  Generator generator = Generator::closed_form;
  double phase_step = 0.01;
  std::optional<T2Scaling> t2_scaling;  ///< T2 from pulse count when set

  int n_pi() const { return sequence == Protocol::cp2 ? 2 : 8 * n; }
};

struct FitConfig {
  bool fix_t2 = false;
  bool fix_contrast = false;
};

struct ImagingConfig {
  OmegaAntenna antenna{};
  PixelGrid pixels{};
  Grid rabi_durations = Grid::linear(0.0, 0.4, 81);
  double rabi_t2 = 1.0;      ///< us, single-exponential Rabi decay
  double rabi_scale = 1.0;   ///< resonant field relative to the signal field map
};

struct SensitivityConfig {
  std::vector<int> pulse_counts{2, 8, 16, 32, 64};
  std::vector<double> times{3, 10, 30, 100, 300};  ///< s
  int trials = 4;
  VarianceSource variance = VarianceSource::reference_scaled;
  Grid detuning_scan = Grid::linear(200.0, 5000.0, 25);  ///< MHz
  double scan_field = 0.75;                               ///< mT
  double tau_min = 0.01;
  double tau_max = 100.0;
};

struct CombConfig {
  int n = 8;
  double tau_max = 2.0;
  double step_factor = 0.1;  ///< grid step in units of 1/W
  double cutoff = 1.0;       ///< MHz
};

struct ExperimentConfig {
  int schema_version = 1;
  Scenario scenario = Scenario::amplitude_sweep;
  std::uint64_t seed = 0;
  std::string output_dir;
  SignalModelParams physics{};
  PhysicalConstants constants{};
  ShiftMode shift_mode = ShiftMode::approx;
  ProtocolConfig protocol{};
  CameraModel camera{};
  double integration_time = 100.0;  ///< s per trace
  bool add_noise = true;
  FitConfig fit{};
  std::vector<double> amplitudes;            ///< mT, amplitude-sweep
  Grid f_mw = Grid::linear(2200, 2500, 31);  ///< MHz, frequency-sweep
  ResonatorResponse resonator{};
  ImagingConfig imaging{};
  SensitivityConfig sensitivity{};
  CombConfig comb{};
  /// Canonical text of the validated config (hash input and dataset echo).
  std::string canonical;
};

inline FitOptions fit_options(const ExperimentConfig& c, double t2) {
  FitOptions o;
  if (c.fit.fix_t2) o.fixed_t2 = t2;
  if (c.fit.fix_contrast) o.fixed_contrast = c.physics.contrast;
  return o;
}

inline double effective_t2(const ExperimentConfig& c, int n_pi) {
  return c.protocol.t2_scaling ? c.protocol.t2_scaling->at(n_pi) : c.physics.t2;
}

/// Noiseless trace for given physics under the configured protocol.
inline SignalTrace clean_trace(const ExperimentConfig& c, SignalModelParams p, int n_pi, const std::vector<double>& tau,
                               unsigned threads = 1) {
  p.t2 = effective_t2(c, n_pi);
  if (c.protocol.generator == Generator::closed_form) return closed_form_trace(tau, p, c.shift_mode);
  SimulationOptions opt;
  opt.phase_step = c.protocol.phase_step;
  const ControlSettings ctl = c.protocol.control;
  auto t = simulate_trace([&](double x) { return build_for_pulse_count(n_pi, x, ctl); }, tau,
                          DriveParams{p.detuning, p.rabi, 0.0}, p, opt, threads);
  t.meta["n_pi"] = std::to_string(n_pi);
  return t;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct TraceRecord {
  std::string name;
  std::string kind = "acz";  ///< acz | rabi | aux
  KeyValue params;
  SignalTrace trace;
};

struct Dataset {
  KeyValue manifest;
  std::vector<TraceRecord> traces;
  std::vector<std::pair<std::string, std::string>> files;  ///< extra (relative path, content)
};

namespace detail {

inline std::string index_name(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, i);
  return buf;
}

inline SignalTrace finish_trace(const ExperimentConfig& c, const SignalTrace& clean, std::uint64_t stream,
                                double tau_factor = 2.0) {
  if (!c.add_noise) {
    SignalTrace t = clean;
    t.sigma.assign(t.size(), 0.0);
    return t;
  }
  return synth_noisy_trace(clean, c.camera, c.integration_time, stream, tau_factor);
}

inline void amplitude_sweep(const ExperimentConfig& c, Dataset& d, unsigned threads) {
  const auto tau = c.protocol.tau.values();
  d.traces.resize(c.amplitudes.size());
  parallel_for(
      c.amplitudes.size(),
      [&](std::size_t i) {
        SignalModelParams p = c.physics;
        p.rabi = rabi_from_field(c.amplitudes[i], c.constants);
        auto& r = d.traces[i];
        r.name = index_name("amp", i);
        r.params = {{"amplitude_mt", format_double(c.amplitudes[i])},
                    {"detuning_mhz", format_double(p.detuning)},
                    {"rabi_mhz", format_double(p.rabi)}};
        r.trace = finish_trace(c, clean_trace(c, p, c.protocol.n_pi(), tau), i);
      },
      threads);
}

inline void frequency_sweep(const ExperimentConfig& c, Dataset& d, unsigned threads) {
  const auto tau = c.protocol.tau.values();
  const auto f = c.f_mw.values();
  const auto amp = synth_resonator_amplitude(c.resonator, f);
  d.traces.resize(f.size());
  parallel_for(
      f.size(),
      [&](std::size_t i) {
        SignalModelParams p = c.physics;
        p.detuning = c.physics.f_nv - f[i];
        if (!(p.detuning > 0.0)) throw ConfigError("frequency sweep reaches the NV resonance");
        p.rabi = rabi_from_field(amp[i], c.constants);
        auto& r = d.traces[i];
        r.name = index_name("fmw", i);
        r.params = {{"f_mw_mhz", format_double(f[i])},
                    {"detuning_mhz", format_double(p.detuning)},
                    {"amplitude_mt", format_double(amp[i])}};
        r.trace = finish_trace(c, clean_trace(c, p, c.protocol.n_pi(), tau), i);
      },
      threads);
}

inline void imaging(const ExperimentConfig& c, Dataset& d, unsigned threads) {
  const FieldMap field = synth_field_map(c.imaging.antenna, c.imaging.pixels);
  const auto tau = c.protocol.tau.values();
  const auto dur = c.imaging.rabi_durations.values();
  const std::size_t n = field.values.size();
  d.traces.resize(2 * n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const int ix = static_cast<int>(i % static_cast<std::size_t>(field.width));
        const int iy = static_cast<int>(i / static_cast<std::size_t>(field.width));
        const KeyValue pix = {{"ix", std::to_string(ix)},
                              {"iy", std::to_string(iy)},
                              {"amplitude_mt", format_double(field.values[i])}};
        SignalModelParams p = c.physics;
        p.rabi = rabi_from_field(field.values[i], c.constants);
        auto& a = d.traces[i];
        a.name = "acz_" + std::to_string(ix) + "_" + std::to_string(iy);
        a.params = pix;
        a.params["detuning_mhz"] = format_double(p.detuning);
        a.trace = finish_trace(c, clean_trace(c, p, c.protocol.n_pi(), tau), 2 * i);

        SignalModelParams q = c.physics;
        q.rabi = rabi_from_field(field.values[i] * c.imaging.rabi_scale, c.constants);
        q.t2 = c.imaging.rabi_t2;
        SimulationOptions ro;
        ro.decay_factor = 1.0;
        SignalTrace rt;
        rt.tau = dur;
        for (const auto& s : build_rabi(dur, q.rabi))
          rt.contrast.push_back(simulate_signal(s, DriveParams{}, q, ro));
        rt.sigma.assign(dur.size(), 0.0);
        rt.meta["generator"] = "rabi";
        auto& b = d.traces[n + i];
        b.name = "rabi_" + std::to_string(ix) + "_" + std::to_string(iy);
        b.kind = "rabi";
        b.params = pix;
        b.params["rabi_scale"] = format_double(c.imaging.rabi_scale);
        b.trace = finish_trace(c, rt, 2 * i + 1, 1.0);
      },
      threads);
  d.manifest["map.width"] = std::to_string(field.width);
  d.manifest["map.height"] = std::to_string(field.height);
  d.manifest["map.pixel_size_um"] = format_double(field.pixel_size);
  d.files.emplace_back("field_map.csv", field_map_csv(field));
  d.files.emplace_back("field_map.txt", to_key_value(field_map_sidecar(field)));
}

inline void sensitivity_traces(const ExperimentConfig& c, Dataset& d, unsigned threads) {
  const auto tau = c.protocol.tau.values();
  const auto& s = c.sensitivity;
  d.traces.resize(s.pulse_counts.size() * s.times.size());
  parallel_for(
      d.traces.size(),
      [&](std::size_t i) {
        const std::size_t ni = i / s.times.size(), ti = i % s.times.size();
        const int n_pi = s.pulse_counts[ni];
        SignalModelParams p = c.physics;
        const auto clean = clean_trace(c, p, n_pi, tau);
        auto& r = d.traces[i];
        r.name = "n" + std::to_string(n_pi) + "_" + index_name("t", ti);
        r.params = {{"n_pi", std::to_string(n_pi)},
                    {"t2_us", format_double(effective_t2(c, n_pi))},
                    {"integration_time_s", format_double(s.times[ti])},
                    {"detuning_mhz", format_double(p.detuning)}};
        r.trace = synth_noisy_trace(clean, c.camera, s.times[ti], i);
      },
      threads);
}

inline void comb_study(const ExperimentConfig& c, Dataset& d, unsigned threads) {
  const auto& k = c.comb;
  const double w = std::hypot(c.physics.detuning, c.physics.rabi);
  const double step = k.step_factor / w;
  std::vector<double> tau;
  for (double t = step; t <= k.tau_max * (1.0 + 1e-12); t += step) tau.push_back(t);
  // tau = i * step exactly, so the grid stays uniform to rounding
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = static_cast<double>(i + 1) * step;
  SignalModelParams p = c.physics;
  p.t2 = c.protocol.t2_scaling ? c.protocol.t2_scaling->at(8 * k.n) : c.physics.t2;
  SimulationOptions opt;
  opt.phase_step = c.protocol.phase_step;
  const ControlSettings ctl = c.protocol.control;
  auto raw = simulate_trace([&](double x) { return build_xy8n(k.n, x, ctl); }, tau,
                            DriveParams{p.detuning, p.rabi, 0.0}, p, opt, threads);
  raw.meta["sequence"] = "xy8^" + std::to_string(k.n);
  auto low = lowpass_filter(raw, k.cutoff);
  auto ref = closed_form_trace(tau, p, ShiftMode::exact);
  d.traces.push_back({"raw", "aux", {{"n", std::to_string(k.n)}}, raw});
  d.traces.push_back({"lowpass", "aux", {{"cutoff_mhz", format_double(k.cutoff)}}, low});
  d.traces.push_back({"closed_form", "aux", {{"shift_mode", "exact"}}, ref});
  std::ostringstream dips;
  for (double t : predicted_comb_dips(k.n, p.detuning, p.rabi, tau.front(), tau.back(), CombRule::half_integer))
    dips << format_double(t) << '\n';
  d.files.emplace_back("predicted_dips_half_integer.txt", dips.str());
  std::ostringstream dips8;
  for (double t : predicted_comb_dips(k.n, p.detuning, p.rabi, tau.front(), tau.back(), CombRule::xy8_pattern))
    dips8 << format_double(t) << '\n';
  d.files.emplace_back("predicted_dips_xy8.txt", dips8.str());
}

}  // namespace detail

inline Dataset run_experiment(const ExperimentConfig& c, unsigned threads = 0) {
  Dataset d;
  d.manifest["schema_version"] = std::to_string(c.schema_version);
  d.manifest["scenario"] = to_string(c.scenario);
  d.manifest["seed"] = std::to_string(c.seed);
  d.manifest["version"] = version_string;
  d.manifest["config_hash"] = hex64(fnv1a64(c.canonical));
  d.manifest["shift_mode"] = c.shift_mode == ShiftMode::exact ? "exact" : "approx";
  d.manifest["rabi_factor"] = format_double(c.constants.rabi_factor);
  d.manifest["gamma_e"] = format_double(c.constants.gamma_e);
  d.manifest["fit.fix_t2"] = c.fit.fix_t2 ? "true" : "false";
  d.manifest["fit.fix_contrast"] = c.fit.fix_contrast ? "true" : "false";
  d.manifest["fit.t2_us"] = format_double(effective_t2(c, c.protocol.n_pi()));
  d.manifest["fit.contrast"] = format_double(c.physics.contrast);
  switch (c.scenario) {
    case Scenario::amplitude_sweep: detail::amplitude_sweep(c, d, threads); break;
    case Scenario::frequency_sweep: detail::frequency_sweep(c, d, threads); break;
    case Scenario::imaging: detail::imaging(c, d, threads); break;
    case Scenario::sensitivity_scan: detail::sensitivity_traces(c, d, threads); break;
    case Scenario::comb_study: detail::comb_study(c, d, threads); break;
  }
  for (auto& r : d.traces) {
    r.trace.meta["seed"] = std::to_string(c.seed);
    r.trace.meta["config_hash"] = d.manifest["config_hash"];
    r.trace.meta["version"] = version_string;
  }
  return d;
}

/// Writes config.json, manifest.txt, traces/<name>.csv and extra files.
inline void write_dataset(const std::string& dir, const Dataset& d, const std::string& config_text) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "traces", ec);
  if (ec) throw DatasetError("cannot create " + dir + ": " + ec.message());
  KeyValue m = d.manifest;
  m["trace_count"] = std::to_string(d.traces.size());
  for (std::size_t i = 0; i < d.traces.size(); ++i) {
    const auto& r = d.traces[i];
    const std::string key = "trace." + detail::index_name("", i).substr(1);
    m[key + ".name"] = r.name;
    m[key + ".file"] = "traces/" + r.name + ".csv";
    m[key + ".kind"] = r.kind;
    for (const auto& [k, v] : r.params) m[key + "." + k] = v;
    write_file((fs::path(dir) / "traces" / (r.name + ".csv")).string(), trace_to_csv(r.trace));
  }
  for (const auto& [rel, text] : d.files) write_file((fs::path(dir) / rel).string(), text);
  write_file((fs::path(dir) / "config.json").string(), config_text);
  write_file((fs::path(dir) / "manifest.txt").string(), to_key_value(m));
}

struct LoadedTrace {
  TraceRecord record;
  std::optional<std::string> error;
};

struct LoadedDataset {
  KeyValue manifest;
  std::vector<LoadedTrace> traces;
};

/// Reads a dataset; a missing or corrupt trace is recorded, not fatal.
/// The config echo must hash to the manifest's config_hash.
inline LoadedDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedDataset out;
  out.manifest = parse_key_value(read_file((fs::path(dir) / "manifest.txt").string()), "manifest.txt");
  const auto& m = out.manifest;
  auto get = [&](const std::string& k) {
    auto it = m.find(k);
    if (it == m.end()) throw DatasetError("manifest lacks '" + k + "'");
    return it->second;
  };
  const std::string echo = read_file((fs::path(dir) / "config.json").string());
  if (hex64(fnv1a64(echo)) != get("config_hash")) throw DatasetError("config.json does not match the manifest hash");
  const auto count = static_cast<std::size_t>(std::stoull(get("trace_count")));
  for (std::size_t i = 0; i < count; ++i) {
    const std::string key = "trace." + detail::index_name("", i).substr(1);
    LoadedTrace t;
    t.record.name = get(key + ".name");
    t.record.kind = get(key + ".kind");
    const std::string prefix = key + ".";
    for (auto it = m.lower_bound(prefix); it != m.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it)
      t.record.params[it->first.substr(prefix.size())] = it->second;
    try {
      const std::string file = get(key + ".file");
      t.record.trace = trace_from_csv(read_file((fs::path(dir) / file).string()), file);
    } catch (const std::exception& e) {
      t.error = e.what();
    }
    out.traces.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting a dataset
// ---------------------------------------------------------------------------

struct TraceFit {
  std::string name;
  std::string kind;
  KeyValue params;
  std::optional<FitResult> fit;
  double field = NAN;
  double field_error = NAN;
  std::string error;  ///< empty on success
};

inline std::vector<TraceFit> fit_dataset(const LoadedDataset& ds, unsigned threads = 0) {
  const auto& m = ds.manifest;
  auto flag = [&](const std::string& k) { return m.count(k) && m.at(k) == "true"; };
  auto num = [&](const std::string& k, double def) { return m.count(k) ? std::stod(m.at(k)) : def; };
  PhysicalConstants k{num("gamma_e", 28.02495), num("rabi_factor", 1.0 / std::numbers::sqrt2)};
  const ShiftMode mode = m.count("shift_mode") && m.at("shift_mode") == "exact" ? ShiftMode::exact : ShiftMode::approx;
  std::vector<TraceFit> out(ds.traces.size());
  parallel_for(
      ds.traces.size(),
      [&](std::size_t i) {
        const auto& lt = ds.traces[i];
        TraceFit& r = out[i];
        r.name = lt.record.name;
        r.kind = lt.record.kind;
        r.params = lt.record.params;
        if (lt.error) {
          r.error = *lt.error;
          return;
        }
        if (r.kind == "aux") {
          r.error = "not a fit target";
          return;
        }
        try {
          FitOptions o;
          if (r.kind == "acz") {
            if (flag("fit.fix_t2")) o.fixed_t2 = r.params.count("t2_us") ? std::stod(r.params.at("t2_us")) : num("fit.t2_us", 3.2);
            if (flag("fit.fix_contrast")) o.fixed_contrast = num("fit.contrast", 0.05);
          }
          const FitResult fit = r.kind == "rabi" ? fit_rabi_trace(lt.record.trace, o) : fit_acz_trace(lt.record.trace, o);
          r.fit = fit;
          if (r.kind == "rabi") {
            r.field = field_from_rabi(fit.frequency(), k);
            r.field_error = field_from_rabi(fit.frequency_error(), k);
          } else if (r.params.count("detuning_mhz")) {
            const auto a = amplitude_from_shift(fit.frequency(), std::stod(r.params.at("detuning_mhz")), k, mode,
                                                fit.frequency_error());
            r.field = a.field;
            r.field_error = a.field_error;
          }
          if (!fit.converged) r.error = "fit did not converge: " + fit.message;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      },
      threads);
  return out;
}

inline std::string fit_summary_csv(const std::vector<TraceFit>& fits) {
  std::ostringstream os;
  os << "name,kind,f_mw_mhz,detuning_mhz,f_fit_mhz,f_fit_stderr,field_mt,field_stderr_mt,converged,error\n";
  for (const auto& f : fits) {
    auto p = [&](const char* k) { return f.params.count(k) ? f.params.at(k) : std::string(); };
    os << f.name << ',' << f.kind << ',' << p("f_mw_mhz") << ',' << p("detuning_mhz") << ',';
    if (f.fit)
      os << format_double(f.fit->frequency()) << ',' << format_double(f.fit->frequency_error()) << ','
         << format_double(f.field) << ',' << format_double(f.field_error) << ','
         << (f.fit->converged ? "true" : "false");
    else
      os << ",,,,false";
    std::string e = f.error;
    for (char& ch : e)
      if (ch == ',' || ch == '\n') ch = ';';
    os << ',' << e << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Sensitivity scan
// ---------------------------------------------------------------------------

struct SensitivityScan {
  SensitivityReport report;
  std::vector<std::pair<int, PipelineResult>> by_pulses;
};

inline SensitivityScan run_sensitivity(const ExperimentConfig& c, unsigned threads = 0) {
  const auto& s = c.sensitivity;
  if (s.pulse_counts.empty()) throw ConfigError("sensitivity.pulse_counts is empty");
  const auto tau = c.protocol.tau.values();
  SensitivityScan out;
  out.by_pulses.resize(s.pulse_counts.size());
  parallel_for(
      s.pulse_counts.size(),
      [&](std::size_t i) {
        const int n_pi = s.pulse_counts[i];
        SignalModelParams p = c.physics;
        p.t2 = effective_t2(c, n_pi);
        const auto clean = clean_trace(c, p, n_pi, tau);
        PipelineOptions o;
        o.times = s.times;
        o.trials = s.trials;
        o.variance = s.variance;
        o.fit = fit_options(c, p.t2);
        o.stream = c.seed ^ static_cast<std::uint64_t>(n_pi);
        CameraModel cam = c.camera;
        out.by_pulses[i] = {n_pi, sigma_b_pipeline(clean, p, cam, o, c.constants)};
      },
      threads);

  auto& r = out.report;
  std::vector<double> n, eta, t2;
  for (const auto& [np, res] : out.by_pulses) {
    r.eta_by_pulses.emplace_back(np, res.eta.eta);
    n.push_back(np);
    eta.push_back(res.eta.eta);
    t2.push_back(effective_t2(c, np));
  }
  const auto& last = out.by_pulses.back().second;
  r.sigma_b_samples = last.samples;
  r.eta = last.eta.eta;
  r.sigma0 = last.eta.sigma0;
  bool all_positive = true;
  for (double e : eta) all_positive = all_positive && e > 0.0;
  if (n.size() >= 3 && all_positive) r.p = fit_pulse_scaling(n, eta);
  if (n.size() >= 2) r.s_t2 = fit_t2_scaling(n, t2);

  SignalModelParams b = c.physics;
  b.rabi = rabi_from_field(s.scan_field, c.constants);
  b.t2 = effective_t2(c, s.pulse_counts.back());
  const auto best = eta_best(b, c.camera, c.constants, s.tau_min, s.tau_max);
  r.eta_best = best.eta;
  r.tau_star = best.tau_star;
  for (double dlt : s.detuning_scan.values()) {
    SignalModelParams q = b;
    q.detuning = dlt;
    r.eta_best_by_detuning.emplace_back(dlt, eta_best(q, c.camera, c.constants, s.tau_min, s.tau_max).eta);
  }
  r.assumptions = {{"sigma_s", format_double(c.camera.sigma_s)},
                   {"contrast", format_double(c.physics.contrast)},
                   {"tau_read_us", format_double(c.camera.tau_read)},
                   {"t2_at_max_pulses_us", format_double(b.t2)},
                   {"scan_field_mt", format_double(s.scan_field)},
                   {"tau_grid_points", std::to_string(tau.size())},
                   {"generator", c.protocol.generator == Generator::closed_form ? "closed_form" : "simulate"},
                   {"variance_source", s.variance == VarianceSource::per_dataset ? "per_dataset" : "reference_scaled"}};
  return out;
}

}  // namespace acz
