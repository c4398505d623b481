#pragma once

// JSON experiment config (comments allowed). Every object rejects unknown
// keys; all problems are collected and reported together.

#include <cerrno>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "acz/error.hpp"
#include "acz/experiment.hpp"
#include "acz/version.hpp"

namespace acz {

struct ConfigIssue {
  std::string where;  ///< JSON path, e.g. protocol.tau_us.points
  std::string message;
};

struct ConfigValidationError : ConfigError {
  std::vector<ConfigIssue> issues;
  explicit ConfigValidationError(std::vector<ConfigIssue> list)
      : ConfigError(summary(list)), issues(std::move(list)) {}

  static std::string summary(const std::vector<ConfigIssue>& list) {
    std::string s = std::to_string(list.size()) + " config error(s)";
    for (const auto& i : list) s += "\n  " + i.where + ": " + i.message;
    return s;
  }
};

namespace detail {

using json = nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<ConfigIssue>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& where, const std::string& msg) { issues_.push_back({where, msg}); }

  const json* raw(const std::string& key, bool required = false) {
    seen_.insert(key);
    if (!has(key)) {
      if (required) fail(path(key), "required");
      return nullptr;
    }
    return &j_.at(key);
  }

  void number(const std::string& key, double& out, const std::function<bool(double)>& ok = {}, const char* rule = "",
              bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    if (!v->is_number()) return fail(path(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || (ok && !ok(x))) return fail(path(key), std::string("must be ") + rule);
    out = x;
  }

  void integer(const std::string& key, int& out, int lo, int hi, bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    if (!v->is_number_integer()) return fail(path(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < lo || x > hi)
      return fail(path(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = static_cast<int>(x);
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_boolean()) return fail(path(key), "expected true or false");
    out = v->get<bool>();
  }

  void text(const std::string& key, std::string& out, bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    if (!v->is_string()) return fail(path(key), "expected a string");
    out = v->get<std::string>();
  }

  template <class E>
  void choice(const std::string& key, E& out, const std::vector<std::pair<const char*, E>>& options,
              bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (v->is_string() && v->get<std::string>() == name) {
        out = value;
        return;
      }
      allowed += allowed.empty() ? name : std::string(", ") + name;
    }
    fail(path(key), "expected one of: " + allowed);
  }

  std::optional<ObjectReader> object(const std::string& key, bool required = false) {
    const json* v = raw(key, required);
    if (!v) return std::nullopt;
    if (!v->is_object()) {
      fail(path(key), "expected an object");
      return std::nullopt;
    }
    return ObjectReader(*v, path(key), issues_);
  }

  void numbers(const std::string& key, std::vector<double>& out, const std::function<bool(double)>& ok = {},
               const char* rule = "", bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    if (!v->is_array()) return fail(path(key), "expected an array of numbers");
    std::vector<double> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      const std::string where = path(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number()) return fail(where, "expected a number");
      const double x = e.get<double>();
      if (!std::isfinite(x) || (ok && !ok(x))) return fail(where, std::string("must be ") + rule);
      tmp.push_back(x);
    }
    out = std::move(tmp);
  }

  void integers(const std::string& key, std::vector<int>& out, int lo, int hi) {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array()) return fail(path(key), "expected an array of integers");
    std::vector<int> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      const std::string where = path(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number_integer() || e.get<long long>() < lo || e.get<long long>() > hi)
        return fail(where, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      tmp.push_back(e.get<int>());
    }
    out = std::move(tmp);
  }

  /// Either a list of values or {start, stop, points, spacing}.
  void grid(const std::string& key, Grid& out, bool positive, bool required = false) {
    const json* v = raw(key, required);
    if (!v) return;
    const std::string where = path(key);
    Grid g;
    if (v->is_array()) {
      numbers(key, g.explicit_values);
      if (g.explicit_values.empty()) return fail(where, "must not be empty");
    } else if (v->is_object()) {
      ObjectReader r(*v, where, issues_);
      const std::size_t before = issues_.size();
      r.number("start", g.start, {}, "", true);
      r.number("stop", g.stop, {}, "", true);
      r.integer("points", g.points, 1, 1000000, true);
      r.choice<bool>("spacing", g.log, {{"linear", false}, {"log", true}});
      r.finish();
      if (issues_.size() != before) return;
      if (g.points > 1 && !(g.stop > g.start)) return fail(where, "stop must exceed start");
      if (g.log && !(g.start > 0.0)) return fail(where, "log spacing needs start > 0");
    } else {
      return fail(where, "expected an array or {start, stop, points, spacing}");
    }
    const auto vals = g.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (positive && !(vals[i] > 0.0)) return fail(where, "values must be positive");
      if (i > 0 && !(vals[i] > vals[i - 1])) return fail(where, "values must be strictly increasing");
    }
    out = g;
  }

  void finish() {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) fail(path(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<ConfigIssue>& issues_;
  std::set<std::string> seen_;
};

inline const auto positive = [](double x) { return x > 0.0; };
inline const auto non_negative = [](double x) { return x >= 0.0; };

inline json grid_json(const Grid& g) {
  if (!g.explicit_values.empty()) return g.explicit_values;
  return {{"start", g.start}, {"stop", g.stop}, {"points", g.points}, {"spacing", g.log ? "log" : "linear"}};
}

}  // namespace detail

inline const std::vector<std::pair<const char*, Scenario>> scenario_names = {
    {"amplitude-sweep", Scenario::amplitude_sweep},
    {"frequency-sweep", Scenario::frequency_sweep},
    {"imaging", Scenario::imaging},
    {"sensitivity-scan", Scenario::sensitivity_scan},
    {"comb-study", Scenario::comb_study}};

/// Full resolved config as JSON; keys sorted, every default spelled out.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j;
  j["schema_version"] = c.schema_version;
  j["scenario"] = to_string(c.scenario);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["physics"] = {{"rabi_mhz", c.physics.rabi},
                  {"detuning_mhz", c.physics.detuning},
                  {"t2_us", c.physics.t2},
                  {"contrast", c.physics.contrast},
                  {"f_nv_mhz", c.physics.f_nv}};
  j["constants"] = {{"gamma_e_mhz_per_mt", c.constants.gamma_e}, {"rabi_factor", c.constants.rabi_factor}};
  j["shift_mode"] = c.shift_mode == ShiftMode::exact ? "exact" : "approx";
  const auto& p = c.protocol;
  const char* style = p.control.style == PulseStyle::ideal ? "ideal"
                      : p.control.style == PulseStyle::plain ? "plain"
                                                              : "scrofulous";
  j["protocol"] = {{"sequence", p.sequence == Protocol::cp2 ? "cp2" : "xy8"},
                   {"n", p.n},
                   {"tau_us", detail::grid_json(p.tau)},
                   {"pulse_style", style},
                   {"control_rabi_mhz", p.control.rabi},
                   {"length_error", p.control.length_error},
                   {"generator", p.generator == Generator::closed_form ? "closed-form" : "simulate"},
                   {"phase_step", p.phase_step}};
  if (p.t2_scaling)
    j["protocol"]["t2_scaling"] = {
        {"t2_ref_us", p.t2_scaling->t2_ref}, {"n_ref", p.t2_scaling->n_ref}, {"exponent", p.t2_scaling->s}};
  j["camera"] = {{"tau_read_us", c.camera.tau_read},
                 {"counts_bright", c.camera.counts_bright},
                 {"sigma_s", c.camera.sigma_s},
                 {"noise", c.camera.noise == NoiseMode::gaussian ? "gaussian" : "poisson"}};
  j["integration_time_s"] = c.integration_time;
  j["add_noise"] = c.add_noise;
  j["fit"] = {{"fix_t2", c.fit.fix_t2}, {"fix_contrast", c.fit.fix_contrast}};
  switch (c.scenario) {
    case Scenario::amplitude_sweep: j["amplitudes_mt"] = c.amplitudes; break;
    case Scenario::frequency_sweep: {
      const auto& r = c.resonator;
      j["f_mw_mhz"] = detail::grid_json(c.f_mw);
      j["resonator"] = {{"f0_mhz", r.f0},          {"q_factor", r.q_factor},         {"coupling", r.coupling},
                        {"drive_amp_mt", r.drive_amp}, {"ripple_depth", r.ripple_depth}, {"ripple_period_mhz", r.ripple_period}};
      break;
    }
    case Scenario::imaging: {
      const auto& a = c.imaging.antenna;
      const auto& g = c.imaging.pixels;
      const char* comp = a.component == FieldComponent::magnitude ? "magnitude"
                         : a.component == FieldComponent::in_plane ? "in-plane"
                                                                   : "normal";
      j["imaging"] = {{"antenna",
                       {{"outer_diameter_um", a.outer_diameter},
                        {"inner_diameter_um", a.inner_diameter},
                        {"current_a", a.current},
                        {"gap_width_um", a.gap_width},
                        {"lead_length_um", a.lead_length},
                        {"filaments", a.filaments},
                        {"arc_segments", a.arc_segments},
                        {"loop_only", a.loop_only},
                        {"standoff_um", a.standoff},
                        {"component", comp}}},
                      {"pixels",
                       {{"width", g.width},
                        {"height", g.height},
                        {"pixel_size_um", g.pixel_size},
                        {"center_x_um", g.center_x},
                        {"center_y_um", g.center_y}}},
                      {"rabi_durations_us", detail::grid_json(c.imaging.rabi_durations)},
                      {"rabi_t2_us", c.imaging.rabi_t2},
                      {"rabi_scale", c.imaging.rabi_scale}};
      break;
    }
    case Scenario::sensitivity_scan: {
      const auto& s = c.sensitivity;
      j["sensitivity"] = {{"pulse_counts", s.pulse_counts},
                          {"times_s", s.times},
                          {"trials", s.trials},
                          {"variance_source", s.variance == VarianceSource::per_dataset ? "per-dataset" : "reference-scaled"},
                          {"detuning_scan_mhz", detail::grid_json(s.detuning_scan)},
                          {"scan_field_mt", s.scan_field},
                          {"tau_min_us", s.tau_min},
                          {"tau_max_us", s.tau_max}};
      break;
    }
    case Scenario::comb_study:
      j["comb"] = {{"n", c.comb.n},
                   {"tau_max_us", c.comb.tau_max},
                   {"step_factor", c.comb.step_factor},
                   {"cutoff_mhz", c.comb.cutoff}};
      break;
  }
  return j;
}

/// Validates and resolves a parsed config. `seed_override` replaces the
/// config seed and satisfies the required-seed rule.
inline ExperimentConfig config_from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {}) {
  using detail::non_negative;
  using detail::positive;
  std::vector<ConfigIssue> issues;
  ExperimentConfig c;
  detail::ObjectReader root(j, "", issues);
  if (!issues.empty()) throw ConfigValidationError(issues);

  root.integer("schema_version", c.schema_version, 1, 1000, true);
  if (root.has("schema_version") && c.schema_version != config_schema_version)
    root.fail("schema_version", "unsupported (this build reads " + std::to_string(config_schema_version) + ")");
  root.choice("scenario", c.scenario, scenario_names, true);
  if (const auto* s = root.raw("seed", !seed_override)) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      root.fail("seed", "expected a non-negative integer");
    else
      c.seed = s->get<std::uint64_t>();
  }
  if (seed_override) c.seed = *seed_override;
  root.text("output_dir", c.output_dir);

  if (auto r = root.object("physics")) {
    r->number("rabi_mhz", c.physics.rabi, non_negative, "non-negative");
    r->number("detuning_mhz", c.physics.detuning);
    r->number("t2_us", c.physics.t2, positive, "positive");
    r->number("contrast", c.physics.contrast, [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
    r->number("f_nv_mhz", c.physics.f_nv, positive, "positive");
    r->finish();
  }
  if (auto r = root.object("constants")) {
    if (r->has("system")) {
      bool two = false;
      r->choice<bool>("system", two, {{"nv", false}, {"two-level", true}});
      c.constants = two ? PhysicalConstants::two_level() : PhysicalConstants::nv();
    }
    r->number("gamma_e_mhz_per_mt", c.constants.gamma_e, positive, "positive");
    r->number("rabi_factor", c.constants.rabi_factor, positive, "positive");
    r->finish();
  }
  root.choice("shift_mode", c.shift_mode, {{"approx", ShiftMode::approx}, {"exact", ShiftMode::exact}});

  if (auto r = root.object("protocol")) {
    auto& p = c.protocol;
    r->choice("sequence", p.sequence, {{"cp2", Protocol::cp2}, {"xy8", Protocol::xy8}});
    r->integer("n", p.n, 1, 4096);
    r->grid("tau_us", p.tau, true);
    r->choice("pulse_style", p.control.style,
              {{"ideal", PulseStyle::ideal}, {"plain", PulseStyle::plain}, {"scrofulous", PulseStyle::scrofulous}});
    r->number("control_rabi_mhz", p.control.rabi, positive, "positive");
    r->number("length_error", p.control.length_error, [](double x) { return x > -1.0; }, "greater than -1");
    r->choice("generator", p.generator, {{"closed-form", Generator::closed_form}, {"simulate", Generator::simulate}});
    r->number("phase_step", p.phase_step, [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
    if (auto t = r->object("t2_scaling")) {
      T2Scaling s;
      t->number("t2_ref_us", s.t2_ref, positive, "positive");
      t->number("n_ref", s.n_ref, positive, "positive");
      t->number("exponent", s.s);
      t->finish();
      p.t2_scaling = s;
    }
    r->finish();
    if (p.sequence == Protocol::cp2 && p.n != 1) r->fail("protocol.n", "cp2 takes n = 1");
  }
  if (auto r = root.object("camera")) {
    r->number("tau_read_us", c.camera.tau_read, positive, "positive");
    r->number("counts_bright", c.camera.counts_bright, positive, "positive");
    r->number("sigma_s", c.camera.sigma_s, non_negative, "non-negative");
    r->choice("noise", c.camera.noise, {{"gaussian", NoiseMode::gaussian}, {"poisson", NoiseMode::poisson}});
    r->finish();
  }
  c.camera.seed = c.seed;
  root.number("integration_time_s", c.integration_time, positive, "positive");
  root.boolean("add_noise", c.add_noise);
  if (auto r = root.object("fit")) {
    r->boolean("fix_t2", c.fit.fix_t2);
    r->boolean("fix_contrast", c.fit.fix_contrast);
    r->finish();
  }

  auto only_for = [&](const char* key, Scenario s) {
    if (root.has(key) && c.scenario != s) {
      root.raw(key);
      root.fail(key, std::string("only valid for scenario ") + to_string(s));
      return false;
    }
    return c.scenario == s;
  };

  if (only_for("amplitudes_mt", Scenario::amplitude_sweep)) {
    root.numbers("amplitudes_mt", c.amplitudes, non_negative, "non-negative", true);
    if (root.has("amplitudes_mt") && c.amplitudes.empty()) root.fail("amplitudes_mt", "must not be empty");
  }
  const bool fsweep = only_for("f_mw_mhz", Scenario::frequency_sweep);
  only_for("resonator", Scenario::frequency_sweep);
  if (fsweep) {
    root.grid("f_mw_mhz", c.f_mw, true, true);
    if (auto r = root.object("resonator")) {
      auto& s = c.resonator;
      r->number("f0_mhz", s.f0, positive, "positive");
      r->number("q_factor", s.q_factor, positive, "positive");
      r->number("coupling", s.coupling, [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]");
      r->number("drive_amp_mt", s.drive_amp, non_negative, "non-negative");
      r->number("ripple_depth", s.ripple_depth, [](double x) { return x >= 0.0 && x < 1.0; }, "in [0, 1)");
      r->number("ripple_period_mhz", s.ripple_period, positive, "positive");
      r->finish();
    }
    for (double f : c.f_mw.values())
      if (!(c.physics.f_nv - f > 0.0)) {
        root.fail("f_mw_mhz", "every frequency must lie below physics.f_nv_mhz");
        break;
      }
  }
  if (only_for("imaging", Scenario::imaging)) {
    if (auto r = root.object("imaging")) {
      auto& m = c.imaging;
      if (auto a = r->object("antenna")) {
        auto& g = m.antenna;
        a->number("outer_diameter_um", g.outer_diameter, positive, "positive");
        a->number("inner_diameter_um", g.inner_diameter, positive, "positive");
        a->number("current_a", g.current);
        a->number("gap_width_um", g.gap_width, non_negative, "non-negative");
        a->number("lead_length_um", g.lead_length, non_negative, "non-negative");
        a->integer("filaments", g.filaments, 1, 1024);
        a->integer("arc_segments", g.arc_segments, 8, 100000);
        a->boolean("loop_only", g.loop_only);
        a->number("standoff_um", g.standoff, positive, "positive");
        a->choice("component", g.component,
                  {{"magnitude", FieldComponent::magnitude},
                   {"in-plane", FieldComponent::in_plane},
                   {"normal", FieldComponent::normal}});
        a->finish();
        if (!(g.outer_diameter > g.inner_diameter)) a->fail("imaging.antenna", "outer diameter must exceed inner");
      }
      if (auto g = r->object("pixels")) {
        g->integer("width", m.pixels.width, 1, 4096);
        g->integer("height", m.pixels.height, 1, 4096);
        g->number("pixel_size_um", m.pixels.pixel_size, positive, "positive");
        g->number("center_x_um", m.pixels.center_x);
        g->number("center_y_um", m.pixels.center_y);
        g->finish();
      }
      r->grid("rabi_durations_us", m.rabi_durations, false);
      r->number("rabi_t2_us", m.rabi_t2, positive, "positive");
      r->number("rabi_scale", m.rabi_scale, positive, "positive");
      r->finish();
    }
  }
  if (only_for("sensitivity", Scenario::sensitivity_scan)) {
    if (auto r = root.object("sensitivity")) {
      auto& s = c.sensitivity;
      r->integers("pulse_counts", s.pulse_counts, 1, 100000);
      r->numbers("times_s", s.times, positive, "positive");
      r->integer("trials", s.trials, 1, 100000);
      r->choice("variance_source", s.variance,
                {{"per-dataset", VarianceSource::per_dataset}, {"reference-scaled", VarianceSource::reference_scaled}});
      r->grid("detuning_scan_mhz", s.detuning_scan, true);
      r->number("scan_field_mt", s.scan_field, positive, "positive");
      r->number("tau_min_us", s.tau_min, positive, "positive");
      r->number("tau_max_us", s.tau_max, positive, "positive");
      r->finish();
      if (s.pulse_counts.empty()) r->fail("sensitivity.pulse_counts", "must not be empty");
      for (int n : s.pulse_counts)
        if (n != 2 && n % 8 != 0) {
          r->fail("sensitivity.pulse_counts", "each count must be 2 (cp2) or a multiple of 8 (xy8)");
          break;
        }
      if (s.times.size() < 3) r->fail("sensitivity.times_s", "needs at least 3 integration times");
      if (!(s.tau_max > s.tau_min)) r->fail("sensitivity.tau_max_us", "must exceed tau_min_us");
    }
  }
  if (only_for("comb", Scenario::comb_study)) {
    if (auto r = root.object("comb")) {
      r->integer("n", c.comb.n, 1, 4096);
      r->number("tau_max_us", c.comb.tau_max, positive, "positive");
      r->number("step_factor", c.comb.step_factor, [](double x) { return x > 0.0 && x <= 0.5; }, "in (0, 0.5]");
      r->number("cutoff_mhz", c.comb.cutoff, positive, "positive");
      r->finish();
    }
  }
  root.finish();
  if (!issues.empty()) throw ConfigValidationError(issues);

  try {
    validate(c.physics);
    validate(c.camera);
    if (c.scenario == Scenario::frequency_sweep) validate(c.resonator);
    if (c.scenario == Scenario::imaging) validate(c.imaging.antenna);
    check_grid(c.protocol.tau.values());
  } catch (const DomainError& e) {
    throw ConfigValidationError(std::vector<ConfigIssue>{{"<config>", e.what()}});
  }
  if (c.scenario != Scenario::comb_study && c.scenario != Scenario::imaging && !(c.physics.rabi >= 0.0))
    throw ConfigValidationError(std::vector<ConfigIssue>{{"physics.rabi_mhz", "must be non-negative"}});
  if (c.scenario == Scenario::sensitivity_scan && !(c.physics.detuning > 0.0))
    throw ConfigValidationError(std::vector<ConfigIssue>{{"physics.detuning_mhz", "sensing needs a positive detuning"}});
  c.canonical = config_to_json(c).dump(2) + "\n";
  return c;
}

inline nlohmann::json parse_config_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigValidationError(std::vector<ConfigIssue>{{"<syntax>", e.what()}});
  }
}

inline ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {}) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DatasetError& e) {
    throw ConfigValidationError(std::vector<ConfigIssue>{{path, e.what()}});
  }
  return config_from_json(parse_config_text(text), seed_override);
}

// ---------------------------------------------------------------------------
// Environment overrides: ACZSIM_SEED, ACZSIM_THREADS, ACZSIM_OUT, ACZSIM_FORMAT.
// Command-line flags take precedence over these, which take precedence over
// the config file.
// ---------------------------------------------------------------------------

inline constexpr const char* env_prefix = "ACZSIM_";

struct EnvOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

using EnvLookup = std::function<const char*(const char*)>;

inline EnvOverrides read_env(const EnvLookup& get = [](const char* k) { return std::getenv(k); }) {
  EnvOverrides e;
  std::vector<ConfigIssue> issues;
  auto unsigned_value = [&](const char* name) -> std::optional<std::uint64_t> {
    const std::string key = std::string(env_prefix) + name;
    const char* v = get(key.c_str());
    if (!v) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(v, &end, 10);
    if (!*v || *end || errno || v[0] == '-') {
      issues.push_back({key, "expected a non-negative integer"});
      return std::nullopt;
    }
    return x;
  };
  e.seed = unsigned_value("SEED");
  if (auto t = unsigned_value("THREADS")) e.threads = static_cast<unsigned>(*t);
  if (const char* v = get((std::string(env_prefix) + "OUT").c_str())) e.out = v;
  if (const char* v = get((std::string(env_prefix) + "FORMAT").c_str())) {
    e.format = v;
    if (*e.format != "csv" && *e.format != "json") issues.push_back({"ACZSIM_FORMAT", "expected csv or json"});
  }
  if (!issues.empty()) throw ConfigValidationError(issues);
  return e;
}

}  // namespace acz
