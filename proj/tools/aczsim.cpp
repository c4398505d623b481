// aczsim: config-driven front end for AC Zeeman magnetometry simulations.
//
// Exit codes: 0 success, 1 validation (config, flags), 2 runtime.
// Errors go to stderr as tab-separated lines: error<TAB>kind<TAB>where<TAB>message

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "acz/acz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { ok = 0, validation = 1, runtime = 2 };

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\t') c = ' ';
  return s;
}

void report(const std::string& kind, const std::string& where, const std::string& msg) {
  std::cerr << "error\t" << kind << '\t' << one_line(where) << '\t' << one_line(msg) << '\n';
}

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string format;
  std::string dataset;
};

struct Resolved {
  acz::ExperimentConfig config;
  std::string out;
  unsigned threads = 0;
  std::string format = "csv";
};

Resolved resolve(const Flags& f, bool need_config) {
  const acz::EnvOverrides env = acz::read_env();
  Resolved r;
  const auto seed = f.seed ? f.seed : env.seed;
  if (need_config) r.config = acz::load_config(f.config, seed);
  r.threads = f.threads.value_or(env.threads.value_or(0));
  r.format = !f.format.empty() ? f.format : env.format.value_or("csv");
  r.out = !f.out.empty() ? f.out : env.out.value_or(r.config.output_dir);
  return r;
}

std::string require_out(const Resolved& r) {
  if (r.out.empty())
    throw acz::ConfigValidationError(
        std::vector<acz::ConfigIssue>{{"output_dir", "no output directory (use --out, ACZSIM_OUT or output_dir)"}});
  std::error_code ec;
  fs::create_directories(r.out, ec);
  if (ec) throw acz::DatasetError("cannot create " + r.out + ": " + ec.message());
  return r.out;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

json to_json(const acz::KeyValue& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& f) {
  const Resolved r = resolve(f, true);
  const std::string out = require_out(r);
  const acz::Dataset d = acz::run_experiment(r.config, r.threads);
  acz::write_dataset(out, d, r.config.canonical);
  std::cout << "dataset\t" << out << "\ttraces\t" << d.traces.size() << "\tconfig_hash\t"
            << d.manifest.at("config_hash") << '\n';
  return ok;
}

int cmd_fit(const Flags& f) {
  const Resolved r = resolve(f, false);
  const acz::LoadedDataset ds = acz::read_dataset(f.dataset);
  const std::string out = r.out.empty() || r.out == r.config.output_dir ? path_in(f.dataset, "fits") : r.out;
  fs::create_directories(out);
  const auto fits = acz::fit_dataset(ds, r.threads);

  int failed = 0;
  json summary = json::array();
  for (const auto& t : fits) {
    if (t.kind == "aux") continue;
    if (!t.error.empty()) {
      report(t.fit ? "fit" : "dataset", t.name, t.error);
      ++failed;
    }
    if (!t.fit) continue;
    acz::KeyValue kv = acz::fit_report(*t.fit);
    for (const auto& [k, v] : t.params) kv["param." + k] = v;
    kv["field_mt"] = acz::format_double(t.field);
    kv["field_stderr_mt"] = acz::format_double(t.field_error);
    if (r.format == "json")
      acz::write_file(path_in(out, t.name + ".json"), to_json(kv).dump(2) + "\n");
    else
      acz::write_file(path_in(out, t.name + ".txt"), acz::to_key_value(kv));
    json row = to_json(kv);
    row["name"] = t.name;
    row["kind"] = t.kind;
    summary.push_back(row);
  }
  if (r.format == "json")
    acz::write_file(path_in(out, "summary.json"), summary.dump(2) + "\n");
  else
    acz::write_file(path_in(out, "summary.csv"), acz::fit_summary_csv(fits));

  if (ds.manifest.count("map.width")) {
    const int w = std::stoi(ds.manifest.at("map.width")), h = std::stoi(ds.manifest.at("map.height"));
    for (const char* kind : {"acz", "rabi"}) {
      acz::FieldMap m;
      m.width = w;
      m.height = h;
      m.pixel_size = std::stod(ds.manifest.at("map.pixel_size_um"));
      m.values.assign(static_cast<std::size_t>(w) * h, 0.0);
      m.mask.assign(m.values.size(), 0);
      for (const auto& t : fits) {
        if (t.kind != kind || !t.fit || !t.error.empty() || !std::isfinite(t.field)) continue;
        const int ix = std::stoi(t.params.at("ix")), iy = std::stoi(t.params.at("iy"));
        m.at(ix, iy) = t.field;
        m.mask[static_cast<std::size_t>(iy) * w + ix] = 1;
      }
      acz::write_file(path_in(out, std::string("map_") + kind + ".csv"), acz::field_map_csv(m));
      const auto range = acz::map_range(m);
      std::cout << "map\t" << kind << "\tmin_mt\t" << acz::format_double(range.min) << "\tmax_mt\t"
                << acz::format_double(range.max) << "\tvalid\t" << range.valid << '\n';
    }
  }
  std::cout << "fits\t" << out << "\tfailed\t" << failed << '\n';
  return failed ? runtime : ok;
}

int cmd_sensitivity(const Flags& f) {
  const Resolved r = resolve(f, true);
  if (r.config.scenario != acz::Scenario::sensitivity_scan)
    throw acz::ConfigValidationError(
        std::vector<acz::ConfigIssue>{{"scenario", "sensitivity needs scenario sensitivity-scan"}});
  const std::string out = require_out(r);
  const auto scan = acz::run_sensitivity(r.config, r.threads);
  const auto& rep = scan.report;
  const double u = acz::mt_sqrt_s_to_ut_per_sqrt_hz;

  if (r.format == "json") {
    json j;
    j["config_hash"] = acz::hex64(acz::fnv1a64(r.config.canonical));
    j["eta_ut_per_sqrt_hz"] = rep.eta * u;
    j["sigma0_mt"] = rep.sigma0;
    if (rep.p) j["p"] = *rep.p;
    if (rep.s_t2) j["s_t2"] = *rep.s_t2;
    j["eta_best_ut_per_sqrt_hz"] = rep.eta_best * u;
    j["tau_star_us"] = rep.tau_star;
    for (const auto& [n, res] : scan.by_pulses) {
      json row = {{"n_pi", n}, {"eta_ut_per_sqrt_hz", res.eta.eta * u}, {"sigma0_mt", res.eta.sigma0}};
      for (const auto& s : res.samples) row["sigma_b"].push_back({{"time_s", s.time}, {"sigma_b_mt", s.sigma}});
      j["by_pulses"].push_back(row);
    }
    for (const auto& [dlt, e] : rep.eta_best_by_detuning)
      j["eta_best_by_detuning"].push_back({{"detuning_mhz", dlt}, {"eta_ut_per_sqrt_hz", e * u}});
    j["assumptions"] = to_json(rep.assumptions);
    acz::write_file(path_in(out, "sensitivity.json"), j.dump(2) + "\n");
  } else {
    std::string report_text = "config_hash = " + acz::hex64(acz::fnv1a64(r.config.canonical)) + "\n";
    report_text += acz::to_key_value(rep);
    acz::write_file(path_in(out, "sensitivity_report.txt"), report_text);
    std::string sb = "n_pi,time_s,sigma_b_mt\n", ep = "n_pi,eta_ut_per_sqrt_hz,sigma0_mt\n",
                eb = "detuning_mhz,eta_best_ut_per_sqrt_hz\n";
    for (const auto& [n, res] : scan.by_pulses) {
      for (const auto& s : res.samples)
        sb += std::to_string(n) + "," + acz::format_double(s.time) + "," + acz::format_double(s.sigma) + "\n";
      ep += std::to_string(n) + "," + acz::format_double(res.eta.eta * u) + "," + acz::format_double(res.eta.sigma0) +
            "\n";
    }
    for (const auto& [dlt, e] : rep.eta_best_by_detuning)
      eb += acz::format_double(dlt) + "," + acz::format_double(e * u) + "\n";
    acz::write_file(path_in(out, "sigma_b.csv"), sb);
    acz::write_file(path_in(out, "eta_by_pulses.csv"), ep);
    acz::write_file(path_in(out, "eta_best_by_detuning.csv"), eb);
  }
  std::cout << "sensitivity\t" << out << "\teta_ut_per_sqrt_hz\t" << acz::format_double(rep.eta * u);
  if (rep.p) std::cout << "\tp\t" << acz::format_double(*rep.p);
  std::cout << "\teta_best_ut_per_sqrt_hz\t" << acz::format_double(rep.eta_best * u) << '\n';
  return ok;
}

int cmd_field_map(const Flags& f) {
  const Resolved r = resolve(f, true);
  const std::string out = require_out(r);
  const auto m = acz::synth_field_map(r.config.imaging.antenna, r.config.imaging.pixels);
  if (r.format == "json") {
    json j = to_json(acz::field_map_sidecar(m));
    j["values_mt"] = m.values;
    acz::write_file(path_in(out, "field_map.json"), j.dump(2) + "\n");
  } else {
    acz::write_file(path_in(out, "field_map.csv"), acz::field_map_csv(m));
    acz::write_file(path_in(out, "field_map.txt"), acz::to_key_value(acz::field_map_sidecar(m)));
  }
  const auto range = acz::map_range(m);
  std::cout << "field-map\t" << out << "\tmin_mt\t" << acz::format_double(range.min) << "\tmax_mt\t"
            << acz::format_double(range.max) << "\tratio\t" << acz::format_double(range.ratio()) << '\n';
  return ok;
}

int cmd_validate(const Flags& f) {
  const Resolved r = resolve(f, true);
  std::cout << "valid\t" << acz::to_string(r.config.scenario) << "\tconfig_hash\t"
            << acz::hex64(acz::fnv1a64(r.config.canonical)) << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AC Zeeman magnetometry simulator"};
  app.set_version_flag("--version", acz::version_string);
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* s, bool config) {
    if (config) s->add_option("--config", f.config, "experiment config (JSON, comments allowed)")->required();
    s->add_option("--threads", f.threads, "worker threads (0 = all cores); env ACZSIM_THREADS");
    s->add_option("--format", f.format, "summary format; env ACZSIM_FORMAT")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* sim = app.add_subcommand("simulate", "generate a dataset from a config");
  common(sim, true);
  sim->add_option("--out", f.out, "dataset directory; env ACZSIM_OUT");
  sim->add_option("--seed", f.seed, "override the config seed; env ACZSIM_SEED");

  auto* fit = app.add_subcommand("fit", "fit every trace of a dataset");
  common(fit, false);
  fit->add_option("dataset", f.dataset, "dataset directory")->required();
  fit->add_option("--out", f.out, "report directory (default <dataset>/fits); env ACZSIM_OUT");

  auto* sens = app.add_subcommand("sensitivity", "sigma_B(T), eta per pulse count, eta_best(detuning)");
  common(sens, true);
  sens->add_option("--out", f.out, "report directory; env ACZSIM_OUT");
  sens->add_option("--seed", f.seed, "override the config seed; env ACZSIM_SEED");

  auto* fmap = app.add_subcommand("field-map", "antenna field map from the imaging block");
  common(fmap, true);
  fmap->add_option("--out", f.out, "output directory; env ACZSIM_OUT");

  auto* val = app.add_subcommand("validate-config", "check a config and print its hash");
  val->add_option("--config", f.config, "experiment config")->required();
  val->add_option("--seed", f.seed, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.get_name(), e.what());
    return validation;
  }

  try {
    if (*sim) return cmd_simulate(f);
    if (*fit) return cmd_fit(f);
    if (*sens) return cmd_sensitivity(f);
    if (*fmap) return cmd_field_map(f);
    if (*val) return cmd_validate(f);
  } catch (const acz::ConfigValidationError& e) {
    for (const auto& i : e.issues) report("config", i.where, i.message);
    return validation;
  } catch (const acz::ConfigError& e) {
    report("config", "-", e.what());
    return validation;
  } catch (const acz::DatasetError& e) {
    report("dataset", "-", e.what());
    return runtime;
  } catch (const acz::DomainError& e) {
    report("domain", "-", e.what());
    return runtime;
  } catch (const std::exception& e) {
    report("runtime", "-", e.what());
    return runtime;
  }
  return runtime;
}
