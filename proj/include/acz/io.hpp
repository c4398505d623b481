#pragma once

// On-disk formats: trace CSV with a comment-line provenance block, key-value
// reports, field-map CSV matrices, and the FNV-1a hash used in manifests.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "acz/error.hpp"
#include "acz/estimation.hpp"
#include "acz/measurement.hpp"
#include "acz/signal_model.hpp"

namespace acz {

inline constexpr const char* trace_csv_header = "tau_us,contrast,sigma";

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest text that round-trips the double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string trace_to_csv(const SignalTrace& t) {
  std::ostringstream os;
  for (const auto& [k, v] : t.meta) os << "# " << k << ": " << v << '\n';
  os << "# integration_time_s: " << format_double(t.integration_time) << '\n';
  os << trace_csv_header << '\n';
  for (std::size_t i = 0; i < t.size(); ++i)
    os << format_double(t.tau[i]) << ',' << format_double(t.contrast[i]) << ','
       << format_double(i < t.sigma.size() ? t.sigma[i] : 0.0) << '\n';
  return os.str();
}

inline SignalTrace trace_from_csv(const std::string& text, const std::string& origin = "<memory>") {
  SignalTrace t;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw DatasetError(origin + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos || colon < 2) continue;
      std::string key = line.substr(2, colon - 2);
      std::string val = colon + 2 <= line.size() ? line.substr(colon + 2) : "";
      if (key == "integration_time_s")
        t.integration_time = std::strtod(val.c_str(), nullptr);
      else
        t.meta[key] = val;
      continue;
    }
    if (!header) {
      if (line != trace_csv_header) fail("expected header '" + std::string(trace_csv_header) + "'");
      header = true;
      continue;
    }
    double v[3];
    std::istringstream ls(line);
    std::string cell;
    int k = 0;
    while (std::getline(ls, cell, ',')) {
      if (k >= 3) fail("too many columns");
      char* end = nullptr;
      v[k] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') fail("not a number: '" + cell + "'");
      ++k;
    }
    if (k != 3) fail("expected 3 columns");
    t.tau.push_back(v[0]);
    t.contrast.push_back(v[1]);
    t.sigma.push_back(v[2]);
  }
  if (!header) fail("missing header");
  if (t.tau.empty()) fail("no data rows");
  try {
    check_grid(t.tau);
  } catch (const DomainError& e) {
    throw DatasetError(origin + ": " + e.what());
  }
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DatasetError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DatasetError("cannot write " + path);
  f << text;
  if (!f) throw DatasetError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// key = value
// ---------------------------------------------------------------------------

using KeyValue = std::map<std::string, std::string>;

inline std::string to_key_value(const KeyValue& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
  return os.str();
}

inline KeyValue parse_key_value(const std::string& text, const std::string& origin = "<memory>") {
  KeyValue kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DatasetError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

inline KeyValue fit_report(const FitResult& r) {
  KeyValue kv;
  const char* names[] = {"f_acz_mhz", "t2_us", "contrast", "offset"};
  for (int k = 0; k < 4; ++k) {
    kv[names[k]] = format_double(r.params(k));
    kv[std::string(names[k]) + "_stderr"] = format_double(r.error(k));
    kv[std::string(names[k]) + "_free"] = r.free[static_cast<std::size_t>(k)] ? "true" : "false";
  }
  kv["residual_variance"] = format_double(r.residual_variance);
  kv["reduced_chi2"] = format_double(r.reduced_chi2);
  kv["weighted"] = r.weighted ? "true" : "false";
  kv["converged"] = r.converged ? "true" : "false";
  kv["iterations"] = std::to_string(r.iterations);
  kv["points"] = std::to_string(r.points);
  kv["message"] = r.message;
  return kv;
}

// ---------------------------------------------------------------------------
// Field maps: CSV matrix (row = y) with invalid pixels as "nan", plus sidecar
// ---------------------------------------------------------------------------

inline std::string field_map_csv(const FieldMap& m) {
  std::ostringstream os;
  for (int iy = 0; iy < m.height; ++iy) {
    for (int ix = 0; ix < m.width; ++ix) {
      if (ix) os << ',';
      os << (m.valid(ix, iy) ? format_double(m.at(ix, iy)) : std::string("nan"));
    }
    os << '\n';
  }
  return os.str();
}

inline KeyValue field_map_sidecar(const FieldMap& m) {
  return {{"width", std::to_string(m.width)},
          {"height", std::to_string(m.height)},
          {"pixel_size_um", format_double(m.pixel_size)},
          {"origin_x_um", format_double(m.origin_x)},
          {"origin_y_um", format_double(m.origin_y)},
          {"units", "mT"},
          {"layout", "row-major, row index = y"}};
}

}  // namespace acz
