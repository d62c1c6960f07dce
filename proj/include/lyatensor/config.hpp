#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/integrate.hpp"
#include "lyatensor/systems.hpp"

namespace lyatensor {

// Raised for malformed config text or invalid/unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class AnalysisKind {
  tensor_scan,
  certify_local,
  certify_asymptotic,
  exponent,
  spectrum,
  identity_check,
  tensoriality_check,
};

inline const char* to_string(AnalysisKind a) {
  switch (a) {
    case AnalysisKind::tensor_scan: return "tensor_scan";
    case AnalysisKind::certify_local: return "certify_local";
    case AnalysisKind::certify_asymptotic: return "certify_asymptotic";
    case AnalysisKind::exponent: return "exponent";
    case AnalysisKind::spectrum: return "spectrum";
    case AnalysisKind::identity_check: return "identity_check";
    case AnalysisKind::tensoriality_check: return "tensoriality_check";
  }
  return "?";
}

enum class MetricKind { euclidean, scaled, pullback };

inline const char* to_string(MetricKind m) {
  switch (m) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::scaled: return "scaled";
    case MetricKind::pullback: return "pullback";
  }
  return "?";
}

struct RunConfig {
  std::string system_name;
  ParamMap system_params;     // overrides only
  std::vector<double> y0;     // empty: use the registry reference state

  MetricKind metric = MetricKind::euclidean;
  std::string profile_kind = "constant";  // constant | exponential
  double profile_value = 1.0;             // constant profile weight
  double profile_rate = 0.0;              // exponential profile rate
  bool has_lambda = false;
  double lambda = 0.0;  // pullback target exponent (factor-two convention)
  bool has_t_ref = false;
  double t_ref = 0.0;

  AnalysisKind analysis = AnalysisKind::tensor_scan;

  bool has_window = false;
  double window_start = 0.0;
  double window_end = 0.0;
  bool has_horizon = false;
  double horizon = 0.0;
  double renorm_interval = 0.5;
  double tube_radius = 0.5;
  int samples_time = 25;
  int samples_space = 8;
  int samples_count = 100;  // draws for identity/tensoriality/tensor scans
  int quad_order = 12;
  uint64_t seed = 1;
  int series_points = 200;

  IntegratorConfig integrator;

  // The config text's resolved key/value view, in file order, for the report.
  std::vector<std::pair<std::string, std::string>> resolved;
};

namespace detail {

struct RawEntry {
  std::string value;
  int line = 0;
  int col = 0;  // 1-based column of the value
};

inline double parse_double(const std::string& key, const RawEntry& e) {
  try {
    size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    while (pos < e.value.size() && std::isspace(static_cast<unsigned char>(e.value[pos])))
      ++pos;
    if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(e.line) + ", column " +
                      std::to_string(e.col) + ": value for '" + key +
                      "' is not a number: '" + e.value + "'");
  }
}

inline int64_t parse_int(const std::string& key, const RawEntry& e) {
  const double v = parse_double(key, e);
  const int64_t i = static_cast<int64_t>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("line " + std::to_string(e.line) + ", column " +
                      std::to_string(e.col) + ": value for '" + key +
                      "' must be an integer: '" + e.value + "'");
  return i;
}

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

// Parses the flat dotted key=value run-configuration format:
//   system.name = lorenz
//   analysis.kind = spectrum
//   # comments and blank lines are fine
// Unknown keys are rejected by name; malformed lines report line and column.
inline RunConfig parse_config(const std::string& text) {
  std::map<std::string, detail::RawEntry> entries;
  std::vector<std::string> order;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ", column " +
                        std::to_string(line.size() + 1) +
                        ": expected 'key = value', found no '='");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ", column 1: empty key before '='");
    detail::RawEntry e;
    e.value = detail::trim(line.substr(eq + 1));
    e.line = lineno;
    size_t vcol = eq + 1;
    while (vcol < line.size() && std::isspace(static_cast<unsigned char>(line[vcol])))
      ++vcol;
    e.col = static_cast<int>(vcol + 1);
    if (e.value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ", column " +
                        std::to_string(e.col) + ": empty value for '" + key + "'");
    if (entries.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "'");
    entries.emplace(key, std::move(e));
    order.push_back(key);
  }

  RunConfig cfg;
  std::set<std::string> used;
  auto take = [&](const std::string& key) -> const detail::RawEntry* {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };

  if (const auto* e = take("system.name")) cfg.system_name = e->value;
  if (cfg.system_name.empty())
    throw ConfigError("missing required key 'system.name'");
  const SystemSpec* spec = find_system(cfg.system_name);
  if (!spec) {
    const auto& e = entries.at("system.name");
    throw ConfigError("line " + std::to_string(e.line) + ", column " +
                      std::to_string(e.col) + ": unknown system '" + cfg.system_name +
                      "'");
  }

  for (const ParamSpec& ps : spec->params)
    if (const auto* e = take("system.param." + ps.name))
      cfg.system_params[ps.name] = detail::parse_double("system.param." + ps.name, *e);

  if (const auto* e = take("system.y0")) {
    std::istringstream vs(e->value);
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      detail::RawEntry sub{detail::trim(tok), e->line, e->col};
      cfg.y0.push_back(detail::parse_double("system.y0", sub));
    }
    if (static_cast<int>(cfg.y0.size()) != spec->dim)
      throw ConfigError("line " + std::to_string(e->line) + ": 'system.y0' needs " +
                        std::to_string(spec->dim) + " comma-separated numbers");
  }

  if (const auto* e = take("metric.kind")) {
    if (e->value == "euclidean") cfg.metric = MetricKind::euclidean;
    else if (e->value == "scaled") cfg.metric = MetricKind::scaled;
    else if (e->value == "pullback") cfg.metric = MetricKind::pullback;
    else
      throw ConfigError("line " + std::to_string(e->line) + ", column " +
                        std::to_string(e->col) + ": unknown metric kind '" + e->value +
                        "' (expected euclidean|scaled|pullback)");
  }
  if (const auto* e = take("metric.profile.kind")) {
    if (e->value != "constant" && e->value != "exponential")
      throw ConfigError("line " + std::to_string(e->line) + ", column " +
                        std::to_string(e->col) + ": unknown profile kind '" + e->value +
                        "' (expected constant|exponential)");
    cfg.profile_kind = e->value;
  }
  if (const auto* e = take("metric.profile.value"))
    cfg.profile_value = detail::parse_double("metric.profile.value", *e);
  if (const auto* e = take("metric.profile.rate"))
    cfg.profile_rate = detail::parse_double("metric.profile.rate", *e);
  if (const auto* e = take("metric.lambda")) {
    cfg.has_lambda = true;
    cfg.lambda = detail::parse_double("metric.lambda", *e);
  }
  if (const auto* e = take("metric.t_ref")) {
    cfg.has_t_ref = true;
    cfg.t_ref = detail::parse_double("metric.t_ref", *e);
  }

  if (const auto* e = take("analysis.kind")) {
    const std::string& v = e->value;
    if (v == "tensor_scan") cfg.analysis = AnalysisKind::tensor_scan;
    else if (v == "certify_local") cfg.analysis = AnalysisKind::certify_local;
    else if (v == "certify_asymptotic") cfg.analysis = AnalysisKind::certify_asymptotic;
    else if (v == "exponent") cfg.analysis = AnalysisKind::exponent;
    else if (v == "spectrum") cfg.analysis = AnalysisKind::spectrum;
    else if (v == "identity_check") cfg.analysis = AnalysisKind::identity_check;
    else if (v == "tensoriality_check") cfg.analysis = AnalysisKind::tensoriality_check;
    else
      throw ConfigError("line " + std::to_string(e->line) + ", column " +
                        std::to_string(e->col) + ": unknown analysis kind '" + v + "'");
  } else {
    throw ConfigError("missing required key 'analysis.kind'");
  }

  if (const auto* ws = take("window.start")) {
    const auto* we = take("window.end");
    if (!we)
      throw ConfigError("'window.start' given without 'window.end'");
    cfg.has_window = true;
    cfg.window_start = detail::parse_double("window.start", *ws);
    cfg.window_end = detail::parse_double("window.end", *we);
    if (!(cfg.window_end > cfg.window_start))
      throw ConfigError("line " + std::to_string(we->line) +
                        ": 'window.end' must exceed 'window.start'");
  } else if (entries.count("window.end")) {
    throw ConfigError("'window.end' given without 'window.start'");
  }

  if (const auto* e = take("horizon")) {
    cfg.has_horizon = true;
    cfg.horizon = detail::parse_double("horizon", *e);
    if (!(cfg.horizon > 0.0))
      throw ConfigError("line " + std::to_string(e->line) + ": 'horizon' must be > 0");
  }
  if (const auto* e = take("renorm_interval")) {
    cfg.renorm_interval = detail::parse_double("renorm_interval", *e);
    if (!(cfg.renorm_interval > 0.0))
      throw ConfigError("line " + std::to_string(e->line) +
                        ": 'renorm_interval' must be > 0");
  }
  if (const auto* e = take("tube_radius")) {
    cfg.tube_radius = detail::parse_double("tube_radius", *e);
    if (!(cfg.tube_radius > 0.0))
      throw ConfigError("line " + std::to_string(e->line) + ": 'tube_radius' must be > 0");
  }
  auto take_count = [&](const char* key, int lo, int hi, int* dst) {
    if (const auto* e = take(key)) {
      const int64_t v = detail::parse_int(key, *e);
      if (v < lo || v > hi)
        throw ConfigError("line " + std::to_string(e->line) + ": '" + key +
                          "' must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
      *dst = static_cast<int>(v);
    }
  };
  take_count("samples.time", 1, 100000, &cfg.samples_time);
  take_count("samples.space", 1, 100000, &cfg.samples_space);
  take_count("samples.count", 1, 1000000, &cfg.samples_count);
  take_count("quad_order", 1, 64, &cfg.quad_order);
  take_count("series.points", 2, 1000000, &cfg.series_points);
  if (const auto* e = take("seed")) {
    const int64_t v = detail::parse_int("seed", *e);
    if (v < 0)
      throw ConfigError("line " + std::to_string(e->line) + ": 'seed' must be >= 0");
    cfg.seed = static_cast<uint64_t>(v);
  }

  if (const auto* e = take("integrator.rel_tol"))
    cfg.integrator.rel_tol = detail::parse_double("integrator.rel_tol", *e);
  if (const auto* e = take("integrator.abs_tol"))
    cfg.integrator.abs_tol = detail::parse_double("integrator.abs_tol", *e);
  if (const auto* e = take("integrator.max_step"))
    cfg.integrator.max_step = detail::parse_double("integrator.max_step", *e);
  if (const auto* e = take("integrator.max_steps"))
    cfg.integrator.max_steps = detail::parse_int("integrator.max_steps", *e);
  try {
    validate(cfg.integrator);
  } catch (const ContractViolation& ex) {
    throw ConfigError(std::string("invalid integrator settings: ") + ex.what());
  }

  for (const std::string& key : order) {
    if (!used.count(key)) {
      const auto& e = entries.at(key);
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
  }

  for (const std::string& key : order)
    cfg.resolved.emplace_back(key, entries.at(key).value);
  return cfg;
}

}  // namespace lyatensor
