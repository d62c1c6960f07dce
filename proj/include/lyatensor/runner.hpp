#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/charts.hpp"
#include "lyatensor/config.hpp"
#include "lyatensor/exponents.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/parallel.hpp"
#include "lyatensor/report.hpp"
#include "lyatensor/sampling.hpp"
#include "lyatensor/stability.hpp"
#include "lyatensor/systems.hpp"
#include "lyatensor/tensor.hpp"

namespace lyatensor {

inline constexpr const char* kToolName = "lyatensor";
inline constexpr const char* kToolVersion = "0.1.0";

// Exit-code vocabulary (public scripting contract).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;          // bad CLI arguments or config
inline constexpr int kExitNotCertified = 2;   // certification analyses only
inline constexpr int kExitNumeric = 3;        // numeric failure / blow-up
inline constexpr int kExitIo = 4;             // artifact write failure

struct RunResult {
  int exit_code = kExitOk;
  std::string summary;  // short human-readable outcome for stdout
  json report;
  SeriesTable series;
};

namespace detail {

struct RunContext {
  const SystemSpec* spec = nullptr;
  VectorField vf;
  Vec y0;
  std::pair<double, double> window{0.0, 0.0};
  double horizon = 0.0;
  double t_ref = 0.0;
  FibreMetric metric;
};

inline RunContext make_context(const RunConfig& cfg) {
  RunContext ctx;
  ctx.spec = find_system(cfg.system_name);
  if (!ctx.spec) throw ConfigError("unknown system '" + cfg.system_name + "'");
  ctx.vf = instantiate(*ctx.spec, cfg.system_params);
  ctx.y0 = cfg.y0.empty() ? ctx.spec->reference_state : cfg.y0;
  ctx.window = cfg.has_window ? std::make_pair(cfg.window_start, cfg.window_end)
                              : ctx.spec->default_window;
  ctx.horizon = cfg.has_horizon ? cfg.horizon : ctx.spec->default_horizon;
  ctx.t_ref = cfg.has_t_ref ? cfg.t_ref : ctx.window.first;

  switch (cfg.metric) {
    case MetricKind::euclidean:
      ctx.metric = euclidean_metric(ctx.vf.dim);
      break;
    case MetricKind::scaled: {
      const ScalarProfile prof = cfg.profile_kind == "exponential"
                                     ? exponential_profile(cfg.profile_rate, ctx.t_ref)
                                     : constant_profile(cfg.profile_value);
      ctx.metric = scaled_metric(prof, euclidean_metric(ctx.vf.dim));
      break;
    }
    case MetricKind::pullback: {
      PullbackMetric pm =
          cfg.has_lambda
              ? pullback_with_target_exponent(ctx.vf, euclidean_metric(ctx.vf.dim),
                                              ctx.t_ref, cfg.lambda, cfg.integrator)
              : flow_pullback(ctx.vf, euclidean_metric(ctx.vf.dim), ctx.t_ref,
                              constant_profile(1.0), cfg.integrator);
      ctx.metric = std::move(pm.metric);
      break;
    }
  }
  return ctx;
}

inline json config_echo(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.resolved) j[k] = v;
  return j;
}

inline json resolved_json(const RunConfig& cfg, const RunContext& ctx) {
  json sys;
  sys["name"] = ctx.spec->name;
  sys["dim"] = ctx.spec->dim;
  json params = json::object();
  ParamMap merged = default_params(*ctx.spec);
  for (const auto& [k, v] : cfg.system_params) merged[k] = v;
  for (const auto& [k, v] : merged) params[k] = v;
  sys["params"] = params;
  sys["y0"] = to_json(ctx.y0);

  json metric;
  metric["kind"] = to_string(cfg.metric);
  metric["tag"] = ctx.metric.tag;
  if (cfg.metric == MetricKind::scaled) {
    metric["profile"] = {{"kind", cfg.profile_kind},
                         {"value", cfg.profile_value},
                         {"rate", cfg.profile_rate}};
  }
  if (cfg.metric == MetricKind::pullback) {
    metric["t_ref"] = ctx.t_ref;
    if (cfg.has_lambda) {
      metric["lambda"] = cfg.lambda;
      metric["convention"] = kPullbackExponentConvention;
    } else {
      metric["profile"] = "h(t) = 1";
    }
  }

  json j;
  j["system"] = sys;
  j["metric"] = metric;
  j["analysis"] = to_string(cfg.analysis);
  j["window"] = json::array({ctx.window.first, ctx.window.second});
  j["horizon"] = ctx.horizon;
  j["renorm_interval"] = cfg.renorm_interval;
  j["tube_radius"] = cfg.tube_radius;
  j["samples"] = {{"time", cfg.samples_time},
                  {"space", cfg.samples_space},
                  {"count", cfg.samples_count}};
  j["quad_order"] = cfg.quad_order;
  j["seed"] = cfg.seed;
  j["series_points"] = cfg.series_points;
  j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                     {"abs_tol", cfg.integrator.abs_tol},
                     {"max_step", cfg.integrator.max_step},
                     {"max_steps", cfg.integrator.max_steps}};
  return j;
}

inline json provenance_json(const RunContext& ctx) {
  const auto [jac, src] = field_jacobian(ctx.vf, ctx.window.first, ctx.y0);
  (void)jac;
  json j;
  j["field_jacobian"] = to_string(src);
  j["metric_dt"] = ctx.metric.dt ? "analytic" : "finite_difference";
  j["metric_dy"] = ctx.metric.dy ? "analytic" : "finite_difference";
  j["metric_scaled_eval"] = ctx.metric.eval_scaled ? "native" : "wrapped";
  return j;
}

inline json witness_json(const CertificateWitness& w) {
  json j;
  j["t"] = w.t;
  j["y"] = to_json(w.y);
  j["eigen_max"] = w.eigen_max;
  j["log_scale"] = w.log_scale;
  return j;
}

inline json certificate_json(const StabilityCertificate& cert) {
  json j;
  j["kind"] = to_string(cert.kind);
  j["window"] = json::array({cert.window.first, cert.window.second});
  j["tube_radius"] = cert.tube_radius;
  if (cert.witness)
    j["witness"] = witness_json(*cert.witness);
  else
    j["witness"] = nullptr;
  j["samples_checked"] = cert.samples_checked;
  j["neutral"] = cert.neutral;
  j["total_sign_violations"] = cert.total_sign_violations;
  j["distance_drift"] = cert.distance_drift;
  j["terminal_decrease"] = cert.terminal_decrease;
  j["any_blow_up"] = cert.any_blow_up;
  json paths = json::array();
  for (const PerturbedPath& p : cert.perturbed) {
    json pj;
    pj["start"] = to_json(p.start);
    pj["blew_up"] = p.blew_up;
    pj["t_reached"] = p.t_reached;
    pj["sign_violations"] = p.sign_violations;
    pj["worst_increase"] = p.worst_increase;
    paths.push_back(pj);
  }
  j["perturbed_paths"] = paths;
  return j;
}

inline SeriesTable certificate_series(const StabilityCertificate& cert) {
  SeriesTable tab;
  tab.columns.push_back("t");
  for (size_t k = 0; k < cert.perturbed.size(); ++k)
    tab.columns.push_back("distance" + std::to_string(k));
  std::vector<double> instants;
  for (const PerturbedPath& p : cert.perturbed)
    for (const auto& [t, rho] : p.distances) instants.push_back(t);
  std::sort(instants.begin(), instants.end());
  instants.erase(std::unique(instants.begin(), instants.end()), instants.end());
  for (double t : instants) {
    CsvRow row(tab.columns.size());
    row[0] = t;
    for (size_t k = 0; k < cert.perturbed.size(); ++k) {
      const auto& d = cert.perturbed[k].distances;
      auto it = std::lower_bound(
          d.begin(), d.end(), t,
          [](const std::pair<double, double>& a, double b) { return a.first < b; });
      if (it != d.end() && it->first == t) row[1 + k] = it->second;
    }
    tab.add_row(row);
  }
  return tab;
}

inline json estimate_json(const ExponentEstimate& est, bool include_trace) {
  json j;
  j["value"] = est.value;
  j["horizon"] = est.horizon;
  j["renorm_interval"] = est.renorm_interval;
  j["metric_tag"] = est.metric_tag;
  j["saturated"] = est.saturated;
  j["blew_up"] = est.blew_up;
  j["t_reached"] = est.t_reached;
  if (include_trace) j["trace"] = trace_to_json(est.trace);
  return j;
}

// ---------------------------------------------------------------------------
// analyses

inline void run_tensor_scan(const RunConfig& cfg, const RunContext& ctx, RunResult* out) {
  const Trajectory traj = integrate_trajectory(ctx.vf, ctx.window.first, ctx.y0,
                                               ctx.window.second, cfg.integrator);
  const int n = cfg.series_points;

  out->series.columns = {"t"};
  for (int i = 0; i < ctx.vf.dim; ++i)
    out->series.columns.push_back("y" + std::to_string(i));
  out->series.columns.push_back("eig_min");
  out->series.columns.push_back("eig_max");
  out->series.columns.push_back("log_scale");

  std::map<std::string, int> counts;
  bool all_negative = true;
  json first_violation = nullptr;
  for (int i = 0; i < n; ++i) {
    const double t =
        ctx.window.first + (ctx.window.second - ctx.window.first) * i / (n - 1);
    const Vec y = traj.value(t);
    const TensorEvaluation ev = covariant_lyapunov_tensor(ctx.vf, ctx.metric, t, y);
    counts[to_string(ev.form.definiteness)]++;
    if (ev.form.definiteness != Definiteness::negative_definite) {
      all_negative = false;
      if (first_violation.is_null()) {
        first_violation = {{"t", t},
                           {"y", to_json(y)},
                           {"definiteness", to_string(ev.form.definiteness)},
                           {"eigen_max", ev.form.eigen_max},
                           {"log_scale", ev.log_scale}};
      }
    }
    CsvRow row;
    row.push_back(t);
    for (int k = 0; k < ctx.vf.dim; ++k) row.push_back(y[k]);
    row.push_back(ev.form.eigen_min);
    row.push_back(ev.form.eigen_max);
    row.push_back(ev.log_scale);
    out->series.add_row(row);
  }

  json res;
  res["samples"] = n;
  json cj = json::object();
  for (const auto& [k, v] : counts) cj[k] = v;
  res["definiteness_counts"] = cj;
  res["all_negative_definite"] = all_negative;
  res["first_violation"] = first_violation;
  out->report["results"] = res;
  out->summary = "tensor_scan: " + std::to_string(n) + " samples, " +
                 (all_negative ? "all negative definite" : "not everywhere negative");
}

inline void run_certify(const RunConfig& cfg, const RunContext& ctx, bool asymptotic,
                        RunResult* out) {
  CertifyOptions opts;
  opts.quad_order = cfg.quad_order;
  opts.seed = cfg.seed;
  opts.cfg = cfg.integrator;

  const double t0 = ctx.window.first;
  const double t1 = asymptotic ? t0 + ctx.horizon : ctx.window.second;
  const Trajectory traj = integrate_trajectory(ctx.vf, t0, ctx.y0, t1, cfg.integrator);
  const StabilityCertificate cert =
      asymptotic ? certify_asymptotic(ctx.vf, ctx.metric, traj, cfg.tube_radius, t0,
                                      ctx.horizon, cfg.samples_time, cfg.samples_space,
                                      opts)
                 : certify_local(ctx.vf, ctx.metric, traj, cfg.tube_radius,
                                 ctx.window, cfg.samples_time, cfg.samples_space, opts);

  out->report["results"] = {{"certificate", certificate_json(cert)}};
  out->series = certificate_series(cert);
  const CertificateKind want = asymptotic ? CertificateKind::asymptotic_isometric
                                          : CertificateKind::local_isometric;
  out->exit_code = cert.kind == want ? kExitOk : kExitNotCertified;
  out->summary = std::string(asymptotic ? "certify_asymptotic: " : "certify_local: ") +
                 to_string(cert.kind) + " (" + std::to_string(cert.samples_checked) +
                 " samples, " + std::to_string(cert.total_sign_violations) +
                 " sign violations)";
}

inline void run_exponent(const RunConfig& cfg, const RunContext& ctx, RunResult* out) {
  Vec v0 = gaussian_draw(ctx.vf.dim, 0, cfg.seed);
  if (max_abs(v0) == 0.0) v0[0] = 1.0;
  ExponentOptions eopts;
  eopts.quad_order = cfg.quad_order;
  const ExponentEstimate est =
      jacobi_exponent(ctx.vf, ctx.metric, ctx.window.first, ctx.y0, v0, ctx.horizon,
                      cfg.renorm_interval, cfg.integrator, eopts);

  out->report["results"] = {{"exponent", estimate_json(est, false)},
                            {"direction", to_json(v0)}};
  out->series.columns = {"t", "exponent0"};
  for (const auto& [t, v] : est.trace) out->series.add_row({t, v});
  out->summary = "exponent: " + format_number(est.value) +
                 (est.blew_up ? " (partial: blow-up at t = " + format_number(est.t_reached) + ")"
                              : "");
}

inline void run_spectrum(const RunConfig& cfg, const RunContext& ctx, RunResult* out) {
  ExponentOptions eopts;
  eopts.quad_order = cfg.quad_order;
  const std::vector<ExponentEstimate> ests =
      exponent_spectrum(ctx.vf, ctx.metric, ctx.window.first, ctx.y0, ctx.horizon,
                        cfg.renorm_interval, cfg.integrator, eopts);

  json arr = json::array();
  double sum = 0.0;
  for (const ExponentEstimate& e : ests) {
    arr.push_back(estimate_json(e, false));
    sum += e.value;
  }
  json res;
  res["spectrum"] = arr;
  res["sum"] = sum;
  res["values"] = [&] {
    json v = json::array();
    for (const ExponentEstimate& e : ests) v.push_back(e.value);
    return v;
  }();
  out->report["results"] = res;

  out->series.columns = {"t"};
  for (size_t j = 0; j < ests.size(); ++j)
    out->series.columns.push_back("exponent" + std::to_string(j));
  if (!ests.empty()) {
    const size_t rows = ests[0].trace.size();
    for (size_t i = 0; i < rows; ++i) {
      CsvRow row(out->series.columns.size());
      row[0] = ests[0].trace[i].first;
      for (size_t j = 0; j < ests.size(); ++j)
        if (i < ests[j].trace.size()) row[1 + j] = ests[j].trace[i].second;
      out->series.add_row(row);
    }
  }
  std::string vals;
  for (const ExponentEstimate& e : ests)
    vals += (vals.empty() ? "" : ", ") + format_number(e.value);
  out->summary = "spectrum: [" + vals + "], sum " + format_number(sum) +
                 (ests.empty() || !ests[0].blew_up
                      ? ""
                      : " (partial: blow-up at t = " + format_number(ests[0].t_reached) + ")");
}

// Relative residual scale for the defining identity: the tensor's own
// magnitude at the event, ||L||_F * g(s,s), floors the denominator so draws
// near the null cone of L do not divide by a vanishing derivative.
struct IdentityDraw {
  double t = 0.0;
  Vec y;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel = 0.0;
};

inline IdentityDraw identity_draw(const VectorField& vf, const FibreMetric& g,
                                  const Trajectory& anchor, int index, uint64_t seed,
                                  double dt_probe, const IntegratorConfig& integ,
                                  std::pair<double, double> window) {
  const double margin = 10.0 * dt_probe;
  const double t =
      uniform_draw(window.first + margin, window.second - margin, 1000003 + index, seed);
  const Vec v0 = gaussian_draw(vf.dim, index, seed);

  const Vec y_start = anchor.value(t - dt_probe);
  const VariationResult var = integrate_with_variation(
      vf, t - dt_probe, y_start, Mat::identity(vf.dim), t + dt_probe, integ);
  const IdentityResidual r =
      variation_identity_detail(vf, g, var.trajectory, var.frame, v0, t, dt_probe);

  const Vec yc = var.trajectory.value(t);
  const Vec sc = var.frame.push(t, v0);
  const Mat gm = metric_value(g, t, yc);
  double q = 0.0;
  for (int i = 0; i < vf.dim; ++i)
    for (int j = 0; j < vf.dim; ++j) q += sc[i] * gm(i, j) * sc[j];
  const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, t, yc);
  const double lnorm = std::exp(ev.log_scale) * frobenius_norm(ev.form.coeffs);

  double denom = std::max(std::abs(r.lhs), std::abs(r.rhs));
  if (std::isfinite(lnorm)) denom = std::max(denom, lnorm * q);
  IdentityDraw d;
  d.t = t;
  d.y = yc;
  d.lhs = r.lhs;
  d.rhs = r.rhs;
  d.rel = denom > 0.0 ? r.residual / denom : 0.0;
  return d;
}

inline void run_identity_check(const RunConfig& cfg, const RunContext& ctx,
                               RunResult* out) {
  const Trajectory traj = integrate_trajectory(ctx.vf, ctx.window.first, ctx.y0,
                                               ctx.window.second, cfg.integrator);
  const double dt_probe = 1e-4;
  const int n = cfg.samples_count;
  std::vector<IdentityDraw> draws(n);
  parallel_for(n, [&](int k) {
    draws[k] = identity_draw(ctx.vf, ctx.metric, traj, k, cfg.seed, dt_probe,
                             cfg.integrator, ctx.window);
  });

  out->series.columns = {"t"};
  for (int i = 0; i < ctx.vf.dim; ++i)
    out->series.columns.push_back("y" + std::to_string(i));
  out->series.columns.push_back("lhs");
  out->series.columns.push_back("rhs");
  out->series.columns.push_back("rel_residual");
  double worst = 0.0;
  for (const IdentityDraw& d : draws) {
    CsvRow row;
    row.push_back(d.t);
    for (int i = 0; i < ctx.vf.dim; ++i) row.push_back(d.y[i]);
    row.push_back(d.lhs);
    row.push_back(d.rhs);
    row.push_back(d.rel);
    out->series.add_row(row);
    worst = std::max(worst, d.rel);
  }

  out->report["results"] = {{"draws", n},
                            {"dt_probe", dt_probe},
                            {"max_rel_residual", worst},
                            {"residual_scale",
                             "|L(s,s) - d/dt g(s,s)| relative to max(|lhs|, |rhs|, "
                             "||L||_F * g(s,s))"}};
  out->summary = "identity_check: max relative residual " + format_number(worst) +
                 " over " + std::to_string(n) + " draws";
}

inline void run_tensoriality_check(const RunConfig& cfg, const RunContext& ctx,
                                   RunResult* out) {
  const Trajectory traj = integrate_trajectory(ctx.vf, ctx.window.first, ctx.y0,
                                               ctx.window.second, cfg.integrator);
  const std::vector<FibreChart> charts = standard_chart_suite(ctx.vf.dim);
  const int n = cfg.samples_count;

  struct Cell {
    double t = 0.0;
    Vec y;
    std::vector<TensorialityDeviation> dev;
  };
  std::vector<Cell> cells(n);
  parallel_for(n, [&](int k) {
    Cell c;
    c.t = uniform_draw(ctx.window.first, ctx.window.second, 1000003 + k, cfg.seed);
    c.y = traj.value(c.t);
    for (const FibreChart& chart : charts)
      c.dev.push_back(tensoriality_deviation(ctx.vf, ctx.metric, chart, c.t, c.y));
    cells[k] = std::move(c);
  });

  out->series.columns = {"t"};
  for (int i = 0; i < ctx.vf.dim; ++i)
    out->series.columns.push_back("y" + std::to_string(i));
  out->series.columns.push_back("chart");
  out->series.columns.push_back("tensor_rel");
  out->series.columns.push_back("matrix_rel");

  std::vector<double> max_tensor(charts.size(), 0.0), max_matrix(charts.size(), 0.0);
  for (const Cell& c : cells) {
    for (size_t ci = 0; ci < charts.size(); ++ci) {
      CsvRow row;
      row.push_back(c.t);
      for (int i = 0; i < ctx.vf.dim; ++i) row.push_back(c.y[i]);
      row.push_back(static_cast<double>(ci));
      row.push_back(c.dev[ci].tensor_rel);
      row.push_back(c.dev[ci].matrix_rel);
      out->series.add_row(row);
      max_tensor[ci] = std::max(max_tensor[ci], c.dev[ci].tensor_rel);
      max_matrix[ci] = std::max(max_matrix[ci], c.dev[ci].matrix_rel);
    }
  }

  json arr = json::array();
  double worst_tensor = 0.0;
  for (size_t ci = 0; ci < charts.size(); ++ci) {
    arr.push_back({{"chart", charts[ci].name},
                   {"max_tensor_rel", max_tensor[ci]},
                   {"max_matrix_rel", max_matrix[ci]}});
    worst_tensor = std::max(worst_tensor, max_tensor[ci]);
  }
  out->report["results"] = {{"draws", n}, {"charts", arr},
                            {"max_tensor_rel", worst_tensor}};
  out->summary =
      "tensoriality_check: max tensor-law deviation " + format_number(worst_tensor) +
      " across " + std::to_string(charts.size()) + " charts";
}

}  // namespace detail

// Executes one analysis; pure computation, no filesystem access.  Exceptions
// from bad configs (ConfigError / ContractViolation) should be mapped to exit
// code 1 by the caller; NumericFailure / BlowUpError to 3; IoError to 4.
inline RunResult execute_run(const RunConfig& cfg) {
  detail::RunContext ctx = detail::make_context(cfg);

  RunResult out;
  out.report["schema_version"] = "v1";
  out.report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  out.report["config"] = detail::config_echo(cfg);
  out.report["resolved"] = detail::resolved_json(cfg, ctx);
  out.report["provenance"] = detail::provenance_json(ctx);

  switch (cfg.analysis) {
    case AnalysisKind::tensor_scan:
      detail::run_tensor_scan(cfg, ctx, &out);
      break;
    case AnalysisKind::certify_local:
      detail::run_certify(cfg, ctx, /*asymptotic=*/false, &out);
      break;
    case AnalysisKind::certify_asymptotic:
      detail::run_certify(cfg, ctx, /*asymptotic=*/true, &out);
      break;
    case AnalysisKind::exponent:
      detail::run_exponent(cfg, ctx, &out);
      break;
    case AnalysisKind::spectrum:
      detail::run_spectrum(cfg, ctx, &out);
      break;
    case AnalysisKind::identity_check:
      detail::run_identity_check(cfg, ctx, &out);
      break;
    case AnalysisKind::tensoriality_check:
      detail::run_tensoriality_check(cfg, ctx, &out);
      break;
  }

  out.report["status"] = {{"exit_code", out.exit_code},
                          {"ok", out.exit_code == kExitOk},
                          {"message", out.summary}};
  return out;
}

}  // namespace lyatensor
