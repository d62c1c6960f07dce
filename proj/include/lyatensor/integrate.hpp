#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/linalg.hpp"
#include "lyatensor/trajectory.hpp"

namespace lyatensor {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.0;        // 0 means "no cap beyond the window length"
  int64_t max_steps = 10'000'000;
};

inline void validate(const IntegratorConfig& cfg) {
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
    throw ContractViolation("IntegratorConfig: tolerances must be positive");
  if (cfg.max_step < 0.0)
    throw ContractViolation("IntegratorConfig: max_step must be >= 0");
  if (cfg.max_steps <= 0)
    throw ContractViolation("IntegratorConfig: max_steps must be positive");
}

struct IntegrationStats {
  int64_t attempted = 0;
  int64_t accepted = 0;
  int64_t rejected = 0;
};

namespace detail {

// In-place right-hand side: f(t, y, out).
using RawRhs = std::function<void(double, const Vec&, Vec&)>;

// Called after every accepted step; receives the knot.  May be null.
using KnotSink = std::function<void(double, const Vec&, const Vec&)>;

// Called after every accepted step, before the knot sink; may rescale parts
// of the state that are linear in themselves (variational block), as long as
// it rescales the matching derivative entries too.  May be null.
using AcceptHook = std::function<void(double, Vec&, Vec&)>;

struct CoreOutcome {
  bool completed = false;
  double t_reached = 0.0;
  Vec y;
  Vec f;
  IntegrationStats stats;
};

// Dormand-Prince 5(4) with FSAL and PI step-size control.
inline CoreOutcome rk45_core(const RawRhs& rhs, double t0, const Vec& y0, double t1,
                             const IntegratorConfig& cfg, const KnotSink& sink,
                             const AcceptHook& hook) {
  validate(cfg);
  const int n = static_cast<int>(y0.size());
  if (n == 0) throw ContractViolation("integration state must be non-empty");
  if (!all_finite(y0)) throw NumericFailure("initial state has non-finite entries");

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double hmax = (cfg.max_step > 0.0) ? std::min(cfg.max_step, span) : span;

  CoreOutcome out;
  out.y = y0;
  out.f.assign(n, 0.0);
  rhs(t0, out.y, out.f);
  if (!all_finite(out.f)) throw NumericFailure("rhs is non-finite at the initial state");

  if (sink) sink(t0, out.y, out.f);
  if (span == 0.0) {
    out.completed = true;
    out.t_reached = t1;
    return out;
  }

  Vec k1 = out.f, k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  Vec ytmp(n), ynew(n);
  double t = t0;
  Vec& y = out.y;

  auto sc = [&](int i, double ya, double yb) {
    return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(ya), std::abs(yb));
  };

  // Starting step size (Hairer's hinit).
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = sc(i, y[i], y[i]);
      d0 += (y[i] / s) * (y[i] / s);
      d1 += (k1[i] / s) * (k1[i] / s);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * (d0 / d1);
    h0 = std::min(h0, hmax);
    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + dir * h0 * k1[i];
    rhs(t + dir * h0, ytmp, k2);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = sc(i, y[i], y[i]);
      const double d = (k2[i] - k1[i]) / s;
      d2 += d * d;
    }
    d2 = std::sqrt(d2 / n) / h0;
    const double dm = std::max(d1, d2);
    double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                              : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, hmax});
    if (!std::isfinite(h) || h <= 0.0) h = 1e-6;
  }

  // PI controller state.
  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double facc1 = 5.0, facc2 = 0.1;  // bounds on 1/(step factor)
  double facold = 1e-4;
  bool last_rejected = false;

  while (true) {
    const double hmin = 16.0 * std::numeric_limits<double>::epsilon() *
                        std::max(std::abs(t), span);
    if (h < hmin || out.stats.attempted >= cfg.max_steps) {
      // Step size collapsed or the step budget ran out: treated alike as a
      // finite-time blow-up, reporting how far we got.
      out.completed = false;
      out.t_reached = t;
      return out;
    }

    bool last_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      last_step = true;
    }
    const double hd = dir * h;
    ++out.stats.attempted;

    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + hd * a21 * k1[i];
    rhs(t + c2 * hd, ytmp, k2);
    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + hd * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hd, ytmp, k3);
    for (int i = 0; i < n; ++i)
      ytmp[i] = y[i] + hd * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hd, ytmp, k4);
    for (int i = 0; i < n; ++i)
      ytmp[i] = y[i] + hd * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * hd, ytmp, k5);
    for (int i = 0; i < n; ++i)
      ytmp[i] = y[i] + hd * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                             a65 * k5[i]);
    rhs(t + hd, ytmp, k6);
    for (int i = 0; i < n; ++i)
      ynew[i] = y[i] + hd * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                             b6 * k6[i]);
    rhs(t + hd, ynew, k7);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ei = hd * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                              e6 * k6[i] + e7 * k7[i]);
      const double s = sc(i, y[i], ynew[i]);
      err += (ei / s) * (ei / s);
    }
    err = std::sqrt(err / n);

    if (!std::isfinite(err)) {
      // State or derivative left the representable range: shrink hard.
      ++out.stats.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      ++out.stats.accepted;
      facold = std::max(err, 1e-4);
      t = last_step ? t1 : t + hd;
      y = ynew;
      k1 = k7;
      if (hook) hook(t, y, k1);
      if (sink) sink(t, y, k1);
      if (last_step) {
        out.completed = true;
        out.t_reached = t1;
        out.f = k1;
        return out;
      }
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, hmax);
    } else {
      ++out.stats.rejected;
      h = h / std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
}

inline RawRhs wrap_field(const VectorField& vf) {
  return [&vf](double t, const Vec& y, Vec& f) {
    Vec v = vf.eval(t, y);
    f.swap(v);
  };
}

// Joint state layout for variational runs: y (dim entries) followed by M in
// row-major order (dim x cols entries).
inline RawRhs wrap_variational(const VectorField& vf, int cols) {
  const int dim = vf.dim;
  return [&vf, dim, cols](double t, const Vec& s, Vec& out) {
    Vec y(s.begin(), s.begin() + dim);
    Vec f = vf.eval(t, y);
    auto [jac, src] = field_jacobian(vf, t, y);
    (void)src;
    out.resize(s.size());
    for (int i = 0; i < dim; ++i) out[i] = f[i];
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < cols; ++j) {
        double v = 0.0;
        for (int k = 0; k < dim; ++k) v += jac(i, k) * s[dim + k * cols + j];
        out[dim + i * cols + j] = v;
      }
  };
}

}  // namespace detail

struct PartialTrajectory {
  Trajectory trajectory;
  bool blew_up = false;
  double t_reached = 0.0;
  IntegrationStats stats;
};

// Integrates vf from (t0, y0) to t1 and keeps every accepted step as a dense
// output knot.  Does not throw on finite-time blow-up; inspect `blew_up`.
inline PartialTrajectory integrate_trajectory_partial(const VectorField& vf, double t0,
                                                      const Vec& y0, double t1,
                                                      const IntegratorConfig& cfg = {}) {
  if (static_cast<int>(y0.size()) != vf.dim)
    throw ContractViolation("initial state size does not match field dimension");
  const bool forward = t1 >= t0;
  std::vector<std::tuple<double, Vec, Vec>> knots;
  auto sink = [&](double t, const Vec& y, const Vec& f) { knots.emplace_back(t, y, f); };
  detail::CoreOutcome oc =
      detail::rk45_core(detail::wrap_field(vf), t0, y0, t1, cfg, sink, nullptr);

  PartialTrajectory out;
  out.blew_up = !oc.completed;
  out.t_reached = oc.t_reached;
  out.stats = oc.stats;
  out.trajectory = Trajectory(vf.dim, t0, oc.t_reached);
  if (forward) {
    for (auto& [t, y, f] : knots) out.trajectory.append_knot(t, std::move(y), std::move(f));
  } else {
    for (auto it = knots.rbegin(); it != knots.rend(); ++it)
      out.trajectory.append_knot(std::get<0>(*it), std::move(std::get<1>(*it)),
                                 std::move(std::get<2>(*it)));
  }
  return out;
}

inline Trajectory integrate_trajectory(const VectorField& vf, double t0, const Vec& y0,
                                       double t1, const IntegratorConfig& cfg = {}) {
  PartialTrajectory p = integrate_trajectory_partial(vf, t0, y0, t1, cfg);
  if (p.blew_up) {
    const Vec last = p.trajectory.value(p.t_reached);
    throw BlowUpError("trajectory blew up at t=" + std::to_string(p.t_reached) +
                          " before reaching t=" + std::to_string(t1),
                      p.t_reached, last);
  }
  return p.trajectory;
}

struct VariationResult {
  Trajectory trajectory;
  JacobiFrame frame;
  bool blew_up = false;
  double t_reached = 0.0;
};

// Integrates the flow together with the variational equation dM/dt = J_f M,
// starting from M(t0) = m0.  Both results share the same knot times.
inline VariationResult integrate_with_variation_partial(const VectorField& vf, double t0,
                                                        const Vec& y0, const Mat& m0,
                                                        double t1,
                                                        const IntegratorConfig& cfg = {}) {
  const int dim = vf.dim;
  if (static_cast<int>(y0.size()) != dim)
    throw ContractViolation("initial state size does not match field dimension");
  if (m0.rows() != dim)
    throw ContractViolation("variation matrix row count does not match field dimension");
  const int cols = m0.cols();

  Vec s0(dim + dim * cols);
  for (int i = 0; i < dim; ++i) s0[i] = y0[i];
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < cols; ++j) s0[dim + i * cols + j] = m0(i, j);

  const bool forward = t1 >= t0;
  std::vector<std::tuple<double, Vec, Vec>> knots;
  auto sink = [&](double t, const Vec& y, const Vec& f) { knots.emplace_back(t, y, f); };
  detail::CoreOutcome oc = detail::rk45_core(detail::wrap_variational(vf, cols), t0, s0,
                                             t1, cfg, sink, nullptr);

  VariationResult out;
  out.blew_up = !oc.completed;
  out.t_reached = oc.t_reached;
  out.trajectory = Trajectory(dim, t0, oc.t_reached);
  out.frame = JacobiFrame(dim, cols);

  auto emit = [&](const std::tuple<double, Vec, Vec>& knot) {
    const auto& [t, s, ds] = knot;
    Vec y(s.begin(), s.begin() + dim);
    Vec f(ds.begin(), ds.begin() + dim);
    Mat m(dim, cols), dm(dim, cols);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < cols; ++j) {
        m(i, j) = s[dim + i * cols + j];
        dm(i, j) = ds[dim + i * cols + j];
      }
    out.trajectory.append_knot(t, std::move(y), std::move(f));
    out.frame.append_knot(t, std::move(m), std::move(dm));
  };
  if (forward)
    for (const auto& k : knots) emit(k);
  else
    for (auto it = knots.rbegin(); it != knots.rend(); ++it) emit(*it);
  return out;
}

inline VariationResult integrate_with_variation(const VectorField& vf, double t0,
                                                const Vec& y0, const Mat& m0, double t1,
                                                const IntegratorConfig& cfg = {}) {
  VariationResult r = integrate_with_variation_partial(vf, t0, y0, m0, t1, cfg);
  if (r.blew_up) {
    const Vec last = r.trajectory.value(r.t_reached);
    throw BlowUpError("variational system blew up at t=" + std::to_string(r.t_reached),
                      r.t_reached, last);
  }
  return r;
}

struct ScaledFlowJacobian {
  Vec y;            // image of the initial point under the flow map
  Mat jac;          // exp(log_scale) * jac is the true flow Jacobian
  double log_scale = 0.0;
};

// Endpoint flow map and Jacobian with log-scaled arithmetic: the variational
// block is renormalized whenever it drifts far from unit size, so windows
// whose true Jacobian overflows/underflows doubles still integrate cleanly.
inline ScaledFlowJacobian flow_jacobian_scaled(const VectorField& vf, double t_from,
                                               const Vec& y_from, double t_to,
                                               const IntegratorConfig& cfg = {}) {
  const int dim = vf.dim;
  if (static_cast<int>(y_from.size()) != dim)
    throw ContractViolation("initial state size does not match field dimension");

  Vec s0(dim + dim * dim, 0.0);
  for (int i = 0; i < dim; ++i) s0[i] = y_from[i];
  for (int i = 0; i < dim; ++i) s0[dim + i * dim + i] = 1.0;

  double log_scale = 0.0;
  auto hook = [&](double, Vec& s, Vec& ds) {
    double m = 0.0;
    for (int k = dim; k < static_cast<int>(s.size()); ++k)
      m = std::max(m, std::abs(s[k]));
    if (m > 1e50 || (m > 0.0 && m < 1e-50)) {
      const double inv = 1.0 / m;
      for (int k = dim; k < static_cast<int>(s.size()); ++k) {
        s[k] *= inv;
        ds[k] *= inv;
      }
      log_scale += std::log(m);
    }
  };

  detail::CoreOutcome oc = detail::rk45_core(detail::wrap_variational(vf, dim), t_from,
                                             s0, t_to, cfg, nullptr, hook);
  if (!oc.completed)
    throw BlowUpError("flow blew up at t=" + std::to_string(oc.t_reached) +
                          " while computing a flow Jacobian",
                      oc.t_reached, Vec(oc.y.begin(), oc.y.begin() + dim));

  ScaledFlowJacobian out;
  out.y.assign(oc.y.begin(), oc.y.begin() + dim);
  out.jac = Mat(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out.jac(i, j) = oc.y[dim + i * dim + j];
  out.log_scale = log_scale;
  return out;
}

struct FlowJacobian {
  Vec y;
  Mat jac;
};

// Plain-valued flow Jacobian; throws NumericFailure if the true Jacobian does
// not fit in doubles (use flow_jacobian_scaled for such windows).
inline FlowJacobian flow_jacobian(const VectorField& vf, double t_from, const Vec& y_from,
                                  double t_to, const IntegratorConfig& cfg = {}) {
  ScaledFlowJacobian s = flow_jacobian_scaled(vf, t_from, y_from, t_to, cfg);
  const double m = max_abs(s.jac);
  if (m > 0.0 && s.log_scale + std::log(m) > 700.0)
    throw NumericFailure("flow Jacobian overflows the double range; window too long");
  const double f = std::exp(s.log_scale);
  FlowJacobian out;
  out.y = std::move(s.y);
  out.jac = s.jac;
  out.jac *= f;
  if (!all_finite(out.jac))
    throw NumericFailure("flow Jacobian left the double range");
  return out;
}

}  // namespace lyatensor
