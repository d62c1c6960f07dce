#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/linalg.hpp"
#include "lyatensor/trajectory.hpp"

namespace lyatensor {

// Lyapunov matrix of a vector field: entry (m, l) = d gamma^l / d y^m, i.e.
// the transpose of the usual Jacobian.  Lower index first.
inline std::pair<Mat, DerivSource> lyapunov_matrix(const VectorField& vf, double t,
                                                   const Vec& y) {
  auto [jac, src] = field_jacobian(vf, t, y);
  return {jac.transposed(), src};
}

// Result of evaluating the covariant Lyapunov tensor at one point.  The true
// tensor is exp(log_scale) * form.coeffs; log_scale is zero unless the metric
// only fits in doubles via its scaled representation.  Classification and
// eigenvalue signs are scale-invariant.
struct TensorEvaluation {
  SymmetricForm form;
  double log_scale = 0.0;
  DerivSource jacobian_source = DerivSource::analytic;
  DerivSource metric_dt_source = DerivSource::analytic;
  DerivSource metric_dy_source = DerivSource::analytic;

  // Plain coefficient matrix; only safe when the values fit in doubles.
  Mat tensor() const {
    Mat m = form.coeffs;
    m *= std::exp(log_scale);
    return m;
  }
};

namespace detail {

// Rebases a scaled matrix onto a common reference log-scale.
inline Mat rebase(const Mat& m, double log_scale, double log_ref) {
  Mat r = m;
  r *= std::exp(log_scale - log_ref);
  return r;
}

// Fourth-order central difference of a scaled matrix-valued function: two
// nested central stencils, Richardson-combined onto a shared log-scale.
// Flow-pullback metrics have steep higher derivatives along their window, so
// a second-order stencil at a fixed step leaves a truncation floor orders of
// magnitude above the evaluation noise; the two extra samples buy that back.
template <class Eval>
inline std::pair<Mat, double> scaled_central4(const Eval& at, double h) {
  const ScaledMat p2 = at(h);
  const ScaledMat p1 = at(0.5 * h);
  const ScaledMat m1 = at(-0.5 * h);
  const ScaledMat m2 = at(-h);
  const double ref =
      std::max({p2.log_scale, p1.log_scale, m1.log_scale, m2.log_scale});
  Mat diff = rebase(p1.m, p1.log_scale, ref) - rebase(m1.m, m1.log_scale, ref);
  diff *= 8.0;
  diff -= rebase(p2.m, p2.log_scale, ref) - rebase(m2.m, m2.log_scale, ref);
  diff *= 1.0 / (6.0 * h);
  return {std::move(diff), ref};
}

}  // namespace detail

// Covariant Lyapunov tensor of (vf, g) at (t, y):
//   L_ab = d_t g_ab + gamma^l d_l g_ab + (d_a gamma^l) g_lb + (d_b gamma^l) g_al.
// The value matrix is bitwise symmetric by construction.  Derivatives missing
// from the metric fall back to finite differences; the convective term uses a
// single directional difference along the field, which stays well-conditioned
// for flow-pullback metrics where per-axis differences do not.
inline TensorEvaluation covariant_lyapunov_tensor(const VectorField& vf,
                                                  const FibreMetric& g, double t,
                                                  const Vec& y) {
  if (vf.dim != g.dim)
    throw ContractViolation("vector field and metric dimensions differ");
  const int n = vf.dim;

  TensorEvaluation out;

  const ScaledMat g0 = metric_value_scaled(g, t, y);
  {
    auto [lo, hi] = eigen_extremes(g0.m);
    (void)hi;
    if (!(lo > 0.0)) throw ContractViolation("metric value is not positive definite");
  }

  const Vec gamma = vf.eval(t, y);
  if (!all_finite(gamma)) throw NumericFailure("vector field value is non-finite");
  auto [jac, jac_src] = field_jacobian(vf, t, y);
  out.jacobian_source = jac_src;

  // d_t g, as a scaled matrix.
  Mat dt_m;
  double dt_log = 0.0;
  if (g.dt) {
    auto [m, src] = metric_dt(g, t, y);
    dt_m = std::move(m);
    out.metric_dt_source = src;
  } else {
    const double h = detail::kFdStepBase * std::max(1.0, std::abs(t));
    auto [diff, ref] = detail::scaled_central4(
        [&](double s) { return metric_value_scaled(g, t + s, y); }, h);
    if (!all_finite(diff)) throw NumericFailure("metric dt: non-finite difference");
    dt_m = symmetrize(diff);
    dt_log = ref;
    out.metric_dt_source = DerivSource::finite_difference;
  }

  // gamma^l d_l g, as a scaled matrix.
  Mat conv_m(n, n);
  double conv_log = 0.0;
  const double speed = norm2(gamma);
  if (g.dy) {
    auto [slices, src] = metric_dy(g, t, y);
    out.metric_dy_source = src;
    for (int l = 0; l < n; ++l) {
      if (gamma[l] == 0.0) continue;
      Mat s = slices[l];
      s *= gamma[l];
      conv_m += s;
    }
    conv_m = symmetrize(conv_m);
  } else if (speed > 0.0) {
    const Vec dir = vscale(gamma, 1.0 / speed);
    const double h = detail::kFdStepBase * std::max(1.0, norm2(y));
    auto [diff, ref] = detail::scaled_central4(
        [&](double s) { return metric_value_scaled(g, t, vaxpy(y, s, dir)); }, h);
    if (!all_finite(diff))
      throw NumericFailure("metric directional derivative: non-finite difference");
    diff *= speed;
    conv_m = symmetrize(diff);
    conv_log = ref;
    out.metric_dy_source = DerivSource::finite_difference;
  }

  const double ref = std::max({g0.log_scale, dt_log, conv_log});
  const Mat gm = detail::rebase(g0.m, g0.log_scale, ref);
  const Mat dtm = detail::rebase(dt_m, dt_log, ref);
  const Mat convm = detail::rebase(conv_m, conv_log, ref);
  const Mat jg = matmul(jac.transposed(), gm);  // (d_a gamma^l) g_lb

  Mat tensor(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = dtm(i, j) + convm(i, j) + (jg(i, j) + jg(j, i));
      tensor(i, j) = v;
      tensor(j, i) = v;
    }
  if (!all_finite(tensor))
    throw NumericFailure("covariant Lyapunov tensor has non-finite entries");

  out.form = make_symmetric_form(tensor);
  out.log_scale = ref;
  return out;
}

struct IdentityResidual {
  double lhs = 0.0;       // L(s, s) at time t
  double rhs = 0.0;       // central difference of d/dt [ g(s, s) ]
  double residual = 0.0;  // |lhs - rhs|
};

// Residual of the defining identity: for a Jacobi field s(t) along a
// trajectory, L(t)(s, s) should equal d/dt [ g(t)(s, s) ].  The derivative is
// probed with a central difference of half-width dt_probe.
inline IdentityResidual variation_identity_detail(const VectorField& vf,
                                                  const FibreMetric& g,
                                                  const Trajectory& traj,
                                                  const JacobiFrame& frame, const Vec& v0,
                                                  double t, double dt_probe) {
  if (!(dt_probe > 0.0)) throw ContractViolation("dt_probe must be positive");
  if (t - dt_probe < traj.t_min() || t + dt_probe > traj.t_max())
    throw DomainError("identity probe window leaves the trajectory domain");

  auto norm_sq = [&](double tau) {
    const Vec y = traj.value(tau);
    const Vec s = frame.push(tau, v0);
    const Mat gm = metric_value(g, tau, y);
    return dot(s, matvec(gm, s));
  };

  IdentityResidual out;
  const Vec y = traj.value(t);
  const Vec s = frame.push(t, v0);
  const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, t, y);
  out.lhs = std::exp(ev.log_scale) * dot(s, matvec(ev.form.coeffs, s));
  out.rhs = (norm_sq(t + dt_probe) - norm_sq(t - dt_probe)) / (2.0 * dt_probe);
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

inline double variation_identity_residual(const VectorField& vf, const FibreMetric& g,
                                          const Trajectory& traj, const JacobiFrame& frame,
                                          const Vec& v0, double t, double dt_probe) {
  return variation_identity_detail(vf, g, traj, frame, v0, t, dt_probe).residual;
}

// Time-dependent fibre chart y' = phi(t, y).  `jacobian` is d phi / d y and
// `dt` is d phi / d t at fixed y; both fall back to finite differences when
// absent.  `inverse` must satisfy inverse(t, forward(t, y)) = y.
struct FibreChart {
  int dim = 0;
  std::function<Vec(double, const Vec&)> forward;
  std::function<Vec(double, const Vec&)> inverse;
  std::function<Mat(double, const Vec&)> jacobian;  // may be empty
  std::function<Vec(double, const Vec&)> dt;        // may be empty
  std::string name;
  bool time_dependent = false;
};

inline Mat chart_jacobian(const FibreChart& c, double t, const Vec& y) {
  if (c.jacobian) {
    Mat j = c.jacobian(t, y);
    if (!all_finite(j)) throw NumericFailure("chart jacobian has non-finite entries");
    return j;
  }
  Vec scale(y.size(), 1.0);
  return fd_jacobian(c.forward, t, y, scale);
}

inline Vec chart_dt(const FibreChart& c, double t, const Vec& y) {
  if (c.dt) return c.dt(t, y);
  const double h = detail::kFdStepBase * std::max(1.0, std::abs(t));
  const Vec p = c.forward(t + h, y);
  const Vec q = c.forward(t - h, y);
  Vec d(p.size());
  for (size_t i = 0; i < p.size(); ++i) d[i] = (p[i] - q[i]) / (2.0 * h);
  return d;
}

struct TransformedSystem {
  VectorField field;
  FibreMetric metric;
};

// Pushes a vector field and metric through a chart, producing the same
// geometry in the new coordinates:
//   gamma'(t, y') = J_c gamma(t, y) + d_t phi(t, y)
//   g'(t, y')     = J_c^{-T} g(t, y) J_c^{-1},   y = phi^{-1}(t, y').
// Singular chart Jacobians surface as ContractViolation from the solve.
inline TransformedSystem push_through_chart(const VectorField& vf, const FibreMetric& g,
                                            const FibreChart& chart) {
  if (vf.dim != chart.dim || g.dim != chart.dim)
    throw ContractViolation("chart dimension does not match field/metric");

  TransformedSystem out;
  out.field.dim = vf.dim;
  out.field.name = vf.name.empty() ? chart.name : vf.name + "@" + chart.name;
  out.field.eval = [vf, chart](double t, const Vec& yp) {
    const Vec y = chart.inverse(t, yp);
    const Vec gamma = vf.eval(t, y);
    const Mat jc = chart_jacobian(chart, t, y);
    return vadd(matvec(jc, gamma), chart_dt(chart, t, y));
  };

  out.metric.dim = g.dim;
  out.metric.tag = g.tag.empty() ? chart.name : g.tag + "@" + chart.name;
  out.metric.eval = [g, chart](double t, const Vec& yp) {
    const Vec y = chart.inverse(t, yp);
    const Mat gm = metric_value(g, t, y, /*require_spd=*/false);
    const Mat jinv = inverse(chart_jacobian(chart, t, y));
    return matmul(jinv.transposed(), matmul(gm, jinv));
  };
  if (g.eval_scaled) {
    out.metric.eval_scaled = [g, chart](double t, const Vec& yp) {
      const Vec y = chart.inverse(t, yp);
      const ScaledMat gm = metric_value_scaled(g, t, y);
      const Mat jinv = inverse(chart_jacobian(chart, t, y));
      return ScaledMat{matmul(jinv.transposed(), matmul(gm.m, jinv)), gm.log_scale};
    };
  }
  return out;
}

struct TensorialityDeviation {
  double tensor_rel = 0.0;  // covariant tensor: law deviation, relative
  double matrix_rel = 0.0;  // raw Lyapunov matrix: same law, relative
};

// Transforms (vf, g) through `chart`, evaluates the covariant tensor and the
// raw Lyapunov matrix on both sides at the same event (t, y), and measures
// how far each is from the rank-2 covariant transformation law
//   T' = J^{-T} T J^{-1}.
// The tensor should satisfy it; the raw matrix generally should not under
// time-dependent charts.
inline TensorialityDeviation tensoriality_deviation(const VectorField& vf,
                                                    const FibreMetric& g,
                                                    const FibreChart& chart, double t,
                                                    const Vec& y) {
  const TransformedSystem sys = push_through_chart(vf, g, chart);
  const Vec yp = chart.forward(t, y);
  const Mat jc = chart_jacobian(chart, t, y);
  const Mat jinv = inverse(jc);

  auto transport = [&](const Mat& m) {
    return matmul(jinv.transposed(), matmul(m, jinv));
  };
  auto rel_dev = [](const Mat& got, const Mat& want) {
    const double scale = std::max(frobenius_norm(want), 1e-300);
    return frobenius_norm(got - want) / scale;
  };

  const TensorEvaluation lv = covariant_lyapunov_tensor(vf, g, t, y);
  const TensorEvaluation lp = covariant_lyapunov_tensor(sys.field, sys.metric, t, yp);
  // The two sides may return different internal scale splits (scaled metrics
  // renormalize per evaluation point); compare on a shared reference scale.
  const double log_ref = std::max(lv.log_scale, lp.log_scale);
  if (std::abs(lv.log_scale - lp.log_scale) > 600.0)
    throw NumericFailure("tensoriality check: sides are too far apart in scale");

  TensorialityDeviation out;
  out.tensor_rel = rel_dev(detail::rebase(lp.form.coeffs, lp.log_scale, log_ref),
                           transport(detail::rebase(lv.form.coeffs, lv.log_scale, log_ref)));

  const Mat lm = lyapunov_matrix(vf, t, y).first;
  const Mat lmp = lyapunov_matrix(sys.field, t, yp).first;
  out.matrix_rel = rel_dev(lmp, transport(lm));
  return out;
}

}  // namespace lyatensor
