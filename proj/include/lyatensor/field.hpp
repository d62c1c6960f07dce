#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

// Records whether a derivative came from a user-supplied closure or from a
// finite-difference fallback.
enum class DerivSource { analytic, finite_difference };

inline const char* to_string(DerivSource s) {
  return s == DerivSource::analytic ? "analytic" : "finite_difference";
}

// Time-dependent vector field on R^dim.  `jacobian` is optional; when absent
// callers fall back to finite differences.  jacobian(t,y)(i,j) = d f_i / d y_j.
struct VectorField {
  int dim = 0;
  std::function<Vec(double, const Vec&)> eval;
  std::function<Mat(double, const Vec&)> jacobian;  // may be empty
  std::string name;
};

// A matrix together with a log-scale factor: represents exp(log_scale) * m.
// Used wherever values can leave the double range (long-window pullbacks).
struct ScaledMat {
  Mat m;
  double log_scale = 0.0;
};

// Time-dependent Riemannian metric on R^dim.  eval must produce a symmetric
// positive-definite matrix (symmetric up to 1e-8 relative; small asymmetry is
// repaired, larger is a contract violation).  dt, dy and eval_scaled are
// optional capability hooks:
//   dt(t,y)           = pointwise time derivative of the coefficient matrix
//   dy(t,y)[k]        = derivative along coordinate y_k
//   eval_scaled(t,y)  = same value as eval but in ScaledMat form, for metrics
//                       whose coefficients overflow doubles
struct FibreMetric {
  int dim = 0;
  std::function<Mat(double, const Vec&)> eval;
  std::function<Mat(double, const Vec&)> dt;                 // may be empty
  std::function<std::vector<Mat>(double, const Vec&)> dy;    // may be empty
  std::function<ScaledMat(double, const Vec&)> eval_scaled;  // may be empty
  std::string tag;  // short human-readable label, used in reports
};

namespace detail {
// cbrt(machine epsilon): the classic central-difference step scale.
inline constexpr double kFdStepBase = 6.055454452393343e-06;
}  // namespace detail

// Central-difference Jacobian of f at (t, y).  Step for component i is
// cbrt(eps) * max(scale_i, |y_i|).  `scale` must be positive and match y's
// size; pass {1,...,1} when no better characteristic sizes are known.
inline Mat fd_jacobian(const std::function<Vec(double, const Vec&)>& f, double t,
                       const Vec& y, const Vec& scale) {
  const int n = static_cast<int>(y.size());
  if (static_cast<int>(scale.size()) != n)
    throw ContractViolation("fd_jacobian: scale size does not match state size");
  for (double s : scale)
    if (!(s > 0.0)) throw ContractViolation("fd_jacobian: scale entries must be positive");

  Mat jac;
  Vec yp = y, ym = y;
  for (int j = 0; j < n; ++j) {
    const double h = detail::kFdStepBase * std::max(scale[j], std::abs(y[j]));
    yp[j] = y[j] + h;
    ym[j] = y[j] - h;
    const Vec fp = f(t, yp);
    const Vec fm = f(t, ym);
    yp[j] = y[j];
    ym[j] = y[j];
    if (jac.rows() == 0) jac = Mat(static_cast<int>(fp.size()), n);
    const double inv = 1.0 / (2.0 * h);
    for (int i = 0; i < jac.rows(); ++i) {
      const double d = (fp[i] - fm[i]) * inv;
      if (!std::isfinite(d)) throw NumericFailure("fd_jacobian: non-finite difference");
      jac(i, j) = d;
    }
  }
  return jac;
}

// Jacobian of a vector field, preferring the analytic closure.
inline std::pair<Mat, DerivSource> field_jacobian(const VectorField& vf, double t,
                                                  const Vec& y) {
  if (vf.jacobian) {
    Mat j = vf.jacobian(t, y);
    if (!all_finite(j)) throw NumericFailure("field jacobian has non-finite entries");
    return {std::move(j), DerivSource::analytic};
  }
  Vec scale(y.size(), 1.0);
  return {fd_jacobian(vf.eval, t, y, scale), DerivSource::finite_difference};
}

// Evaluates a metric and enforces the symmetry contract: asymmetry up to
// 1e-8 relative is silently repaired, anything larger throws.  With
// `require_spd` the value must also be positive definite.
inline Mat metric_value(const FibreMetric& g, double t, const Vec& y,
                        bool require_spd = true) {
  Mat m = g.eval(t, y);
  if (m.rows() != g.dim || m.cols() != g.dim)
    throw ContractViolation("metric value has wrong shape");
  if (!all_finite(m)) throw NumericFailure("metric value has non-finite entries");
  const double rel = asymmetry(m) / (1.0 + max_abs(m));
  if (rel > 1e-8)
    throw ContractViolation("metric value is asymmetric beyond tolerance");
  m = symmetrize(m);
  if (require_spd) {
    auto [lo, hi] = eigen_extremes(m);
    (void)hi;
    if (!(lo > 0.0))
      throw ContractViolation("metric value is not positive definite");
  }
  return m;
}

inline ScaledMat metric_value_scaled(const FibreMetric& g, double t, const Vec& y) {
  if (g.eval_scaled) {
    ScaledMat sm = g.eval_scaled(t, y);
    if (!all_finite(sm.m) || !std::isfinite(sm.log_scale))
      throw NumericFailure("scaled metric value has non-finite entries");
    sm.m = symmetrize(sm.m);
    return sm;
  }
  return {metric_value(g, t, y), 0.0};
}

// d/dt of the metric coefficients at fixed y.  Falls back to a central
// difference with step cbrt(eps) * max(1, |t|).
inline std::pair<Mat, DerivSource> metric_dt(const FibreMetric& g, double t,
                                             const Vec& y) {
  if (g.dt) {
    Mat m = g.dt(t, y);
    if (!all_finite(m)) throw NumericFailure("metric dt has non-finite entries");
    return {symmetrize(m), DerivSource::analytic};
  }
  const double h = detail::kFdStepBase * std::max(1.0, std::abs(t));
  Mat diff = g.eval(t + h, y) - g.eval(t - h, y);
  diff *= 1.0 / (2.0 * h);
  if (!all_finite(diff)) throw NumericFailure("metric dt: non-finite difference");
  return {symmetrize(diff), DerivSource::finite_difference};
}

// Spatial derivatives of the metric along every coordinate axis.
inline std::pair<std::vector<Mat>, DerivSource> metric_dy(const FibreMetric& g,
                                                          double t, const Vec& y) {
  if (g.dy) {
    std::vector<Mat> d = g.dy(t, y);
    if (static_cast<int>(d.size()) != g.dim)
      throw ContractViolation("metric dy returned wrong number of slices");
    for (Mat& m : d) {
      if (!all_finite(m)) throw NumericFailure("metric dy has non-finite entries");
      m = symmetrize(m);
    }
    return {std::move(d), DerivSource::analytic};
  }
  std::vector<Mat> d(g.dim);
  Vec yp = y, ym = y;
  for (int k = 0; k < g.dim; ++k) {
    const double h = detail::kFdStepBase * std::max(1.0, std::abs(y[k]));
    yp[k] = y[k] + h;
    ym[k] = y[k] - h;
    Mat diff = g.eval(t, yp) - g.eval(t, ym);
    diff *= 1.0 / (2.0 * h);
    if (!all_finite(diff)) throw NumericFailure("metric dy: non-finite difference");
    d[k] = symmetrize(diff);
    yp[k] = y[k];
    ym[k] = y[k];
  }
  return {std::move(d), DerivSource::finite_difference};
}

}  // namespace lyatensor
