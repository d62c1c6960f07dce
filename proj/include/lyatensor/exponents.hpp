#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/integrate.hpp"
#include "lyatensor/linalg.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/stability.hpp"

namespace lyatensor {

struct ExponentEstimate {
  double value = 0.0;
  double horizon = 0.0;
  double renorm_interval = 0.0;  // 0 when no renormalization scheme applies
  std::vector<std::pair<double, double>> trace;  // (t, running estimate)
  std::string metric_tag;
  bool saturated = false;  // two-trajectory pair was rescaled at least once
  bool blew_up = false;
  double t_reached = 0.0;
};

struct ExponentOptions {
  int quad_order = 12;
  int samples = 200;                  // trace resolution for two-trajectory runs
  double saturation_fraction = 0.01;  // of attractor_diameter
  double attractor_diameter = std::numeric_limits<double>::infinity();
  double tail_fraction = 0.2;         // upper-limit window for the trace
};

namespace detail {

// Endpoint-only propagation of the joint (state, frame) system.
struct FramePropagation {
  bool completed = false;
  double t_reached = 0.0;
  Vec y;
  Mat frame;
};

inline FramePropagation propagate_frame(const VectorField& vf, double t0, const Vec& y0,
                                        const Mat& q0, double t1,
                                        const IntegratorConfig& cfg) {
  const int dim = vf.dim;
  const int cols = q0.cols();
  Vec s(dim + dim * cols);
  for (int i = 0; i < dim; ++i) s[i] = y0[i];
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < cols; ++j) s[dim + i * cols + j] = q0(i, j);
  CoreOutcome oc = rk45_core(wrap_variational(vf, cols), t0, s, t1, cfg, nullptr, nullptr);
  FramePropagation out;
  out.completed = oc.completed;
  out.t_reached = oc.t_reached;
  out.y.assign(oc.y.begin(), oc.y.begin() + dim);
  out.frame = Mat(dim, cols);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < cols; ++j) out.frame(i, j) = oc.y[dim + i * cols + j];
  return out;
}

// Endpoint-only propagation of a plain state.
struct StatePropagation {
  bool completed = false;
  double t_reached = 0.0;
  Vec y;
};

inline StatePropagation propagate_state(const VectorField& vf, double t0, const Vec& y0,
                                        double t1, const IntegratorConfig& cfg) {
  CoreOutcome oc = rk45_core(wrap_field(vf), t0, y0, t1, cfg, nullptr, nullptr);
  return {oc.completed, oc.t_reached, Vec(oc.y.begin(), oc.y.begin() + vf.dim)};
}

// ln of the g-norm of v at (t, y), through the scaled metric representation.
inline double g_log_norm(const FibreMetric& g, double t, const Vec& y, const Vec& v) {
  const ScaledMat gm = metric_value_scaled(g, t, y);
  const double q = dot(v, matvec(gm.m, v));
  if (!(q > 0.0)) throw ContractViolation("metric not positive-definite at norm point");
  return 0.5 * (std::log(q) + gm.log_scale);
}

// Converts raw running-rate samples into the upper-limit trace: entry i is
// the max of the raw rate over the trailing `tail` fraction of [t0, t_i].
inline std::vector<std::pair<double, double>> tail_limsup_trace(
    const std::vector<std::pair<double, double>>& raw, double t0, double tail) {
  std::vector<std::pair<double, double>> out;
  out.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const double cutoff = t0 + (1.0 - tail) * (raw[i].first - t0);
    double m = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j <= i; ++j)
      if (raw[j].first >= cutoff) m = std::max(m, raw[j].second);
    out.emplace_back(raw[i].first, m);
  }
  return out;
}

}  // namespace detail

// Upper Lyapunov exponent of the pair (y0, y0p): running rate of the log
// chord distance, with upper-limit semantics over the trace tail.  When the
// separation exceeds saturation_fraction * attractor_diameter the pair is
// pulled back toward the anchor (classical renormalized-pair scheme) and the
// estimate is flagged `saturated`.
inline ExponentEstimate two_trajectory_exponent(const VectorField& vf, const FibreMetric& g,
                                                double t0, const Vec& y0, const Vec& y0p,
                                                double horizon,
                                                const IntegratorConfig& cfg = {},
                                                const ExponentOptions& opts = {}) {
  if (!(horizon > 0.0)) throw ContractViolation("horizon must be positive");
  if (max_abs(vsub(y0, y0p)) == 0.0)
    throw ContractViolation("two_trajectory_exponent: coincident initial states");

  ExponentEstimate est;
  est.horizon = horizon;
  est.metric_tag = g.tag;
  est.t_reached = t0;

  const int n = std::max(2, opts.samples);
  const double dt = horizon / n;
  Vec ya = y0, yb = y0p;
  double t = t0;
  double log_corr = 0.0;  // accumulated log of undone rescalings
  const double log_rho0 = chord_distance_log(g, t0, ya, yb, opts.quad_order);
  const double sat_threshold = opts.saturation_fraction * opts.attractor_diameter;

  std::vector<std::pair<double, double>> raw;
  for (int i = 1; i <= n; ++i) {
    const double ti = t0 + horizon * i / n;
    (void)dt;
    detail::StatePropagation pa = detail::propagate_state(vf, t, ya, ti, cfg);
    detail::StatePropagation pb = detail::propagate_state(vf, t, yb, ti, cfg);
    if (!pa.completed || !pb.completed) {
      est.blew_up = true;
      est.t_reached = std::min(pa.t_reached, pb.t_reached);
      break;
    }
    ya = pa.y;
    yb = pb.y;
    t = ti;
    est.t_reached = ti;

    const double log_rho = chord_distance_log(g, ti, ya, yb, opts.quad_order) + log_corr;
    raw.emplace_back(ti, (log_rho - log_rho0) / (ti - t0));

    if (std::isfinite(sat_threshold) && norm2(vsub(yb, ya)) > sat_threshold) {
      const double pre = chord_distance_log(g, ti, ya, yb, opts.quad_order);
      const Vec u = vsub(yb, ya);
      const double target = 1e-3 * sat_threshold;
      const double alpha = target / norm2(u);
      yb = vaxpy(ya, alpha, u);
      const double post = chord_distance_log(g, ti, ya, yb, opts.quad_order);
      log_corr += pre - post;
      est.saturated = true;
    }
  }

  if (raw.empty())
    throw NumericFailure("two_trajectory_exponent: no usable samples before blow-up");
  est.trace = detail::tail_limsup_trace(raw, t0, opts.tail_fraction);
  est.value = est.trace.back().second;
  return est;
}

// Top exponent from one Jacobi field: periodic renormalization in the g-norm,
// exponent = accumulated log growth / elapsed time.
inline ExponentEstimate jacobi_exponent(const VectorField& vf, const FibreMetric& g,
                                        double t0, const Vec& y0, const Vec& v0,
                                        double horizon, double renorm_interval,
                                        const IntegratorConfig& cfg = {},
                                        const ExponentOptions& opts = {}) {
  if (!(horizon > 0.0) || !(renorm_interval > 0.0))
    throw ContractViolation("horizon and renorm_interval must be positive");
  if (max_abs(v0) == 0.0) throw ContractViolation("jacobi_exponent: zero direction");

  ExponentEstimate est;
  est.horizon = horizon;
  est.renorm_interval = renorm_interval;
  est.metric_tag = g.tag;
  est.t_reached = t0;

  Vec y = y0;
  Mat q(vf.dim, 1);
  {
    const double inv = 1.0 / norm2(v0);
    for (int i = 0; i < vf.dim; ++i) q(i, 0) = v0[i] * inv;
  }
  auto col = [&](const Mat& m) {
    Vec v(m.rows());
    for (int i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
    return v;
  };

  double t = t0;
  double sum_log = 0.0;
  double b = detail::g_log_norm(g, t0, y0, col(q));
  const int n_seg = static_cast<int>(std::ceil(horizon / renorm_interval - 1e-12));
  for (int s = 0; s < n_seg; ++s) {
    const double ti = std::min(t0 + horizon, t0 + renorm_interval * (s + 1));
    detail::FramePropagation fp = detail::propagate_frame(vf, t, y, q, ti, cfg);
    if (!fp.completed) {
      est.blew_up = true;
      est.t_reached = fp.t_reached;
      break;
    }
    y = fp.y;
    t = ti;
    est.t_reached = ti;
    Vec w = col(fp.frame);
    const double wlog = detail::g_log_norm(g, ti, y, w);
    sum_log += wlog - b;
    const double winv = 1.0 / norm2(w);
    for (int i = 0; i < vf.dim; ++i) q(i, 0) = w[i] * winv;
    b = wlog + std::log(winv);
    est.trace.emplace_back(ti, sum_log / (ti - t0));
  }
  if (est.trace.empty())
    throw NumericFailure("jacobi_exponent: no completed segments before blow-up");
  est.value = est.trace.back().second;
  return est;
}

// Full metric-weighted spectrum: evolves a frame by the variation equation
// and re-orthonormalizes it in the g(t,.)-inner product every
// renorm_interval; exponent_i = time average of the i-th pivot's log growth.
// Frames whose Euclidean condition number exceeds 1e12 between
// renormalizations trigger a retry with the interval halved (up to 4 times).
// All bookkeeping runs in log scale, so long windows with metrics far outside
// the double range still work.
inline std::vector<ExponentEstimate> exponent_spectrum(const VectorField& vf,
                                                       const FibreMetric& g, double t0,
                                                       const Vec& y0, double horizon,
                                                       double renorm_interval,
                                                       const IntegratorConfig& cfg = {},
                                                       const ExponentOptions& opts = {}) {
  if (!(horizon > 0.0) || !(renorm_interval > 0.0))
    throw ContractViolation("horizon and renorm_interval must be positive");
  const int dim = vf.dim;

  for (int attempt = 0; attempt <= 4; ++attempt) {
    const double interval = renorm_interval / (1 << attempt);
    bool degenerate = false;

    Vec y = y0;
    double t = t0;
    Mat q = Mat::identity(dim);
    Vec b(dim, 0.0);       // ln of each column's g-norm
    Vec sum_log(dim, 0.0);
    std::vector<std::vector<std::pair<double, double>>> traces(dim);
    bool blew_up = false;
    double t_reached = t0;

    // g-orthogonalize the initial frame, keeping columns Euclidean-unit.
    auto orthonormalize = [&](Mat& frame, Vec& blog, double tt, const Vec& yy,
                              Vec* growth) {
      const ScaledMat gm = metric_value_scaled(g, tt, yy);
      std::vector<Vec> cols(dim, Vec(dim));
      for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) cols[j][i] = frame(i, j);
      std::vector<Vec> gu(dim);       // G~ * u_j
      std::vector<double> unorm(dim); // u_j^T G~ u_j
      for (int j = 0; j < dim; ++j) {
        Vec w = cols[j];
        for (int k = 0; k < j; ++k) {
          const double c = dot(w, gu[k]) / unorm[k];
          w = vaxpy(w, -c, cols[k]);
        }
        cols[j] = w;
        gu[j] = matvec(gm.m, w);
        unorm[j] = dot(w, gu[j]);
        if (!(unorm[j] > 0.0))
          throw NumericFailure("exponent_spectrum: frame lost rank in the g-inner product");
        const double wlog = 0.5 * (std::log(unorm[j]) + gm.log_scale);
        if (growth) (*growth)[j] = wlog - blog[j];
        const double winv = 1.0 / norm2(w);
        for (int i = 0; i < dim; ++i) frame(i, j) = w[i] * winv;
        blog[j] = wlog + std::log(winv);
        // Rescale the cached products so later projections stay consistent
        // with the renormalized column.
        for (int i = 0; i < dim; ++i) gu[j][i] *= winv;
        unorm[j] *= winv * winv;
        cols[j] = Vec(dim);
        for (int i = 0; i < dim; ++i) cols[j][i] = frame(i, j);
      }
    };

    orthonormalize(q, b, t0, y0, nullptr);

    const int n_seg = static_cast<int>(std::ceil(horizon / interval - 1e-12));
    for (int s = 0; s < n_seg; ++s) {
      const double ti = std::min(t0 + horizon, t0 + interval * (s + 1));
      detail::FramePropagation fp = detail::propagate_frame(vf, t, y, q, ti, cfg);
      if (!fp.completed) {
        blew_up = true;
        t_reached = fp.t_reached;
        break;
      }
      // Euclidean condition of the propagated frame (columns started unit).
      {
        const Mat vtv = matmul(fp.frame.transposed(), fp.frame);
        auto [lo, hi] = eigen_extremes(symmetrize(vtv));
        if (!(lo > 0.0) || hi / lo > 1e24) {
          degenerate = true;
          break;
        }
      }
      y = fp.y;
      t = ti;
      t_reached = ti;
      q = fp.frame;
      Vec growth(dim);
      orthonormalize(q, b, ti, y, &growth);
      for (int j = 0; j < dim; ++j) {
        sum_log[j] += growth[j];
        traces[j].emplace_back(ti, sum_log[j] / (ti - t0));
      }
    }

    if (degenerate) continue;  // retry with halved interval

    if (traces[0].empty())
      throw NumericFailure("exponent_spectrum: no completed segments before blow-up");

    std::vector<ExponentEstimate> out(dim);
    for (int j = 0; j < dim; ++j) {
      out[j].value = traces[j].back().second;
      out[j].horizon = horizon;
      out[j].renorm_interval = interval;
      out[j].trace = std::move(traces[j]);
      out[j].metric_tag = g.tag;
      out[j].blew_up = blew_up;
      out[j].t_reached = t_reached;
    }
    std::sort(out.begin(), out.end(),
              [](const ExponentEstimate& a, const ExponentEstimate& b2) {
                return a.value > b2.value;
              });
    return out;
  }
  throw NumericFailure(
      "exponent_spectrum: frame degenerated even after halving the renormalization "
      "interval 4 times");
}

}  // namespace lyatensor
