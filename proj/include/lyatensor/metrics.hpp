#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/integrate.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

// Strictly positive scalar weight h(t).  `dh` and `log_h` are optional
// capability hooks (log_h keeps long exponential windows representable).
struct ScalarProfile {
  std::function<double(double)> h;
  std::function<double(double)> dh;     // may be empty
  std::function<double(double)> log_h;  // may be empty
};

inline ScalarProfile constant_profile(double c = 1.0) {
  if (!(c > 0.0)) throw ContractViolation("constant_profile: weight must be positive");
  ScalarProfile p;
  p.h = [c](double) { return c; };
  p.dh = [](double) { return 0.0; };
  p.log_h = [c](double) { return std::log(c); };
  return p;
}

// h(t) = exp(rate * (t - t_ref)).
inline ScalarProfile exponential_profile(double rate, double t_ref = 0.0) {
  ScalarProfile p;
  p.h = [rate, t_ref](double t) { return std::exp(rate * (t - t_ref)); };
  p.dh = [rate, t_ref](double t) { return rate * std::exp(rate * (t - t_ref)); };
  p.log_h = [rate, t_ref](double t) { return rate * (t - t_ref); };
  return p;
}

inline double profile_log(const ScalarProfile& p, double t) {
  if (p.log_h) return p.log_h(t);
  const double v = p.h(t);
  if (!(v > 0.0)) throw ContractViolation("scalar profile must stay positive");
  return std::log(v);
}

inline FibreMetric euclidean_metric(int dim) {
  FibreMetric g;
  g.dim = dim;
  g.tag = "euclidean";
  g.eval = [dim](double, const Vec&) { return Mat::identity(dim); };
  g.dt = [dim](double, const Vec&) { return Mat(dim, dim); };
  g.dy = [dim](double, const Vec&) { return std::vector<Mat>(dim, Mat(dim, dim)); };
  g.eval_scaled = [dim](double, const Vec&) { return ScaledMat{Mat::identity(dim), 0.0}; };
  return g;
}

inline FibreMetric constant_metric(Mat coeffs, std::string tag = "constant") {
  const int dim = coeffs.rows();
  auto [lo, hi] = eigen_extremes(coeffs);
  (void)hi;
  if (!(lo > 0.0)) throw ContractViolation("constant_metric: matrix must be SPD");
  const Mat g0 = symmetrize(coeffs);
  FibreMetric g;
  g.dim = dim;
  g.tag = std::move(tag);
  g.eval = [g0](double, const Vec&) { return g0; };
  g.dt = [dim](double, const Vec&) { return Mat(dim, dim); };
  g.dy = [dim](double, const Vec&) { return std::vector<Mat>(dim, Mat(dim, dim)); };
  g.eval_scaled = [g0](double, const Vec&) { return ScaledMat{g0, 0.0}; };
  return g;
}

// g(t, y) = h(t) * base(t, y).  Analytic derivatives are kept whenever the
// operands supply them; otherwise the hooks stay empty and callers fall back
// to finite differences.
inline FibreMetric scaled_metric(ScalarProfile profile, FibreMetric base) {
  FibreMetric g;
  g.dim = base.dim;
  g.tag = base.tag.empty() ? "scaled" : "scaled_" + base.tag;
  auto base_ptr = std::make_shared<FibreMetric>(std::move(base));
  auto prof = std::make_shared<ScalarProfile>(std::move(profile));

  g.eval = [base_ptr, prof](double t, const Vec& y) {
    const double h = prof->h(t);
    if (!(h > 0.0)) throw ContractViolation("scalar profile must stay positive");
    Mat m = base_ptr->eval(t, y);
    m *= h;
    return m;
  };
  if (base_ptr->dt && prof->dh) {
    g.dt = [base_ptr, prof](double t, const Vec& y) {
      Mat m = base_ptr->dt(t, y);
      m *= prof->h(t);
      Mat v = base_ptr->eval(t, y);
      v *= prof->dh(t);
      return m + v;
    };
  }
  if (base_ptr->dy) {
    g.dy = [base_ptr, prof](double t, const Vec& y) {
      std::vector<Mat> d = base_ptr->dy(t, y);
      const double h = prof->h(t);
      for (Mat& m : d) m *= h;
      return d;
    };
  }
  g.eval_scaled = [base_ptr, prof](double t, const Vec& y) {
    ScaledMat sm = metric_value_scaled(*base_ptr, t, y);
    sm.log_scale += profile_log(*prof, t);
    return sm;
  };
  return g;
}

// Smooth analytic test metric with genuine t- and y-dependence:
//   g_ij(t, y) = delta_ij + eps * sin(omega*t + y_i + y_j).
// SPD for eps * dim < 1.  Ships full analytic derivatives.
inline FibreMetric sinusoidal_metric(int dim, double eps = 0.1, double omega = 1.0) {
  if (!(eps * dim < 1.0))
    throw ContractViolation("sinusoidal_metric: need eps * dim < 1 for positivity");
  FibreMetric g;
  g.dim = dim;
  g.tag = "sinusoidal";
  g.eval = [dim, eps, omega](double t, const Vec& y) {
    Mat m = Mat::identity(dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) += eps * std::sin(omega * t + y[i] + y[j]);
    return m;
  };
  g.dt = [dim, eps, omega](double t, const Vec& y) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        m(i, j) = eps * omega * std::cos(omega * t + y[i] + y[j]);
    return m;
  };
  g.dy = [dim, eps, omega](double t, const Vec& y) {
    std::vector<Mat> d(dim, Mat(dim, dim));
    for (int k = 0; k < dim; ++k)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double f = 0.0;
          if (i == k) f += 1.0;
          if (j == k) f += 1.0;
          d[k](i, j) = eps * f * std::cos(omega * t + y[i] + y[j]);
        }
    return d;
  };
  return g;
}

// Copy of a metric with every optional capability removed; useful for
// exercising the finite-difference fallbacks against the analytic original.
inline FibreMetric strip_capabilities(const FibreMetric& g) {
  FibreMetric out;
  out.dim = g.dim;
  out.tag = g.tag.empty() ? "stripped" : g.tag + "_fd";
  out.eval = g.eval;
  return out;
}

struct PullbackCounters {
  std::atomic<int64_t> evaluations{0};  // metric evaluations requested
  std::atomic<int64_t> flow_solves{0};  // backward flows actually integrated
};

struct PullbackOptions {
  double cache_quantum = 1e-9;    // evaluation points this close share a solve
  size_t cache_capacity = 65536;  // entries kept before the memo is dropped
};

// The h-profile convention used by pullback_with_target_exponent, surfaced in
// reports so downstream consumers know what the target exponent means.
inline constexpr const char* kPullbackExponentConvention =
    "h(t) = exp(2*lambda*(t - t_ref)); metric-weighted exponents then equal lambda";

namespace detail {

struct PullbackKey {
  std::vector<int64_t> q;
  bool operator==(const PullbackKey& o) const { return q == o.q; }
};

struct PullbackKeyHash {
  size_t operator()(const PullbackKey& k) const {
    size_t h = 1469598103934665603ull;
    for (int64_t v : k.q) {
      h ^= static_cast<size_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

inline int64_t quantize_coord(double x, double quantum) {
  const double q = std::nearbyint(x / quantum) * quantum;
  int64_t bits;
  std::memcpy(&bits, &q, sizeof(bits));
  return bits;
}

struct PullbackState {
  VectorField field;
  FibreMetric base;  // metric at the reference time
  double t_ref = 0.0;
  ScalarProfile profile;
  IntegratorConfig cfg;
  PullbackOptions opts;
  std::shared_ptr<PullbackCounters> counters;

  std::mutex mu;
  std::unordered_map<PullbackKey, ScaledFlowJacobian, PullbackKeyHash> cache;

  ScaledFlowJacobian backward(double t, const Vec& y) {
    counters->evaluations.fetch_add(1, std::memory_order_relaxed);
    PullbackKey key;
    key.q.reserve(y.size() + 1);
    key.q.push_back(quantize_coord(t, opts.cache_quantum));
    for (double v : y) key.q.push_back(quantize_coord(v, opts.cache_quantum));
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
    }
    ScaledFlowJacobian sol = flow_jacobian_scaled(field, t, y, t_ref, cfg);
    counters->flow_solves.fetch_add(1, std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lock(mu);
      if (cache.size() >= opts.cache_capacity) cache.clear();
      cache.emplace(std::move(key), sol);
    }
    return sol;
  }

  ScaledMat eval_scaled(double t, const Vec& y) {
    const ScaledFlowJacobian b = backward(t, y);
    const Mat g0 = metric_value(base, t_ref, b.y);
    Mat m = matmul(b.jac.transposed(), matmul(g0, b.jac));
    ScaledMat out;
    out.m = symmetrize(m);
    out.log_scale = 2.0 * b.log_scale + profile_log(profile, t);
    // Keep the plain part near unit size so downstream arithmetic is safe.
    const double mx = max_abs(out.m);
    if (mx > 0.0 && (mx > 1e30 || mx < 1e-30)) {
      const double s = std::log(mx);
      out.m *= std::exp(-s);
      out.log_scale += s;
    }
    return out;
  }
};

}  // namespace detail

struct PullbackMetric {
  FibreMetric metric;
  std::shared_ptr<PullbackCounters> counters;
};

// Transports `base` (a metric pinned at t_ref) along the flow of `field` and
// weighs it by `profile`:
//   g(t, y) = h(t) * B(t,y)^T g0(Phi_{t->t_ref}(y)) B(t,y),
// where B is the Jacobian of the backward flow map Phi_{t->t_ref}.  Evaluation
// integrates the flow plus variational system; nearby requests (within
// cache_quantum per coordinate) share one solve through a memo cache.  The
// plain eval throws NumericFailure when values cannot fit in doubles; the
// scaled eval stays valid on long windows.
inline PullbackMetric flow_pullback(VectorField field, FibreMetric base, double t_ref,
                                    ScalarProfile profile = constant_profile(),
                                    IntegratorConfig cfg = {},
                                    PullbackOptions opts = {}) {
  if (field.dim != base.dim)
    throw ContractViolation("flow_pullback: field and metric dimensions differ");
  if (!(opts.cache_quantum > 0.0))
    throw ContractViolation("flow_pullback: cache quantum must be positive");
  validate(cfg);

  auto st = std::make_shared<detail::PullbackState>();
  st->field = std::move(field);
  st->base = std::move(base);
  st->t_ref = t_ref;
  st->profile = std::move(profile);
  st->cfg = cfg;
  st->opts = opts;
  st->counters = std::make_shared<PullbackCounters>();

  PullbackMetric out;
  out.counters = st->counters;
  out.metric.dim = st->field.dim;
  out.metric.tag = "pullback_" + (st->base.tag.empty() ? "metric" : st->base.tag);
  out.metric.eval_scaled = [st](double t, const Vec& y) { return st->eval_scaled(t, y); };
  out.metric.eval = [st](double t, const Vec& y) {
    ScaledMat sm = st->eval_scaled(t, y);
    const double mx = max_abs(sm.m);
    if (mx > 0.0 && sm.log_scale + std::log(mx) > 700.0)
      throw NumericFailure("pullback metric overflows doubles; use the scaled evaluation");
    Mat m = sm.m;
    m *= std::exp(sm.log_scale);
    if (!all_finite(m)) throw NumericFailure("pullback metric left the double range");
    return m;
  };
  return out;
}

// Flow pullback weighted so that every metric-measured expansion rate lands
// on `lambda`; see kPullbackExponentConvention.
inline PullbackMetric pullback_with_target_exponent(VectorField field, FibreMetric base,
                                                    double t_ref, double lambda,
                                                    IntegratorConfig cfg = {},
                                                    PullbackOptions opts = {}) {
  PullbackMetric pm = flow_pullback(std::move(field), std::move(base), t_ref,
                                    exponential_profile(2.0 * lambda, t_ref), cfg, opts);
  pm.metric.tag += "_target";
  return pm;
}

}  // namespace lyatensor
