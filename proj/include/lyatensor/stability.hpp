#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/integrate.hpp"
#include "lyatensor/linalg.hpp"
#include "lyatensor/quadrature.hpp"
#include "lyatensor/sampling.hpp"
#include "lyatensor/tensor.hpp"
#include "lyatensor/trajectory.hpp"

namespace lyatensor {

// Chord-length upper bound on the instantwise distance between y1 and y2:
//   rho(t) = [ integral_0^1 g(t, y1 + tau*u)(u, u) dtau ]^{1/2},  u = y2 - y1,
// by Gauss-Legendre quadrature.  `segments` > 1 refines the bound by chaining
// the chord through equally spaced midpoints.
inline double chord_distance(const FibreMetric& g, double t, const Vec& y1, const Vec& y2,
                             int quad_order = 16, int segments = 1) {
  if (segments < 1) throw ContractViolation("chord_distance: segments must be >= 1");
  const QuadratureRule& rule = gauss_legendre_01(quad_order);
  double total = 0.0;
  for (int s = 0; s < segments; ++s) {
    const double a = static_cast<double>(s) / segments;
    const double b = static_cast<double>(s + 1) / segments;
    const Vec pa = vaxpy(y1, a, vsub(y2, y1));
    const Vec pb = vaxpy(y1, b, vsub(y2, y1));
    const Vec u = vsub(pb, pa);
    double acc = 0.0;
    for (size_t k = 0; k < rule.nodes.size(); ++k) {
      const Vec p = vaxpy(pa, rule.nodes[k], u);
      const Mat gm = metric_value(g, t, p);
      const double q = dot(u, matvec(gm, u));
      if (!(q >= 0.0)) throw ContractViolation("metric not positive along the chord");
      acc += rule.weights[k] * q;
    }
    total += std::sqrt(acc);
  }
  return total;
}

// log of chord_distance, evaluated through the scaled metric representation
// so that metrics far outside the double range still yield finite logs.
// Returns -inf for coincident endpoints.
inline double chord_distance_log(const FibreMetric& g, double t, const Vec& y1,
                                 const Vec& y2, int quad_order = 16) {
  const Vec u = vsub(y2, y1);
  if (max_abs(u) == 0.0) return -std::numeric_limits<double>::infinity();
  const QuadratureRule& rule = gauss_legendre_01(quad_order);
  std::vector<double> logs(rule.nodes.size());
  double m = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < rule.nodes.size(); ++k) {
    const Vec p = vaxpy(y1, rule.nodes[k], u);
    const ScaledMat gm = metric_value_scaled(g, t, p);
    const double q = dot(u, matvec(gm.m, u));
    if (!(q > 0.0))
      throw ContractViolation("metric not positive-definite along the chord");
    logs[k] = std::log(q) + gm.log_scale;
    m = std::max(m, logs[k]);
  }
  double acc = 0.0;
  for (size_t k = 0; k < logs.size(); ++k)
    acc += rule.weights[k] * std::exp(logs[k] - m);
  return 0.5 * (m + std::log(acc));
}

// Signed rate surrogate for d(rho)/dt: the covariant integrand L(u,u) along
// the instantaneous chord, divided by 2*rho.  Negative whenever L is
// negative-definite along the chord.
inline double chord_distance_rate(const VectorField& vf, const FibreMetric& g, double t,
                                  const Vec& y1, const Vec& y2, int quad_order = 16) {
  const Vec u = vsub(y2, y1);
  const double rho = chord_distance(g, t, y1, y2, quad_order);
  if (!(rho > 0.0)) throw ContractViolation("chord_distance_rate: coincident endpoints");
  const QuadratureRule& rule = gauss_legendre_01(quad_order);
  double acc = 0.0;
  for (size_t k = 0; k < rule.nodes.size(); ++k) {
    const Vec p = vaxpy(y1, rule.nodes[k], u);
    const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, t, p);
    acc += rule.weights[k] * std::exp(ev.log_scale) * dot(u, matvec(ev.form.coeffs, u));
  }
  return acc / (2.0 * rho);
}

enum class CertificateKind { local_isometric, asymptotic_isometric, not_certified };

inline const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::local_isometric: return "local_isometric";
    case CertificateKind::asymptotic_isometric: return "asymptotic_isometric";
    case CertificateKind::not_certified: return "not_certified";
  }
  return "?";
}

struct CertificateWitness {
  double t = 0.0;
  Vec y;
  double eigen_max = 0.0;  // scaled by exp(log_scale)
  double log_scale = 0.0;
};

struct PerturbedPath {
  Vec start;                                       // perturbed initial state
  bool blew_up = false;
  double t_reached = 0.0;
  std::vector<std::pair<double, double>> distances;  // (t, chord distance)
  int sign_violations = 0;                            // strict increases
  double worst_increase = 0.0;
};

struct StabilityCertificate {
  CertificateKind kind = CertificateKind::not_certified;
  std::pair<double, double> window{0.0, 0.0};
  double tube_radius = 0.0;
  std::optional<CertificateWitness> witness;
  int64_t samples_checked = 0;
  bool neutral = false;           // L <= 0 everywhere but singular somewhere
  double distance_drift = 0.0;    // max relative drift of perturbed distances
  std::vector<PerturbedPath> perturbed;
  int total_sign_violations = 0;
  bool terminal_decrease = true;  // asymptotic check: rho(end) < rho(start)
  bool any_blow_up = false;
};

struct CertifyOptions {
  int quad_order = 12;
  int n_perturbed = 8;
  double perturb_fraction = 0.5;  // of tube_radius
  int n_shells = 3;
  uint64_t seed = 1;
  IntegratorConfig cfg;
};

namespace detail {

inline StabilityCertificate certify_impl(const VectorField& vf, const FibreMetric& g,
                                         const Trajectory& anchor, double tube_radius,
                                         std::pair<double, double> window, int n_time,
                                         int n_space, bool asymptotic,
                                         const CertifyOptions& opts) {
  if (!(tube_radius > 0.0)) throw ContractViolation("tube_radius must be positive");
  if (n_time < 1 || n_space < 1)
    throw ContractViolation("sample counts must be positive");
  if (window.first < anchor.t_min() - 1e-12 || window.second > anchor.t_max() + 1e-12 ||
      !(window.second > window.first))
    throw ContractViolation("certification window must lie inside the anchor domain");

  StabilityCertificate cert;
  cert.window = window;
  cert.tube_radius = tube_radius;

  std::vector<double> instants(n_time);
  for (int i = 0; i < n_time; ++i)
    instants[i] = (n_time == 1)
                      ? 0.5 * (window.first + window.second)
                      : window.first + (window.second - window.first) * i / (n_time - 1);

  // Definiteness scan over the tube: per instant, directions on concentric
  // shells, radii measured in the g-norm at that instant.
  const int n_shells = std::min(opts.n_shells, n_space);
  bool all_negative_definite = true;
  bool any_degenerate = false;
  for (int i = 0; i < n_time; ++i) {
    const double ti = instants[i];
    const Vec yc = anchor.value(ti);
    for (int j = 0; j < n_space; ++j) {
      const int shell = j % n_shells;
      const double radius = tube_radius * (shell + 1) / n_shells;
      const Vec dir =
          g_unit_direction(g, ti, yc, static_cast<int64_t>(i) * n_space + j, opts.seed);
      const Vec p = vaxpy(yc, radius, dir);
      const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, ti, p);
      ++cert.samples_checked;
      switch (ev.form.definiteness) {
        case Definiteness::negative_definite:
          break;
        case Definiteness::negative_semidefinite:
        case Definiteness::zero:
          all_negative_definite = false;
          any_degenerate = true;
          break;
        default:
          all_negative_definite = false;
          if (!cert.witness) {
            CertificateWitness w;
            w.t = ti;
            w.y = p;
            w.eigen_max = ev.form.eigen_max;
            w.log_scale = ev.log_scale;
            cert.witness = std::move(w);
          }
          break;
      }
    }
  }
  cert.neutral = !all_negative_definite && any_degenerate && !cert.witness;

  // Empirical monotonicity: perturbed trajectories started at the window
  // opening, compared against the anchor at every sampled instant.
  const double t_start = window.first;
  const Vec y_start = anchor.value(t_start);
  for (int k = 0; k < opts.n_perturbed; ++k) {
    PerturbedPath path;
    const Vec dir = g_unit_direction(g, t_start, y_start, 1000003 + k, opts.seed);
    path.start = vaxpy(y_start, opts.perturb_fraction * tube_radius, dir);
    PartialTrajectory pt =
        integrate_trajectory_partial(vf, t_start, path.start, window.second, opts.cfg);
    path.blew_up = pt.blew_up;
    path.t_reached = pt.t_reached;
    if (pt.blew_up) cert.any_blow_up = true;

    double prev = -1.0;
    double first = -1.0;
    for (double ti : instants) {
      if (ti > pt.t_reached) break;
      const double rho = chord_distance(g, ti, anchor.value(ti),
                                        pt.trajectory.value(ti), opts.quad_order);
      path.distances.emplace_back(ti, rho);
      if (first < 0.0) first = rho;
      if (prev >= 0.0 && rho > prev) {
        ++path.sign_violations;
        path.worst_increase = std::max(path.worst_increase, rho - prev);
      }
      if (first > 0.0)
        cert.distance_drift =
            std::max(cert.distance_drift, std::abs(rho - first) / first);
      prev = rho;
    }
    cert.total_sign_violations += path.sign_violations;
    cert.perturbed.push_back(std::move(path));
  }

  if (asymptotic) {
    for (const PerturbedPath& p : cert.perturbed) {
      if (p.blew_up || p.distances.size() < 2) {
        cert.terminal_decrease = false;
        continue;
      }
      if (!(p.distances.back().second < p.distances.front().second))
        cert.terminal_decrease = false;
    }
    cert.kind = (all_negative_definite && cert.terminal_decrease && !cert.any_blow_up)
                    ? CertificateKind::asymptotic_isometric
                    : CertificateKind::not_certified;
  } else {
    cert.kind = all_negative_definite ? CertificateKind::local_isometric
                                      : CertificateKind::not_certified;
  }
  return cert;
}

}  // namespace detail

// Local isometric-stability certificate over `window`: the covariant tensor
// must be negative-definite at every tube sample; additionally validates the
// monotone decrease of chord distances on perturbed trajectories.  Perturbed
// blow-ups are recorded in the certificate, not thrown.
inline StabilityCertificate certify_local(const VectorField& vf, const FibreMetric& g,
                                          const Trajectory& anchor, double tube_radius,
                                          std::pair<double, double> window, int n_time,
                                          int n_space, const CertifyOptions& opts = {}) {
  return detail::certify_impl(vf, g, anchor, tube_radius, window, n_time, n_space,
                              /*asymptotic=*/false, opts);
}

// Asymptotic variant over [t0, t0+horizon]: additionally requires every
// perturbed chord distance to end strictly below its starting value.
inline StabilityCertificate certify_asymptotic(const VectorField& vf, const FibreMetric& g,
                                               const Trajectory& anchor, double tube_radius,
                                               double t0, double horizon, int n_time,
                                               int n_space,
                                               const CertifyOptions& opts = {}) {
  if (!(horizon > 0.0)) throw ContractViolation("horizon must be positive");
  return detail::certify_impl(vf, g, anchor, tube_radius, {t0, t0 + horizon}, n_time,
                              n_space, /*asymptotic=*/true, opts);
}

}  // namespace lyatensor
