#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lyatensor/charts.hpp"
#include "lyatensor/exponents.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/quadrature.hpp"
#include "lyatensor/report.hpp"
#include "lyatensor/sampling.hpp"
#include "lyatensor/stability.hpp"
#include "lyatensor/systems.hpp"
#include "lyatensor/tensor.hpp"

namespace lyatensor {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CheckResult run_one(const std::string& name,
                           const std::function<std::pair<bool, std::string>()>& body) {
  CheckResult r;
  r.name = name;
  try {
    auto [ok, detail] = body();
    r.pass = ok;
    r.detail = detail;
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  return r;
}

}  // namespace detail

// Fast self-contained invariant battery behind `lyatensor check`.
inline std::vector<CheckResult> run_builtin_checks() {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name,
                 std::function<std::pair<bool, std::string>()> body) {
    out.push_back(detail::run_one(name, std::move(body)));
  };

  add("integrate.closed_form_decay", [] {
    VectorField vf;
    vf.dim = 1;
    vf.eval = [](double, const Vec& y) { return Vec{-y[0]}; };
    const Trajectory tr = integrate_trajectory(vf, 0.0, {1.0}, 1.0, {});
    const double err = std::abs(tr.value(1.0)[0] - std::exp(-1.0));
    return std::make_pair(err < 1e-7, "endpoint error " + format_number(err));
  });

  add("integrate.harmonic_period", [] {
    VectorField vf;
    vf.dim = 2;
    vf.eval = [](double, const Vec& y) { return Vec{y[1], -y[0]}; };
    const double two_pi = 2.0 * std::acos(-1.0);
    const Trajectory tr = integrate_trajectory(vf, 0.0, {1.0, 0.0}, two_pi, {});
    const Vec yb = tr.value(two_pi);
    const double err = std::hypot(yb[0] - 1.0, yb[1]);
    return std::make_pair(err < 1e-6, "period error " + format_number(err));
  });

  add("integrate.blow_up_detected", [] {
    VectorField vf;
    vf.dim = 1;
    vf.eval = [](double, const Vec& y) { return Vec{y[0] * y[0]}; };
    try {
      integrate_trajectory(vf, 0.0, {1.0}, 2.0, {});
    } catch (const BlowUpError& ex) {
      const bool near = ex.t_reached() > 0.9 && ex.t_reached() <= 1.01;
      return std::make_pair(near, "blow-up at t = " + format_number(ex.t_reached()));
    }
    return std::make_pair(false, std::string("no blow-up raised"));
  });

  add("integrate.rotation_frame", [] {
    VectorField vf;
    vf.dim = 2;
    vf.eval = [](double, const Vec& y) { return Vec{y[1], -y[0]}; };
    vf.jacobian = [](double, const Vec&) { return Mat{{0.0, 1.0}, {-1.0, 0.0}}; };
    const VariationResult vr =
        integrate_with_variation(vf, 0.0, {0.3, -0.2}, Mat::identity(2), 2.0, {});
    const Mat m = vr.frame.value(2.0);
    const double c = std::cos(2.0), s = std::sin(2.0);
    const double err = std::max(
        std::max(std::abs(m(0, 0) - c), std::abs(m(0, 1) - s)),
        std::max(std::abs(m(1, 0) + s), std::abs(m(1, 1) - c)));
    return std::make_pair(err < 1e-7, "frame error " + format_number(err));
  });

  add("linalg.eigen_known", [] {
    const EigenSym e = eigen_sym(Mat{{2.0, 1.0}, {1.0, 2.0}});
    const double err =
        std::max(std::abs(e.values[0] - 1.0), std::abs(e.values[1] - 3.0));
    return std::make_pair(err < 1e-12, "eigenvalue error " + format_number(err));
  });

  add("tensor.linear_symmetrized_jacobian", [] {
    const SystemSpec* spec = find_system("linear2d");
    const VectorField vf = instantiate(*spec);
    const FibreMetric g = euclidean_metric(2);
    const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, 0.3, {0.7, -0.4});
    const auto [jac, src] = field_jacobian(vf, 0.3, {0.7, -0.4});
    (void)src;
    Mat want = jac.transposed();
    want += jac;
    double err = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        err = std::max(err, std::abs(ev.form.coeffs(i, j) - want(i, j)));
    return std::make_pair(err < 1e-8, "max entry error " + format_number(err));
  });

  add("tensor.tensoriality_rotation_chart", [] {
    const SystemSpec* spec = find_system("damped_oscillator");
    const VectorField vf = instantiate(*spec);
    const FibreMetric g = euclidean_metric(2);
    const TensorialityDeviation dev =
        tensoriality_deviation(vf, g, rotation_chart(2, 1.3), 0.8, {0.9, 0.2});
    return std::make_pair(dev.tensor_rel < 1e-6,
                          "tensor-law deviation " + format_number(dev.tensor_rel));
  });

  add("metric.pullback_nullifies_linear", [] {
    const SystemSpec* spec = find_system("linear2d");
    const VectorField vf = instantiate(*spec);
    IntegratorConfig tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const PullbackMetric pm =
        flow_pullback(vf, euclidean_metric(2), 0.0, constant_profile(1.0), tight);
    const TensorEvaluation ev =
        covariant_lyapunov_tensor(vf, pm.metric, 2.0, {0.5, 0.8});
    const ScaledMat gm = metric_value_scaled(pm.metric, 2.0, {0.5, 0.8});
    const double ratio = frobenius_norm(ev.form.coeffs) *
                         std::exp(ev.log_scale - gm.log_scale) / frobenius_norm(gm.m);
    return std::make_pair(ratio < 1e-4, "|L|/|g| = " + format_number(ratio));
  });

  add("stability.contraction_certified", [] {
    VectorField vf;
    vf.dim = 1;
    vf.name = "decay1d";
    vf.eval = [](double, const Vec& y) { return Vec{-y[0]}; };
    vf.jacobian = [](double, const Vec&) { return Mat{{-1.0}}; };
    const Trajectory tr = integrate_trajectory(vf, 0.0, {1.0}, 4.0, {});
    const StabilityCertificate cert =
        certify_local(vf, euclidean_metric(1), tr, 0.3, {0.0, 4.0}, 9, 4, {});
    return std::make_pair(cert.kind == CertificateKind::local_isometric,
                          std::string("kind = ") + to_string(cert.kind));
  });

  add("stability.expansion_witnessed", [] {
    VectorField vf;
    vf.dim = 1;
    vf.name = "growth1d";
    vf.eval = [](double, const Vec& y) { return Vec{y[0]}; };
    vf.jacobian = [](double, const Vec&) { return Mat{{1.0}}; };
    const Trajectory tr = integrate_trajectory(vf, 0.0, {0.1}, 2.0, {});
    const StabilityCertificate cert =
        certify_local(vf, euclidean_metric(1), tr, 0.05, {0.0, 2.0}, 9, 4, {});
    const bool ok =
        cert.kind == CertificateKind::not_certified && cert.witness.has_value();
    return std::make_pair(ok, std::string("kind = ") + to_string(cert.kind) +
                                  (cert.witness ? ", witness present" : ", no witness"));
  });

  add("exponents.linear_spectrum", [] {
    VectorField vf;
    vf.dim = 2;
    vf.name = "saddle";
    vf.eval = [](double, const Vec& y) { return Vec{2.0 * y[0], -1.0 * y[1]}; };
    vf.jacobian = [](double, const Vec&) { return Mat{{2.0, 0.0}, {0.0, -1.0}}; };
    const auto ests =
        exponent_spectrum(vf, euclidean_metric(2), 0.0, {0.3, 0.7}, 10.0, 0.5, {});
    const double err = std::max(std::abs(ests[0].value - 2.0),
                                std::abs(ests[1].value + 1.0));
    return std::make_pair(err < 1e-3, "spectrum error " + format_number(err));
  });

  add("quadrature.gauss_exactness", [] {
    const QuadratureRule rule = gauss_legendre_01(8);
    double acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * std::pow(rule.nodes[i], 7.0);
    const double err = std::abs(acc - 1.0 / 8.0);
    return std::make_pair(err < 1e-14, "monomial x^7 error " + format_number(err));
  });

  add("sampling.deterministic", [] {
    const Vec a = gaussian_draw(3, 17, 42);
    const Vec b = gaussian_draw(3, 17, 42);
    const bool same = a == b;
    return std::make_pair(same, same ? std::string("draws repeat exactly")
                                     : std::string("draws differ"));
  });

  return out;
}

}  // namespace lyatensor
