#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/linalg.hpp"
#include "lyatensor/tensor.hpp"

namespace lyatensor {

inline FibreChart identity_chart(int dim) {
  FibreChart c;
  c.dim = dim;
  c.name = "identity";
  c.forward = [](double, const Vec& y) { return y; };
  c.inverse = [](double, const Vec& y) { return y; };
  c.jacobian = [dim](double, const Vec&) { return Mat::identity(dim); };
  c.dt = [dim](double, const Vec&) { return Vec(dim, 0.0); };
  return c;
}

// y' = c * y, time-independent.
inline FibreChart linear_scale_chart(int dim, double c) {
  if (c == 0.0) throw ContractViolation("linear_scale_chart: factor must be nonzero");
  FibreChart ch;
  ch.dim = dim;
  ch.name = "linear_scale";
  ch.forward = [c](double, const Vec& y) { return vscale(y, c); };
  ch.inverse = [c](double, const Vec& y) { return vscale(y, 1.0 / c); };
  ch.jacobian = [dim, c](double, const Vec&) {
    Mat j = Mat::identity(dim);
    j *= c;
    return j;
  };
  ch.dt = [dim](double, const Vec&) { return Vec(dim, 0.0); };
  return ch;
}

// y' = y + v * t: uniformly translating frame.
inline FibreChart galilean_chart(Vec velocity) {
  const int dim = static_cast<int>(velocity.size());
  FibreChart c;
  c.dim = dim;
  c.name = "galilean";
  c.time_dependent = true;
  c.forward = [velocity](double t, const Vec& y) { return vaxpy(y, t, velocity); };
  c.inverse = [velocity](double t, const Vec& y) { return vaxpy(y, -t, velocity); };
  c.jacobian = [dim](double, const Vec&) { return Mat::identity(dim); };
  c.dt = [velocity](double, const Vec&) { return velocity; };
  return c;
}

// y' = exp(alpha * t) * y: exponentially breathing frame.
inline FibreChart exp_scale_chart(int dim, double alpha) {
  FibreChart c;
  c.dim = dim;
  c.name = "exp_scale";
  c.time_dependent = true;
  c.forward = [alpha](double t, const Vec& y) { return vscale(y, std::exp(alpha * t)); };
  c.inverse = [alpha](double t, const Vec& y) { return vscale(y, std::exp(-alpha * t)); };
  c.jacobian = [dim, alpha](double t, const Vec&) {
    Mat j = Mat::identity(dim);
    j *= std::exp(alpha * t);
    return j;
  };
  c.dt = [alpha](double t, const Vec& y) { return vscale(y, alpha * std::exp(alpha * t)); };
  return c;
}

// y' = (1 + a * sin(omega * t)) * y; needs |a| < 1 to stay invertible.
inline FibreChart sin_scale_chart(int dim, double a, double omega) {
  if (!(std::abs(a) < 1.0))
    throw ContractViolation("sin_scale_chart: |amplitude| must be < 1");
  FibreChart c;
  c.dim = dim;
  c.name = "sin_scale";
  c.time_dependent = true;
  auto factor = [a, omega](double t) { return 1.0 + a * std::sin(omega * t); };
  c.forward = [factor](double t, const Vec& y) { return vscale(y, factor(t)); };
  c.inverse = [factor](double t, const Vec& y) { return vscale(y, 1.0 / factor(t)); };
  c.jacobian = [dim, factor](double t, const Vec&) {
    Mat j = Mat::identity(dim);
    j *= factor(t);
    return j;
  };
  c.dt = [a, omega](double t, const Vec& y) {
    return vscale(y, a * omega * std::cos(omega * t));
  };
  return c;
}

// Rigid rotation at angular rate omega in the (0,1) coordinate plane.
inline FibreChart rotation_chart(int dim, double omega) {
  if (dim < 2) throw ContractViolation("rotation_chart: need dim >= 2");
  FibreChart c;
  c.dim = dim;
  c.name = "rotation";
  c.time_dependent = true;
  auto rot = [dim, omega](double t, double sign) {
    Mat r = Mat::identity(dim);
    const double a = sign * omega * t;
    r(0, 0) = std::cos(a);
    r(0, 1) = -std::sin(a);
    r(1, 0) = std::sin(a);
    r(1, 1) = std::cos(a);
    return r;
  };
  c.forward = [rot](double t, const Vec& y) { return matvec(rot(t, 1.0), y); };
  c.inverse = [rot](double t, const Vec& y) { return matvec(rot(t, -1.0), y); };
  c.jacobian = [rot](double t, const Vec&) { return rot(t, 1.0); };
  c.dt = [dim, omega](double t, const Vec& y) {
    const double a = omega * t;
    Vec d(dim, 0.0);
    d[0] = omega * (-std::sin(a) * y[0] - std::cos(a) * y[1]);
    d[1] = omega * (std::cos(a) * y[0] - std::sin(a) * y[1]);
    return d;
  };
  return c;
}

// Componentwise y' = y + a(t) * tanh(y) with a(t) = a0 + a1 * sin(t).
// Nonlinear in y; the inverse runs a Newton iteration (the map is strictly
// monotone as long as a(t) > -1, which a0/a1 must guarantee).
inline FibreChart tanh_warp_chart(int dim, double a0, double a1) {
  if (!(a0 - std::abs(a1) > -1.0))
    throw ContractViolation("tanh_warp_chart: amplitude must keep 1 + a(t) > 0");
  FibreChart c;
  c.dim = dim;
  c.name = "tanh_warp";
  c.time_dependent = true;
  auto amp = [a0, a1](double t) { return a0 + a1 * std::sin(t); };
  c.forward = [amp](double t, const Vec& y) {
    const double a = amp(t);
    Vec out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * std::tanh(y[i]);
    return out;
  };
  c.inverse = [amp](double t, const Vec& yp) {
    const double a = amp(t);
    Vec out(yp.size());
    for (size_t i = 0; i < yp.size(); ++i) {
      double x = yp[i];
      for (int it = 0; it < 100; ++it) {
        const double th = std::tanh(x);
        const double f = x + a * th - yp[i];
        const double df = 1.0 + a * (1.0 - th * th);
        const double step = f / df;
        x -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
      }
      out[i] = x;
    }
    return out;
  };
  c.jacobian = [amp](double t, const Vec& y) {
    const double a = amp(t);
    const int n = static_cast<int>(y.size());
    Mat j(n, n);
    for (int i = 0; i < n; ++i) {
      const double th = std::tanh(y[i]);
      j(i, i) = 1.0 + a * (1.0 - th * th);
    }
    return j;
  };
  c.dt = [a1](double t, const Vec& y) {
    Vec d(y.size());
    for (size_t i = 0; i < y.size(); ++i) d[i] = a1 * std::cos(t) * std::tanh(y[i]);
    return d;
  };
  return c;
}

// The time-dependent charts used by the transformation-law checks.
inline std::vector<FibreChart> standard_chart_suite(int dim) {
  std::vector<FibreChart> out;
  Vec v(dim, 0.0);
  for (int i = 0; i < dim; ++i) v[i] = 0.3 + 0.1 * i;
  out.push_back(galilean_chart(v));
  out.push_back(exp_scale_chart(dim, 0.5));
  out.push_back(sin_scale_chart(dim, 0.4, 2.0));
  if (dim >= 2)
    out.push_back(rotation_chart(dim, 1.3));
  else
    out.push_back(tanh_warp_chart(dim, 0.3, 0.15));
  return out;
}

}  // namespace lyatensor
