#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/field.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

using ParamMap = std::map<std::string, double>;

struct ParamSpec {
  std::string name;
  double default_value = 0.0;
  std::string description;
};

struct SystemSpec {
  std::string name;
  int dim = 0;
  std::string description;
  std::vector<ParamSpec> params;
  VectorField (*make)(const ParamMap&) = nullptr;
  Vec reference_state;
  std::pair<double, double> default_window{0.0, 10.0};
  // Window on which double-precision forward/backward round-trips are
  // meaningful; for chaotic systems this is much shorter than the default
  // window because conditioning grows like exp((lam_max - lam_min) * t).
  double roundtrip_window = 10.0;
  double default_horizon = 20.0;
  double default_renorm_interval = 0.5;
  double attractor_diameter = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double param_of(const ParamMap& p, const char* key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline VectorField make_linear2d(const ParamMap& p) {
  Mat a(2, 2);
  a(0, 0) = param_of(p, "a11", -1.0);
  a(0, 1) = param_of(p, "a12", 0.0);
  a(1, 0) = param_of(p, "a21", 0.0);
  a(1, 1) = param_of(p, "a22", -2.0);
  VectorField vf;
  vf.dim = 2;
  vf.name = "linear2d";
  vf.eval = [a](double, const Vec& y) { return matvec(a, y); };
  vf.jacobian = [a](double, const Vec&) { return a; };
  return vf;
}

// Damped oscillator in rotation normal form: ydot = [[-zeta, omega],
// [-omega, -zeta]] y.  In these coordinates the Euclidean symmetrized
// Jacobian is -2*zeta*I, so the contraction is visible pointwise (the
// position-velocity chart hides it: there A + A^T is never negative-definite).
inline VectorField make_damped_oscillator(const ParamMap& p) {
  const double zeta = param_of(p, "zeta", 0.5);
  const double omega = param_of(p, "omega", 1.0);
  Mat a(2, 2);
  a(0, 0) = -zeta;
  a(0, 1) = omega;
  a(1, 0) = -omega;
  a(1, 1) = -zeta;
  VectorField vf;
  vf.dim = 2;
  vf.name = "damped_oscillator";
  vf.eval = [a](double, const Vec& y) { return matvec(a, y); };
  vf.jacobian = [a](double, const Vec&) { return a; };
  return vf;
}

inline VectorField make_vanderpol(const ParamMap& p) {
  const double mu = param_of(p, "mu", 1.0);
  VectorField vf;
  vf.dim = 2;
  vf.name = "vanderpol";
  vf.eval = [mu](double, const Vec& y) {
    return Vec{y[1], mu * (1.0 - y[0] * y[0]) * y[1] - y[0]};
  };
  vf.jacobian = [mu](double, const Vec& y) {
    Mat j(2, 2);
    j(0, 0) = 0.0;
    j(0, 1) = 1.0;
    j(1, 0) = -2.0 * mu * y[0] * y[1] - 1.0;
    j(1, 1) = mu * (1.0 - y[0] * y[0]);
    return j;
  };
  return vf;
}

inline VectorField make_lorenz(const ParamMap& p) {
  const double sigma = param_of(p, "sigma", 10.0);
  const double rho = param_of(p, "rho", 28.0);
  const double beta = param_of(p, "beta", 8.0 / 3.0);
  VectorField vf;
  vf.dim = 3;
  vf.name = "lorenz";
  vf.eval = [sigma, rho, beta](double, const Vec& y) {
    return Vec{sigma * (y[1] - y[0]), y[0] * (rho - y[2]) - y[1],
               y[0] * y[1] - beta * y[2]};
  };
  vf.jacobian = [sigma, rho, beta](double, const Vec& y) {
    Mat j(3, 3);
    j(0, 0) = -sigma;
    j(0, 1) = sigma;
    j(0, 2) = 0.0;
    j(1, 0) = rho - y[2];
    j(1, 1) = -1.0;
    j(1, 2) = -y[0];
    j(2, 0) = y[1];
    j(2, 1) = y[0];
    j(2, 2) = -beta;
    return j;
  };
  return vf;
}

}  // namespace detail

inline const std::vector<SystemSpec>& system_registry() {
  static const std::vector<SystemSpec> registry = [] {
    std::vector<SystemSpec> r;

    SystemSpec lin;
    lin.name = "linear2d";
    lin.dim = 2;
    lin.description = "ydot = A y with constant A";
    lin.params = {{"a11", -1.0, "A(0,0)"},
                  {"a12", 0.0, "A(0,1)"},
                  {"a21", 0.0, "A(1,0)"},
                  {"a22", -2.0, "A(1,1)"}};
    lin.make = &detail::make_linear2d;
    lin.reference_state = {1.0, 1.0};
    lin.default_window = {0.0, 10.0};
    lin.roundtrip_window = 10.0;
    lin.default_horizon = 20.0;
    r.push_back(lin);

    SystemSpec osc;
    osc.name = "damped_oscillator";
    osc.dim = 2;
    osc.description = "damped oscillator, rotation normal form";
    osc.params = {{"zeta", 0.5, "damping rate"}, {"omega", 1.0, "angular frequency"}};
    osc.make = &detail::make_damped_oscillator;
    osc.reference_state = {1.0, 0.0};
    osc.default_window = {0.0, 10.0};
    osc.roundtrip_window = 10.0;
    osc.default_horizon = 20.0;
    r.push_back(osc);

    SystemSpec vdp;
    vdp.name = "vanderpol";
    vdp.dim = 2;
    vdp.description = "Van der Pol oscillator";
    vdp.params = {{"mu", 1.0, "nonlinearity strength"}};
    vdp.make = &detail::make_vanderpol;
    vdp.reference_state = {2.0, 0.0};
    vdp.default_window = {0.0, 10.0};
    vdp.roundtrip_window = 10.0;
    vdp.default_horizon = 20.0;
    vdp.attractor_diameter = 7.0;
    r.push_back(vdp);

    SystemSpec lor;
    lor.name = "lorenz";
    lor.dim = 3;
    lor.description = "Lorenz system";
    lor.params = {{"sigma", 10.0, "Prandtl-like parameter"},
                  {"rho", 28.0, "Rayleigh-like parameter"},
                  {"beta", 8.0 / 3.0, "geometric parameter"}};
    lor.make = &detail::make_lorenz;
    // On-attractor point: 50 time units of spin-up from (1,1,1) at tight
    // tolerance, frozen so runs (and backward flows into the spun-up
    // history) are reproducible.
    lor.reference_state = {-1.7130461997006563, -1.7818841099215754,
                           18.510887673336011};
    lor.default_window = {0.0, 5.0};
    lor.roundtrip_window = 0.5;
    lor.default_horizon = 500.0;
    lor.attractor_diameter = 50.0;
    r.push_back(lor);

    return r;
  }();
  return registry;
}

inline const SystemSpec* find_system(const std::string& name) {
  for (const SystemSpec& s : system_registry())
    if (s.name == name) return &s;
  return nullptr;
}

inline ParamMap default_params(const SystemSpec& spec) {
  ParamMap p;
  for (const ParamSpec& ps : spec.params) p[ps.name] = ps.default_value;
  return p;
}

inline VectorField instantiate(const SystemSpec& spec, const ParamMap& overrides = {}) {
  ParamMap p = default_params(spec);
  for (const auto& [k, v] : overrides) {
    if (!p.count(k))
      throw ContractViolation("unknown parameter '" + k + "' for system " + spec.name);
    p[k] = v;
  }
  return spec.make(p);
}

}  // namespace lyatensor
