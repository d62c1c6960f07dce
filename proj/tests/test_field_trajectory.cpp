#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lyatensor/field.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/systems.hpp"
#include "lyatensor/trajectory.hpp"

using namespace lyatensor;

TEST_CASE("fd_jacobian matches analytic Jacobians on the registry systems") {
  for (const SystemSpec& spec : system_registry()) {
    INFO(spec.name);
    const VectorField vf = instantiate(spec);
    REQUIRE(vf.jacobian);
    Vec y = spec.reference_state;
    const Mat fd = fd_jacobian(vf.eval, 0.7, y, Vec(y.size(), 1.0));
    Mat diff = vf.jacobian(0.7, y);
    diff -= fd;
    CHECK(max_abs(diff) < 1e-6 * (1.0 + max_abs(fd)));
  }
}

TEST_CASE("field_jacobian reports its derivative source") {
  VectorField vf = instantiate(*find_system("vanderpol"));
  auto [ja, sa] = field_jacobian(vf, 0.0, {2.0, 0.0});
  CHECK(sa == DerivSource::analytic);
  vf.jacobian = nullptr;
  auto [jf, sf] = field_jacobian(vf, 0.0, {2.0, 0.0});
  CHECK(sf == DerivSource::finite_difference);
  Mat diff = ja;
  diff -= jf;
  CHECK(max_abs(diff) < 1e-6);
}

TEST_CASE("metric_value repairs tiny asymmetry and rejects real asymmetry") {
  FibreMetric g;
  g.dim = 2;
  g.eval = [](double, const Vec&) {
    Mat m = Mat::identity(2);
    m(0, 1) = 1e-12;  // within the 1e-8 relative repair contract
    return m;
  };
  const Mat repaired = metric_value(g, 0.0, {0.0, 0.0});
  CHECK(repaired(0, 1) == repaired(1, 0));

  g.eval = [](double, const Vec&) {
    Mat m = Mat::identity(2);
    m(0, 1) = 1e-3;
    return m;
  };
  CHECK_THROWS_AS(metric_value(g, 0.0, {0.0, 0.0}), ContractViolation);
}

TEST_CASE("metric_value enforces positive definiteness when required") {
  FibreMetric g;
  g.dim = 2;
  g.eval = [](double, const Vec&) { return Mat{{1.0, 0.0}, {0.0, -1.0}}; };
  CHECK_THROWS_AS(metric_value(g, 0.0, {0.0, 0.0}), ContractViolation);
  const Mat m = metric_value(g, 0.0, {0.0, 0.0}, /*require_spd=*/false);
  CHECK(m(1, 1) == -1.0);
}

TEST_CASE("metric derivative fallbacks agree with analytic providers") {
  const FibreMetric g = sinusoidal_metric(2, 0.1, 1.3);
  FibreMetric g_fd = strip_capabilities(g);
  const Vec y{0.4, -0.9};
  const double t = 0.8;

  auto [dta, sa] = metric_dt(g, t, y);
  auto [dtf, sf] = metric_dt(g_fd, t, y);
  CHECK(sa == DerivSource::analytic);
  CHECK(sf == DerivSource::finite_difference);
  Mat dt_diff = dta;
  dt_diff -= dtf;
  CHECK(max_abs(dt_diff) < 1e-8);

  auto [dya, ya_src] = metric_dy(g, t, y);
  auto [dyf, yf_src] = metric_dy(g_fd, t, y);
  CHECK(ya_src == DerivSource::analytic);
  CHECK(yf_src == DerivSource::finite_difference);
  for (size_t k = 0; k < dya.size(); ++k) {
    Mat d = dya[k];
    d -= dyf[k];
    CHECK(max_abs(d) < 1e-8);
  }
}

TEST_CASE("trajectory knots must be strictly ordered") {
  Trajectory tr(1, 0.0, 1.0);
  tr.append_knot(0.0, {1.0}, {-1.0});
  tr.append_knot(0.5, {0.6}, {-0.6});
  CHECK_THROWS_AS(tr.append_knot(0.5, {0.5}, {-0.5}), ContractViolation);
  CHECK_THROWS_AS(tr.append_knot(0.2, {0.8}, {-0.8}), ContractViolation);
}

TEST_CASE("trajectory interpolation is exact at knots and smooth between") {
  // knots of sin(t) with exact derivatives: cubic Hermite error ~ h^4/384
  Trajectory tr(1, 0.0, 3.0);
  const int n = 30;
  for (int i = 0; i <= n; ++i) {
    const double t = 3.0 * i / n;
    tr.append_knot(t, {std::sin(t)}, {std::cos(t)});
  }
  for (int i = 0; i <= n; ++i) {
    const double t = 3.0 * i / n;
    CHECK(tr.value(t)[0] == std::sin(t));
  }
  double worst = 0.0;
  for (double t = 0.05; t < 3.0; t += 0.1)
    worst = std::max(worst, std::abs(tr.value(t)[0] - std::sin(t)));
  CHECK(worst < 1e-5);
  // derivative interpolation stays close too
  CHECK(std::abs(tr.derivative(1.55)[0] - std::cos(1.55)) < 1e-3);
}

TEST_CASE("jacobi frame push is linear in the seed vector") {
  const VectorField vf = instantiate(*find_system("damped_oscillator"));
  const VariationResult vr =
      integrate_with_variation(vf, 0.0, {1.0, 0.0}, Mat::identity(2), 2.0, {});
  const Vec a = vr.frame.push(1.3, {1.0, 0.0});
  const Vec b = vr.frame.push(1.3, {0.0, 1.0});
  const Vec ab = vr.frame.push(1.3, {2.0, -3.0});
  for (int i = 0; i < 2; ++i)
    CHECK(ab[i] == Catch::Approx(2.0 * a[i] - 3.0 * b[i]).margin(1e-14));
}
