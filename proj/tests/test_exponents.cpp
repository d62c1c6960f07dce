#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lyatensor/exponents.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/systems.hpp"

using namespace lyatensor;

namespace {

VectorField diag_field(double a, double b) {
  VectorField vf;
  vf.dim = 2;
  vf.eval = [a, b](double, const Vec& y) { return Vec{a * y[0], b * y[1]}; };
  vf.jacobian = [a, b](double, const Vec&) { return Mat{{a, 0.0}, {0.0, b}}; };
  return vf;
}

}  // namespace

TEST_CASE("two-trajectory estimate recovers the contraction rate") {
  const VectorField vf = diag_field(-1.0, -1.0);
  const ExponentEstimate est = two_trajectory_exponent(
      vf, euclidean_metric(2), 0.0, {1.0, 0.5}, {1.0 + 1e-6, 0.5}, 10.0);
  CHECK(est.value == Catch::Approx(-1.0).margin(1e-6));
  CHECK_FALSE(est.saturated);
  CHECK_FALSE(est.blew_up);
  CHECK(est.t_reached == 10.0);
  CHECK(est.trace.back().first == 10.0);
}

TEST_CASE("pair renormalization keeps expanding pairs on the attractor scale") {
  // anchor at the fixed point so the separation is the whole signal and the
  // rescaling arithmetic is exercised without base-trajectory roundoff
  const VectorField vf = diag_field(1.0, 1.0);
  ExponentOptions opts;
  opts.attractor_diameter = 1.0;  // saturation threshold 0.01
  const ExponentEstimate est = two_trajectory_exponent(
      vf, euclidean_metric(2), 0.0, {0.0, 0.0}, {1e-7, 0.0}, 20.0, {}, opts);
  CHECK(est.saturated);
  CHECK(est.value == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("jacobi estimate picks the top rate for a generic direction") {
  const VectorField vf = diag_field(2.0, -1.0);
  const FibreMetric g = euclidean_metric(2);
  const ExponentEstimate top =
      jacobi_exponent(vf, g, 0.0, {1.0, 1.0}, {0.3, 0.7}, 20.0, 0.5);
  // finite horizon keeps the alignment transient in the average:
  //   value = 2 + (log(v0 . e1) - log ||v0||) / T
  const double bias = (std::log(0.3) - 0.5 * std::log(0.58)) / 20.0;
  CHECK(top.value == Catch::Approx(2.0 + bias).margin(1e-6));
  CHECK(top.renorm_interval == 0.5);

  // a seed inside the contracting eigenspace stays there
  const ExponentEstimate low =
      jacobi_exponent(vf, g, 0.0, {1.0, 1.0}, {0.0, 1.0}, 20.0, 0.5);
  CHECK(low.value == Catch::Approx(-1.0).margin(1e-6));
}

TEST_CASE("spectrum of a diagonal field is its diagonal, sorted") {
  const VectorField vf = diag_field(2.0, -1.0);
  const std::vector<ExponentEstimate> sp =
      exponent_spectrum(vf, euclidean_metric(2), 0.0, {1.0, 1.0}, 20.0, 0.5);
  REQUIRE(sp.size() == 2);
  CHECK(sp[0].value == Catch::Approx(2.0).margin(1e-6));
  CHECK(sp[1].value == Catch::Approx(-1.0).margin(1e-6));
  CHECK(sp[0].value >= sp[1].value);
}

TEST_CASE("an exponential metric weight shifts every exponent by its rate over two") {
  // ||s||_g = exp(t/2) ||s||, so each measured rate gains +1/2
  const VectorField vf = diag_field(2.0, -1.0);
  const FibreMetric g =
      scaled_metric(exponential_profile(1.0), euclidean_metric(2));
  const std::vector<ExponentEstimate> sp =
      exponent_spectrum(vf, g, 0.0, {1.0, 1.0}, 20.0, 0.5);
  REQUIRE(sp.size() == 2);
  CHECK(sp[0].value == Catch::Approx(2.5).margin(1e-6));
  CHECK(sp[1].value == Catch::Approx(-0.5).margin(1e-6));

  const ExponentEstimate top =
      jacobi_exponent(vf, g, 0.0, {1.0, 1.0}, {0.3, 0.7}, 20.0, 0.5);
  const double bias = (std::log(0.3) - 0.5 * std::log(0.58)) / 20.0;
  CHECK(top.value == Catch::Approx(2.5 + bias).margin(1e-6));
}

TEST_CASE("exponent sums reproduce the divergence of the registry fields") {
  // damped oscillator: trace J = -2 zeta = -1
  {
    const SystemSpec& spec = *find_system("damped_oscillator");
    const VectorField vf = instantiate(spec);
    const std::vector<ExponentEstimate> sp = exponent_spectrum(
        vf, euclidean_metric(2), 0.0, spec.reference_state, 20.0, 0.5);
    CHECK(sp[0].value + sp[1].value == Catch::Approx(-1.0).margin(1e-4));
  }
  // lorenz: trace J = -(sigma + 1 + beta) = -41/3, constant in state
  {
    const SystemSpec& spec = *find_system("lorenz");
    const VectorField vf = instantiate(spec);
    const std::vector<ExponentEstimate> sp = exponent_spectrum(
        vf, euclidean_metric(3), 0.0, spec.reference_state, 20.0, 0.5);
    const double sum = sp[0].value + sp[1].value + sp[2].value;
    CHECK(sum == Catch::Approx(-41.0 / 3.0).margin(0.1));
  }
}

TEST_CASE("estimates survive blow-up with partial traces and flags") {
  VectorField vf;
  vf.dim = 1;
  vf.eval = [](double, const Vec& y) { return Vec{y[0] * y[0]}; };
  vf.jacobian = [](double, const Vec& y) { return Mat{{2.0 * y[0]}}; };
  IntegratorConfig cfg;
  cfg.max_steps = 20000;
  const ExponentEstimate est = jacobi_exponent(vf, euclidean_metric(1), 0.0, {1.0},
                                               {1.0}, 2.0, 0.2, cfg);
  CHECK(est.blew_up);
  CHECK(est.t_reached >= 0.8);
  CHECK(est.t_reached < 2.0);
  CHECK_FALSE(est.trace.empty());
}

TEST_CASE("exponent estimators validate their arguments") {
  const VectorField vf = diag_field(-1.0, -1.0);
  const FibreMetric g = euclidean_metric(2);
  CHECK_THROWS_AS(
      two_trajectory_exponent(vf, g, 0.0, {1.0, 0.0}, {1.0, 0.0}, 10.0),
      ContractViolation);
  CHECK_THROWS_AS(
      two_trajectory_exponent(vf, g, 0.0, {1.0, 0.0}, {1.1, 0.0}, 0.0),
      ContractViolation);
  CHECK_THROWS_AS(jacobi_exponent(vf, g, 0.0, {1.0, 0.0}, {0.0, 0.0}, 10.0, 0.5),
                  ContractViolation);
  CHECK_THROWS_AS(jacobi_exponent(vf, g, 0.0, {1.0, 0.0}, {1.0, 0.0}, 10.0, 0.0),
                  ContractViolation);
  CHECK_THROWS_AS(exponent_spectrum(vf, g, 0.0, {1.0, 0.0}, -1.0, 0.5),
                  ContractViolation);
}
