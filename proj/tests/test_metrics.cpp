#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lyatensor/metrics.hpp"
#include "lyatensor/systems.hpp"
#include "lyatensor/tensor.hpp"

using namespace lyatensor;

TEST_CASE("scalar profiles expose consistent values, rates, and logs") {
  const ScalarProfile c = constant_profile(3.0);
  CHECK(c.h(7.0) == 3.0);
  CHECK(c.dh(7.0) == 0.0);
  CHECK(c.log_h(7.0) == Catch::Approx(std::log(3.0)));
  CHECK_THROWS_AS(constant_profile(0.0), ContractViolation);
  CHECK_THROWS_AS(constant_profile(-1.0), ContractViolation);

  const ScalarProfile e = exponential_profile(0.5, 1.0);
  CHECK(e.h(3.0) == Catch::Approx(std::exp(1.0)));
  CHECK(e.dh(3.0) == Catch::Approx(0.5 * std::exp(1.0)));
  CHECK(e.log_h(3.0) == Catch::Approx(1.0));
  // log stays representable far beyond where h itself overflows
  CHECK(e.log_h(3000.0) == Catch::Approx(1499.5));

  ScalarProfile bare;
  bare.h = [](double t) { return std::exp(t); };
  CHECK(profile_log(bare, 0.3) == Catch::Approx(0.3));
}

TEST_CASE("constant metric demands SPD coefficients") {
  CHECK_THROWS_AS(constant_metric(Mat{{1.0, 0.0}, {0.0, -1.0}}), ContractViolation);
  CHECK_THROWS_AS(constant_metric(Mat{{0.0, 0.0}, {0.0, 0.0}}), ContractViolation);
  const FibreMetric g = constant_metric(Mat{{2.0, 0.5}, {0.5, 1.0}});
  const Mat m = metric_value(g, 5.0, {9.0, -9.0});
  CHECK(m(0, 0) == 2.0);
  CHECK(m(0, 1) == 0.5);
}

TEST_CASE("scaled metric multiplies values and shifts the log-scale") {
  const FibreMetric base = constant_metric(Mat{{1.0, 0.0}, {0.0, 4.0}});
  const FibreMetric g = scaled_metric(exponential_profile(2.0), base);

  const Mat m = metric_value(g, 1.0, {0.0, 0.0});
  CHECK(m(1, 1) == Catch::Approx(4.0 * std::exp(2.0)));

  const ScaledMat sm = metric_value_scaled(g, 1.0, {0.0, 0.0});
  CHECK(sm.log_scale == Catch::Approx(2.0));
  CHECK(sm.m(1, 1) == Catch::Approx(4.0));

  // the scaled path keeps windows alive where the plain value overflows
  const ScaledMat far = metric_value_scaled(g, 500.0, {0.0, 0.0});
  CHECK(far.log_scale == Catch::Approx(1000.0));
  CHECK(std::isfinite(far.m(0, 0)));
}

TEST_CASE("sinusoidal metric stays SPD within its stated range") {
  CHECK_THROWS_AS(sinusoidal_metric(3, 0.4, 1.0), ContractViolation);
  const FibreMetric g = sinusoidal_metric(3, 0.2, 2.0);
  for (double t : {0.0, 1.0, 2.5}) {
    const Mat m = metric_value(g, t, {0.3, -1.1, 0.7});  // throws unless SPD
    auto [lo, hi] = eigen_extremes(m);
    CHECK(lo > 0.0);
    CHECK(hi < 2.0);
  }
}

TEST_CASE("flow pullback with unit profile nullifies the tensor") {
  const SystemSpec& spec = *find_system("linear2d");
  const VectorField vf = instantiate(spec);
  IntegratorConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  const PullbackMetric pm =
      flow_pullback(vf, euclidean_metric(2), 0.0, constant_profile(), tight);

  for (double t : {0.5, 2.0, 5.0}) {
    const Vec y = integrate_trajectory(vf, 0.0, spec.reference_state, t, tight).value(t);
    const TensorEvaluation ev = covariant_lyapunov_tensor(vf, pm.metric, t, y);
    const ScaledMat g = metric_value_scaled(pm.metric, t, y);
    const double ratio = frobenius_norm(ev.tensor()) /
                         (std::exp(g.log_scale) * frobenius_norm(g.m));
    CHECK(ratio < 1e-6);
  }
}

TEST_CASE("pullback with a target exponent makes the tensor a multiple of g") {
  // with h(t) = exp(2 lambda (t - t_ref)) the product rule gives L = 2 lambda g
  const SystemSpec& spec = *find_system("linear2d");
  const VectorField vf = instantiate(spec);
  IntegratorConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  const double lambda = 0.25;
  const PullbackMetric pm =
      pullback_with_target_exponent(vf, euclidean_metric(2), 0.0, lambda, tight);

  for (double t : {1.0, 3.0}) {
    const Vec y = integrate_trajectory(vf, 0.0, spec.reference_state, t, tight).value(t);
    const TensorEvaluation ev = covariant_lyapunov_tensor(vf, pm.metric, t, y);
    const ScaledMat g = metric_value_scaled(pm.metric, t, y);
    Mat want = g.m;
    want *= 2.0 * lambda;
    Mat got = ev.form.coeffs;
    got *= std::exp(ev.log_scale - g.log_scale);
    want -= got;
    CHECK(frobenius_norm(want) / frobenius_norm(g.m) < 1e-6);
  }
}

TEST_CASE("pullback evaluations share flow solves through the memo cache") {
  const VectorField vf = instantiate(*find_system("damped_oscillator"));
  const PullbackMetric pm = flow_pullback(vf, euclidean_metric(2), 0.0);

  const Vec y{0.4, 0.2};
  metric_value_scaled(pm.metric, 1.0, y);
  const int64_t solves_once = pm.counters->flow_solves.load();
  metric_value_scaled(pm.metric, 1.0, y);
  metric_value_scaled(pm.metric, 1.0 + 1e-12, y);  // within the cache quantum
  CHECK(pm.counters->flow_solves.load() == solves_once);
  CHECK(pm.counters->evaluations.load() == 3);

  metric_value_scaled(pm.metric, 2.0, y);
  CHECK(pm.counters->flow_solves.load() == solves_once + 1);
}

TEST_CASE("pullback rejects mismatched dimensions and bad options") {
  const VectorField vf = instantiate(*find_system("lorenz"));
  CHECK_THROWS_AS(flow_pullback(vf, euclidean_metric(2), 0.0), ContractViolation);
  PullbackOptions opts;
  opts.cache_quantum = 0.0;
  CHECK_THROWS_AS(flow_pullback(vf, euclidean_metric(3), 0.0, constant_profile(), {}, opts),
                  ContractViolation);
}

TEST_CASE("plain pullback evaluation refuses values outside double range") {
  // probe at the fixed point of ydot = -25 y: the backward trajectory stays
  // at 0 but its Jacobian expands by exp(25 t), so by t = 30 the pullback
  // coefficients carry exp(1500), far past double range
  VectorField vf;
  vf.dim = 1;
  vf.eval = [](double, const Vec& y) { return Vec{-25.0 * y[0]}; };
  vf.jacobian = [](double, const Vec&) { return Mat{{-25.0}}; };
  const PullbackMetric pm = flow_pullback(vf, euclidean_metric(1), 0.0);

  const ScaledMat sm = metric_value_scaled(pm.metric, 30.0, {0.0});
  CHECK(sm.log_scale > 700.0);
  CHECK(std::isfinite(sm.m(0, 0)));
  CHECK_THROWS_AS(metric_value(pm.metric, 30.0, {0.0}), NumericFailure);
}
