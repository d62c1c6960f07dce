#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lyatensor/metrics.hpp"
#include "lyatensor/quadrature.hpp"
#include "lyatensor/sampling.hpp"

using namespace lyatensor;

TEST_CASE("gauss-legendre rules integrate polynomials of degree 2n-1 exactly") {
  for (int order : {1, 2, 3, 5, 8, 12}) {
    const QuadratureRule& r = gauss_legendre_01(order);
    REQUIRE(static_cast<int>(r.nodes.size()) == order);
    // integral of x^k on [0,1] is 1/(k+1); exact up to k = 2*order - 1
    for (int k = 0; k <= 2 * order - 1; ++k) {
      double s = 0.0;
      for (size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * std::pow(r.nodes[i], k);
      INFO("order " << order << " monomial " << k);
      CHECK(s == Catch::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("quadrature nodes are symmetric and weights sum to one") {
  const QuadratureRule& r = gauss_legendre_01(12);
  double wsum = 0.0;
  for (size_t i = 0; i < r.nodes.size(); ++i) {
    wsum += r.weights[i];
    CHECK(r.nodes[i] == Catch::Approx(1.0 - r.nodes[11 - i]).margin(1e-14));
    CHECK(r.weights[i] == Catch::Approx(r.weights[11 - i]).margin(1e-14));
    CHECK(r.nodes[i] > 0.0);
    CHECK(r.nodes[i] < 1.0);
    if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
  }
  CHECK(wsum == Catch::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(gauss_legendre_01(0), ContractViolation);
  CHECK_THROWS_AS(gauss_legendre_01(257), ContractViolation);
}

TEST_CASE("halton radical inverse reproduces hand-computed prefixes") {
  // base 2: 1/2, 1/4, 3/4, 1/8, 5/8, 3/8, 7/8
  const double base2[] = {0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875};
  for (int i = 0; i < 7; ++i) CHECK(halton(i + 1, 2) == base2[i]);
  // base 3: 1/3, 2/3, 1/9, 4/9, 7/9
  const double base3[] = {1.0 / 3, 2.0 / 3, 1.0 / 9, 4.0 / 9, 7.0 / 9};
  for (int i = 0; i < 5; ++i) CHECK(halton(i + 1, 3) == Catch::Approx(base3[i]).margin(1e-15));
  CHECK(halton(0, 2) == 0.0);
}

TEST_CASE("gaussian draws have roughly standard moments") {
  const int n = 4000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec v = gaussian_draw(2, i, 42);
    mean += v[0] + v[1];
    var += v[0] * v[0] + v[1] * v[1];
  }
  mean /= 2.0 * n;
  var /= 2.0 * n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == Catch::Approx(1.0).epsilon(0.03));
}

TEST_CASE("draws are deterministic in (index, seed) and change with both") {
  const Vec a = gaussian_draw(3, 17, 5);
  const Vec b = gaussian_draw(3, 17, 5);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  const Vec c = gaussian_draw(3, 18, 5);
  const Vec d = gaussian_draw(3, 17, 6);
  CHECK(a[0] != c[0]);
  CHECK(a[0] != d[0]);

  CHECK(uniform_draw(2.0, 4.0, 9, 1) == uniform_draw(2.0, 4.0, 9, 1));
  const double u = uniform_draw(2.0, 4.0, 123, 7);
  CHECK(u >= 2.0);
  CHECK(u <= 4.0);
}

TEST_CASE("metric unit directions have unit g-norm") {
  const FibreMetric g = constant_metric(Mat{{4.0, 1.0}, {1.0, 2.0}});
  for (int i = 0; i < 10; ++i) {
    const Vec v = g_unit_direction(g, 0.0, {0.0, 0.0}, i, 3);
    const Mat gm = metric_value(g, 0.0, {0.0, 0.0});
    CHECK(dot(v, matvec(gm, v)) == Catch::Approx(1.0).epsilon(1e-12));
  }
}
