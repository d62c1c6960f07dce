#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lyatensor/charts.hpp"
#include "lyatensor/integrate.hpp"
#include "lyatensor/metrics.hpp"
#include "lyatensor/systems.hpp"
#include "lyatensor/tensor.hpp"

using namespace lyatensor;

namespace {

VectorField linear_field(Mat a) {
  VectorField vf;
  vf.dim = a.rows();
  const auto ap = std::make_shared<Mat>(std::move(a));
  vf.eval = [ap](double, const Vec& y) { return matvec(*ap, y); };
  vf.jacobian = [ap](double, const Vec&) { return *ap; };
  return vf;
}

}  // namespace

TEST_CASE("lyapunov matrix is the transposed field Jacobian") {
  const VectorField vf = instantiate(*find_system("lorenz"));
  const Vec y = find_system("lorenz")->reference_state;
  auto [l, src] = lyapunov_matrix(vf, 0.0, y);
  CHECK(src == DerivSource::analytic);
  Mat want = vf.jacobian(0.0, y).transposed();
  want -= l;
  CHECK(max_abs(want) == 0.0);
}

TEST_CASE("euclidean tensor of a linear field is the symmetrized matrix") {
  const Mat a{{-1.0, 2.0}, {0.5, -3.0}};
  const VectorField vf = linear_field(a);
  const TensorEvaluation ev =
      covariant_lyapunov_tensor(vf, euclidean_metric(2), 0.3, {0.7, -0.2});
  CHECK(ev.log_scale == 0.0);
  Mat want = a.transposed() + a;
  want -= ev.tensor();
  CHECK(max_abs(want) < 1e-12);
}

TEST_CASE("tensor evaluation reports where each derivative came from") {
  const VectorField vf = instantiate(*find_system("vanderpol"));
  const FibreMetric g = sinusoidal_metric(2, 0.1, 1.3);
  const Vec y{1.1, -0.4};

  const TensorEvaluation full = covariant_lyapunov_tensor(vf, g, 0.6, y);
  CHECK(full.jacobian_source == DerivSource::analytic);
  CHECK(full.metric_dt_source == DerivSource::analytic);
  CHECK(full.metric_dy_source == DerivSource::analytic);

  const TensorEvaluation fd =
      covariant_lyapunov_tensor(vf, strip_capabilities(g), 0.6, y);
  CHECK(fd.metric_dt_source == DerivSource::finite_difference);
  CHECK(fd.metric_dy_source == DerivSource::finite_difference);

  Mat diff = full.tensor();
  diff -= fd.tensor();
  CHECK(max_abs(diff) < 1e-6);
}

TEST_CASE("tensor values are bitwise symmetric") {
  const VectorField vf = instantiate(*find_system("lorenz"));
  const FibreMetric g = sinusoidal_metric(3, 0.05, 0.7);
  const Vec y = find_system("lorenz")->reference_state;
  const TensorEvaluation ev = covariant_lyapunov_tensor(vf, g, 1.2, y);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) CHECK(ev.form.coeffs(i, j) == ev.form.coeffs(j, i));
}

TEST_CASE("scaling the metric by h(t) obeys the product rule") {
  // For g_h = h * g0 with constant g0 and linear field A:
  //   L_h = h * (A^T g0 + g0 A) + h' * g0.
  const Mat a{{-1.0, 0.8}, {-0.3, -2.0}};
  const Mat g0{{2.0, 0.4}, {0.4, 1.0}};
  const VectorField vf = linear_field(a);
  const double rate = 0.7, t = 0.9;
  const FibreMetric gh = scaled_metric(exponential_profile(rate), constant_metric(g0));

  const TensorEvaluation ev = covariant_lyapunov_tensor(vf, gh, t, {0.2, 0.1});
  const double h = std::exp(rate * t);
  Mat want = matmul(a.transposed(), g0) + matmul(g0, a);
  want *= h;
  Mat dh_term = g0;
  dh_term *= rate * h;
  want += dh_term;
  want -= ev.tensor();
  CHECK(max_abs(want) < 1e-9 * h);
}

TEST_CASE("charts invert, and derivative hooks match finite differences") {
  for (const FibreChart& c : standard_chart_suite(3)) {
    INFO(c.name);
    const Vec y{0.8, -0.5, 1.7};
    const double t = 0.63;
    const Vec back = c.inverse(t, c.forward(t, y));
    for (int i = 0; i < 3; ++i) CHECK(back[i] == Catch::Approx(y[i]).margin(1e-12));

    FibreChart bare = c;
    bare.jacobian = nullptr;
    bare.dt = nullptr;
    Mat jd = chart_jacobian(c, t, y);
    jd -= chart_jacobian(bare, t, y);
    CHECK(max_abs(jd) < 1e-6);
    const Vec da = chart_dt(c, t, y);
    const Vec df = chart_dt(bare, t, y);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(da[i] - df[i]) < 1e-6);
  }
}

TEST_CASE("covariant tensor obeys the transformation law; raw matrix does not") {
  const VectorField vf = instantiate(*find_system("vanderpol"));
  const FibreMetric g = euclidean_metric(2);
  const Vec y{1.4, 0.3};
  const double t = 0.8;

  for (const FibreChart& c : standard_chart_suite(2)) {
    INFO(c.name);
    const TensorialityDeviation dev = tensoriality_deviation(vf, g, c, t, y);
    CHECK(dev.tensor_rel < 1e-6);
    if (c.name != "galilean") CHECK(dev.matrix_rel > 1e-2);
  }

  // The galilean chart shifts the state but leaves dy'/dy = I, so even the
  // raw matrix transforms trivially under it.
  const TensorialityDeviation gal =
      tensoriality_deviation(vf, g, galilean_chart({0.3, 0.4}), t, y);
  CHECK(gal.matrix_rel < 1e-8);

  // Even a constant scale chart exposes the raw matrix: it transforms by
  // similarity (invariant under y' = c y), while the bilinear law predicts
  // division by c^2, so the relative gap is exactly c^2 - 1.
  const TensorialityDeviation lin =
      tensoriality_deviation(vf, g, linear_scale_chart(2, 2.5), t, y);
  CHECK(lin.tensor_rel < 1e-6);
  CHECK(lin.matrix_rel == Catch::Approx(2.5 * 2.5 - 1.0).epsilon(1e-6));
}

TEST_CASE("variation identity holds along a linear flow") {
  const Mat a{{-0.5, 1.0}, {-1.0, -0.5}};
  const VectorField vf = linear_field(a);
  const FibreMetric g = sinusoidal_metric(2, 0.1, 1.1);
  const VariationResult vr =
      integrate_with_variation(vf, 0.0, {1.0, 0.5}, Mat::identity(2), 2.0, {});

  const Vec v0{0.6, -1.0};
  for (double t : {0.3, 0.9, 1.7}) {
    // The probe's central difference carries an O(dt_probe^2) truncation
    // term, so the bound cannot be tighter than ~1e-7 at dt_probe = 1e-4.
    const IdentityResidual r =
        variation_identity_detail(vf, g, vr.trajectory, vr.frame, v0, t, 1e-4);
    CHECK(r.residual < 1e-6 * std::max(1.0, std::abs(r.rhs)));
  }
}

TEST_CASE("identity probes outside the trajectory domain are rejected") {
  const VectorField vf = linear_field(Mat{{-1.0}});
  const VariationResult vr =
      integrate_with_variation(vf, 0.0, {1.0}, Mat::identity(1), 1.0, {});
  const FibreMetric g = euclidean_metric(1);
  CHECK_THROWS_AS(
      variation_identity_detail(vf, g, vr.trajectory, vr.frame, {1.0}, 0.99999, 1e-3),
      DomainError);
  CHECK_THROWS_AS(
      variation_identity_detail(vf, g, vr.trajectory, vr.frame, {1.0}, 0.5, 0.0),
      ContractViolation);
}
