#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "lyatensor/errors.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

namespace detail {

// Cubic Hermite basis on [0,1]; returns {h00, h10, h01, h11}.
inline void hermite_basis(double s, double& h00, double& h10, double& h01, double& h11) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  h10 = s3 - 2.0 * s2 + s;
  h01 = -2.0 * s3 + 3.0 * s2;
  h11 = s3 - s2;
}

// Locates the knot interval containing t in an ascending knot vector.
// Returns the left index; exact knot hits are reported via `exact`.
inline int locate(const std::vector<double>& ts, double t, bool& exact) {
  const double lo = ts.front(), hi = ts.back();
  const double slack = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
  if (t < lo - slack || t > hi + slack)
    throw DomainError("evaluation time outside stored window");
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  int k = static_cast<int>(it - ts.begin()) - 1;
  k = std::clamp(k, 0, static_cast<int>(ts.size()) - 2);
  exact = (t == ts[k] || t == ts[k + 1]);
  return k;
}

}  // namespace detail

// Dense-output solution curve: accepted integrator knots (t_k, y_k, f_k)
// joined by cubic Hermite interpolation.  Knot times ascend regardless of the
// integration direction; `t_begin`/`t_end` keep the requested orientation.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(int dim, double t_begin, double t_end)
      : dim_(dim), t_begin_(t_begin), t_end_(t_end) {}

  void append_knot(double t, Vec y, Vec f) {
    if (!ts_.empty() && !(t > ts_.back()))
      throw ContractViolation("Trajectory: knot times must strictly ascend");
    ts_.push_back(t);
    ys_.push_back(std::move(y));
    fs_.push_back(std::move(f));
  }

  int dim() const { return dim_; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  double t_min() const { return ts_.front(); }
  double t_max() const { return ts_.back(); }
  size_t knot_count() const { return ts_.size(); }
  const std::vector<double>& knot_times() const { return ts_; }
  const Vec& knot_state(size_t k) const { return ys_[k]; }
  const Vec& knot_derivative(size_t k) const { return fs_[k]; }

  // State at time t (cubic Hermite between knots; exact at knots).
  Vec value(double t) const {
    require_nonempty();
    if (ts_.size() == 1) return ys_[0];
    bool exact = false;
    const int k = detail::locate(ts_, t, exact);
    if (t == ts_[k]) return ys_[k];
    if (t == ts_[k + 1]) return ys_[k + 1];
    const double h = ts_[k + 1] - ts_[k];
    const double s = (t - ts_[k]) / h;
    double h00, h10, h01, h11;
    detail::hermite_basis(s, h00, h10, h01, h11);
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i)
      out[i] = h00 * ys_[k][i] + h10 * h * fs_[k][i] + h01 * ys_[k + 1][i] +
               h11 * h * fs_[k + 1][i];
    return out;
  }

  // Time derivative of the interpolant at t.
  Vec derivative(double t) const {
    require_nonempty();
    if (ts_.size() == 1) return fs_[0];
    bool exact = false;
    const int k = detail::locate(ts_, t, exact);
    if (t == ts_[k]) return fs_[k];
    if (t == ts_[k + 1]) return fs_[k + 1];
    const double h = ts_[k + 1] - ts_[k];
    const double s = (t - ts_[k]) / h;
    const double s2 = s * s;
    const double d00 = (6.0 * s2 - 6.0 * s) / h;
    const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
    const double d01 = (-6.0 * s2 + 6.0 * s) / h;
    const double d11 = 3.0 * s2 - 2.0 * s;
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i)
      out[i] = d00 * ys_[k][i] + d10 * fs_[k][i] + d01 * ys_[k + 1][i] +
               d11 * fs_[k + 1][i];
    return out;
  }

 private:
  void require_nonempty() const {
    if (ts_.empty()) throw ContractViolation("Trajectory: no knots stored");
  }

  int dim_ = 0;
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  std::vector<double> ts_;
  std::vector<Vec> ys_;
  std::vector<Vec> fs_;
};

// Solution of the variational (Jacobi) equation along a base trajectory:
// M(t) with dM/dt = J_f(t, y(t)) * M, stored on the same accepted-step knots
// and interpolated the same way.  Columns propagate initial fibre directions.
class JacobiFrame {
 public:
  JacobiFrame() = default;
  JacobiFrame(int dim, int n_cols) : dim_(dim), cols_(n_cols) {}

  void append_knot(double t, Mat m, Mat dm) {
    if (!ts_.empty() && !(t > ts_.back()))
      throw ContractViolation("JacobiFrame: knot times must strictly ascend");
    ts_.push_back(t);
    ms_.push_back(std::move(m));
    dms_.push_back(std::move(dm));
  }

  int dim() const { return dim_; }
  int cols() const { return cols_; }
  double t_min() const { return ts_.front(); }
  double t_max() const { return ts_.back(); }
  size_t knot_count() const { return ts_.size(); }
  const std::vector<double>& knot_times() const { return ts_; }
  const Mat& knot_matrix(size_t k) const { return ms_[k]; }

  Mat value(double t) const {
    if (ts_.empty()) throw ContractViolation("JacobiFrame: no knots stored");
    if (ts_.size() == 1) return ms_[0];
    bool exact = false;
    const int k = detail::locate(ts_, t, exact);
    if (t == ts_[k]) return ms_[k];
    if (t == ts_[k + 1]) return ms_[k + 1];
    const double h = ts_[k + 1] - ts_[k];
    const double s = (t - ts_[k]) / h;
    double h00, h10, h01, h11;
    detail::hermite_basis(s, h00, h10, h01, h11);
    Mat out(dim_, cols_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < cols_; ++j)
        out(i, j) = h00 * ms_[k](i, j) + h10 * h * dms_[k](i, j) +
                    h01 * ms_[k + 1](i, j) + h11 * h * dms_[k + 1](i, j);
    return out;
  }

  // Propagates an initial fibre vector: M(t) * v0.
  Vec push(double t, const Vec& v0) const { return matvec(value(t), v0); }

 private:
  int dim_ = 0;
  int cols_ = 0;
  std::vector<double> ts_;
  std::vector<Mat> ms_;
  std::vector<Mat> dms_;
};

}  // namespace lyatensor
