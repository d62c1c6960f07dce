#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "lyatensor/errors.hpp"

namespace lyatensor {

using Vec = std::vector<double>;

// Dense row-major matrix.  Small (dim <= a few dozen), so no cleverness.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

  Mat(int rows, int cols, std::initializer_list<double> entries)
      : rows_(rows), cols_(cols), a_(entries) {
    if (static_cast<int>(a_.size()) != rows * cols)
      throw ContractViolation("Mat: initializer size does not match shape");
  }

  Mat(std::initializer_list<std::initializer_list<double>> rows)
      : rows_(static_cast<int>(rows.size())),
        cols_(rows.size() ? static_cast<int>(rows.begin()->size()) : 0) {
    a_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != cols_)
        throw ContractViolation("Mat: ragged initializer");
      a_.insert(a_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  Mat& operator+=(const Mat& o) {
    check_same_shape(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    check_same_shape(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Mat& operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  Mat transposed() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

 private:
  void check_same_shape(const Mat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw ContractViolation("Mat: shape mismatch");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw ContractViolation("matmul: inner dimensions differ");
  Mat c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw ContractViolation("matvec: dimension mismatch");
  Vec y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec vsub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec vadd(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec vscale(const Vec& a, double s) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

// a + s*b
inline Vec vaxpy(const Vec& a, double s, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
  return r;
}

inline double max_abs(const Mat& m) {
  double v = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

inline double max_abs(const Vec& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

inline double frobenius_norm(const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline bool all_finite(const Mat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) return false;
  return true;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Exact symmetrization: both (i,j) and (j,i) get the identical average, so
// the result is bitwise symmetric.
inline Mat symmetrize(const Mat& m) {
  Mat s(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    s(i, i) = m(i, i);
    for (int j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

inline double asymmetry(const Mat& m) {
  double v = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) v = std::max(v, std::abs(m(i, j) - m(j, i)));
  return v;
}

// Solves a*x = b by Gaussian elimination with partial pivoting.
inline Vec solve(Mat a, Vec b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw ContractViolation("solve: need square system");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < 1e-300)
      throw ContractViolation("solve: matrix is singular to working precision");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline Mat inverse(const Mat& a) {
  const int n = a.rows();
  if (a.cols() != n) throw ContractViolation("inverse: matrix must be square");
  Mat inv(n, n);
  for (int c = 0; c < n; ++c) {
    Vec e(n, 0.0);
    e[c] = 1.0;
    Vec col = solve(a, e);
    for (int r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

inline double determinant(Mat a) {
  const int n = a.rows();
  if (a.cols() != n) throw ContractViolation("determinant: matrix must be square");
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      det = -det;
    }
    det *= a(col, col);
    const double inv = 1.0 / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
    }
  }
  return det;
}

struct EigenSym {
  Vec values;       // ascending
  Mat vectors;      // column k pairs with values[k]
};

// Cyclic Jacobi rotations.  Input must be symmetric up to `sym_tol` relative
// to its magnitude; it is symmetrized exactly before iterating.
inline EigenSym eigen_sym(const Mat& m_in, double sym_tol = 1e-10) {
  const int n = m_in.rows();
  if (m_in.cols() != n) throw ContractViolation("eigen_sym: matrix must be square");
  if (!all_finite(m_in)) throw NumericFailure("eigen_sym: non-finite entries");
  const double scale = max_abs(m_in);
  if (asymmetry(m_in) > sym_tol * (1.0 + scale))
    throw ContractViolation("eigen_sym: matrix is not symmetric within tolerance");

  Mat a = symmetrize(m_in);
  Mat v = Mat::identity(n);

  auto off = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double stop = 1e-15 * std::max(1.0, frobenius_norm(a));
  for (int sweep = 0; sweep < 64 && off() > stop; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  EigenSym out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (int r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

enum class Definiteness {
  negative_definite,
  negative_semidefinite,
  zero,
  positive_semidefinite,
  positive_definite,
  indefinite,
};

inline const char* to_string(Definiteness d) {
  switch (d) {
    case Definiteness::negative_definite: return "negative_definite";
    case Definiteness::negative_semidefinite: return "negative_semidefinite";
    case Definiteness::zero: return "zero";
    case Definiteness::positive_semidefinite: return "positive_semidefinite";
    case Definiteness::positive_definite: return "positive_definite";
    case Definiteness::indefinite: return "indefinite";
  }
  return "?";
}

// A symmetric bilinear form together with its extreme eigenvalues and sign
// classification.  Classification uses a margin of 1e-8 * (1 + max |eigen|):
// eigenvalues inside the margin count as zero.
struct SymmetricForm {
  Mat coeffs;
  double eigen_min = 0.0;
  double eigen_max = 0.0;
  Definiteness definiteness = Definiteness::zero;

  double operator()(const Vec& u, const Vec& v) const {
    return dot(u, matvec(coeffs, v));
  }
};

inline Definiteness classify_definiteness(double eig_min, double eig_max) {
  const double margin = 1e-8 * (1.0 + std::max(std::abs(eig_min), std::abs(eig_max)));
  const bool min_zero = std::abs(eig_min) <= margin;
  const bool max_zero = std::abs(eig_max) <= margin;
  if (min_zero && max_zero) return Definiteness::zero;
  if (eig_max < -margin) return Definiteness::negative_definite;
  if (eig_max <= margin) return Definiteness::negative_semidefinite;
  if (eig_min > margin) return Definiteness::positive_definite;
  if (eig_min >= -margin) return Definiteness::positive_semidefinite;
  return Definiteness::indefinite;
}

inline SymmetricForm make_symmetric_form(const Mat& coeffs, double sym_tol = 1e-10) {
  EigenSym eig = eigen_sym(coeffs, sym_tol);
  SymmetricForm f;
  f.coeffs = symmetrize(coeffs);
  f.eigen_min = eig.values.front();
  f.eigen_max = eig.values.back();
  f.definiteness = classify_definiteness(f.eigen_min, f.eigen_max);
  return f;
}

// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> eigen_extremes(const Mat& m, double sym_tol = 1e-10) {
  EigenSym eig = eigen_sym(m, sym_tol);
  return {eig.values.front(), eig.values.back()};
}

}  // namespace lyatensor
