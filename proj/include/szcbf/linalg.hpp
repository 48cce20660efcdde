#pragma once

// Small dense real linear algebra (n <= 6 in practice): row-major matrices,
// symmetric eigenvalues by cyclic Jacobi, Cholesky tests, Lyapunov and
// continuous algebraic Riccati solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "szcbf/errors.hpp"

namespace szcbf {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0) : data_(n, value) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }
  [[nodiscard]] auto begin() const { return data_.begin(); }
  [[nodiscard]] auto end() const { return data_.end(); }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Vector& operator+=(const Vector& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vector& operator-=(const Vector& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vector& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  void check_same(const Vector& o) const {
    if (o.size() != size()) throw InvalidInput("vector size mismatch");
  }
  std::vector<double> data_;
};

inline Vector operator+(Vector a, const Vector& b) { return a += b; }
inline Vector operator-(Vector a, const Vector& b) { return a -= b; }
inline Vector operator*(double s, Vector a) { return a *= s; }
inline Vector operator*(Vector a, double s) { return a *= s; }
inline Vector operator-(Vector a) { return a *= -1.0; }

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidInput("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

/// Dense row-major matrix. Also used for rectangular blocks such as B (n x m).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidInput("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix zero(std::size_t n) { return Matrix(n, n); }
  static Matrix diag(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Matrix column(const Vector& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }
  static Matrix outer(const Vector& a, const Vector& b) {
    Matrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  [[nodiscard]] Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  [[nodiscard]] Vector row(std::size_t i) const {
    Vector r(cols_);
    for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
    return r;
  }
  [[nodiscard]] Vector col(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same(const Matrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidInput("matrix shape mismatch");
  }
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator-(Matrix a) { return a *= -1.0; }

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vector operator*(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw InvalidInput("matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

/// x^T M y
inline double quad_form(const Vector& x, const Matrix& m, const Vector& y) { return dot(x, m * y); }
inline double quad_form(const Vector& x, const Matrix& m) { return quad_form(x, m, x); }

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s = std::max(s, std::abs(v));
  return s;
}

inline double trace(const Matrix& m) {
  if (!m.is_square()) throw InvalidInput("trace: matrix not square");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double tol) {
  if (!m.is_square()) return false;
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
  return true;
}

/// Tolerances shared by the solvers below; every field is a default that
/// callers may override.
struct LinalgTolerances {
  double symmetry = 1e-10;
  double jacobi = 1e-12;          // off-diagonal norm relative to ||M||
  int jacobi_max_sweeps = 100;
  double singular_pivot = 1e-13;  // relative to the largest entry
  double care_residual = 1e-8;
  int care_max_iterations = 100;
};

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi eigen-decomposition of the symmetric part of `m`.
inline SymEigen sym_eigen(const Matrix& m, const LinalgTolerances& tol = {}) {
  if (!m.is_square() || m.rows() == 0) throw InvalidInput("sym_eigen: matrix must be square and non-empty");
  if (!m.all_finite()) throw InvalidInput("sym_eigen: non-finite entries");
  const std::size_t n = m.rows();
  Matrix a = symmetrize(m);
  Matrix v = Matrix::identity(n);
  const double target = tol.jacobi * std::max(frobenius_norm(a), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < tol.jacobi_max_sweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline Vector sym_eigvals(const Matrix& m, const LinalgTolerances& tol = {}) { return sym_eigen(m, tol).values; }
inline double eigmin(const Matrix& m) { return sym_eigvals(m)[0]; }
inline double eigmax(const Matrix& m) {
  const Vector e = sym_eigvals(m);
  return e[e.size() - 1];
}

/// Lower Cholesky factor, or nullopt when a pivot is <= tol.
inline std::optional<Matrix> cholesky(const Matrix& m, double tol = 0.0) {
  if (!m.is_square()) return std::nullopt;
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline bool is_pos_def(const Matrix& m, double tol = 1e-12) { return cholesky(m, tol).has_value(); }

/// Semidefinite test by symmetric pivoted LDL^T: pivots below -tol fail, pivots
/// within tol must come with a (numerically) zero remaining column.
inline bool is_pos_semidef(const Matrix& m, double rel_tol = 1e-12) {
  if (!m.is_square()) return false;
  const std::size_t n = m.rows();
  Matrix a = symmetrize(m);
  const double tol = rel_tol * std::max(1.0, max_abs(a));
  std::vector<bool> done(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t p = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!done[i] && (p == n || a(i, i) > a(p, p))) p = i;
    const double d = a(p, p);
    done[p] = true;
    if (d < -tol) return false;
    if (d <= tol) {
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i] && std::abs(a(i, p)) > std::sqrt(tol * std::max(tol, std::abs(a(i, i))))) return false;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (done[j]) continue;
        a(i, j) -= a(i, p) * a(p, j) / d;
      }
    }
  }
  return true;
}

/// Solves A X = B by Gaussian elimination with partial pivoting.
inline Matrix solve(const Matrix& a_in, const Matrix& b_in, const LinalgTolerances& tol = {}) {
  if (!a_in.is_square() || a_in.rows() != b_in.rows()) throw InvalidInput("solve: shape mismatch");
  const std::size_t n = a_in.rows();
  const std::size_t m = b_in.cols();
  Matrix a = a_in;
  Matrix b = b_in;
  const double scale = std::max(max_abs(a), 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (std::abs(a(p, k)) <= tol.singular_pivot * scale) throw NoSolution("singular linear system");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(b(k, j), b(p, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < m; ++j) b(i, j) -= f * b(k, j);
    }
  }
  Matrix x(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= a(ii, k) * x(k, j);
      x(ii, j) = s / a(ii, ii);
    }
  }
  return x;
}

inline Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

/// Numerical rank by Gaussian elimination with full pivoting.
inline std::size_t rank(const Matrix& m, double rel_tol = 1e-10) {
  Matrix a = m;
  const double tol = rel_tol * std::max(max_abs(a), 1e-300);
  std::size_t r = 0;
  std::vector<bool> col_used(a.cols(), false);
  std::vector<bool> row_used(a.rows(), false);
  for (;;) {
    double best = tol;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (row_used[i]) continue;
      for (std::size_t j = 0; j < a.cols(); ++j) {
        if (col_used[j]) continue;
        if (std::abs(a(i, j)) > best) {
          best = std::abs(a(i, j));
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) return r;
    ++r;
    row_used[bi] = true;
    col_used[bj] = true;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (row_used[i]) continue;
      const double f = a(i, bj) / a(bi, bj);
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= f * a(bi, j);
    }
  }
}

/// [B, AB, ..., A^{n-1}B]
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  Matrix c(n, n * m);
  Matrix blk = b;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) c(i, k * m + j) = blk(i, j);
    blk = a * blk;
  }
  return c;
}

namespace detail {

// Kronecker form of P A + A^T P = -Q with unknowns P(a, b) at index a * n + b.
inline Matrix lyapunov_kernel(const Matrix& a, const Matrix& q, const LinalgTolerances& tol) {
  const std::size_t n = a.rows();
  const std::size_t nn = n * n;
  Matrix lhs(nn, nn);
  Matrix rhs(nn, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t row = i * n + j;
      // (P A)_ij = sum_k P_ik A_kj
      for (std::size_t k = 0; k < n; ++k) lhs(row, i * n + k) += a(k, j);
      // (A^T P)_ij = sum_k A_ki P_kj
      for (std::size_t k = 0; k < n; ++k) lhs(row, k * n + j) += a(k, i);
      rhs(row, 0) = -q(i, j);
    }
  }
  const Matrix x = solve(lhs, rhs, tol);
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = x(i * n + j, 0);
  return symmetrize(p);
}

}  // namespace detail

/// Lyapunov stability test: A is Hurwitz iff P A + A^T P = -I has a positive
/// definite solution.
inline bool is_hurwitz(const Matrix& a, const LinalgTolerances& tol = {}) {
  if (!a.is_square() || !a.all_finite()) return false;
  try {
    const Matrix p = detail::lyapunov_kernel(a, Matrix::identity(a.rows()), tol);
    return is_pos_def(p, 0.0);
  } catch (const NoSolution&) {
    return false;
  }
}

/// Solves P Abar + Abar^T P + Q = 0 for symmetric P.
inline Matrix solve_lyapunov(const Matrix& abar, const Matrix& q, const LinalgTolerances& tol = {}) {
  if (!abar.is_square() || !q.is_square() || abar.rows() != q.rows())
    throw InvalidInput("solve_lyapunov: shape mismatch");
  if (!abar.all_finite() || !q.all_finite()) throw InvalidInput("solve_lyapunov: non-finite entries");
  if (!is_hurwitz(abar, tol)) throw NoSolution("solve_lyapunov: Abar is not Hurwitz");
  return detail::lyapunov_kernel(abar, symmetrize(q), tol);
}

inline double care_residual(const Matrix& a, const Matrix& b, const Matrix& qp, const Matrix& r, const Matrix& p) {
  const Matrix rinv_bt = solve(r, b.transpose());
  const Matrix res = p * a + a.transpose() * p - p * b * rinv_bt * p + qp;
  return frobenius_norm(res);
}

namespace detail {

// Stabilizing gain for the Newton iteration. Tries K = 0, then the shifted
// controllability-Gramian gain K = B^T W^{-1} with (A + beta I) W + W (A + beta I)^T = 2 B B^T,
// then a line search over K = s B^T.
inline std::optional<Matrix> stabilizing_gain(const Matrix& a, const Matrix& b, const LinalgTolerances& tol) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  if (is_hurwitz(a, tol)) return Matrix(m, n);

  const double beta = 1.0 + max_abs(a) * static_cast<double>(n);
  const Matrix shifted = -(a + beta * Matrix::identity(n));
  try {
    // P S + S^T P = -Q with S = shifted^T gives shifted W + W shifted^T = -2BB^T.
    const Matrix w = solve_lyapunov(shifted.transpose(), 2.0 * b * b.transpose(), tol);
    if (is_pos_def(w, 0.0)) {
      const Matrix k = b.transpose() * inverse(w);
      if (is_hurwitz(a - b * k, tol)) return k;
    }
  } catch (const NoSolution&) {
  }

  for (double s = 1e-3; s < 1e9; s *= 2.0) {
    const Matrix k = s * b.transpose();
    if (is_hurwitz(a - b * k, tol)) return k;
  }
  return std::nullopt;
}

}  // namespace detail

/// Stabilizing solution of P A + A^T P - P B R^{-1} B^T P + Qp = 0 by
/// Kleinman-Newton iteration on Lyapunov equations.
inline Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& qp, const Matrix& r,
                         const LinalgTolerances& tol = {}) {
  const std::size_t n = a.rows();
  if (!a.is_square() || b.rows() != n || !qp.is_square() || qp.rows() != n || !r.is_square() ||
      r.rows() != b.cols())
    throw InvalidInput("solve_care: shape mismatch");
  if (!a.all_finite() || !b.all_finite() || !qp.all_finite() || !r.all_finite())
    throw InvalidInput("solve_care: non-finite entries");
  if (!is_symmetric(qp, tol.symmetry)) throw InvalidInput("solve_care: Qp is not symmetric");
  if (!is_symmetric(r, tol.symmetry) || !is_pos_def(r)) throw InvalidInput("solve_care: R must be symmetric positive definite");

  const Matrix q = symmetrize(qp);
  const Matrix rs = symmetrize(r);
  const Matrix rinv_bt = solve(rs, b.transpose());

  auto k0 = detail::stabilizing_gain(a, b, tol);
  if (!k0) throw SolverFailure("solve_care: (A, B) is not stabilizable", INFINITY);
  Matrix k = *k0;

  const double bound = tol.care_residual * std::max(1.0, frobenius_norm(q));
  Matrix p(n, n);
  double residual = INFINITY;
  for (int it = 0; it < tol.care_max_iterations; ++it) {
    const Matrix acl = a - b * k;
    Matrix p_next;
    try {
      p_next = solve_lyapunov(acl, q + k.transpose() * rs * k, tol);
    } catch (const NoSolution&) {
      throw SolverFailure("solve_care: Newton iterate lost stability", residual);
    }
    const double step = frobenius_norm(p_next - p);
    p = p_next;
    k = rinv_bt * p;
    residual = care_residual(a, b, q, rs, p);
    if (residual <= bound && step <= 1e-12 * std::max(1.0, frobenius_norm(p))) break;
  }
  if (!(residual <= bound)) throw SolverFailure("solve_care: no convergence", residual);
  if (!is_hurwitz(a - b * k, tol)) throw SolverFailure("solve_care: closed loop not Hurwitz", residual);
  return p;
}

}  // namespace szcbf
