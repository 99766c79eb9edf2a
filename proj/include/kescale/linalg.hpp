#pragma once

/// \file linalg.hpp
/// Small dense square matrices over cplx or Jet, with pivoted Gaussian elimination.

#include <kescale/error.hpp>
#include <kescale/jet.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace kescale {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int n, T fill) : n_(n), a_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {}
  explicit Matrix(int n) : Matrix(n, T{}) {}

  int size() const { return n_; }
  T& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * n_ + j)]; }
  const T& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * n_ + j)]; }

  Matrix transpose() const {
    Matrix t = *this;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) t(i, j) = (*this)(j, i);
    return t;
  }

 private:
  int n_ = 0;
  std::vector<T> a_;
};

using CMatrix = Matrix<cplx>;
using JetMatrix = Matrix<Jet>;

inline CMatrix identity_matrix(int n) {
  CMatrix m(n, 0.0);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  CMatrix c(a.size(), 0.0);
  for (int i = 0; i < a.size(); ++i)
    for (int k = 0; k < a.size(); ++k)
      for (int j = 0; j < a.size(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline CMatrix adjoint(const CMatrix& a) {
  CMatrix t(a.size(), 0.0);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) t(i, j) = std::conj(a(j, i));
  return t;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  double w = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) w = std::max(w, std::abs(a(i, j) - b(i, j)));
  return w;
}

/// Constant-term view of a jet matrix.
inline CMatrix values(const JetMatrix& m) {
  CMatrix v(m.size(), 0.0);
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) v(i, j) = m(i, j).constant_term();
  return v;
}

namespace detail {

/// In-place LU with partial pivoting on the constant terms. Returns the permutation
/// sign; throws MetricError on a zero pivot.
template <class T>
int lu_decompose(Matrix<T>& a, std::vector<int>& perm) {
  const int n = a.size();
  perm.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  int sign = 1;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(constant_of(a(col, col)));
    for (int r = col + 1; r < n; ++r) {
      const double m = std::abs(constant_of(a(r, col)));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (!(best > 0.0)) throw MetricError("singular matrix in elimination");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      std::swap(perm[static_cast<std::size_t>(col)], perm[static_cast<std::size_t>(piv)]);
      sign = -sign;
    }
    for (int r = col + 1; r < n; ++r) {
      T f = a(r, col) / a(col, col);
      a(r, col) = f;
      for (int j = col + 1; j < n; ++j) a(r, j) = a(r, j) - f * a(col, j);
    }
  }
  return sign;
}

}  // namespace detail

template <class T>
T determinant(Matrix<T> a) {
  std::vector<int> perm;
  const int sign = detail::lu_decompose(a, perm);
  T d = a(0, 0);
  for (int i = 1; i < a.size(); ++i) d = d * a(i, i);
  return sign < 0 ? -d : d;
}

template <class T>
Matrix<T> inverse(Matrix<T> a) {
  const int n = a.size();
  std::vector<int> perm;
  detail::lu_decompose(a, perm);
  Matrix<T> inv(n, zero_like(a(0, 0)));
  for (int c = 0; c < n; ++c) {
    // Solve L U x = P e_c.
    std::vector<T> x(static_cast<std::size_t>(n), zero_like(a(0, 0)));
    for (int i = 0; i < n; ++i) {
      T s = perm[static_cast<std::size_t>(i)] == c ? one_like(a(0, 0)) : zero_like(a(0, 0));
      for (int k = 0; k < i; ++k) s = s - a(i, k) * x[static_cast<std::size_t>(k)];
      x[static_cast<std::size_t>(i)] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      T s = x[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < n; ++k) s = s - a(i, k) * x[static_cast<std::size_t>(k)];
      x[static_cast<std::size_t>(i)] = s / a(i, i);
    }
    for (int i = 0; i < n; ++i) inv(i, c) = x[static_cast<std::size_t>(i)];
  }
  return inv;
}

/// Leading principal minors of a Hermitian matrix (real parts).
inline std::vector<double> leading_minors(const CMatrix& h) {
  std::vector<double> out;
  for (int k = 1; k <= h.size(); ++k) {
    CMatrix sub(k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = h(i, j);
    try {
      out.push_back(determinant(sub).real());
    } catch (const MetricError&) {
      out.push_back(0.0);
    }
  }
  return out;
}

}  // namespace kescale
