#pragma once

/// \file finite_difference.hpp
/// Central finite-difference estimates of mixed Wirtinger partials. Independent of the
/// jet machinery; used as an oracle and for maps only available pointwise (flows).

#include <kescale/jet.hpp>
#include <kescale/linalg.hpp>

#include <array>
#include <functional>
#include <map>
#include <vector>

namespace kescale {

using ScalarFn = std::function<cplx(const CVec&)>;

/// Scalar function of complex coordinates in precision T.
template <class T>
using ScalarFnT = std::function<std::complex<T>(const std::vector<std::complex<T>>&)>;

namespace detail {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

// O(h^2) central stencils for derivative orders 0..4 (before division by h^d).
inline const Stencil& central_stencil(int d) {
  static const std::array<Stencil, 5> s{{
      {{0}, {1.0}},
      {{-1, 1}, {-0.5, 0.5}},
      {{-1, 0, 1}, {1.0, -2.0, 1.0}},
      {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}},
      {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}},
  }};
  return s.at(static_cast<std::size_t>(d));
}

/// Real mixed partial with counts[2a] x-derivatives and counts[2a+1] y-derivatives of z^a.
template <class T, class F>
std::complex<T> central_real_partial(const F& f, const std::vector<std::complex<T>>& p, const std::vector<int>& counts, T h) {
  std::vector<int> active;
  for (std::size_t v = 0; v < counts.size(); ++v)
    if (counts[v] > 0) active.push_back(static_cast<int>(v));
  int total = 0;
  for (int c : counts) total += c;

  std::complex<T> sum = 0;
  std::vector<std::size_t> pos(active.size(), 0);
  while (true) {
    std::vector<std::complex<T>> q = p;
    T w = 1;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int v = active[i];
      const auto& st = central_stencil(counts[static_cast<std::size_t>(v)]);
      const T off = static_cast<T>(st.offsets[pos[i]]) * h;
      w *= static_cast<T>(st.weights[pos[i]]);
      q[static_cast<std::size_t>(v / 2)] += (v % 2 == 0) ? std::complex<T>(off, 0) : std::complex<T>(0, off);
    }
    sum += w * f(q);
    std::size_t i = 0;
    for (; i < active.size(); ++i) {
      const auto& st = central_stencil(counts[static_cast<std::size_t>(active[i])]);
      if (++pos[i] < st.offsets.size()) break;
      pos[i] = 0;
    }
    if (i == active.size()) break;
  }
  return sum / std::pow(h, static_cast<T>(total));
}

/// Expansion of a Wirtinger monomial into real partials: d_a = (d_x - i d_y)/2,
/// dbar_a = (d_x + i d_y)/2.
template <class T>
std::map<std::vector<int>, std::complex<T>> wirtinger_terms(int n, const MultiIndex& m) {
  std::vector<std::pair<int, bool>> ops;  // (coordinate, is_anti)
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < m.holo[static_cast<std::size_t>(a)]; ++i) ops.emplace_back(a, false);
    for (int i = 0; i < m.anti[static_cast<std::size_t>(a)]; ++i) ops.emplace_back(a, true);
  }
  std::map<std::vector<int>, std::complex<T>> terms;
  const std::size_t combos = std::size_t{1} << ops.size();
  const T half = T(1) / T(2);
  for (std::size_t mask = 0; mask < combos; ++mask) {
    std::vector<int> counts(static_cast<std::size_t>(2 * n), 0);
    std::complex<T> coef = 1;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const auto [a, anti] = ops[i];
      if (mask & (std::size_t{1} << i)) {
        ++counts[static_cast<std::size_t>(2 * a + 1)];
        coef *= anti ? std::complex<T>(0, half) : std::complex<T>(0, -half);
      } else {
        ++counts[static_cast<std::size_t>(2 * a)];
        coef *= half;
      }
    }
    terms[counts] += coef;
  }
  return terms;
}

}  // namespace detail

/// Central-difference estimate of d^holo dbar^anti f at p in precision T. Truncation error O(h^2).
template <class T>
std::complex<T> fd_wirtinger_t(const ScalarFnT<T>& f, const std::vector<std::complex<T>>& p, const MultiIndex& m, T h) {
  if (m.degree() > 4) throw JetError("finite-difference oracle supports |I| <= 4");
  if (!(h > 0)) throw JetError("finite-difference step must be positive");
  std::complex<T> total = 0;
  for (const auto& [counts, coef] : detail::wirtinger_terms<T>(static_cast<int>(p.size()), m))
    if (coef != std::complex<T>{}) total += coef * detail::central_real_partial<T>(f, p, counts, h);
  return total;
}

/// Richardson table over steps h, h/2, ..., h/2^(levels-1); truncation error O(h^(2 levels)).
/// Deeper tables allow larger h, which keeps rounding error down for high orders.
template <class T>
std::complex<T> fd_richardson_t(const ScalarFnT<T>& f, const std::vector<std::complex<T>>& p, const MultiIndex& m, T h,
                                int levels) {
  if (levels < 1) throw JetError("Richardson table needs at least one level");
  std::vector<std::complex<T>> t;
  for (int k = 0; k < levels; ++k) t.push_back(fd_wirtinger_t<T>(f, p, m, std::ldexp(h, -k)));
  for (int k = 1; k < levels; ++k) {
    const T q = std::ldexp(T(1), 2 * k);
    for (int i = levels - 1; i >= k; --i)
      t[static_cast<std::size_t>(i)] = (q * t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i - 1)]) / (q - T(1));
  }
  return t.back();
}

/// Plain central-difference estimate of d^holo dbar^anti f at p. Truncation error O(h^2).
inline cplx fd_wirtinger(const ScalarFn& f, const CVec& p, const MultiIndex& m, double h) {
  return fd_wirtinger_t<double>(f, p, m, h);
}

/// Central difference with one Richardson step (h, h/2): truncation error O(h^4).
inline cplx fd_crosscheck(const ScalarFn& f, const CVec& p, const MultiIndex& m, double h) {
  return fd_richardson_t<double>(f, p, m, h, 2);
}

inline cplx fd_richardson(const ScalarFn& f, const CVec& p, const MultiIndex& m, double h, int levels) {
  return fd_richardson_t<double>(f, p, m, h, levels);
}

/// First-order Wirtinger derivatives of a vector-valued map by the 4-point stencil
/// (+-h along x and y). Returns (d_b f^a, dbar_b f^a) as row-major n x n arrays.
struct FirstDerivatives {
  CMatrix holo;
  CMatrix anti;
};

inline FirstDerivatives fd_first_derivatives(const std::function<CVec(const CVec&)>& f, const CVec& p, double h) {
  const int n = static_cast<int>(p.size());
  FirstDerivatives d{CMatrix(n, 0.0), CMatrix(n, 0.0)};
  for (int b = 0; b < n; ++b) {
    CVec xp = p, xm = p, yp = p, ym = p;
    xp[static_cast<std::size_t>(b)] += h;
    xm[static_cast<std::size_t>(b)] -= h;
    yp[static_cast<std::size_t>(b)] += cplx(0.0, h);
    ym[static_cast<std::size_t>(b)] -= cplx(0.0, h);
    const CVec fxp = f(xp), fxm = f(xm), fyp = f(yp), fym = f(ym);
    for (int a = 0; a < n; ++a) {
      const auto i = static_cast<std::size_t>(a);
      const cplx dx = (fxp[i] - fxm[i]) / (2.0 * h);
      const cplx dy = (fyp[i] - fym[i]) / (2.0 * h);
      d.holo(a, b) = 0.5 * (dx - cplx(0.0, 1.0) * dy);
      d.anti(a, b) = 0.5 * (dx + cplx(0.0, 1.0) * dy);
    }
  }
  return d;
}

}  // namespace kescale
