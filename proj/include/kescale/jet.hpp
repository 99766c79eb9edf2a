#pragma once

/// \file jet.hpp
/// Truncated Wirtinger-Taylor jets.
///
/// A jet of order k at a base point p in C^n stores the Taylor coefficients of a
/// function in the 2n formal variables (z^1..z^n, zbar^1..zbar^n), treated as
/// independent (polarization), up to total degree k. Coefficient of the monomial
/// (z-p)^a (zbar-pbar)^b is  d^a dbar^b f(p) / (a! b!).
///
/// Coefficients are stored densely in graded order: all monomials of degree 0,
/// then degree 1, and so on. Order-k storage is therefore a prefix of the order-4
/// storage for the same dimension, which lets truncation and differentiation reuse
/// one precomputed table per dimension.

#include <kescale/error.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace kescale {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetDim = 8;

/// Exponents of a Wirtinger monomial: holo[a] powers of (z^a - p^a), anti[a] powers of conj.
struct MultiIndex {
  std::vector<int> holo;
  std::vector<int> anti;

  int degree() const {
    return std::accumulate(holo.begin(), holo.end(), 0) + std::accumulate(anti.begin(), anti.end(), 0);
  }

  static MultiIndex zero(int dim) { return {std::vector<int>(dim, 0), std::vector<int>(dim, 0)}; }

  /// Index with one holomorphic slot per entry of `h` and one antiholomorphic slot per entry of `a`.
  static MultiIndex from_slots(int dim, std::initializer_list<int> h, std::initializer_list<int> a = {}) {
    MultiIndex m = zero(dim);
    for (int i : h) ++m.holo.at(i);
    for (int i : a) ++m.anti.at(i);
    return m;
  }

  bool operator==(const MultiIndex&) const = default;
};

namespace detail {

/// Monomials of degree <= kMaxJetOrder in 2*dim variables with product and
/// derivative tables. One immutable instance per dimension, shared by all jets.
class MonomialTable {
 public:
  struct Product {
    std::uint32_t lhs, rhs, out;
  };
  struct Shift {
    std::uint32_t source;
    double factor;
  };

  explicit MonomialTable(int dim) : dim_(dim), vars_(2 * dim) {
    std::vector<int> e(vars_, 0);
    count_.assign(kMaxJetOrder + 2, 0);
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      enumerate(e, 0, d);
      count_[d + 1] = degree_.size();
    }
    for (std::size_t i = 0; i < degree_.size(); ++i) lookup_.emplace(key(exponents(i)), static_cast<std::uint32_t>(i));

    std::vector<Product> prods;
    std::vector<int> sum(vars_);
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = 0; j < size(); ++j) {
        if (degree_[i] + degree_[j] > kMaxJetOrder) continue;
        auto a = exponents(i), b = exponents(j);
        for (int v = 0; v < vars_; ++v) sum[v] = a[v] + b[v];
        prods.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                         static_cast<std::uint32_t>(find(sum))});
      }
    }
    std::stable_sort(prods.begin(), prods.end(), [&](const Product& x, const Product& y) {
      return degree_[x.out] < degree_[y.out];
    });
    products_ = std::move(prods);
    product_end_.assign(kMaxJetOrder + 1, 0);
    for (int k = 0; k <= kMaxJetOrder; ++k) {
      product_end_[k] = static_cast<std::size_t>(
          std::partition_point(products_.begin(), products_.end(),
                               [&](const Product& p) { return degree_[p.out] <= k; }) -
          products_.begin());
    }

    shifts_.resize(vars_);
    for (int v = 0; v < vars_; ++v) {
      for (std::size_t i = 0; i < count(kMaxJetOrder - 1); ++i) {
        auto a = exponents(i);
        std::vector<int> up(a.begin(), a.end());
        ++up[v];
        shifts_[v].push_back({static_cast<std::uint32_t>(find(up)), static_cast<double>(up[v])});
      }
    }

    conj_.resize(size());
    std::vector<int> sw(vars_);
    for (std::size_t i = 0; i < size(); ++i) {
      auto a = exponents(i);
      for (int v = 0; v < dim_; ++v) {
        sw[v] = a[v + dim_];
        sw[v + dim_] = a[v];
      }
      conj_[i] = static_cast<std::uint32_t>(find(sw));
    }
  }

  int dim() const { return dim_; }
  int vars() const { return vars_; }
  std::size_t size() const { return degree_.size(); }
  /// Number of monomials of degree <= order.
  std::size_t count(int order) const { return count_[order + 1]; }
  int degree(std::size_t i) const { return degree_[i]; }
  std::span<const int> exponents(std::size_t i) const {
    return {exps_.data() + i * static_cast<std::size_t>(vars_), static_cast<std::size_t>(vars_)};
  }

  /// Rank of a monomial, or -1 when its degree exceeds kMaxJetOrder.
  std::ptrdiff_t find(std::span<const int> e) const {
    int d = 0;
    for (int x : e) {
      if (x < 0) return -1;
      d += x;
    }
    if (d > kMaxJetOrder) return -1;
    auto it = lookup_.find(key(e));
    return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  std::span<const Product> products(int order) const { return {products_.data(), product_end_[order]}; }
  std::span<const Shift> shifts(int var, int out_order) const { return {shifts_[var].data(), count(out_order)}; }
  std::uint32_t conj_index(std::size_t i) const { return conj_[i]; }

  /// Process-wide table for `dim`; references stay valid for the program lifetime.
  static const MonomialTable& get(int dim) {
    if (dim < 1 || dim > kMaxJetDim) throw JetError("jet dimension must be in [1, " + std::to_string(kMaxJetDim) + "]");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<MonomialTable>> tables;
    std::lock_guard lock(mu);
    auto& slot = tables[dim];
    if (!slot) slot = std::make_unique<MonomialTable>(dim);
    return *slot;
  }

 private:
  void enumerate(std::vector<int>& e, int v, int remaining) {
    if (v == vars_ - 1) {
      e[v] = remaining;
      exps_.insert(exps_.end(), e.begin(), e.end());
      degree_.push_back(std::accumulate(e.begin(), e.end(), 0));
      e[v] = 0;
      return;
    }
    for (int x = remaining; x >= 0; --x) {
      e[v] = x;
      enumerate(e, v + 1, remaining - x);
    }
    e[v] = 0;
  }

  static std::uint64_t key(std::span<const int> e) {
    std::uint64_t k = 0;
    for (auto it = e.rbegin(); it != e.rend(); ++it) k = k * (kMaxJetOrder + 1) + static_cast<std::uint64_t>(*it);
    return k;
  }

  int dim_;
  int vars_;
  std::vector<int> exps_;
  std::vector<int> degree_;
  std::vector<std::size_t> count_;
  std::unordered_map<std::uint64_t, std::uint32_t> lookup_;
  std::vector<Product> products_;
  std::vector<std::size_t> product_end_;
  std::vector<std::vector<Shift>> shifts_;
  std::vector<std::uint32_t> conj_;
};

}  // namespace detail

/// Truncated Taylor expansion in (z, zbar) at a base point. Immutable value semantics:
/// every operation returns a new jet.
class Jet {
 public:
  /// Empty placeholder; any arithmetic on it throws.
  Jet() = default;

  /// Zero jet.
  Jet(int dim, int order, CVec base) : table_(&detail::MonomialTable::get(dim)), order_(order), base_(std::move(base)) {
    if (order < 0 || order > kMaxJetOrder)
      throw JetError("jet order must be in [0, " + std::to_string(kMaxJetOrder) + "], got " + std::to_string(order));
    if (static_cast<int>(base_.size()) != dim) throw JetError("base point size does not match jet dimension");
    coeffs_.assign(table_->count(order), cplx{});
  }

  static Jet constant(int dim, int order, CVec base, cplx value) {
    Jet j(dim, order, std::move(base));
    j.coeffs_[0] = value;
    return j;
  }

  /// Constant jet sharing this jet's dimension, order and base point.
  Jet constant_like(cplx value) const {
    require_valid();
    Jet j = zero_like();
    j.coeffs_[0] = value;
    return j;
  }

  Jet zero_like() const {
    require_valid();
    Jet j;
    j.table_ = table_;
    j.order_ = order_;
    j.base_ = base_;
    j.coeffs_.assign(coeffs_.size(), cplx{});
    return j;
  }

  bool valid() const { return table_ != nullptr; }
  int dim() const { return table_ ? table_->dim() : 0; }
  int order() const { return order_; }
  const CVec& base_point() const { return base_; }
  std::span<const cplx> coefficients() const { return coeffs_; }
  cplx constant_term() const {
    require_valid();
    return coeffs_[0];
  }
  const detail::MonomialTable& table() const {
    require_valid();
    return *table_;
  }

  /// Taylor coefficient of a monomial; zero for monomials beyond the jet order.
  cplx coefficient(const MultiIndex& m) const {
    auto idx = index_of(m);
    return idx < 0 || static_cast<std::size_t>(idx) >= coeffs_.size() ? cplx{} : coeffs_[static_cast<std::size_t>(idx)];
  }

  Jet with_coefficient(const MultiIndex& m, cplx value) const {
    auto idx = index_of(m);
    if (idx < 0 || static_cast<std::size_t>(idx) >= coeffs_.size()) throw JetError("monomial exceeds jet order");
    Jet j = *this;
    j.coeffs_[static_cast<std::size_t>(idx)] = value;
    return j;
  }

  cplx& raw(std::size_t i) { return coeffs_[i]; }
  const cplx& raw(std::size_t i) const { return coeffs_[i]; }

  Jet operator-() const {
    Jet r = *this;
    for (auto& c : r.coeffs_) c = -c;
    return r;
  }

  Jet& operator+=(const Jet& b) {
    require_compatible(b);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += b.coeffs_[i];
    return *this;
  }
  Jet& operator-=(const Jet& b) {
    require_compatible(b);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= b.coeffs_[i];
    return *this;
  }
  Jet& operator*=(const Jet& b) {
    *this = multiply(*this, b);
    return *this;
  }
  Jet& operator/=(const Jet& b);

  Jet& operator+=(cplx s) {
    require_valid();
    coeffs_[0] += s;
    return *this;
  }
  Jet& operator-=(cplx s) {
    require_valid();
    coeffs_[0] -= s;
    return *this;
  }
  Jet& operator*=(cplx s) {
    require_valid();
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  Jet& operator/=(cplx s) {
    require_valid();
    for (auto& c : coeffs_) c /= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) { return multiply(a, b); }
  friend Jet operator/(Jet a, const Jet& b) { return a /= b; }
  friend Jet operator+(Jet a, cplx s) { return a += s; }
  friend Jet operator+(cplx s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, cplx s) { return a -= s; }
  friend Jet operator-(cplx s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, cplx s) { return a /= s; }
  friend Jet operator/(cplx s, const Jet& a);
  // Real scalars would otherwise be ambiguous between the cplx overloads and nothing.
  friend Jet operator+(Jet a, double s) { return a += cplx(s); }
  friend Jet operator+(double s, Jet a) { return a += cplx(s); }
  friend Jet operator-(Jet a, double s) { return a -= cplx(s); }
  friend Jet operator-(double s, const Jet& a) { return (-a) += cplx(s); }
  friend Jet operator*(Jet a, double s) { return a *= cplx(s); }
  friend Jet operator*(double s, Jet a) { return a *= cplx(s); }
  friend Jet operator/(Jet a, double s) { return a /= cplx(s); }
  friend Jet operator/(double s, const Jet& a);

  /// Throws unless both jets share dimension, order and base point.
  void require_compatible(const Jet& b) const {
    require_valid();
    b.require_valid();
    if (table_ != b.table_) throw JetError("jet dimension mismatch");
    if (order_ != b.order_)
      throw JetError("jet order mismatch (" + std::to_string(order_) + " vs " + std::to_string(b.order_) + ")");
    if (base_ != b.base_) throw JetError("jet base point mismatch");
  }

  void require_valid() const {
    if (!table_) throw JetError("operation on an empty jet");
  }

 private:
  friend Jet truncate(const Jet&, int);
  friend Jet differentiate(const Jet&, int);

  std::ptrdiff_t index_of(const MultiIndex& m) const {
    require_valid();
    const int n = dim();
    if (static_cast<int>(m.holo.size()) != n || static_cast<int>(m.anti.size()) != n)
      throw JetError("multi-index dimension mismatch");
    std::vector<int> e(m.holo);
    e.insert(e.end(), m.anti.begin(), m.anti.end());
    return table_->find(e);
  }

  static Jet multiply(const Jet& a, const Jet& b) {
    a.require_compatible(b);
    Jet r = a.zero_like();
    for (const auto& p : a.table_->products(a.order_)) r.coeffs_[p.out] += a.coeffs_[p.lhs] * b.coeffs_[p.rhs];
    return r;
  }

  const detail::MonomialTable* table_ = nullptr;
  int order_ = 0;
  CVec base_;
  std::vector<cplx> coeffs_;
};

namespace detail {

/// sum_m series[m] * (a - a0)^m, evaluated by Horner's rule; series.size() == order + 1.
inline Jet apply_series(const Jet& a, std::span<const cplx> series) {
  Jet delta = a;
  delta.raw(0) = 0.0;
  Jet acc = a.constant_like(series.back());
  for (int m = static_cast<int>(series.size()) - 2; m >= 0; --m) acc = acc * delta + series[static_cast<std::size_t>(m)];
  return acc;
}

inline double real_positive_constant(const Jet& a, const char* what) {
  const cplx c = a.constant_term();
  if (!(c.real() > 0.0) || std::abs(c.imag()) > 1e-10 * std::abs(c))
    throw JetError(std::string(what) + " requires a jet with positive real constant term");
  return c.real();
}

}  // namespace detail

/// Multiplicative inverse; requires a nonzero constant term.
inline Jet reciprocal(const Jet& b) {
  const cplx b0 = b.constant_term();
  if (b0 == cplx{}) throw JetError("division by a jet with zero constant term");
  std::vector<cplx> s(static_cast<std::size_t>(b.order()) + 1);
  cplx p = 1.0 / b0;
  for (auto& x : s) {
    x = p;
    p *= -1.0 / b0;
  }
  return detail::apply_series(b, s);
}

inline Jet& Jet::operator/=(const Jet& b) {
  require_compatible(b);
  *this = multiply(*this, reciprocal(b));
  return *this;
}
inline Jet operator/(cplx s, const Jet& a) { return reciprocal(a) * s; }
inline Jet operator/(double s, const Jet& a) { return reciprocal(a) * cplx(s); }

/// Jet of the complex conjugate function: coefficients conjugated, holo/anti slots swapped.
inline Jet conj(const Jet& a) {
  Jet r = a.zero_like();
  const auto& t = a.table();
  for (std::size_t i = 0; i < a.coefficients().size(); ++i) r.raw(t.conj_index(i)) = std::conj(a.raw(i));
  return r;
}

inline Jet exp(const Jet& a) {
  std::vector<cplx> s(static_cast<std::size_t>(a.order()) + 1);
  cplx e = std::exp(a.constant_term());
  double fact = 1.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (m > 0) fact *= static_cast<double>(m);
    s[m] = e / fact;
  }
  return detail::apply_series(a, s);
}

/// Natural log of a jet whose constant term is real and positive.
inline Jet log(const Jet& a) {
  const double a0 = detail::real_positive_constant(a, "log");
  std::vector<cplx> s(static_cast<std::size_t>(a.order()) + 1);
  s[0] = std::log(a0);
  for (std::size_t m = 1; m < s.size(); ++m)
    s[m] = ((m % 2 == 1) ? 1.0 : -1.0) / (static_cast<double>(m) * std::pow(a0, static_cast<double>(m)));
  return detail::apply_series(a, s);
}

/// Real power of a jet whose constant term is real and positive.
inline Jet pow(const Jet& a, double r) {
  const double a0 = detail::real_positive_constant(a, "pow");
  std::vector<cplx> s(static_cast<std::size_t>(a.order()) + 1);
  double binom = 1.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (m > 0) binom *= (r - static_cast<double>(m - 1)) / static_cast<double>(m);
    s[m] = binom * std::pow(a0, r - static_cast<double>(m));
  }
  return detail::apply_series(a, s);
}

/// Drop all coefficients above `order`.
inline Jet truncate(const Jet& a, int order) {
  a.require_valid();
  if (order < 0 || order > a.order()) throw JetError("truncation order out of range");
  Jet r = a;
  r.order_ = order;
  r.coeffs_.resize(a.table().count(order));
  return r;
}

/// Jet of d f / d x_var, one order lower. Variables 0..n-1 are z, n..2n-1 are zbar.
inline Jet differentiate(const Jet& a, int var) {
  a.require_valid();
  if (a.order() == 0) throw JetError("cannot differentiate an order-0 jet");
  if (var < 0 || var >= a.table().vars()) throw JetError("derivative variable out of range");
  Jet r = truncate(a.zero_like(), a.order() - 1);
  const auto shifts = a.table().shifts(var, a.order() - 1);
  for (std::size_t i = 0; i < shifts.size(); ++i) r.coeffs_[i] = shifts[i].factor * a.coeffs_[shifts[i].source];
  return r;
}

/// d/dz^alpha.
inline Jet d_holo(const Jet& a, int alpha) { return differentiate(a, alpha); }
/// d/dzbar^alpha.
inline Jet d_anti(const Jet& a, int alpha) { return differentiate(a, a.dim() + alpha); }

/// Truncate both operands to the lower order before combining.
inline Jet mul_trunc(const Jet& a, const Jet& b) {
  const int k = std::min(a.order(), b.order());
  return truncate(a, k) * truncate(b, k);
}
inline Jet add_trunc(const Jet& a, const Jet& b) {
  const int k = std::min(a.order(), b.order());
  return truncate(a, k) + truncate(b, k);
}

/// Jet of z -> z^index (0-based index) at `point`.
inline Jet lift_coordinate(int dim, int index, const CVec& point, int order) {
  if (index < 0 || index >= dim) throw JetError("coordinate index out of range");
  Jet j = Jet::constant(dim, order, point, point.at(static_cast<std::size_t>(index)));
  if (order >= 1) j = j.with_coefficient(MultiIndex::from_slots(dim, {index}), 1.0);
  return j;
}

/// All coordinate jets z^0..z^{n-1} at `point`.
inline std::vector<Jet> lift_coordinates(const CVec& point, int order) {
  std::vector<Jet> z;
  const int n = static_cast<int>(point.size());
  z.reserve(point.size());
  for (int a = 0; a < n; ++a) z.push_back(lift_coordinate(n, a, point, order));
  return z;
}

inline double multinomial_factorial(const MultiIndex& m) {
  double f = 1.0;
  for (int x : m.holo)
    for (int i = 2; i <= x; ++i) f *= i;
  for (int x : m.anti)
    for (int i = 2; i <= x; ++i) f *= i;
  return f;
}

/// Mixed partial d^holo dbar^anti f at the base point.
inline cplx extract_derivative(const Jet& j, const MultiIndex& m) {
  if (m.degree() > j.order()) throw JetError("derivative order exceeds jet order");
  return j.coefficient(m) * multinomial_factorial(m);
}

/// Composite jet outer(inner(z)) at the inner base point.
///
/// `outer` is a jet in m variables taken at w0 = (constant terms of inner); `inner`
/// holds the m holomorphic component jets, whose conjugates feed the zbar slots
/// of `outer`. The result has order min(outer.order(), inner order).
inline Jet compose(const Jet& outer, std::span<const Jet> inner) {
  outer.require_valid();
  const int m = outer.dim();
  if (static_cast<int>(inner.size()) != m) throw JetError("compose: inner map has wrong number of components");
  for (std::size_t i = 1; i < inner.size(); ++i) inner[0].require_compatible(inner[i]);
  for (int a = 0; a < m; ++a) {
    const cplx w0 = inner[static_cast<std::size_t>(a)].constant_term();
    const cplx b = outer.base_point()[static_cast<std::size_t>(a)];
    if (std::abs(w0 - b) > 1e-12 * (1.0 + std::abs(b)))
      throw JetError("compose: outer base point differs from inner constant terms");
  }
  const int k = std::min(outer.order(), inner[0].order());
  std::vector<Jet> delta;
  for (int a = 0; a < m; ++a) {
    Jet d = truncate(inner[static_cast<std::size_t>(a)], k);
    d.raw(0) = 0.0;
    delta.push_back(d);
  }
  for (int a = 0; a < m; ++a) delta.push_back(conj(delta[static_cast<std::size_t>(a)]));

  const auto& t = outer.table();
  std::vector<Jet> mono;
  mono.reserve(t.count(k));
  Jet result = delta[0].constant_like(outer.raw(0));
  mono.push_back(delta[0].constant_like(1.0));
  std::vector<int> e;
  for (std::size_t i = 1; i < t.count(k); ++i) {
    auto ex = t.exponents(i);
    e.assign(ex.begin(), ex.end());
    int v = 0;
    while (e[static_cast<std::size_t>(v)] == 0) ++v;
    --e[static_cast<std::size_t>(v)];
    const auto parent = static_cast<std::size_t>(t.find(e));
    mono.push_back(mono[parent] * delta[static_cast<std::size_t>(v)]);
    if (outer.raw(i) != cplx{}) result += mono.back() * outer.raw(i);
  }
  return result;
}

/// Max deviation from the bar-swap symmetry c(a,b) = conj(c(b,a)) of real-valued functions.
inline double reality_defect(const Jet& a) {
  double worst = 0.0;
  const auto& t = a.table();
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    worst = std::max(worst, std::abs(a.raw(i) - std::conj(a.raw(t.conj_index(i)))));
  return worst;
}

/// Largest |coefficient| over monomials with any antiholomorphic exponent.
inline double antiholomorphic_part(const Jet& a) {
  double worst = 0.0;
  const auto& t = a.table();
  for (std::size_t i = 0; i < a.coefficients().size(); ++i) {
    auto e = t.exponents(i);
    bool anti = false;
    for (int v = t.dim(); v < t.vars(); ++v) anti = anti || e[static_cast<std::size_t>(v)] > 0;
    if (anti) worst = std::max(worst, std::abs(a.raw(i)));
  }
  return worst;
}

/// Scalar helpers so templated formulas work with T = cplx and T = Jet alike.
inline cplx constant_of(const cplx& x) { return x; }
inline cplx constant_of(const Jet& x) { return x.constant_term(); }
inline cplx one_like(const cplx&) { return 1.0; }
inline Jet one_like(const Jet& x) { return x.constant_like(1.0); }
inline cplx zero_like(const cplx&) { return 0.0; }
inline Jet zero_like(const Jet& x) { return x.zero_like(); }

}  // namespace kescale
