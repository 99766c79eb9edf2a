#pragma once

/// \file domains.hpp
/// Catalog of domains with closed-form Kahler-Einstein data: the unit ball, the
/// polydisc, the upper half-plane / Siegel domain, and the ball carrying the
/// constant-norm potential pulled back from the Siegel domain by the Cayley map.
///
/// Siegel coordinates put w first: (w, z'_1, ..., z'_{n-1}), domain Im w > |z'|^2.

#include <kescale/error.hpp>
#include <kescale/jet.hpp>
#include <kescale/kahler.hpp>
#include <kescale/linalg.hpp>
#include <kescale/random.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace kescale {

/// Real-valued function of the coordinate jets (z^a); conj() of an input supplies zbar^a.
using JetFn = std::function<Jet(std::span<const Jet>)>;

/// Holomorphic map C^n -> C^n available both pointwise and on jets, with its
/// holomorphic Jacobian determinant in closed form.
struct HoloMap {
  int dim = 0;
  std::function<CVec(const CVec&)> eval;
  std::function<std::vector<Jet>(std::span<const Jet>)> eval_jet;
  std::function<cplx(const CVec&)> jacobian;
  std::function<Jet(std::span<const Jet>)> jacobian_jet;

  CVec operator()(const CVec& z) const { return eval(z); }
};

/// Build a HoloMap from generic callables `map(span<const T>) -> vector<T>` and
/// `jac(span<const T>) -> T`, instantiated for T = cplx and T = Jet.
template <class Map, class Jac>
HoloMap make_holo_map(int dim, Map map, Jac jac) {
  HoloMap f;
  f.dim = dim;
  f.eval = [map](const CVec& z) -> CVec { return map(std::span<const cplx>(z)); };
  f.eval_jet = [map](std::span<const Jet> z) -> std::vector<Jet> { return map(z); };
  f.jacobian = [jac](const CVec& z) -> cplx { return jac(std::span<const cplx>(z)); };
  f.jacobian_jet = [jac](std::span<const Jet> z) -> Jet { return jac(z); };
  return f;
}

struct Automorphism {
  HoloMap forward;
  HoloMap inverse;
  std::string family;
  std::vector<double> params;
};

namespace detail {

template <class S>
using elem_t = std::remove_cvref_t<decltype(std::declval<S>()[0])>;

template <class T>
T ipow(const T& x, int k) {
  T r = one_like(x);
  for (int i = 0; i < k; ++i) r = r * x;
  return r;
}

/// 1 - |a|^2 with the dominant square split exactly, so points near the sphere keep
/// their relative accuracy.
inline double one_minus_norm_sq(const CVec& a) {
  std::vector<double> parts;
  for (const auto& x : a) {
    for (double v : {x.real(), x.imag()}) parts.push_back(v);
  }
  std::sort(parts.begin(), parts.end(), [](double x, double y) { return std::abs(x) > std::abs(y); });
  double acc = 1.0;
  double err = 0.0;
  for (double v : parts) {
    const double p = v * v;
    err += std::fma(v, v, -p);
    acc -= p;
  }
  return acc - err;
}

inline double norm_sq(const CVec& z) {
  double s = 0.0;
  for (const auto& x : z) s += std::norm(x);
  return s;
}

inline int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<bool> seen(p.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

}  // namespace detail

inline HoloMap identity_map(int n) {
  return make_holo_map(
      n, [](auto z) { return std::vector<detail::elem_t<decltype(z)>>(z.begin(), z.end()); },
      [](auto z) { return one_like(z[0]); });
}

/// f o g.
inline HoloMap compose(const HoloMap& f, const HoloMap& g) {
  HoloMap h;
  h.dim = g.dim;
  h.eval = [f, g](const CVec& z) { return f.eval(g.eval(z)); };
  h.eval_jet = [f, g](std::span<const Jet> z) { return f.eval_jet(g.eval_jet(z)); };
  h.jacobian = [f, g](const CVec& z) { return f.jacobian(g.eval(z)) * g.jacobian(z); };
  h.jacobian_jet = [f, g](std::span<const Jet> z) { return f.jacobian_jet(g.eval_jet(z)) * g.jacobian_jet(z); };
  return h;
}

/// Holomorphic derivative matrix d f^a / d z^b at z, from order-1 jets.
inline CMatrix differential(const HoloMap& f, const CVec& z) {
  const auto w = f.eval_jet(lift_coordinates(z, 1));
  const int n = static_cast<int>(z.size());
  CMatrix d(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) d(a, b) = extract_derivative(w[static_cast<std::size_t>(a)], MultiIndex::from_slots(n, {b}));
  return d;
}

/// Jacobian determinant computed from jets, independent of the closed form.
inline cplx jacobian_from_jets(const HoloMap& f, const CVec& z) { return determinant(differential(f, z)); }

// ---------------------------------------------------------------------------
// Unit ball
// ---------------------------------------------------------------------------

namespace ball {

/// phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z,a>), s_a = sqrt(1 - |a|^2).
/// phi_a(0) = a, phi_a(a) = 0 and phi_a o phi_a = id.
inline HoloMap mobius(const CVec& a) {
  const int n = static_cast<int>(a.size());
  const double aa = detail::norm_sq(a);
  if (!(aa < 1.0)) throw DomainError("Mobius center must lie in the open ball");
  const double one_minus = detail::one_minus_norm_sq(a);
  const double s = std::sqrt(one_minus);
  const cplx jac_const = ((n % 2 == 0) ? 1.0 : -1.0) * std::pow(one_minus, 0.5 * (n + 1));
  auto inner = [a](auto z) {
    auto acc = z[0] * std::conj(a[0]);
    for (std::size_t i = 1; i < a.size(); ++i) acc = acc + z[i] * std::conj(a[i]);
    return acc;
  };
  auto map = [a, aa, s, inner](auto z) {
    using T = detail::elem_t<decltype(z)>;
    std::vector<T> out;
    if (aa == 0.0) {
      for (const auto& x : z) out.push_back(-x);
      return out;
    }
    const T az = inner(z);
    const T den = 1.0 - az;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const T pz = az * (a[i] / aa);
      out.push_back((a[i] - pz - s * (z[i] - pz)) / den);
    }
    return out;
  };
  auto jac = [n, jac_const, inner](auto z) { return jac_const / detail::ipow(1.0 - inner(z), n + 1); };
  return make_holo_map(n, map, jac);
}

inline HoloMap unitary(const CMatrix& u) {
  const int n = u.size();
  const cplx det = determinant(u);
  auto map = [u, n](auto z) {
    using T = detail::elem_t<decltype(z)>;
    std::vector<T> out;
    for (int i = 0; i < n; ++i) {
      T acc = z[0] * u(i, 0);
      for (int j = 1; j < n; ++j) acc = acc + z[static_cast<std::size_t>(j)] * u(i, j);
      out.push_back(acc);
    }
    return out;
  };
  auto jac = [det](auto z) { return one_like(z[0]) * det; };
  return make_holo_map(n, map, jac);
}

/// f = U o phi_a, inverse phi_a o U^*.
inline Automorphism automorphism(const CVec& a, const CMatrix& u) {
  const HoloMap m = mobius(a);
  Automorphism f{compose(unitary(u), m), compose(m, unitary(adjoint(u))), "ball-mobius", {}};
  for (const auto& x : a) {
    f.params.push_back(x.real());
    f.params.push_back(x.imag());
  }
  return f;
}

}  // namespace ball

/// Haar-like random unitary by Gram-Schmidt on a complex Gaussian matrix.
inline CMatrix random_unitary(int n, Rng& rng) {
  CMatrix q(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = rng.complex_normal();
  for (int c = 0; c < n; ++c) {
    for (int p = 0; p < c; ++p) {
      cplx dot = 0.0;
      for (int r = 0; r < n; ++r) dot += std::conj(q(r, p)) * q(r, c);
      for (int r = 0; r < n; ++r) q(r, c) -= dot * q(r, p);
    }
    double nrm = 0.0;
    for (int r = 0; r < n; ++r) nrm += std::norm(q(r, c));
    nrm = std::sqrt(nrm);
    for (int r = 0; r < n; ++r) q(r, c) /= nrm;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Polydisc
// ---------------------------------------------------------------------------

namespace polydisc {

/// Disc Mobius factors with phases followed by a coordinate permutation:
/// w_i = e^{i theta_j} phi_{a_j}(z_j), j = perm[i].
inline Automorphism automorphism(const CVec& a, const std::vector<double>& theta, const std::vector<int>& perm) {
  const int n = static_cast<int>(a.size());
  for (const auto& x : a)
    if (!(std::norm(x) < 1.0)) throw DomainError("disc Mobius center must lie in the unit disc");
  std::vector<double> om(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) om[i] = detail::one_minus_norm_sq({a[i]});
  const int sign = detail::permutation_sign(perm);
  auto phase = [](double t) { return std::polar(1.0, t); };

  auto fwd = [=](auto z) {
    using T = detail::elem_t<decltype(z)>;
    std::vector<T> out;
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
      out.push_back(phase(theta[j]) * (a[j] - z[j]) / (1.0 - std::conj(a[j]) * z[j]));
    }
    return out;
  };
  auto fwd_jac = [=](auto z) {
    auto acc = one_like(z[0]) * static_cast<double>(sign);
    for (std::size_t j = 0; j < a.size(); ++j) {
      const auto den = 1.0 - std::conj(a[j]) * z[j];
      acc = acc * (-om[j] * phase(theta[j])) / (den * den);
    }
    return acc;
  };
  auto inv = [=](auto w) {
    using T = detail::elem_t<decltype(w)>;
    std::vector<T> out(a.size(), zero_like(w[0]));
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
      const T u = w[static_cast<std::size_t>(i)] * phase(-theta[j]);
      out[j] = (a[j] - u) / (1.0 - std::conj(a[j]) * u);
    }
    return out;
  };
  auto inv_jac = [=](auto w) {
    auto acc = one_like(w[0]) * static_cast<double>(sign);
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
      const auto u = w[static_cast<std::size_t>(i)] * phase(-theta[j]);
      const auto den = 1.0 - std::conj(a[j]) * u;
      acc = acc * (-om[j] * phase(-theta[j])) / (den * den);
    }
    return acc;
  };
  Automorphism f{make_holo_map(n, fwd, fwd_jac), make_holo_map(n, inv, inv_jac), "polydisc-mobius", {}};
  for (std::size_t i = 0; i < a.size(); ++i) {
    f.params.insert(f.params.end(), {a[i].real(), a[i].imag(), theta[i], static_cast<double>(perm[i])});
  }
  return f;
}

}  // namespace polydisc

// ---------------------------------------------------------------------------
// Siegel domain and Cayley map
// ---------------------------------------------------------------------------

namespace siegel {

/// (w, z') -> (delta^2 (w + s + 2i<Uz', b> + i|b|^2), delta (Uz' + b)): translations,
/// Heisenberg translations, dilations and unitary rotations of z'.
inline Automorphism automorphism(int n, double delta, double s, const CVec& b, const CMatrix& u) {
  if (!(delta > 0.0)) throw DomainError("Siegel dilation factor must be positive");
  const int m = n - 1;
  if (static_cast<int>(b.size()) != m || (m > 0 && u.size() != m)) throw DomainError("Siegel automorphism shape mismatch");
  const double bb = detail::norm_sq(b);
  const cplx det_u = m > 0 ? determinant(u) : cplx(1.0);
  const CMatrix uh = m > 0 ? adjoint(u) : CMatrix();
  const cplx I(0.0, 1.0);
  const double d2 = delta * delta;

  auto rotate = [m](const CMatrix& mat, auto zp) {
    using T = detail::elem_t<decltype(zp)>;
    std::vector<T> out;
    for (int i = 0; i < m; ++i) {
      T acc = zp[0] * mat(i, 0);
      for (int j = 1; j < m; ++j) acc = acc + zp[static_cast<std::size_t>(j)] * mat(i, j);
      out.push_back(acc);
    }
    return out;
  };
  auto fwd = [=](auto z) {
    using T = detail::elem_t<decltype(z)>;
    std::vector<T> zp(z.begin() + 1, z.end());
    const std::vector<T> r = m > 0 ? rotate(u, std::span<const T>(zp)) : std::vector<T>{};
    T w = z[0] + (s + I * bb);
    for (int j = 0; j < m; ++j) w = w + 2.0 * I * r[static_cast<std::size_t>(j)] * std::conj(b[static_cast<std::size_t>(j)]);
    std::vector<T> out{w * d2};
    for (int j = 0; j < m; ++j) out.push_back((r[static_cast<std::size_t>(j)] + b[static_cast<std::size_t>(j)]) * delta);
    return out;
  };
  auto inv = [=](auto z) {
    using T = detail::elem_t<decltype(z)>;
    std::vector<T> r;
    for (int j = 0; j < m; ++j) r.push_back(z[static_cast<std::size_t>(j + 1)] / delta - b[static_cast<std::size_t>(j)]);
    T w = z[0] / d2 - (s + I * bb);
    for (int j = 0; j < m; ++j) w = w - 2.0 * I * r[static_cast<std::size_t>(j)] * std::conj(b[static_cast<std::size_t>(j)]);
    std::vector<T> out{w};
    if (m > 0) {
      const auto zp = rotate(uh, std::span<const T>(r));
      out.insert(out.end(), zp.begin(), zp.end());
    }
    return out;
  };
  const cplx jf = std::pow(delta, n + 1) * det_u;
  auto fwd_jac = [jf](auto z) { return one_like(z[0]) * jf; };
  auto inv_jac = [jf](auto z) { return one_like(z[0]) / jf; };
  Automorphism f{make_holo_map(n, fwd, fwd_jac), make_holo_map(n, inv, inv_jac), "siegel-affine", {delta, s}};
  for (const auto& x : b) f.params.insert(f.params.end(), {x.real(), x.imag()});
  return f;
}

inline Automorphism translation(int n, double s) {
  return automorphism(n, 1.0, s, CVec(static_cast<std::size_t>(n - 1)), n > 1 ? identity_matrix(n - 1) : CMatrix());
}

/// Defining function Im w - |z'|^2.
inline double height(const CVec& z) {
  double r = z[0].imag();
  for (std::size_t j = 1; j < z.size(); ++j) r -= std::norm(z[j]);
  return r;
}

}  // namespace siegel

namespace cayley {

/// Ball -> Siegel: w = i(1+z_1)/(1-z_1), z'_j = z_{j+1}/(1-z_1). J = 2i/(1-z_1)^{n+1}.
inline HoloMap to_siegel(int n) {
  const cplx I(0.0, 1.0);
  auto map = [I](auto z) {
    using T = detail::elem_t<decltype(z)>;
    const T den = 1.0 - z[0];
    std::vector<T> out{I * (1.0 + z[0]) / den};
    for (std::size_t j = 1; j < z.size(); ++j) out.push_back(z[j] / den);
    return out;
  };
  auto jac = [I, n](auto z) { return (2.0 * I) / detail::ipow(1.0 - z[0], n + 1); };
  return make_holo_map(n, map, jac);
}

/// Siegel -> ball: z_1 = (w - i)/(w + i), z_{j+1} = 2i z'_j/(w + i).
inline HoloMap from_siegel(int n) {
  const cplx I(0.0, 1.0);
  auto map = [I](auto w) {
    using T = detail::elem_t<decltype(w)>;
    const T den = w[0] + I;
    std::vector<T> out{(w[0] - I) / den};
    for (std::size_t j = 1; j < w.size(); ++j) out.push_back(2.0 * I * w[j] / den);
    return out;
  };
  auto jac = [I, n](auto w) { return std::pow(2.0 * I, n) / detail::ipow(w[0] + I, n + 1); };
  return make_holo_map(n, map, jac);
}

}  // namespace cayley

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

namespace potentials {

namespace detail {
inline Jet sum_norm_sq(std::span<const Jet> z, std::size_t from = 0) {
  Jet s = z[0].zero_like();
  for (std::size_t i = from; i < z.size(); ++i) s += z[i] * conj(z[i]);
  return s;
}
}  // namespace detail

/// -(n+1) log(1 - |z|^2) = log psi of the ball.
inline JetFn ball_log_psi(int n) {
  return [n](std::span<const Jet> z) { return -static_cast<double>(n + 1) * log(1.0 - detail::sum_norm_sq(z)); };
}

/// log det of the product metric with factors (2/(n+1)) / (1 - |z_i|^2)^2.
inline JetFn polydisc_log_psi(int n) {
  const double c = 2.0 / (n + 1);
  return [n, c](std::span<const Jet> z) {
    Jet acc = z[0].constant_like(n * std::log(c));
    for (const auto& x : z) acc -= 2.0 * log(1.0 - x * conj(x));
    return acc;
  };
}

/// -(n+1) log(Im w - |z'|^2) - log 4, equal to log det of its own metric.
inline JetFn siegel_log_psi(int n) {
  return [n](std::span<const Jet> z) {
    Jet r = (z[0] - conj(z[0])) * cplx(0.0, -0.5);
    if (z.size() > 1) r -= detail::sum_norm_sq(z, 1);
    return -static_cast<double>(n + 1) * log(r) - std::log(4.0);
  };
}

}  // namespace potentials

enum class PullbackKind {
  /// Phi o F + log |J_F|^2: pulls back the volume density, so log psi maps to log psi.
  Volume,
  /// Phi o F: pulls back the potential of F^* omega, preserving |dPhi|.
  Potential,
};

/// Pull a potential on the target of F back to its source.
inline JetFn pullback_potential(JetFn phi, HoloMap f, PullbackKind kind) {
  return [phi = std::move(phi), f = std::move(f), kind](std::span<const Jet> z) {
    Jet v = phi(f.eval_jet(z));
    if (kind == PullbackKind::Volume) {
      const Jet jac = f.jacobian_jet(z);
      if (std::abs(jac.constant_term()) == 0.0) throw DomainError("Jacobian of the pullback map vanishes");
      v += log(jac * conj(jac));
    }
    return v;
  };
}

/// Same value as pullback_potential(..., Potential) but via Taylor-polynomial
/// composition of the target jet with F's component jets.
inline Jet pullback_by_composition(const JetFn& phi, const HoloMap& f, const CVec& z, int order) {
  const auto inner = f.eval_jet(lift_coordinates(z, order));
  CVec w;
  for (const auto& j : inner) w.push_back(j.constant_term());
  return compose(phi(lift_coordinates(w, order)), inner);
}

inline PotentialJet potential_at(const JetFn& phi, const CVec& z, int order, double lambda) {
  return {phi(lift_coordinates(z, order)), lambda};
}

/// Value of a scalar JetFn at a point.
inline double value_at(const JetFn& phi, const CVec& z) { return phi(lift_coordinates(z, 0)).constant_term().real(); }

// ---------------------------------------------------------------------------
// Bergman kernels
// ---------------------------------------------------------------------------

enum class BergmanDomain { Ball, Polydisc };

/// K(z, z): n!/(pi^n (1-|z|^2)^{n+1}) on the ball, prod 1/(pi (1-|z_i|^2)^2) on the polydisc.
inline double bergman_kernel(BergmanDomain d, const CVec& z) {
  const int n = static_cast<int>(z.size());
  if (d == BergmanDomain::Ball) {
    const double r = detail::norm_sq(z);
    if (!(r < 1.0)) throw DomainError("Bergman kernel evaluated outside the ball");
    return std::tgamma(n + 1.0) / (std::pow(std::numbers::pi, n) * std::pow(1.0 - r, n + 1));
  }
  double k = 1.0;
  for (const auto& x : z) {
    const double r = std::norm(x);
    if (!(r < 1.0)) throw DomainError("Bergman kernel evaluated outside the polydisc");
    k /= std::numbers::pi * (1.0 - r) * (1.0 - r);
  }
  return k;
}

inline JetFn bergman_log_kernel(BergmanDomain d, int n) {
  if (d == BergmanDomain::Ball) {
    const double c = std::log(std::tgamma(n + 1.0)) - n * std::log(std::numbers::pi);
    return [n, c](std::span<const Jet> z) {
      return c - static_cast<double>(n + 1) * log(1.0 - potentials::detail::sum_norm_sq(z));
    };
  }
  return [n](std::span<const Jet> z) {
    Jet acc = z[0].constant_like(-n * std::log(std::numbers::pi));
    for (const auto& x : z) acc -= 2.0 * log(1.0 - x * conj(x));
    return acc;
  };
}

// ---------------------------------------------------------------------------
// Domain models
// ---------------------------------------------------------------------------

struct DomainModel {
  std::string name;
  int dim = 0;
  bool bounded = true;
  std::function<bool(const CVec&)> contains;
  /// Canonical potential log psi, psi = det h; dd^c log psi = (n+1) omega.
  JetFn log_psi;
  /// Potential with constant |dPhi| when the model has one; empty otherwise.
  JetFn field_potential;
  std::function<Automorphism(Rng&)> random_automorphism;
  /// Geodesic distance of ds^2 = h_{a bbar} dz^a dzbar^b; empty when not available.
  std::function<double(const CVec&, const CVec&)> distance;
  std::function<double(const CVec&)> boundary_distance;
  /// Standard interior sample.
  std::function<CVec(Rng&)> sample;
  std::optional<BergmanDomain> bergman;

  double lambda() const { return dim + 1.0; }
  double psi(const CVec& z) const { return std::exp(value_at(log_psi, z)); }
  PotentialJet canonical_potential(const CVec& z, int order = kMaxJetOrder) const {
    return potential_at(log_psi, z, order, lambda());
  }
  void require_interior(const CVec& z) const {
    if (static_cast<int>(z.size()) != dim) throw DomainError(name + ": point has wrong dimension");
    if (!contains(z)) throw DomainError(name + ": point is not interior");
  }
};

inline double ball_distance(const CVec& p, const CVec& q) {
  if (detail::norm_sq(p) == 0.0) return std::atanh(std::sqrt(detail::norm_sq(q)));
  return std::atanh(std::sqrt(detail::norm_sq(ball::mobius(p)(q))));
}

inline DomainModel ball_model(int n) {
  if (n < 1) throw DomainError("dimension must be >= 1");
  DomainModel d;
  d.name = "ball";
  d.dim = n;
  d.contains = [](const CVec& z) { return detail::norm_sq(z) < 1.0; };
  d.log_psi = potentials::ball_log_psi(n);
  d.random_automorphism = [n](Rng& rng) { return ball::automorphism(rng.in_ball(n, 0.9), random_unitary(n, rng)); };
  d.distance = ball_distance;
  d.boundary_distance = [](const CVec& z) { return 1.0 - std::sqrt(detail::norm_sq(z)); };
  d.sample = [n](Rng& rng) { return rng.in_ball(n, 0.9); };
  d.bergman = BergmanDomain::Ball;
  return d;
}

inline DomainModel polydisc_model(int n) {
  if (n < 1) throw DomainError("dimension must be >= 1");
  DomainModel d;
  d.name = "polydisc";
  d.dim = n;
  d.contains = [](const CVec& z) {
    return std::all_of(z.begin(), z.end(), [](const cplx& x) { return std::norm(x) < 1.0; });
  };
  d.log_psi = potentials::polydisc_log_psi(n);
  d.random_automorphism = [n](Rng& rng) {
    CVec a;
    std::vector<double> theta;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < n; ++i) {
      a.push_back(rng.in_ball(1, 0.9)[0]);
      theta.push_back(rng.uniform(-std::numbers::pi, std::numbers::pi));
    }
    for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform() * (i + 1))]);
    return polydisc::automorphism(a, theta, perm);
  };
  d.boundary_distance = [](const CVec& z) {
    double m = 1.0;
    for (const auto& x : z) m = std::min(m, 1.0 - std::abs(x));
    return m;
  };
  d.sample = [n](Rng& rng) {
    CVec z;
    for (int i = 0; i < n; ++i) z.push_back(rng.in_ball(1, 0.9)[0]);
    return z;
  };
  d.bergman = BergmanDomain::Polydisc;
  return d;
}

/// Upper half-plane for n = 1, Siegel domain Im w > |z'|^2 for n >= 2.
inline DomainModel halfplane_siegel_model(int n) {
  if (n < 1) throw DomainError("dimension must be >= 1");
  DomainModel d;
  d.name = n == 1 ? "halfplane" : "siegel";
  d.dim = n;
  d.bounded = false;
  d.contains = [](const CVec& z) { return siegel::height(z) > 0.0; };
  d.log_psi = potentials::siegel_log_psi(n);
  d.field_potential = d.log_psi;
  d.random_automorphism = [n](Rng& rng) {
    const double delta = std::exp(rng.uniform(-0.5, 0.5));
    const double s = rng.uniform(-2.0, 2.0);
    CVec b = n > 1 ? rng.in_ball(n - 1, 0.5) : CVec{};
    CMatrix u = n > 1 ? random_unitary(n - 1, rng) : CMatrix();
    return siegel::automorphism(n, delta, s, b, u);
  };
  const HoloMap to_ball = cayley::from_siegel(n);
  d.distance = [to_ball](const CVec& p, const CVec& q) { return ball_distance(to_ball(p), to_ball(q)); };
  d.boundary_distance = [](const CVec& z) {
    double zz = 0.0;
    for (std::size_t j = 1; j < z.size(); ++j) zz += std::norm(z[j]);
    return siegel::height(z) / std::sqrt(1.0 + 4.0 * zz);
  };
  d.sample = [n](Rng& rng) {
    CVec zp = n > 1 ? rng.in_ball(n - 1, 1.0) : CVec{};
    const double r = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    const double x = rng.uniform(-2.0, 2.0);
    double zz = 0.0;
    for (const auto& v : zp) zz += std::norm(v);
    CVec z{cplx(x, r + zz)};
    z.insert(z.end(), zp.begin(), zp.end());
    return z;
  };
  return d;
}

/// The ball with its KE metric and the constant-norm potential log psi_Siegel o Cayley.
inline DomainModel ball_cayley_model(int n) {
  DomainModel d = ball_model(n);
  d.name = "ball-cayley";
  d.field_potential = pullback_potential(potentials::siegel_log_psi(n), cayley::to_siegel(n), PullbackKind::Potential);
  return d;
}

/// Deterministic interior sample set: the model's standard sampler driven by a seeded Rng.
inline std::vector<CVec> interior_samples(const DomainModel& d, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CVec> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pts.push_back(d.sample(rng));
  return pts;
}

/// Seeded points of the Euclidean ball of the given radius, the center first.
inline std::vector<CVec> ball_grid(int n, double radius, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CVec> pts{CVec(static_cast<std::size_t>(n))};
  while (static_cast<int>(pts.size()) < count) pts.push_back(rng.in_ball(n, radius));
  return pts;
}

inline std::vector<std::string> domain_names() { return {"ball", "polydisc", "halfplane", "siegel", "ball-cayley"}; }

/// Catalog lookup. "halfplane" is always one-dimensional.
inline DomainModel make_domain(const std::string& name, int n) {
  if (name == "ball") return ball_model(n);
  if (name == "polydisc") return polydisc_model(n);
  if (name == "halfplane") return halfplane_siegel_model(1);
  if (name == "siegel") return halfplane_siegel_model(n);
  if (name == "ball-cayley") return ball_cayley_model(n);
  throw DomainError("unknown domain '" + name + "'");
}

}  // namespace kescale
