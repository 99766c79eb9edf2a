#pragma once

/// \file kahler.hpp
/// Kahler tensor package of a potential jet: metric, inverse, volume density,
/// Chern connection, curvature, Ricci form and covariant derivatives of the potential.
///
/// Conventions. omega = i h_{a bbar} dz^a ^ dzbar^b with dd^c = i d dbar, so a
/// potential with dd^c Phi = lambda * omega has h_{a bbar} = Phi_{a bbar} / lambda.
/// h_inv(a, b) stores h^{a bbar}, normalised by h^{a bbar} h_{c bbar} = delta^a_c.
/// theta(a, b, c) = Gamma^a_{bc} = (d_c h_{b sbar}) h^{sbar a};
/// curvature(a, b, l, m) = R_a^b_{l mbar} = -d_mbar Gamma^b_{al};
/// curvature_lowered(a, b, l, m) = R_{a bbar l mbar};  ricci = -d dbar log psi.

#include <kescale/error.hpp>
#include <kescale/jet.hpp>
#include <kescale/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace kescale {

/// Dense complex tensor with every index in [0, n).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int rank) : n_(n), rank_(rank), d_(static_cast<std::size_t>(std::pow(n, rank)), cplx{}) {}

  template <class... I>
  cplx& operator()(I... idx) {
    return d_[flat(static_cast<int>(idx)...)];
  }
  template <class... I>
  const cplx& operator()(I... idx) const {
    return d_[flat(static_cast<int>(idx)...)];
  }
  int dim() const { return n_; }
  int rank() const { return rank_; }
  bool empty() const { return d_.empty(); }

 private:
  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }
  int n_ = 0;
  int rank_ = 0;
  std::vector<cplx> d_;
};

struct PotentialJet {
  Jet phi;
  double lambda = 0.0;
};

struct MetricJet {
  int n = 0;
  int order = 0;
  double lambda = 0.0;
  CMatrix h;
  CMatrix h_inv;
  double psi = 0.0;
  bool has_connection = false;  // order >= 3
  bool has_curvature = false;   // order >= 4
  Tensor dh;                    // (c, a, b): d_c h_{a bbar}
  Tensor dh_bar;                // (c, a, b): d_cbar h_{a bbar}
  Tensor theta;                 // (a, b, c): Gamma^a_{bc}
  Tensor curvature;             // (a, b, l, m): R_a^b_{l mbar}
  Tensor curvature_lowered;     // (a, b, l, m): R_{a bbar l mbar}
  CMatrix ricci;

  // Jet-valued intermediates reused by covariant_derivatives.
  JetMatrix h_jet;
  JetMatrix h_inv_jet;
  std::vector<Jet> gamma_jet;  // flattened (a, b, c)

  const Jet& gamma(int a, int b, int c) const {
    return gamma_jet[static_cast<std::size_t>((a * n + b) * n + c)];
  }
};

struct CovariantDerivs {
  int n = 0;
  bool has_third = false;
  CVec phi1;           // Phi_a
  CVec phi1_up;        // Phi^a = h^{a bbar} Phi_bbar
  CMatrix phi2;        // Phi_{ab}
  CMatrix phi2_mixed;  // Phi_{a bbar}
  Tensor phi3;         // (a, b, c): Phi_{abc}
  Tensor phi3_mixed;   // (a, l, m): Phi_{a l mbar}
  std::vector<Jet> phi2_jet;  // flattened (a, b), order k-3
};

struct IdentityResiduals {
  double id1 = 0.0;
  double id2 = 0.0;
  double curv = 0.0;
};

namespace detail {

inline Tensor constants3(int n, const std::vector<Jet>& j) {
  Tensor t(n, 3);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) t(a, b, c) = j[static_cast<std::size_t>((a * n + b) * n + c)].constant_term();
  return t;
}

}  // namespace detail

/// Metric package at the potential's base point. Fields needing more derivatives than
/// available stay empty (see has_connection / has_curvature).
inline MetricJet metric_from_potential(const PotentialJet& p) {
  const Jet& phi = p.phi;
  phi.require_valid();
  const int n = phi.dim();
  const int k = phi.order();
  if (k < 2) throw JetError("metric needs a potential jet of order >= 2");
  if (!(p.lambda != 0.0)) throw MetricError("potential normalisation lambda must be nonzero");

  MetricJet m;
  m.n = n;
  m.order = k;
  m.lambda = p.lambda;
  m.h_jet = JetMatrix(n);
  std::vector<Jet> dphi;
  for (int a = 0; a < n; ++a) dphi.push_back(d_holo(phi, a));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m.h_jet(a, b) = d_anti(dphi[static_cast<std::size_t>(a)], b) / p.lambda;
  m.h = values(m.h_jet);

  for (int i = 0; i < n; ++i)
    if (std::abs(m.h(i, i).imag()) > 1e-9 * (1.0 + std::abs(m.h(i, i))))
      throw MetricError("complex Hessian is not Hermitian; potential is not real-valued");
  for (double minor : leading_minors(m.h))
    if (!(minor > 1e-12)) throw MetricError("complex Hessian is not positive definite at the base point");

  m.h_inv_jet = inverse(m.h_jet).transpose();
  m.h_inv = values(m.h_inv_jet);
  m.psi = determinant(m.h).real();

  if (k >= 3) {
    m.has_connection = true;
    m.dh = Tensor(n, 3);
    m.dh_bar = Tensor(n, 3);
    std::vector<Jet> dh_jet(static_cast<std::size_t>(n * n * n));
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Jet d = d_holo(m.h_jet(a, b), c);
          m.dh(c, a, b) = d.constant_term();
          m.dh_bar(c, a, b) = d_anti(m.h_jet(a, b), c).constant_term();
          dh_jet[static_cast<std::size_t>((c * n + a) * n + b)] = std::move(d);
        }
    m.gamma_jet.resize(static_cast<std::size_t>(n * n * n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          Jet acc = mul_trunc(dh_jet[static_cast<std::size_t>((c * n + b) * n + 0)], m.h_inv_jet(a, 0));
          for (int s = 1; s < n; ++s)
            acc += mul_trunc(dh_jet[static_cast<std::size_t>((c * n + b) * n + s)], m.h_inv_jet(a, s));
          m.gamma_jet[static_cast<std::size_t>((a * n + b) * n + c)] = std::move(acc);
        }
    m.theta = detail::constants3(n, m.gamma_jet);
  }

  if (k >= 4) {
    m.has_curvature = true;
    m.curvature = Tensor(n, 4);
    m.curvature_lowered = Tensor(n, 4);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int l = 0; l < n; ++l)
          for (int mu = 0; mu < n; ++mu) m.curvature(a, b, l, mu) = -d_anti(m.gamma(b, a, l), mu).constant_term();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int l = 0; l < n; ++l)
          for (int mu = 0; mu < n; ++mu) {
            cplx s = 0.0;
            for (int g = 0; g < n; ++g) s += m.curvature(a, g, l, mu) * m.h(g, b);
            m.curvature_lowered(a, b, l, mu) = s;
          }
    const Jet log_psi = log(determinant(m.h_jet));
    m.ricci = CMatrix(n, 0.0);
    for (int l = 0; l < n; ++l) {
      const Jet dl = d_holo(log_psi, l);
      for (int mu = 0; mu < n; ++mu) m.ricci(l, mu) = -d_anti(dl, mu).constant_term();
    }
  }
  return m;
}

/// |dPhi|^2 = Phi_a Phi_bbar h^{a bbar}.
inline double grad_norm_sq(const PotentialJet& p, const MetricJet& m) {
  const int n = m.n;
  cplx s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      s += m.h_inv(a, b) * extract_derivative(p.phi, MultiIndex::from_slots(n, {a})) *
           extract_derivative(p.phi, MultiIndex::from_slots(n, {}, {b}));
  return s.real();
}

/// max |R_{a bbar} + (n+1) h_{a bbar}|.
inline double einstein_residual(const MetricJet& m) {
  if (!m.has_curvature) throw JetError("Einstein residual needs an order-4 potential jet");
  double w = 0.0;
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b) w = std::max(w, std::abs(m.ricci(a, b) + static_cast<double>(m.n + 1) * m.h(a, b)));
  return w;
}

/// max |d h_{a bbar} - theta_a^c h_{c bbar} - theta_bbar^cbar h_{cbar a}| over both form types.
inline double metric_compatibility_residual(const MetricJet& m) {
  if (!m.has_connection) throw JetError("connection needs an order-3 potential jet");
  const int n = m.n;
  double w = 0.0;
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        cplx holo = 0.0, anti = 0.0;
        for (int c = 0; c < n; ++c) {
          holo += m.theta(c, a, l) * m.h(c, b);
          anti += std::conj(m.theta(c, b, l)) * m.h(a, c);
        }
        w = std::max({w, std::abs(m.dh(l, a, b) - holo), std::abs(m.dh_bar(l, a, b) - anti)});
      }
  return w;
}

/// max |Gamma^a_{bc} - Gamma^a_{cb}|.
inline double torsion_residual(const MetricJet& m) {
  if (!m.has_connection) throw JetError("connection needs an order-3 potential jet");
  double w = 0.0;
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b)
      for (int c = 0; c < m.n; ++c) w = std::max(w, std::abs(m.theta(a, b, c) - m.theta(a, c, b)));
  return w;
}

/// max |R_{a bbar l mbar} - conj(R_{b abar m lbar})|.
inline double curvature_symmetry_residual(const MetricJet& m) {
  if (!m.has_curvature) throw JetError("curvature needs an order-4 potential jet");
  double w = 0.0;
  const int n = m.n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int l = 0; l < n; ++l)
        for (int mu = 0; mu < n; ++mu)
          w = std::max(w, std::abs(m.curvature_lowered(a, b, l, mu) - std::conj(m.curvature_lowered(b, a, mu, l))));
  return w;
}

/// max |R_{a bbar l mbar} h^{l mbar} - R_{a bbar}|.
inline double ricci_contraction_residual(const MetricJet& m) {
  if (!m.has_curvature) throw JetError("curvature needs an order-4 potential jet");
  double w = 0.0;
  const int n = m.n;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cplx s = 0.0;
      for (int l = 0; l < n; ++l)
        for (int mu = 0; mu < n; ++mu) s += m.curvature_lowered(a, b, l, mu) * m.h_inv(l, mu);
      w = std::max(w, std::abs(s - m.ricci(a, b)));
    }
  return w;
}

/// Covariant derivatives of Phi up to third order. Second-order fields need an order-3
/// jet; the two third-order tensors need order 4 because they involve d Gamma.
inline CovariantDerivs covariant_derivatives(const PotentialJet& p, const MetricJet& m) {
  const Jet& phi = p.phi;
  const int n = m.n;
  const int k = phi.order();
  if (k < 3 || !m.has_connection) throw JetError("covariant derivatives need an order >= 3 potential jet");

  CovariantDerivs c;
  c.n = n;
  std::vector<Jet> d1, d1bar;
  for (int a = 0; a < n; ++a) {
    d1.push_back(d_holo(phi, a));
    d1bar.push_back(d_anti(phi, a));
  }
  c.phi1.resize(static_cast<std::size_t>(n));
  c.phi1_up.assign(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a) c.phi1[static_cast<std::size_t>(a)] = d1[static_cast<std::size_t>(a)].constant_term();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      c.phi1_up[static_cast<std::size_t>(a)] += m.h_inv(a, b) * d1bar[static_cast<std::size_t>(b)].constant_term();

  c.phi2 = CMatrix(n, 0.0);
  c.phi2_mixed = CMatrix(n, 0.0);
  c.phi2_jet.resize(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Jet v = truncate(d_holo(d1[static_cast<std::size_t>(a)], b), k - 3);
      for (int g = 0; g < n; ++g) v -= mul_trunc(m.gamma(g, a, b), d1[static_cast<std::size_t>(g)]);
      c.phi2(a, b) = v.constant_term();
      c.phi2_mixed(a, b) = d_anti(d1[static_cast<std::size_t>(a)], b).constant_term();
      c.phi2_jet[static_cast<std::size_t>(a * n + b)] = std::move(v);
    }

  if (k >= 4) {
    c.has_third = true;
    c.phi3 = Tensor(n, 3);
    c.phi3_mixed = Tensor(n, 3);
    auto p2 = [&](int a, int b) -> const Jet& { return c.phi2_jet[static_cast<std::size_t>(a * n + b)]; };
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int g = 0; g < n; ++g) {
          cplx v = d_holo(p2(a, b), g).constant_term();
          for (int d = 0; d < n; ++d) v -= m.theta(d, a, g) * c.phi2(d, b) + m.theta(d, b, g) * c.phi2(a, d);
          c.phi3(a, b, g) = v;
          c.phi3_mixed(a, b, g) = d_anti(p2(a, b), g).constant_term();
        }
  }
  return c;
}

/// Residuals of the constant-norm identities and of the curvature identity
/// Phi_{a l mbar} = Phi_b R_a^b_{l mbar}. The first two are only expected to vanish
/// when |dPhi| is constant; the third holds for any potential.
inline IdentityResiduals identity_residuals(const PotentialJet&, const MetricJet& m, const CovariantDerivs& c) {
  if (!c.has_third || !m.has_curvature) throw JetError("identity residuals need an order-4 potential jet");
  const int n = m.n;
  const double np1 = n + 1;
  IdentityResiduals r;
  for (int b = 0; b < n; ++b) {
    cplx s = np1 * c.phi1[static_cast<std::size_t>(b)];
    for (int a = 0; a < n; ++a) s += c.phi2(a, b) * c.phi1_up[static_cast<std::size_t>(a)];
    r.id1 = std::max(r.id1, std::abs(s));
  }
  cplx quad = 0.0, norm = 0.0;
  for (int a = 0; a < n; ++a) norm += c.phi1[static_cast<std::size_t>(a)] * c.phi1_up[static_cast<std::size_t>(a)];
  for (int a = 0; a < n; ++a)
    for (int l = 0; l < n; ++l) {
      cplx up = 0.0;
      for (int b = 0; b < n; ++b)
        for (int mu = 0; mu < n; ++mu) up += m.h_inv(a, b) * m.h_inv(l, mu) * std::conj(c.phi2(b, mu));
      quad += c.phi2(a, l) * up;
    }
  r.id2 = std::abs(quad - np1 * norm + static_cast<double>(n) * np1 * np1);
  for (int a = 0; a < n; ++a)
    for (int l = 0; l < n; ++l)
      for (int mu = 0; mu < n; ++mu) {
        cplx s = c.phi3_mixed(a, l, mu);
        for (int b = 0; b < n; ++b) s -= c.phi1[static_cast<std::size_t>(b)] * m.curvature(a, b, l, mu);
        r.curv = std::max(r.curv, std::abs(s));
      }
  return r;
}

/// max |Phi_{abc} - Phi_{acb}|.
inline double third_derivative_symmetry(const CovariantDerivs& c) {
  if (!c.has_third) throw JetError("third covariant derivatives need an order-4 potential jet");
  double w = 0.0;
  for (int a = 0; a < c.n; ++a)
    for (int b = 0; b < c.n; ++b)
      for (int g = 0; g < c.n; ++g) w = std::max(w, std::abs(c.phi3(a, b, g) - c.phi3(a, g, b)));
  return w;
}

}  // namespace kescale
