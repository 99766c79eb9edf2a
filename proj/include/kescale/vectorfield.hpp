#pragma once

/// \file vectorfield.hpp
/// From a potential with constant gradient norm C to the holomorphic field
/// W = e^{t Phi} V, V = Phi^a d_a, the defining function rho = -exp(-(n+1) Phi / C^2)
/// and the normalised field Z = i W / (W rho), with flow integration.
///
/// Flows follow the real vector field Z + conj(Z), whose action on the complex
/// coordinates is dz/ds = Z(z).

#include <kescale/domains.hpp>
#include <kescale/error.hpp>
#include <kescale/finite_difference.hpp>
#include <kescale/kahler.hpp>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace kescale {

struct ExponentRoots {
  std::vector<double> roots;  // ascending; one entry in the tangential case C = n + 1
  double discriminant = 0.0;  // (n+1) C^4 ((n+1)^2 - C^2)
  bool tangential = false;
};

/// Real roots of C^4 t^2 - 2(n+1) C^2 t + (n+1) C^2 - n(n+1)^2 = 0.
inline ExponentRoots solve_exponent(double c, int n, double tangential_tol = 1e-12) {
  if (!(c > 0.0)) throw HypothesisError("exponent equation needs C > 0");
  const double np1 = n + 1.0;
  const double c2 = c * c;
  const double c4 = c2 * c2;
  ExponentRoots r;
  r.discriminant = np1 * c4 * (np1 * np1 - c2);
  if (std::abs(np1 * np1 - c2) <= tangential_tol * np1 * np1) {
    r.tangential = true;
    r.discriminant = 0.0;
    r.roots = {np1 / c2};
    return r;
  }
  if (r.discriminant < 0.0) throw HypothesisError("no real exponent: C exceeds n + 1");
  const double s = std::sqrt(r.discriminant);
  const double b = np1 * c2;
  // Stable pair: the larger-magnitude root first, the other from the product of roots.
  const double big = (b + s) / c4;
  const double prod = (np1 * c2 - n * np1 * np1) / c4;
  const double small = big != 0.0 ? prod / big : (b - s) / c4;
  r.roots = {std::min(big, small), std::max(big, small)};
  return r;
}

struct FieldData {
  DomainModel domain;
  JetFn phi;
  int n = 0;
  double C = 0.0;
  double t = 0.0;
  ExponentRoots exponent;
  double lambda() const { return n + 1.0; }
};

/// Pointwise field values; all derived from one order-2 jet of Phi.
struct FieldPoint {
  CVec V, W, Z;
  Jet phi;  // order-2 potential jet
  CMatrix h, h_inv;
  double rho = 0.0;
  cplx V_rho;       // V(rho)
  cplx W_rho;       // W(rho)
  double norm_V2 = 0.0;
  double speed = 0.0;  // |rho Z| in the KE metric
};

namespace detail {

inline double hermitian_norm_sq(const CMatrix& h, const CVec& v) {
  cplx s = 0.0;
  const int n = h.size();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s += h(a, b) * v[static_cast<std::size_t>(a)] * std::conj(v[static_cast<std::size_t>(b)]);
  return s.real();
}

}  // namespace detail

inline FieldPoint field_at(const FieldData& fd, const CVec& z) {
  FieldPoint f;
  f.phi = fd.phi(lift_coordinates(z, 2));
  const MetricJet m = metric_from_potential({f.phi, fd.lambda()});
  f.h = m.h;
  f.h_inv = m.h_inv;
  const int n = fd.n;
  const double phi0 = f.phi.constant_term().real();
  CVec d(static_cast<std::size_t>(n)), dbar(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    d[static_cast<std::size_t>(a)] = extract_derivative(f.phi, MultiIndex::from_slots(n, {a}));
    dbar[static_cast<std::size_t>(a)] = extract_derivative(f.phi, MultiIndex::from_slots(n, {}, {a}));
  }
  f.V.assign(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) f.V[static_cast<std::size_t>(a)] += m.h_inv(a, b) * dbar[static_cast<std::size_t>(b)];
  const double g = std::exp(fd.t * phi0);
  f.W = f.V;
  for (auto& w : f.W) w *= g;
  const double k = fd.lambda() / (fd.C * fd.C);
  f.rho = -std::exp(-k * phi0);
  // d_a rho = -k rho Phi_a.
  f.V_rho = 0.0;
  for (int a = 0; a < n; ++a) f.V_rho += f.V[static_cast<std::size_t>(a)] * (-k * f.rho * d[static_cast<std::size_t>(a)]);
  f.W_rho = g * f.V_rho;
  const cplx I(0.0, 1.0);
  f.Z = f.W;
  for (auto& x : f.Z) x *= I / f.W_rho;
  f.norm_V2 = detail::hermitian_norm_sq(m.h, f.V);
  f.speed = std::abs(f.rho) * std::sqrt(detail::hermitian_norm_sq(m.h, f.Z));
  return f;
}

inline CVec field_Z(const FieldData& fd, const CVec& z) { return field_at(fd, z).Z; }

/// Field record without hypothesis checks, for negative controls and synthetic use.
inline FieldData make_field(const DomainModel& d, JetFn phi, double c, double t) {
  FieldData fd;
  fd.domain = d;
  fd.phi = std::move(phi);
  fd.n = d.dim;
  fd.C = c;
  fd.t = t;
  return fd;
}

/// Builds the field from the model's constant-norm potential, after checking
/// |dPhi| = C on seeded samples (relative spread <= norm_tol) and 0 < C <= n + 1.
inline FieldData build_field(const DomainModel& d, int samples = 20, std::uint64_t seed = 1, double norm_tol = 1e-8) {
  const JetFn phi = d.field_potential ? d.field_potential : d.log_psi;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, first = 0.0;
  const auto pts = interior_samples(d, samples, seed);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto p = potential_at(phi, pts[i], 2, d.lambda());
    const double g = grad_norm_sq(p, metric_from_potential(p));
    if (i == 0) first = g;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  if (hi - lo > norm_tol * std::max(1.0, first))
    throw HypothesisError(d.name + ": hypothesis |d log psi~|_KE = C violated; |dPhi|^2 ranges over [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
  double c = std::sqrt(first);
  if (std::abs(c - d.lambda()) <= 1e-8 * d.lambda()) c = d.lambda();
  if (!(c > 0.0)) throw HypothesisError(d.name + ": gradient norm vanishes, C must be positive");
  if (c > d.lambda()) throw HypothesisError(d.name + ": C = " + std::to_string(c) + " exceeds n + 1");
  FieldData fd = make_field(d, phi, c, 0.0);
  fd.exponent = solve_exponent(c, d.dim);
  fd.t = fd.exponent.roots.front();
  return fd;
}

struct HolomorphyDefect {
  double direct = 0.0;       // |nabla''(e^{t Phi} V)|^2 from covariant derivatives
  double closed_form = 0.0;  // e^{2t Phi}(t^2 C^4 - 2t(n+1)C^2 + (n+1)C^2 - n(n+1)^2)
  double difference = 0.0;
};

/// Both sides of the holomorphy identity at a point for an arbitrary exponent t.
inline HolomorphyDefect holomorphy_defect(const FieldData& fd, const CVec& z, double t, int order = 3) {
  if (order < 3) throw JetError("holomorphy defect needs jets of order >= 3");
  const int n = fd.n;
  const Jet phi = fd.phi(lift_coordinates(z, order));
  const MetricJet m = metric_from_potential({phi, fd.lambda()});
  const Jet g = exp(t * phi);
  // X^a_bbar = dbar_b (e^{t Phi} Phi^a), Phi^a = h^{a cbar} Phi_cbar.
  std::vector<Jet> up;
  for (int a = 0; a < n; ++a) {
    Jet acc = mul_trunc(m.h_inv_jet(a, 0), d_anti(phi, 0));
    for (int c = 1; c < n; ++c) acc += mul_trunc(m.h_inv_jet(a, c), d_anti(phi, c));
    up.push_back(mul_trunc(g, acc));
  }
  cplx s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      for (int b = 0; b < n; ++b)
        for (int e = 0; e < n; ++e) {
          const cplx xa = d_anti(up[static_cast<std::size_t>(a)], b).constant_term();
          const cplx xc = d_anti(up[static_cast<std::size_t>(c)], e).constant_term();
          s += m.h(a, c) * m.h_inv(e, b) * xa * std::conj(xc);
        }
  HolomorphyDefect r;
  r.direct = s.real();
  const double np1 = fd.lambda();
  const double c2 = fd.C * fd.C;
  r.closed_form = std::exp(2.0 * t * phi.constant_term().real()) * (t * t * c2 * c2 - 2.0 * t * np1 * c2 + np1 * c2 - n * np1 * np1);
  r.difference = std::abs(r.direct - r.closed_form);
  return r;
}

/// max_b |sum_a V^a d_a dbar_b rho|: the (0,1)-form V contracted into dd^c rho, up to the factor i.
inline double annihilation_check(const FieldData& fd, const CVec& z) {
  const int n = fd.n;
  const Jet phi = fd.phi(lift_coordinates(z, 2));
  const Jet rho = -exp(phi * (-fd.lambda() / (fd.C * fd.C)));
  const FieldPoint f = field_at(fd, z);
  double w = 0.0;
  for (int b = 0; b < n; ++b) {
    cplx s = 0.0;
    for (int a = 0; a < n; ++a) s += f.V[static_cast<std::size_t>(a)] * extract_derivative(rho, MultiIndex::from_slots(n, {a}, {b}));
    w = std::max(w, std::abs(s));
  }
  return w;
}

enum class FieldComponent { V, W, Z };

/// Central-difference dbar-residual of a field component, maximised over grid points,
/// components and directions.
inline double holomorphy_grid_check(const FieldData& fd, const std::vector<CVec>& grid, double h,
                                    FieldComponent which = FieldComponent::W) {
  auto component = [&](const CVec& z) {
    const FieldPoint f = field_at(fd, z);
    return which == FieldComponent::V ? f.V : which == FieldComponent::W ? f.W : f.Z;
  };
  double w = 0.0;
  for (const auto& z : grid) {
    if (!(fd.domain.boundary_distance(z) > 2.0 * h)) throw DomainError("grid point too close to the boundary for the stencil");
    const auto d = fd_first_derivatives(component, z, h);
    const CVec val = component(z);
    double scale = 0.0;
    for (const auto& v : val) scale = std::max(scale, std::abs(v));
    w = std::max(w, max_abs_diff(d.anti, CMatrix(fd.n, 0.0)) / std::max(1.0, scale));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Flow
// ---------------------------------------------------------------------------

struct FlowTrace {
  CVec start;
  std::vector<double> times;
  std::vector<CVec> states;
  std::vector<double> rho;
  std::vector<double> speed;
  std::vector<double> error_estimate;  // Richardson estimate per step
  double expected_speed = 0.0;
  int halvings = 0;

  double rho_drift() const {
    double w = 0.0;
    for (double r : rho) w = std::max(w, std::abs(r - rho.front()));
    return w;
  }
  double speed_drift() const {
    double w = 0.0;
    for (double s : speed) w = std::max(w, std::abs(s - expected_speed));
    return w;
  }
  const CVec& end() const { return states.back(); }
};

namespace detail {

inline CVec axpy(const CVec& y, double a, const CVec& k) {
  CVec r = y;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * k[i];
  return r;
}

/// One classical RK4 step; returns false if any stage leaves the domain.
inline bool rk4_step(const FieldData& fd, const CVec& y, double h, CVec& out) {
  const auto& d = fd.domain;
  if (!d.contains(y)) return false;
  const CVec k1 = field_Z(fd, y);
  const CVec y2 = axpy(y, 0.5 * h, k1);
  if (!d.contains(y2)) return false;
  const CVec k2 = field_Z(fd, y2);
  const CVec y3 = axpy(y, 0.5 * h, k2);
  if (!d.contains(y3)) return false;
  const CVec k3 = field_Z(fd, y3);
  const CVec y4 = axpy(y, h, k3);
  if (!d.contains(y4)) return false;
  const CVec k4 = field_Z(fd, y4);
  out = y;
  for (std::size_t i = 0; i < y.size(); ++i) out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return d.contains(out);
}

}  // namespace detail

/// RK4 on dz/ds = Z(z) from s = t0 to s = t1 with nominal step `step`. Each step is
/// also taken as two half steps; the half-step result is kept and their difference
/// / 15 logged. A step whose stages leave the domain is halved, at most 20 times.
inline FlowTrace integrate_flow(const FieldData& fd, const CVec& start, double t0, double t1, double step,
                                bool record = true) {
  if (!(step > 0.0)) throw FlowError("flow step must be positive");
  fd.domain.require_interior(start);
  FlowTrace tr;
  tr.start = start;
  tr.expected_speed = fd.C / fd.lambda();
  auto log_state = [&](double s, const CVec& y, double err) {
    if (!record && !tr.states.empty()) {
      tr.times.back() = s;
      tr.states.back() = y;
      return;
    }
    const FieldPoint f = field_at(fd, y);
    tr.times.push_back(s);
    tr.states.push_back(y);
    tr.rho.push_back(f.rho);
    tr.speed.push_back(f.speed);
    tr.error_estimate.push_back(err);
  };
  log_state(t0, start, 0.0);
  const double span = t1 - t0;
  if (span == 0.0) return tr;
  const double dir = span > 0 ? 1.0 : -1.0;
  const long nsteps = std::max(1L, std::lround(std::abs(span) / step));
  const double h = span / static_cast<double>(nsteps);
  CVec y = start;
  for (long i = 0; i < nsteps; ++i) {
    const double s0 = t0 + static_cast<double>(i) * h;
    // Advance one nominal step, subdividing if a stage exits.
    int level = 0;
    double done = 0.0;
    double err = 0.0;
    while (dir * (h - done) > 1e-15 * std::abs(h)) {
      double hs = std::ldexp(h, -level);
      if (dir * (done + hs - h) > 0.0) hs = h - done;
      CVec full, half1, half2;
      const bool ok = detail::rk4_step(fd, y, hs, full) && detail::rk4_step(fd, y, 0.5 * hs, half1) &&
                      detail::rk4_step(fd, half1, 0.5 * hs, half2);
      if (!ok) {
        if (++level > 20) throw FlowError("flow left the domain after 20 step halvings");
        ++tr.halvings;
        continue;
      }
      double e = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) e = std::max(e, std::abs(half2[k] - full[k]));
      err = std::max(err, e / 15.0);
      for (const auto& v : half2)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw FlowError("flow diverged");
      y = half2;
      done += hs;
    }
    log_state(s0 + h, y, err);
  }
  return tr;
}

inline void write_csv(std::ostream& os, const FlowTrace& tr) {
  const std::size_t n = tr.start.size();
  os << "t";
  for (std::size_t a = 0; a < n; ++a) os << ",re_z" << a + 1 << ",im_z" << a + 1;
  os << ",rho,speed\n";
  os.precision(17);
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    os << tr.times[i];
    for (const auto& v : tr.states[i]) os << ',' << v.real() << ',' << v.imag();
    os << ',' << tr.rho[i] << ',' << tr.speed[i] << '\n';
  }
}

struct FlowAutomorphismResult {
  double isometry_residual = 0.0;  // max |psi(F(z)) |J_F(z)|^2 / psi(z) - 1|
  double holo_residual = 0.0;      // max |dbar F| by central differences
};

/// Treats z -> Flow_s(z) as a map on `grid`; derivatives by the 4-point stencil with step h.
inline FlowAutomorphismResult verify_flow_automorphism(const FieldData& fd, double s, const std::vector<CVec>& grid,
                                                       double step, double h = 1e-4) {
  FlowAutomorphismResult r;
  auto flow_map = [&](const CVec& z) { return integrate_flow(fd, z, 0.0, s, step, false).end(); };
  for (const auto& z : grid) {
    if (!(fd.domain.boundary_distance(z) > 2.0 * h)) throw DomainError("grid point too close to the boundary for the stencil");
    const auto d = fd_first_derivatives(flow_map, z, h);
    r.holo_residual = std::max(r.holo_residual, max_abs_diff(d.anti, CMatrix(fd.n, 0.0)));
    const CVec w = flow_map(z);
    if (!fd.domain.contains(w)) throw DomainError("flow map leaves the domain");
    const cplx jac = determinant(d.holo);
    r.isometry_residual = std::max(r.isometry_residual, std::abs(fd.domain.psi(w) * std::norm(jac) / fd.domain.psi(z) - 1.0));
  }
  return r;
}

}  // namespace kescale
