#pragma once

/// \file scaling.hpp
/// Potential scaling along automorphism sequences, the Gronwall-type bounds on the
/// normalised densities, the limit potential psi_inf and Frankel's affine rescaling.

#include <kescale/domains.hpp>
#include <kescale/error.hpp>
#include <kescale/kahler.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace kescale {

struct StepResult {
  double sigma = 0.0;  // rho(f(z)) / rho(f(p)) for the density rho in use
  cplx jratio;         // J_f(z) / J_f(p)
  /// |sigma |jratio|^2 rho(p)/rho(z) - 1|; vanishes by the transformation law.
  double consistency = 0.0;
};

namespace detail {

inline StepResult scaling_step(const std::function<double(const CVec&)>& log_density, const DomainModel& d,
                               const Automorphism& f, const CVec& p, const CVec& z) {
  d.require_interior(p);
  d.require_interior(z);
  const cplx jp = f.forward.jacobian(p);
  if (!(std::abs(jp) > 0.0)) throw DomainError("automorphism Jacobian vanishes at the base point");
  const double log_sigma = log_density(f.forward(z)) - log_density(f.forward(p));
  StepResult r;
  r.sigma = std::exp(log_sigma);
  r.jratio = f.forward.jacobian(z) / jp;
  r.consistency = std::abs(std::expm1(log_sigma + std::log(std::norm(r.jratio)) + log_density(p) - log_density(z)));
  return r;
}

}  // namespace detail

/// sigma = psi(f(z))/psi(f(p)) and jratio = J_f(z)/J_f(p).
inline StepResult potential_scaling_step(const DomainModel& d, const Automorphism& f, const CVec& p, const CVec& z) {
  return detail::scaling_step([&](const CVec& x) { return value_at(d.log_psi, x); }, d, f, p, z);
}

/// Same contract with psi replaced by the Bergman kernel K(z, z).
inline StepResult bergman_scaling_step(const DomainModel& d, const Automorphism& f, const CVec& p, const CVec& z) {
  if (!d.bergman) throw DomainError(d.name + ": no closed-form Bergman kernel");
  const BergmanDomain kind = *d.bergman;
  return detail::scaling_step([kind](const CVec& x) { return std::log(bergman_kernel(kind, x)); }, d, f, p, z);
}

struct GronwallResult {
  double max_violation = 0.0;  // max over samples of max(sigma - e^{CR}, e^{-CR} - sigma); <= 0 when satisfied
  double R = 0.0;
  double C = 0.0;
  double bound = 0.0;  // e^{CR}
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  int violations = 0;
};

/// Check e^{-CR} <= sigma <= e^{CR} with R = max(distance) * length_scale.
inline GronwallResult gronwall_from_samples(const std::vector<double>& sigma, const std::vector<double>& distance, double c,
                                            double length_scale = 1.0) {
  GronwallResult g;
  g.C = c;
  for (double x : distance) g.R = std::max(g.R, x * length_scale);
  g.bound = std::exp(c * g.R);
  g.max_violation = -std::numeric_limits<double>::infinity();
  g.sigma_min = std::numeric_limits<double>::infinity();
  g.sigma_max = 0.0;
  for (double s : sigma) {
    const double v = std::max(s - g.bound, 1.0 / g.bound - s);
    g.max_violation = std::max(g.max_violation, v);
    g.sigma_min = std::min(g.sigma_min, s);
    g.sigma_max = std::max(g.sigma_max, s);
    if (v > 0.0) ++g.violations;
  }
  return g;
}

/// Two-sided bound on sigma_{f,p} over a grid. C <= 0 selects n + 1, the supremum of
/// |d log psi| on the ball. `length_scale` multiplies the domain's distance function.
inline GronwallResult gronwall_bounds_check(const DomainModel& d, const Automorphism& f, const CVec& p,
                                            const std::vector<CVec>& grid, double c = 0.0, double length_scale = 1.0) {
  if (!d.distance) throw DomainError(d.name + ": no geodesic distance available");
  std::vector<double> sigma, dist;
  for (const auto& q : grid) {
    sigma.push_back(potential_scaling_step(d, f, p, q).sigma);
    dist.push_back(d.distance(p, q));
  }
  return gronwall_from_samples(sigma, dist, c > 0.0 ? c : d.lambda(), length_scale);
}

// ---------------------------------------------------------------------------
// Frankel affine scaling
// ---------------------------------------------------------------------------

/// z -> df(p)^{-1} (f(z) - f(p)). Its Jacobian is J_f(z)/J_f(p).
inline HoloMap frankel_map(const HoloMap& f, const CVec& p) {
  CMatrix m;
  try {
    m = inverse(differential(f, p));
  } catch (const MetricError&) {
    throw DomainError("differential of the automorphism is singular at the base point");
  }
  const CVec fp = f(p);
  const cplx jp = f.jacobian(p);
  const int n = f.dim;
  HoloMap a;
  a.dim = n;
  a.eval = [f, m, fp, n](const CVec& z) {
    const CVec w = f(z);
    CVec out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(i)] += m(i, k) * (w[static_cast<std::size_t>(k)] - fp[static_cast<std::size_t>(k)]);
    return out;
  };
  a.eval_jet = [f, m, fp, n](std::span<const Jet> z) {
    const auto w = f.eval_jet(z);
    std::vector<Jet> out;
    for (int i = 0; i < n; ++i) {
      Jet acc = w[0].zero_like();
      for (int k = 0; k < n; ++k) acc += (w[static_cast<std::size_t>(k)] - fp[static_cast<std::size_t>(k)]) * m(i, k);
      out.push_back(acc);
    }
    return out;
  };
  a.jacobian = [f, jp](const CVec& z) { return f.jacobian(z) / jp; };
  a.jacobian_jet = [f, jp](std::span<const Jet> z) { return f.jacobian_jet(z) / jp; };
  return a;
}

inline CVec frankel_scaling(const HoloMap& f, const CVec& p, const CVec& z) { return frankel_map(f, p)(z); }

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

enum class SequenceKind {
  /// Mobius centers a_j = (1 - 2^{-j}) e_1 (per-factor on the polydisc).
  Canonical,
  /// f_j = f fixed, centered at `stationary_center`.
  Stationary,
};

struct ScalingConfig {
  std::string domain = "ball";
  int dim = 1;
  int steps = 14;
  CVec base_point;  // empty: origin
  double grid_radius = 0.5;
  int grid_points = 33;
  double tol = 1e-6;
  bool bergman = false;
  int order = 4;
  std::uint64_t seed = 1;
  SequenceKind sequence = SequenceKind::Canonical;
  CVec stationary_center;
};

/// Center, the 4n axis points at `radius` (directions +-e_k, +-i e_k), then seeded fill.
inline std::vector<CVec> scaling_grid(int n, double radius, int count, std::uint64_t seed) {
  std::vector<CVec> pts{CVec(static_cast<std::size_t>(n))};
  for (int k = 0; k < n && static_cast<int>(pts.size()) < count; ++k)
    for (const cplx dir : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)}) {
      if (static_cast<int>(pts.size()) >= count) break;
      CVec z(static_cast<std::size_t>(n));
      z[static_cast<std::size_t>(k)] = radius * dir;
      pts.push_back(z);
    }
  Rng rng(seed);
  while (static_cast<int>(pts.size()) < count) pts.push_back(rng.in_ball(n, radius));
  return pts;
}

inline double canonical_parameter(int j) { return 1.0 - std::ldexp(1.0, -j); }

/// The j-th automorphism of the configured sequence.
inline Automorphism sequence_map(const ScalingConfig& cfg, const DomainModel& d, int j) {
  const int n = d.dim;
  CVec a(static_cast<std::size_t>(n));
  if (cfg.sequence == SequenceKind::Canonical) {
    a[0] = canonical_parameter(j);
  } else {
    if (static_cast<int>(cfg.stationary_center.size()) != n) throw ConfigError("stationary center has wrong dimension");
    a = cfg.stationary_center;
  }
  if (d.name == "ball" || d.name == "ball-cayley") return ball::automorphism(a, identity_matrix(n));
  if (d.name == "polydisc") {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    return polydisc::automorphism(a, std::vector<double>(static_cast<std::size_t>(n), 0.0), perm);
  }
  throw ConfigError("scaling sequences are defined for the ball and the polydisc, not '" + d.name + "'");
}

/// Closed-form limit of the Frankel-rescaled canonical sequence at p = 0: on the ball
/// z -> z/(1 - z_1); on the polydisc the first factor becomes z_1/(1 - z_1).
inline std::optional<HoloMap> frankel_limit(const ScalingConfig& cfg, const DomainModel& d) {
  if (cfg.sequence != SequenceKind::Canonical) return std::nullopt;
  if (!cfg.base_point.empty() && detail::norm_sq(cfg.base_point) != 0.0) return std::nullopt;
  const int n = d.dim;
  if (d.name == "ball" || d.name == "ball-cayley") {
    return make_holo_map(
        n,
        [](auto z) {
          using T = detail::elem_t<decltype(z)>;
          std::vector<T> out;
          for (const auto& x : z) out.push_back(x / (1.0 - z[0]));
          return out;
        },
        [n](auto z) { return 1.0 / detail::ipow(1.0 - z[0], n + 1); });
  }
  if (d.name == "polydisc") {
    return make_holo_map(
        n,
        [](auto z) {
          using T = detail::elem_t<decltype(z)>;
          std::vector<T> out(z.begin(), z.end());
          out[0] = z[0] / (1.0 - z[0]);
          return out;
        },
        [](auto z) { return 1.0 / ((1.0 - z[0]) * (1.0 - z[0])); });
  }
  return std::nullopt;
}

struct ScalingStep {
  int j = 0;
  CVec center;                     // f_j(p)
  double log_density_at_image = 0.0;  // log psi(f_j(p)) (or log K)
  double grad_norm_at_image = 0.0;    // |d log psi|(f_j(p))
  std::vector<double> sigma;
  std::vector<cplx> jratio;
  double cauchy = std::numeric_limits<double>::quiet_NaN();  // sup |r_j - r_{j-1}|
  double consistency = 0.0;
  std::optional<GronwallResult> gronwall;             // R = d(p, q)
  std::optional<GronwallResult> gronwall_consistent;  // R = 2 d(p, q)
};

struct ScalingRun {
  ScalingConfig config;
  CVec p;
  std::vector<CVec> grid;
  std::vector<ScalingStep> steps;
  bool converged = false;
  int converged_at = -1;
  std::vector<cplx> eta;  // r_J on the grid
  double min_abs_eta = 0.0;
  double normal_sup = 0.0;  // sup_j sup_grid |r_j|
  double normal_inf = 0.0;  // inf_j inf_grid |r_j|
  bool orbit_escape_monotone = true;
  std::vector<double> log_psi_inf;  // on the grid
  double psi_inf_residual = 0.0;    // max |dd^c log psi_inf - dd^c log psi| / (n+1)
  std::optional<double> frankel_limit_diff;   // sup |eta - J_F| for the closed-form limit F
  double frankel_finite_diff = 0.0;           // sup |J(A_J o f_J) from jets - r_J|
  double limit_gradient = std::numeric_limits<double>::quiet_NaN();
  JetFn log_psi_inf_fn;
  DomainModel domain;
};

namespace detail {

inline double hessian_gap(const Jet& a, const Jet& b, double lambda) {
  const int n = a.dim();
  double w = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      w = std::max(w, std::abs(d_anti(d_holo(a, i), k).constant_term() - d_anti(d_holo(b, i), k).constant_term()) / lambda);
  return w;
}

}  // namespace detail

inline ScalingRun run_sequence(const ScalingConfig& cfg) {
  if (cfg.steps < 2) throw ConfigError("scaling needs at least two steps");
  if (!(cfg.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (cfg.order < 2 || cfg.order > kMaxJetOrder) throw ConfigError("jet order must be in [2, 4] for scaling");
  ScalingRun run;
  run.config = cfg;
  run.domain = make_domain(cfg.domain, cfg.dim);
  const DomainModel& d = run.domain;
  const int n = d.dim;
  if (cfg.bergman && !d.bergman) throw ConfigError(d.name + ": Bergman scaling needs the ball or the polydisc");
  if (d.name != "ball" && d.name != "ball-cayley" && d.name != "polydisc")
    throw ConfigError("scaling sequences are defined for the ball and the polydisc, not '" + d.name + "'");
  run.p = cfg.base_point.empty() ? CVec(static_cast<std::size_t>(n)) : cfg.base_point;
  d.require_interior(run.p);
  run.grid = scaling_grid(n, cfg.grid_radius, cfg.grid_points, cfg.seed);
  for (auto& q : run.grid) {
    for (int a = 0; a < n; ++a) q[static_cast<std::size_t>(a)] += run.p[static_cast<std::size_t>(a)];
    if (!d.contains(q)) throw ConfigError("scaling grid leaves the domain");
  }

  const JetFn log_density =
      cfg.bergman ? bergman_log_kernel(*d.bergman, n) : d.log_psi;
  auto step_at = [&](const Automorphism& f, const CVec& q) {
    return cfg.bergman ? bergman_scaling_step(d, f, run.p, q) : potential_scaling_step(d, f, run.p, q);
  };

  run.normal_sup = 0.0;
  run.normal_inf = std::numeric_limits<double>::infinity();
  Automorphism last;
  for (int j = 1; j <= cfg.steps; ++j) {
    const Automorphism f = sequence_map(cfg, d, j);
    ScalingStep s;
    s.j = j;
    s.center = f.forward(run.p);
    s.log_density_at_image = value_at(log_density, s.center);
    {
      const auto pj = potential_at(d.log_psi, s.center, 2, d.lambda());
      s.grad_norm_at_image = std::sqrt(grad_norm_sq(pj, metric_from_potential(pj)));
    }
    for (const auto& q : run.grid) {
      const StepResult r = step_at(f, q);
      s.sigma.push_back(r.sigma);
      s.jratio.push_back(r.jratio);
      s.consistency = std::max(s.consistency, r.consistency);
      run.normal_sup = std::max(run.normal_sup, std::abs(r.jratio));
      run.normal_inf = std::min(run.normal_inf, std::abs(r.jratio));
    }
    if (!run.steps.empty()) {
      const auto& prev = run.steps.back();
      s.cauchy = 0.0;
      for (std::size_t i = 0; i < s.jratio.size(); ++i) s.cauchy = std::max(s.cauchy, std::abs(s.jratio[i] - prev.jratio[i]));
      if (!(s.log_density_at_image > prev.log_density_at_image)) run.orbit_escape_monotone = false;
    }
    if (d.distance) {
      std::vector<double> dist;
      for (const auto& q : run.grid) dist.push_back(d.distance(run.p, q));
      s.gronwall = gronwall_from_samples(s.sigma, dist, d.lambda(), 1.0);
      s.gronwall_consistent = gronwall_from_samples(s.sigma, dist, d.lambda(), 2.0);
    }
    run.steps.push_back(std::move(s));
    last = f;
  }

  for (std::size_t k = 2; k < run.steps.size(); ++k) {
    if (run.steps[k - 1].cauchy < cfg.tol && run.steps[k].cauchy < cfg.tol) {
      run.converged = true;
      run.converged_at = run.steps[k - 1].j;
      break;
    }
  }

  run.eta = run.steps.back().jratio;
  run.min_abs_eta = std::numeric_limits<double>::infinity();
  for (const auto& e : run.eta) run.min_abs_eta = std::min(run.min_abs_eta, std::abs(e));

  // log psi_inf = log rho - log rho(p) - log |eta|^2, with eta = J_{f_J} / J_{f_J}(p) as a holomorphic jet.
  const cplx jp = last.forward.jacobian(run.p);
  const double log_rho_p = value_at(log_density, run.p);
  const HoloMap fwd = last.forward;
  run.log_psi_inf_fn = [log_density, fwd, jp, log_rho_p](std::span<const Jet> z) {
    const Jet eta = fwd.jacobian_jet(z) / jp;
    return log_density(z) - log_rho_p - log(eta * conj(eta));
  };
  const double lambda = d.lambda();
  for (const auto& q : run.grid) {
    const auto zj = lift_coordinates(q, cfg.order);
    const Jet a = run.log_psi_inf_fn(zj);
    const Jet b = log_density(zj);
    run.log_psi_inf.push_back(a.constant_term().real());
    run.psi_inf_residual = std::max(run.psi_inf_residual, detail::hessian_gap(a, b, lambda));
  }

  const HoloMap rescaled = frankel_map(last.forward, run.p);
  for (std::size_t i = 0; i < run.grid.size(); ++i)
    run.frankel_finite_diff = std::max(run.frankel_finite_diff, std::abs(jacobian_from_jets(rescaled, run.grid[i]) - run.eta[i]));
  if (const auto lim = frankel_limit(cfg, d)) {
    double w = 0.0;
    for (std::size_t i = 0; i < run.grid.size(); ++i) w = std::max(w, std::abs(lim->jacobian(run.grid[i]) - run.eta[i]));
    run.frankel_limit_diff = w;
  }
  return run;
}

/// max over the grid of | |d log psi_inf| - (n+1) |, the norm taken in the KE metric.
inline double limit_gradient_check(ScalingRun& run) {
  if (!run.converged) throw HypothesisError("limit gradient needs a converged scaling run");
  const auto& d = run.domain;
  if (d.name != "ball" && d.name != "ball-cayley") throw HypothesisError("boundary value n+1 is asserted only on the ball");
  double w = 0.0;
  for (const auto& q : run.grid) {
    const auto pj = potential_at(run.log_psi_inf_fn, q, 2, d.lambda());
    w = std::max(w, std::abs(std::sqrt(grad_norm_sq(pj, metric_from_potential(pj))) - d.lambda()));
  }
  run.limit_gradient = w;
  return w;
}

}  // namespace kescale
