#pragma once

/// \file commands.hpp
/// Batch commands behind the `kescale` executable: configuration, JSON reports
/// and the verify / scale / flow drivers.

#include <kescale/domains.hpp>
#include <kescale/kahler.hpp>
#include <kescale/scaling.hpp>
#include <kescale/vectorfield.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace kescale {

using json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::string domain = "ball";
  int dim = 1;
  int order = 4;
  std::optional<double> grid_radius;
  std::optional<int> grid_points;
  int steps = 14;
  std::string start;
  double t0 = 0.0;
  double t1 = 1.0;
  double step = 1e-3;
  std::optional<double> tol;
  std::uint64_t seed = 1;
  std::string out;
  bool bergman = false;
  std::optional<double> lambda_override;
  bool timing = false;

  void validate() const {
    if (command != "verify" && command != "scale" && command != "flow") throw ConfigError("unknown command '" + command + "'");
    const auto names = domain_names();
    if (std::find(names.begin(), names.end(), domain) == names.end()) throw ConfigError("unknown domain '" + domain + "'");
    if (dim < 1 || dim > kMaxJetDim / 2) throw ConfigError("dimension must be in [1, " + std::to_string(kMaxJetDim / 2) + "]");
    if (order < 2 || order > kMaxJetOrder) throw ConfigError("jet order must be in [2, " + std::to_string(kMaxJetOrder) + "]");
    if (grid_radius && !(*grid_radius > 0.0 && *grid_radius < 1.0)) throw ConfigError("grid radius must lie in (0, 1)");
    if (grid_points && *grid_points < 1) throw ConfigError("grid needs at least one point");
    if (tol && !(*tol > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(step > 0.0)) throw ConfigError("flow step must be positive");
    if (lambda_override && !(*lambda_override > 0.0)) throw ConfigError("lambda override must be positive");
  }

  /// Effective dimension: the half-plane is always one-dimensional.
  int effective_dim() const { return domain == "halfplane" ? 1 : dim; }

  json to_json() const {
    json j;
    j["command"] = command;
    j["domain"] = domain;
    j["dim"] = effective_dim();
    j["order"] = order;
    j["grid_radius"] = grid_radius ? json(*grid_radius) : json(nullptr);
    j["grid_points"] = grid_points ? json(*grid_points) : json(nullptr);
    j["steps"] = steps;
    j["start"] = start;
    j["t0"] = t0;
    j["t1"] = t1;
    j["step"] = step;
    j["tol"] = tol ? json(*tol) : json(nullptr);
    j["seed"] = seed;
    j["bergman"] = bergman;
    j["lambda_override"] = lambda_override ? json(*lambda_override) : json(nullptr);
    return j;
  }
};

/// Parses "a", "bi", "a+bi", "a-bi" (also "i", "-i").
inline cplx parse_complex(const std::string& s) {
  if (s.empty()) throw ConfigError("empty complex number");
  const char* p = s.c_str();
  char* end = nullptr;
  auto imag_unit = [&](const char* q) -> std::optional<double> {
    if (*q == 'i' && q[1] == '\0') return 1.0;
    if ((*q == '+' || *q == '-') && q[1] == 'i' && q[2] == '\0') return *q == '-' ? -1.0 : 1.0;
    return std::nullopt;
  };
  if (auto u = imag_unit(p)) return {0.0, *u};
  const double a = std::strtod(p, &end);
  if (end == p) throw ConfigError("cannot parse complex number '" + s + "'");
  if (*end == '\0') return {a, 0.0};
  if (*end == 'i' && end[1] == '\0') return {0.0, a};
  if (auto u = imag_unit(end)) return {a, *u};
  const char* q = end;
  const double b = std::strtod(q, &end);
  if (end == q || *end != 'i' || end[1] != '\0') throw ConfigError("cannot parse complex number '" + s + "'");
  return {a, b};
}

/// Comma-separated complex coordinates.
inline CVec parse_point(const std::string& s) {
  CVec out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t c = s.find(',', pos);
    std::string tok = s.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
    tok.erase(std::remove(tok.begin(), tok.end(), ' '), tok.end());
    out.push_back(parse_complex(tok));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline json to_json(const CVec& v) {
  json a = json::array();
  for (const auto& z : v) a.push_back(to_json(z));
  return a;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Relation {
  AtMost,  // computed <= tolerance, target 0
  Near,    // |computed - target| <= tolerance
  Above,   // computed > target
};

struct Record {
  std::string name;
  std::string anchor;
  double computed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::AtMost;
  bool pass = false;
};

inline const char* relation_name(Relation r) {
  switch (r) {
    case Relation::AtMost: return "at_most";
    case Relation::Near: return "near";
    case Relation::Above: return "above";
  }
  return "?";
}

struct Report {
  std::string command;
  json config;
  std::vector<Record> records;
  std::vector<std::string> messages;
  std::optional<double> wall_time;

  void residual(std::string name, std::string anchor, double value, double tol) {
    records.push_back({std::move(name), std::move(anchor), value, 0.0, tol, Relation::AtMost, value <= tol});
  }
  void near(std::string name, std::string anchor, double value, double target, double tol) {
    records.push_back({std::move(name), std::move(anchor), value, target, tol, Relation::Near, std::abs(value - target) <= tol});
  }
  void above(std::string name, std::string anchor, double value, double bound) {
    records.push_back({std::move(name), std::move(anchor), value, bound, 0.0, Relation::Above, value > bound});
  }

  bool pass() const {
    if (records.empty()) return false;
    return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.pass; });
  }
  const Record* find(const std::string& name) const {
    for (const auto& r : records)
      if (r.name == name) return &r;
    return nullptr;
  }

  json to_json() const {
    json j;
    j["schema"] = 1;
    j["command"] = command;
    j["config"] = config;
    json recs = json::array();
    for (const auto& r : records) {
      json x;
      x["name"] = r.name;
      x["anchor"] = r.anchor;
      x["computed"] = std::isfinite(r.computed) ? json(r.computed) : json(nullptr);
      x["target"] = r.target;
      x["tolerance"] = r.tolerance;
      x["relation"] = relation_name(r.relation);
      x["pass"] = r.pass;
      recs.push_back(std::move(x));
    }
    j["records"] = std::move(recs);
    j["messages"] = messages;
    j["pass"] = pass();
    if (wall_time) j["wall_time_s"] = *wall_time;
    return j;
  }
};

namespace anchors {
inline constexpr const char* einstein = "Ric(omega_KE) = -(n+1) omega_KE";
inline constexpr const char* ball_metric = "h_ab = [(1-|z|^2) delta_ab + zbar_a z_b] / (1-|z|^2)^2";
inline constexpr const char* ball_metric_inverse = "h^ab = (1-|z|^2)(delta_ab - z_a zbar_b)";
inline constexpr const char* ball_grad = "|d log psi|^2 = (n+1)^2 |z|^2";
inline constexpr const char* boundary_value = "|d log psi| -> n+1 at the boundary";
inline constexpr const char* polydisc_grad = "|d log psi|^2 = 2(n+1) sum |z_i|^2";
inline constexpr const char* transformation = "(psi o f)|J_f|^2 = psi";
inline constexpr const char* bergman_transformation = "(K o f)|J_f|^2 = K";
inline constexpr const char* structure = "Kahler structure: nabla h = 0, torsion free, R symmetric, Ric = tr R";
inline constexpr const char* constant_norm = "|d log psi~|_KE = C";
inline constexpr const char* id1 = "Phi_ab Phi^a = -(n+1) Phi_b";
inline constexpr const char* id2 = "|nabla' nabla' Phi|^2 = (n+1)C^2 - n(n+1)^2";
inline constexpr const char* curvature_identity = "Phi_{a l mbar} = Phi_b R_a^b_{l mbar}";
inline constexpr const char* scaling_cauchy = "r_j = J_{f_j} / J_{f_j}(p) converges locally uniformly";
inline constexpr const char* nonvanishing = "eta = lim r_j is nowhere zero";
inline constexpr const char* frankel = "eta = J of the Frankel limit";
inline constexpr const char* psi_inf = "dd^c log psi_inf = (n+1) omega_KE";
inline constexpr const char* normal_family = "e^{-2CR} <= sigma_j <= e^{2CR} on d(p, .) <= R";
inline constexpr const char* limit_gradient = "|d log psi_inf| = n+1";
inline constexpr const char* scaling_consistency = "sigma_j |r_j|^2 psi(p) / psi = 1";
inline constexpr const char* exponent = "C^4 t^2 - 2(n+1)C^2 t + (n+1)C^2 - n(n+1)^2 = 0";
inline constexpr const char* holomorphy_defect = "|nabla''(e^{t Phi} V)|^2 = e^{2t Phi}(t^2 C^4 - 2t(n+1)C^2 + (n+1)C^2 - n(n+1)^2)";
inline constexpr const char* v_length = "|V|^2 = C^2, V = Phi^a d_a";
inline constexpr const char* v_rho = "V rho = -(n+1) rho";
inline constexpr const char* annihilation = "V _| dd^c rho = 0, rho = -exp(-(n+1) Phi / C^2)";
inline constexpr const char* z_length = "|rho Z| = C/(n+1)";
inline constexpr const char* holomorphic_field = "dbar (e^{t Phi} V) = 0, dbar Z = 0";
inline constexpr const char* tangency = "(Re Z) rho = 0";
inline constexpr const char* flow_automorphism = "Flow_s of Re Z is a holomorphic isometry";
inline constexpr const char* translation_orbit = "half-plane orbit w(s) = w0 + Z(w0) s";
}  // namespace anchors

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace detail {

inline double verify_lambda(const RunConfig& cfg, const DomainModel& d) {
  return cfg.lambda_override ? *cfg.lambda_override : d.lambda();
}

}  // namespace detail

inline Report cmd_verify(const RunConfig& cfg) {
  Report rep;
  rep.command = "verify";
  rep.config = cfg.to_json();
  const DomainModel d = make_domain(cfg.domain, cfg.effective_dim());
  const int n = d.dim;
  const double lambda = detail::verify_lambda(cfg, d);
  const int count = cfg.grid_points.value_or(64);
  const std::vector<CVec> pts = d.name == "ball" ? ball_grid(n, cfg.grid_radius.value_or(0.9), count, cfg.seed)
                                                 : interior_samples(d, count, cfg.seed);
  const int order = std::max(cfg.order, 4);

  double einstein = 0.0, structure = 0.0;
  std::vector<MetricJet> metrics;
  for (const auto& z : pts) {
    metrics.push_back(metric_from_potential(potential_at(d.log_psi, z, order, lambda)));
    const MetricJet& m = metrics.back();
    einstein = std::max(einstein, einstein_residual(m));
    structure = std::max({structure, metric_compatibility_residual(m), torsion_residual(m), curvature_symmetry_residual(m),
                          ricci_contraction_residual(m)});
  }
  rep.residual("einstein", anchors::einstein, einstein, 1e-8);
  rep.residual("structure", anchors::structure, structure, 1e-9);

  if (d.name == "ball") {
    double hmax = 0.0, hinv = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const CVec& z = pts[i];
      const double q = detail::one_minus_norm_sq(z);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const cplx za = z[static_cast<std::size_t>(a)], zb = z[static_cast<std::size_t>(b)];
          const cplx h = ((a == b ? q : 0.0) + std::conj(za) * zb) / (q * q);
          const cplx g = q * ((a == b ? 1.0 : 0.0) - za * std::conj(zb));
          hmax = std::max(hmax, std::abs(metrics[i].h(a, b) - h));
          hinv = std::max(hinv, std::abs(metrics[i].h_inv(a, b) - g));
        }
      const auto p = potential_at(d.log_psi, z, 2, lambda);
      const double r2 = detail::norm_sq(z);
      grad = std::max(grad, std::abs(grad_norm_sq(p, metric_from_potential(p)) - (n + 1.0) * (n + 1.0) * r2));
    }
    rep.residual("ball_metric", anchors::ball_metric, hmax, 1e-10);
    rep.residual("ball_metric_inverse", anchors::ball_metric_inverse, hinv, 1e-10);
    rep.residual("gradient_norm_law", anchors::ball_grad, grad, 1e-9);
    CVec edge(static_cast<std::size_t>(n));
    edge[0] = 0.999;
    const auto pe = potential_at(d.log_psi, edge, 2, lambda);
    const double rel = std::abs(std::sqrt(grad_norm_sq(pe, metric_from_potential(pe))) / (n + 1.0) - 1.0);
    rep.residual("boundary_value_r0.999", anchors::boundary_value, rel, 1e-3 * (1.0 + 1e-9));
  }
  if (d.name == "polydisc") {
    double grad = 0.0;
    for (const auto& z : pts) {
      const auto p = potential_at(d.log_psi, z, 2, lambda);
      grad = std::max(grad, std::abs(grad_norm_sq(p, metric_from_potential(p)) - 2.0 * (n + 1.0) * detail::norm_sq(z)));
    }
    rep.residual("gradient_norm_law", anchors::polydisc_grad, grad, 1e-9);
  }

  // Transformation law under seeded random automorphisms.
  if (d.name != "ball-cayley") {
    Rng rng(cfg.seed + 17);
    double law = 0.0, blaw = 0.0;
    const auto bergman = d.bergman ? std::optional<JetFn>(bergman_log_kernel(*d.bergman, n)) : std::nullopt;
    for (int i = 0; i < 50; ++i) {
      const Automorphism f = d.random_automorphism(rng);
      const CVec z = d.sample(rng);
      const CVec w = f.forward(z);
      const double j2 = std::norm(f.forward.jacobian(z));
      law = std::max(law, std::abs(d.psi(w) * j2 - d.psi(z)) / d.psi(z));
      if (d.bergman) {
        const double kz = bergman_kernel(*d.bergman, z), kw = bergman_kernel(*d.bergman, w);
        blaw = std::max(blaw, std::abs(kw * j2 - kz) / kz);
      }
    }
    rep.residual("transformation_law", anchors::transformation, law, 1e-9);
    if (d.bergman) rep.residual("bergman_transformation_law", anchors::bergman_transformation, blaw, 1e-9);
  }

  // Curvature identity on up to 20 points; constant-norm identities where they apply.
  const std::size_t nid = std::min<std::size_t>(20, pts.size());
  double curv = 0.0, i1 = 0.0, i2 = 0.0, cnorm = 0.0;
  for (std::size_t i = 0; i < nid; ++i) {
    const auto p = potential_at(d.log_psi, pts[i], order, lambda);
    const auto r = identity_residuals(p, metrics[i], covariant_derivatives(p, metrics[i]));
    curv = std::max(curv, r.curv);
    i1 = std::max(i1, r.id1);
    i2 = std::max(i2, r.id2);
    cnorm = std::max(cnorm, std::abs(grad_norm_sq(p, metrics[i]) - (n + 1.0) * (n + 1.0)));
  }
  rep.residual("curvature_identity", anchors::curvature_identity, curv, 1e-7);
  if (d.name == "halfplane" || d.name == "siegel") {
    rep.residual("constant_norm", anchors::constant_norm, cnorm, 1e-9);
    rep.residual("identity_1", anchors::id1, i1, 1e-8);
    rep.residual("identity_2", anchors::id2, i2, 1e-8);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// scale
// ---------------------------------------------------------------------------

inline ScalingConfig scaling_config(const RunConfig& cfg) {
  ScalingConfig s;
  s.domain = cfg.domain;
  s.dim = cfg.effective_dim();
  s.steps = cfg.steps;
  s.grid_radius = cfg.grid_radius.value_or(0.5);
  s.grid_points = cfg.grid_points.value_or(33);
  s.tol = cfg.tol.value_or(1e-6);
  s.bergman = cfg.bergman;
  s.order = cfg.order;
  s.seed = cfg.seed;
  if (!cfg.start.empty()) s.base_point = parse_point(cfg.start);
  return s;
}

inline json to_json(const ScalingRun& run) {
  json j;
  j["domain"] = run.domain.name;
  j["dim"] = run.domain.dim;
  j["density"] = run.config.bergman ? "bergman" : "ke_volume";
  j["base_point"] = to_json(run.p);
  j["tol"] = run.config.tol;
  json grid = json::array();
  for (const auto& q : run.grid) grid.push_back(to_json(q));
  j["grid"] = std::move(grid);
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json steps = json::array();
  for (const auto& s : run.steps) {
    json x;
    x["j"] = s.j;
    x["center"] = to_json(s.center);
    x["log_density_at_image"] = s.log_density_at_image;
    x["grad_norm_at_image"] = s.grad_norm_at_image;
    x["cauchy"] = num(s.cauchy);
    x["consistency"] = s.consistency;
    if (!s.sigma.empty()) {
      x["sigma_min"] = *std::min_element(s.sigma.begin(), s.sigma.end());
      x["sigma_max"] = *std::max_element(s.sigma.begin(), s.sigma.end());
    }
    if (s.gronwall_consistent) {
      x["normal_family_bound"] = s.gronwall_consistent->bound;
      x["normal_family_violations"] = s.gronwall_consistent->violations;
    }
    steps.push_back(std::move(x));
  }
  j["steps"] = std::move(steps);
  j["converged"] = run.converged;
  j["converged_at"] = run.converged_at;
  json eta = json::array();
  for (const auto& e : run.eta) eta.push_back(to_json(e));
  j["eta"] = std::move(eta);
  j["min_abs_eta"] = run.min_abs_eta;
  j["normal_sup"] = run.normal_sup;
  j["normal_inf"] = run.normal_inf;
  j["orbit_escape_monotone"] = run.orbit_escape_monotone;
  j["log_psi_inf"] = run.log_psi_inf;
  j["psi_inf_residual"] = run.psi_inf_residual;
  j["frankel_limit_diff"] = run.frankel_limit_diff ? json(*run.frankel_limit_diff) : json(nullptr);
  j["frankel_finite_diff"] = run.frankel_finite_diff;
  j["limit_gradient"] = num(run.limit_gradient);
  return j;
}

struct ScaleResult {
  Report report;
  ScalingRun run;
};

inline ScaleResult cmd_scale_run(const RunConfig& cfg) {
  ScaleResult out;
  Report& rep = out.report;
  rep.command = "scale";
  rep.config = cfg.to_json();
  const ScalingConfig sc = scaling_config(cfg);
  out.run = run_sequence(sc);
  ScalingRun& run = out.run;
  const auto& steps = run.steps;
  const double last_pair = steps.size() >= 2 ? std::max(steps[steps.size() - 2].cauchy, steps.back().cauchy) : NAN;
  rep.residual("convergence", anchors::scaling_cauchy, std::isnan(last_pair) ? INFINITY : last_pair, sc.tol);
  rep.above("eta_nonvanishing", anchors::nonvanishing, run.min_abs_eta, 0.01);
  if (run.frankel_limit_diff) rep.residual("frankel_limit", anchors::frankel, *run.frankel_limit_diff, sc.tol);
  rep.residual("frankel_rescaling", anchors::frankel, run.frankel_finite_diff, 1e-6);
  rep.residual("psi_inf_potential", anchors::psi_inf, run.psi_inf_residual, 1e-7);
  double consistency = 0.0;
  int violations = 0;
  for (const auto& s : steps) {
    consistency = std::max(consistency, s.consistency);
    if (s.gronwall_consistent) violations += s.gronwall_consistent->violations;
  }
  rep.residual("scaling_consistency", anchors::scaling_consistency, consistency, 1e-5);
  rep.residual("normal_family_violations", anchors::normal_family, violations, 0.0);
  if (run.domain.name == "ball" || run.domain.name == "ball-cayley") {
    if (run.converged) {
      const double dev = limit_gradient_check(run);
      rep.near("limit_gradient", anchors::limit_gradient, run.domain.lambda() + dev, run.domain.lambda(), 1e-3);
    } else {
      rep.messages.push_back("sequence did not converge; limit gradient not evaluated");
      rep.near("limit_gradient", anchors::limit_gradient, NAN, run.domain.lambda(), 1e-3);
    }
  }
  return out;
}

inline Report cmd_scale(const RunConfig& cfg) { return cmd_scale_run(cfg).report; }

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

inline CVec default_flow_start(const DomainModel& d) {
  CVec z(static_cast<std::size_t>(d.dim));
  if (d.name == "halfplane" || d.name == "siegel") z[0] = cplx(0.0, 1.0);
  return z;
}

struct FlowResult {
  Report report;
  std::optional<FlowTrace> trace;
};

inline FlowResult cmd_flow_run(const RunConfig& cfg) {
  FlowResult out;
  Report& rep = out.report;
  rep.command = "flow";
  rep.config = cfg.to_json();
  const DomainModel d = make_domain(cfg.domain, cfg.effective_dim());
  const int n = d.dim;
  FieldData fd;
  try {
    fd = build_field(d, 20, cfg.seed);
  } catch (const HypothesisError& e) {
    rep.messages.push_back(e.what());
    rep.above("constant_norm_hypothesis", anchors::constant_norm, 0.0, 0.0);
    return out;
  }
  const auto samples = interior_samples(d, cfg.grid_points.value_or(20), cfg.seed);
  const double c2 = fd.C * fd.C;

  double vlen = 0.0, vrho = 0.0, ann = 0.0, speed = 0.0, defect = 0.0;
  for (const auto& z : samples) {
    const FieldPoint f = field_at(fd, z);
    vlen = std::max(vlen, std::abs(f.norm_V2 - c2) / c2);
    vrho = std::max(vrho, std::abs(f.V_rho / f.rho + fd.lambda()));
    ann = std::max(ann, annihilation_check(fd, z) / std::abs(f.rho));
    speed = std::max(speed, std::abs(f.speed - fd.C / fd.lambda()));
    const auto hd = holomorphy_defect(fd, z, fd.t);
    defect = std::max(defect, hd.difference / std::max(1.0, std::abs(hd.closed_form)));
  }
  double quad = 0.0;
  for (double t : fd.exponent.roots)
    quad = std::max(quad, std::abs(c2 * c2 * t * t - 2.0 * fd.lambda() * c2 * t + fd.lambda() * c2 - n * fd.lambda() * fd.lambda()));
  rep.residual("exponent_roots", anchors::exponent, quad, 1e-12);
  if (fd.exponent.tangential)
    rep.near("tangential_root", anchors::exponent, fd.t, fd.lambda() / c2, 1e-15);
  rep.residual("holomorphy_defect", anchors::holomorphy_defect, defect, 1e-8);
  rep.residual("v_length", anchors::v_length, vlen, 1e-9);
  rep.residual("v_rho", anchors::v_rho, vrho, 1e-10);
  rep.residual("annihilation", anchors::annihilation, ann, 1e-9);
  rep.residual("z_length", anchors::z_length, speed, 1e-9);

  const double hstep = 1e-3;
  std::vector<CVec> hgrid;
  for (const auto& z : samples)
    if (d.boundary_distance(z) > 4.0 * hstep) hgrid.push_back(z);
  const double fdtol = n == 1 ? 1e-6 : 1e-5;
  rep.residual("holomorphic_W", anchors::holomorphic_field, holomorphy_grid_check(fd, hgrid, hstep, FieldComponent::W), fdtol);
  rep.residual("holomorphic_Z", anchors::holomorphic_field, holomorphy_grid_check(fd, hgrid, hstep, FieldComponent::Z), fdtol);

  const CVec start = cfg.start.empty() ? default_flow_start(d) : parse_point(cfg.start);
  if (static_cast<int>(start.size()) != n) throw ConfigError("start point has " + std::to_string(start.size()) + " coordinates, domain has " + std::to_string(n));
  if (!d.contains(start)) throw ConfigError("start point is not interior");
  out.trace = integrate_flow(fd, start, cfg.t0, cfg.t1, cfg.step);
  const FlowTrace& tr = *out.trace;
  rep.residual("rho_drift", anchors::tangency, tr.rho_drift(), 1e-8);
  rep.residual("speed_drift", anchors::z_length, tr.speed_drift(), 1e-7);
  if (d.name == "halfplane") {
    const cplx v = field_Z(fd, start)[0];
    double dev = 0.0;
    for (std::size_t i = 0; i < tr.states.size(); ++i)
      dev = std::max(dev, std::abs(tr.states[i][0] - (start[0] + v * (tr.times[i] - cfg.t0))));
    rep.residual("translation_orbit", anchors::translation_orbit, dev, 1e-8);
  }

  const double s = d.name == "halfplane" ? 0.5 : 0.25;
  std::vector<CVec> agrid(samples.begin(), samples.begin() + std::min<std::ptrdiff_t>(5, static_cast<std::ptrdiff_t>(samples.size())));
  const auto fa = verify_flow_automorphism(fd, s, agrid, 1e-2);
  const double atol = d.name == "halfplane" ? 1e-5 : 1e-4;
  rep.residual("flow_map_holomorphic", anchors::flow_automorphism, fa.holo_residual, atol);
  rep.residual("flow_map_isometry", anchors::flow_automorphism, fa.isometry_residual, atol);
  return out;
}

inline Report cmd_flow(const RunConfig& cfg) { return cmd_flow_run(cfg).report; }

// ---------------------------------------------------------------------------
// Dispatch and output
// ---------------------------------------------------------------------------

/// `report.json` -> `report`; no extension -> unchanged.
inline std::string output_stem(const std::string& out) {
  const std::filesystem::path p(out);
  return p.extension() == ".json" ? (p.parent_path() / p.stem()).string() : out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
}

/// Runs the configured command, writes the report (and artifacts when `out` is set)
/// and returns the report. Without `out` the report goes to `stdout_sink`.
inline Report run_command(const RunConfig& cfg, std::ostream* stdout_sink = nullptr) {
  cfg.validate();
  const auto t_begin = std::chrono::steady_clock::now();
  Report rep;
  std::string artifact, artifact_suffix;
  if (cfg.command == "verify") {
    rep = cmd_verify(cfg);
  } else if (cfg.command == "scale") {
    auto r = cmd_scale_run(cfg);
    rep = std::move(r.report);
    artifact = to_json(r.run).dump(2) + "\n";
    artifact_suffix = ".run.json";
  } else {
    auto r = cmd_flow_run(cfg);
    rep = std::move(r.report);
    if (r.trace) {
      std::ostringstream os;
      write_csv(os, *r.trace);
      artifact = os.str();
      artifact_suffix = ".trace.csv";
    }
  }
  if (cfg.timing) rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  const std::string text = rep.to_json().dump(2) + "\n";
  if (!cfg.out.empty()) {
    write_text(cfg.out, text);
    if (!artifact.empty()) write_text(output_stem(cfg.out) + artifact_suffix, artifact);
  } else if (stdout_sink) {
    *stdout_sink << text;
  }
  return rep;
}

}  // namespace kescale
