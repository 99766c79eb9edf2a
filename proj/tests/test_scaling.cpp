#include "oracles.hpp"

#include <kescale/scaling.hpp>

#include <gtest/gtest.h>

using namespace kescale;

namespace {

double max_diff(const CVec& a, const CVec& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

Automorphism identity_automorphism(int n) { return {identity_map(n), identity_map(n), "identity", {}}; }

}  // namespace

TEST(Step, IdentityAutomorphism) {
  const auto d = ball_model(2);
  const CVec p{0.1, 0.0}, z{0.3, cplx(0, 0.4)};
  const auto r = potential_scaling_step(d, identity_automorphism(2), p, z);
  EXPECT_NEAR(r.sigma, oracle::ball_psi(z) / oracle::ball_psi(p), 1e-13);
  EXPECT_EQ(r.jratio, cplx(1.0));
  EXPECT_LT(r.consistency, 1e-14);
}

TEST(Step, DiscMobiusAgainstClosedForms) {
  const auto d = ball_model(1);
  const auto f = ball::automorphism({0.9}, identity_matrix(1));
  const auto r = potential_scaling_step(d, f, {0.0}, {0.3});
  const cplx w = oracle::disc_mobius(0.9, 0.3);
  EXPECT_NEAR(r.sigma, oracle::ball_psi({w}) / oracle::ball_psi({0.9}), 1e-10 * r.sigma);
  // J(z)/J(0) = (1 - abar z)^{-2}.
  EXPECT_LT(std::abs(r.jratio - 1.0 / std::pow(1.0 - 0.9 * 0.3, 2)), 1e-13);
  EXPECT_LT(r.consistency, 1e-12);
}

TEST(Step, HalfPlaneTranslation) {
  const auto d = make_domain("halfplane", 1);
  const auto f = siegel::translation(1, 2.5);
  const CVec p{cplx(0, 1)}, z{cplx(0.4, 0.3)};
  const auto r = potential_scaling_step(d, f, p, z);
  EXPECT_NEAR(r.sigma, d.psi({z[0] + 2.5}) / d.psi({p[0] + 2.5}), 1e-13);
  EXPECT_EQ(r.jratio, cplx(1.0));
}

TEST(Step, ConsistencyOnRandomAutomorphisms) {
  for (const std::string name : {"ball", "polydisc", "siegel"}) {
    for (int n = 1; n <= 3; ++n) {
      const auto d = make_domain(name, n);
      Rng rng(100 + n);
      for (int i = 0; i < 30; ++i) {
        const auto f = d.random_automorphism(rng);
        const CVec p = d.sample(rng), z = d.sample(rng);
        EXPECT_LT(potential_scaling_step(d, f, p, z).consistency, 1e-9) << name;
      }
    }
  }
}

TEST(Step, RejectsExteriorPoints) {
  const auto d = ball_model(1);
  EXPECT_THROW(potential_scaling_step(d, identity_automorphism(1), {0.0}, {1.5}), DomainError);
  EXPECT_THROW(potential_scaling_step(d, identity_automorphism(1), {cplx(0, 1)}, {0.0}), DomainError);
}

TEST(Bergman, SigmaEqualsKeSigmaOnBall) {
  Rng rng(7);
  for (int n = 1; n <= 3; ++n) {
    const auto d = ball_model(n);
    for (int i = 0; i < 20; ++i) {
      const auto f = d.random_automorphism(rng);
      const CVec p = d.sample(rng), z = d.sample(rng);
      const auto a = potential_scaling_step(d, f, p, z), b = bergman_scaling_step(d, f, p, z);
      EXPECT_NEAR(a.sigma / b.sigma, 1.0, 1e-12);
      EXPECT_LT(std::abs(a.jratio - b.jratio), 1e-15);
      EXPECT_LT(b.consistency, 1e-9);
    }
  }
}

TEST(Bergman, IdentityAndPolydisc) {
  const auto d = polydisc_model(2);
  const CVec p{0.1, 0.2}, z{cplx(0.3, 0.1), -0.5};
  const auto r = bergman_scaling_step(d, identity_automorphism(2), p, z);
  EXPECT_NEAR(r.sigma, bergman_kernel(BergmanDomain::Polydisc, z) / bergman_kernel(BergmanDomain::Polydisc, p), 1e-12);
  Rng rng(9);
  for (int i = 0; i < 20; ++i)
    EXPECT_LT(bergman_scaling_step(d, d.random_automorphism(rng), d.sample(rng), d.sample(rng)).consistency, 1e-9);
  EXPECT_THROW(bergman_scaling_step(halfplane_siegel_model(2), identity_automorphism(2), {cplx(0, 1), 0.0}, {cplx(0, 1), 0.0}),
               DomainError);
}

TEST(Gronwall, BoundArithmetic) {
  const auto d = ball_model(2);
  const auto g = gronwall_bounds_check(d, identity_automorphism(2), {0.0, 0.0}, scaling_grid(2, 0.5, 9, 1));
  EXPECT_NEAR(g.R, std::atanh(0.5), 1e-15);
  EXPECT_NEAR(g.bound, 5.1962, 5e-5);
  EXPECT_EQ(g.C, 3.0);
}

TEST(Gronwall, IdentityAtBasePointIsTrivial) {
  const auto d = ball_model(2);
  const CVec p{0.2, 0.1};
  const auto g = gronwall_bounds_check(d, identity_automorphism(2), p, {p});
  EXPECT_NEAR(g.sigma_min, 1.0, 1e-15);
  EXPECT_LE(g.max_violation, 0.0);
  EXPECT_EQ(g.violations, 0);
}

TEST(Gronwall, CorruptedSigmaIsReported) {
  const auto d = ball_model(2);
  const auto grid = scaling_grid(2, 0.3, 9, 1);
  std::vector<double> sigma, dist;
  for (const auto& q : grid) {
    sigma.push_back(10.0 * potential_scaling_step(d, identity_automorphism(2), {0.0, 0.0}, q).sigma);
    dist.push_back(d.distance({0.0, 0.0}, q));
  }
  const auto g = gronwall_from_samples(sigma, dist, 3.0);
  EXPECT_GT(g.max_violation, 0.0);
  EXPECT_GT(g.violations, 0);
}

TEST(Gronwall, NormConsistentBoundHoldsAndIsSharp) {
  // |d log sigma| along a unit-speed curve is at most 2|d log psi| for the length
  // element ds^2 = h dz dzbar, so the bound with doubled distance must hold, and the
  // canonical sequence approaches it at the grid point opposite to the orbit.
  const auto d = ball_model(2);
  const auto grid = scaling_grid(2, 0.5, 33, 1);
  ScalingConfig cfg;
  cfg.dim = 2;
  for (int j = 1; j <= 12; ++j) {
    const auto f = sequence_map(cfg, d, j);
    const auto g = gronwall_bounds_check(d, f, {0.0, 0.0}, grid, 3.0, 2.0);
    EXPECT_EQ(g.violations, 0) << j;
    if (j == 12) {
      EXPECT_NEAR(g.sigma_max / g.bound, 1.0, 1e-3);
    }
  }
}

TEST(Gronwall, LiteralBoundFailsAtOppositePoint) {
  // sigma_1(-0.5 e_1) = (0.75)^{-3} (1.25)^6 exceeds e^{3 artanh 0.5} already at j = 1.
  const auto d = ball_model(2);
  ScalingConfig cfg;
  cfg.dim = 2;
  const auto g = gronwall_bounds_check(d, sequence_map(cfg, d, 1), {0.0, 0.0}, {{0.0, 0.0}, {-0.5, 0.0}});
  EXPECT_NEAR(g.sigma_max, std::pow(0.75, -3) * std::pow(1.25, 6), 1e-10);
  EXPECT_GT(g.max_violation, 3.0);
}

TEST(Gronwall, NeedsDistance) {
  const auto d = polydisc_model(2);
  EXPECT_THROW(gronwall_bounds_check(d, identity_automorphism(2), {0.0, 0.0}, {{0.0, 0.0}}), DomainError);
}

TEST(Frankel, IdentityAndUnitaryAreTranslations) {
  Rng rng(3);
  const CVec p{0.1, cplx(0, 0.2)}, z{-0.3, 0.25};
  CVec zp{z[0] - p[0], z[1] - p[1]};
  EXPECT_LT(max_diff(frankel_scaling(identity_map(2), p, z), zp), 1e-15);
  EXPECT_LT(max_diff(frankel_scaling(ball::unitary(random_unitary(2, rng)), p, z), zp), 1e-14);
}

TEST(Frankel, JacobianIsRatio) {
  const auto d = ball_model(2);
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto f = d.random_automorphism(rng);
    const CVec p = d.sample(rng), z = d.sample(rng);
    const HoloMap a = frankel_map(f.forward, p);
    const cplx ratio = f.forward.jacobian(z) / f.forward.jacobian(p);
    EXPECT_LT(std::abs(jacobian_from_jets(a, z) - ratio), 1e-10 * std::abs(ratio));
    EXPECT_LT(max_diff(a(p), {0.0, 0.0}), 1e-14);
    EXPECT_LT(max_abs_diff(differential(a, p), identity_matrix(2)), 1e-10);
  }
}

TEST(Frankel, SingularDifferentialRejected) {
  auto square = make_holo_map(
      1, [](auto z) { return std::vector<detail::elem_t<decltype(z)>>{z[0] * z[0]}; }, [](auto z) { return 2.0 * z[0]; });
  EXPECT_THROW(frankel_map(square, {0.0}), DomainError);
}

TEST(Frankel, CanonicalSequenceApproachesClosedFormLimit) {
  ScalingConfig cfg;
  cfg.dim = 2;
  const auto d = ball_model(2);
  const auto lim = frankel_limit(cfg, d);
  ASSERT_TRUE(lim.has_value());
  const CVec z{0.3, cplx(0.1, -0.2)};
  double prev = 1.0;
  for (int j = 4; j <= 20; j += 4) {
    const double gap = max_diff(frankel_scaling(sequence_map(cfg, d, j).forward, {0.0, 0.0}, z), (*lim)(z));
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-5);
  EXPECT_LT(std::abs(lim->jacobian(z) - jacobian_from_jets(*lim, z)), 1e-13);
}

TEST(Sequence, CanonicalBallConverges) {
  for (int n = 1; n <= 2; ++n) {
    ScalingConfig cfg;
    cfg.dim = n;
    cfg.steps = 26;
    const auto run = run_sequence(cfg);
    EXPECT_TRUE(run.converged);
    EXPECT_LT(run.steps.back().cauchy, 1e-6);
    EXPECT_GT(run.min_abs_eta, 0.01);
    ASSERT_TRUE(run.frankel_limit_diff.has_value());
    EXPECT_LT(*run.frankel_limit_diff, 1e-6);
    EXPECT_LT(run.frankel_finite_diff, 1e-6);
    EXPECT_LT(run.psi_inf_residual, 1e-7);
    EXPECT_TRUE(run.orbit_escape_monotone);
  }
}

TEST(Sequence, OrbitEscapesMonotonically) {
  ScalingConfig cfg;
  cfg.dim = 2;
  cfg.steps = 12;
  const auto run = run_sequence(cfg);
  for (std::size_t k = 1; k < run.steps.size(); ++k) {
    EXPECT_GT(run.steps[k].log_density_at_image, run.steps[k - 1].log_density_at_image);
    EXPECT_LT(run.steps[k].consistency, 1e-9);
  }
  // |d log psi|(f_j(p)) -> n + 1 from below.
  EXPECT_NEAR(run.steps.back().grad_norm_at_image, 3.0, 3.0 * std::ldexp(1.0, -11));
}

TEST(Sequence, TooFewStepsDoNotConverge) {
  ScalingConfig cfg;
  cfg.steps = 2;
  const auto run = run_sequence(cfg);
  EXPECT_FALSE(run.converged);
  EXPECT_THROW(run_sequence([] {
                 ScalingConfig c;
                 c.steps = 1;
                 return c;
               }()),
               ConfigError);
}

TEST(Sequence, StationarySequenceConvergesImmediately) {
  ScalingConfig cfg;
  cfg.dim = 2;
  cfg.steps = 4;
  cfg.sequence = SequenceKind::Stationary;
  cfg.stationary_center = {0.4, cplx(0, 0.3)};
  auto run = run_sequence(cfg);
  EXPECT_TRUE(run.converged);
  EXPECT_EQ(run.converged_at, 2);
  const auto d = ball_model(2);
  const auto f = ball::automorphism(cfg.stationary_center, identity_matrix(2));
  for (std::size_t i = 0; i < run.grid.size(); ++i) {
    const double expect = d.psi(f.forward(run.grid[i])) / d.psi(f.forward({0.0, 0.0}));
    EXPECT_NEAR(std::exp(run.log_psi_inf[i]) / expect, 1.0, 1e-10);
  }
  // Interior orbit: the limit gradient is |f(z)|(n+1), far from n+1 (negative control).
  const double dev = limit_gradient_check(run);
  EXPECT_GE(dev, 3.0 - 3.0 * 0.5 - 1e-12);
  const auto at_p = potential_at(run.log_psi_inf_fn, {0.0, 0.0}, 2, 3.0);
  EXPECT_NEAR(std::sqrt(grad_norm_sq(at_p, metric_from_potential(at_p))), 3.0 * 0.5, 1e-12);
}

TEST(Sequence, NormalFamilyBounds) {
  ScalingConfig cfg;
  cfg.dim = 2;
  cfg.steps = 12;
  const auto run = run_sequence(cfg);
  const auto d = ball_model(2);
  double rel_max = 0.0;
  for (const auto& q : run.grid) rel_max = std::max(rel_max, d.psi(q) / d.psi(run.p));
  // |r|^2 = (psi/psi(p)) / sigma with sigma bounded below by e^{-2CR}.
  const double a = std::exp(2.0 * 3.0 * std::atanh(0.5));
  EXPECT_LE(run.normal_sup, std::sqrt(a * rel_max));
  EXPECT_GE(run.normal_inf, 1.0 / std::sqrt(a));
  EXPECT_GT(run.normal_inf, 0.0);
}

TEST(Sequence, PolydiscAndBergmanVariants) {
  ScalingConfig cfg;
  cfg.domain = "polydisc";
  cfg.dim = 2;
  cfg.steps = 26;
  const auto pd = run_sequence(cfg);
  EXPECT_TRUE(pd.converged);
  ASSERT_TRUE(pd.frankel_limit_diff.has_value());
  EXPECT_LT(*pd.frankel_limit_diff, 1e-6);
  EXPECT_LT(pd.psi_inf_residual, 1e-7);
  cfg.bergman = true;
  const auto pb = run_sequence(cfg);
  EXPECT_TRUE(pb.converged);
  for (std::size_t i = 0; i < pd.eta.size(); ++i) EXPECT_LT(std::abs(pd.eta[i] - pb.eta[i]), 1e-15);
  EXPECT_LT(pb.psi_inf_residual, 1e-7);

  cfg.domain = "ball";
  const auto bb = run_sequence(cfg);
  EXPECT_TRUE(bb.converged);
  EXPECT_LT(bb.psi_inf_residual, 1e-7);
}

TEST(Sequence, RejectsUnsupportedConfigurations) {
  ScalingConfig cfg;
  cfg.domain = "siegel";
  cfg.dim = 2;
  EXPECT_THROW(run_sequence(cfg), ConfigError);
  cfg.domain = "ball";
  cfg.grid_radius = 1.2;
  EXPECT_THROW(run_sequence(cfg), ConfigError);
  cfg.grid_radius = 0.5;
  cfg.base_point = {0.4};
  cfg.dim = 1;
  cfg.bergman = false;
  EXPECT_NO_THROW(run_sequence(cfg));
  cfg.base_point = {1.4};
  EXPECT_THROW(run_sequence(cfg), DomainError);
}

TEST(LimitGradient, BoundaryValueAtFourteenSteps) {
  for (int n = 1; n <= 2; ++n) {
    ScalingConfig cfg;
    cfg.dim = n;
    cfg.steps = 14;
    cfg.tol = 1e-2;
    auto run = run_sequence(cfg);
    ASSERT_TRUE(run.converged);
    EXPECT_LT(limit_gradient_check(run), 1e-3);
  }
}

TEST(LimitGradient, RequiresConvergedBallRun) {
  ScalingConfig cfg;
  cfg.steps = 3;
  auto run = run_sequence(cfg);
  EXPECT_THROW(limit_gradient_check(run), HypothesisError);
  cfg.domain = "polydisc";
  cfg.steps = 26;
  auto pd = run_sequence(cfg);
  EXPECT_THROW(limit_gradient_check(pd), HypothesisError);
}
