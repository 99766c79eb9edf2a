#include "oracles.hpp"

#include <kescale/domains.hpp>
#include <kescale/kahler.hpp>

#include <gtest/gtest.h>

using namespace kescale;

namespace {

MetricJet ball_metric_at(const CVec& z, double lambda = -1.0) {
  const int n = static_cast<int>(z.size());
  return metric_from_potential(potential_at(potentials::ball_log_psi(n), z, 4, lambda > 0 ? lambda : n + 1.0));
}

}  // namespace

TEST(Metric, BallAtCenterIsIdentity) {
  const MetricJet m = ball_metric_at({0.0, 0.0});
  EXPECT_LT(max_abs_diff(m.h, identity_matrix(2)), 1e-15);
  EXPECT_NEAR(m.psi, 1.0, 1e-15);
}

TEST(Metric, BallPsiOffCenter) {
  const MetricJet m = ball_metric_at({0.5, 0.0});
  EXPECT_NEAR(m.psi, std::pow(0.75, -3.0), 1e-12);
  EXPECT_NEAR(m.psi, 2.370370370370, 1e-9);
}

TEST(Metric, BallClosedFormsOnGrid) {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& z : ball_grid(n, 0.9, 64, 100 + n)) {
      const MetricJet m = ball_metric_at(z);
      EXPECT_LT(max_abs_diff(m.h, oracle::ball_metric(z)), 1e-10);
      EXPECT_LT(max_abs_diff(m.h_inv, oracle::ball_metric_inverse(z)), 1e-10);
      EXPECT_LT(max_abs_diff(m.h * m.h_inv.transpose(), identity_matrix(n)), 1e-12);
      EXPECT_NEAR(m.psi / oracle::ball_psi(z), 1.0, 1e-12);
    }
  }
}

TEST(Metric, RejectsNonPlurisubharmonicPotential) {
  const CVec z{0.2};
  const auto jets = lift_coordinates(z, 2);
  const Jet concave = log(1.0 - jets[0] * conj(jets[0]));
  EXPECT_THROW(metric_from_potential({concave, 2.0}), MetricError);
  EXPECT_THROW(metric_from_potential({concave.zero_like(), 2.0}), MetricError);
}

TEST(Metric, LowOrderLeavesCurvatureEmpty) {
  const CVec z{0.1, 0.2};
  const MetricJet m2 = metric_from_potential(potential_at(potentials::ball_log_psi(2), z, 2, 3.0));
  EXPECT_FALSE(m2.has_connection);
  EXPECT_THROW(einstein_residual(m2), JetError);
  const MetricJet m3 = metric_from_potential(potential_at(potentials::ball_log_psi(2), z, 3, 3.0));
  EXPECT_TRUE(m3.has_connection);
  EXPECT_FALSE(m3.has_curvature);
  EXPECT_THROW(metric_from_potential(potential_at(potentials::ball_log_psi(2), z, 1, 3.0)), JetError);
}

TEST(Einstein, BallAndPolydiscGrids) {
  for (int n = 1; n <= 3; ++n) {
    const auto pd = polydisc_model(n);
    for (const auto& z : ball_grid(n, 0.9, 64, 200 + n)) {
      EXPECT_LT(einstein_residual(ball_metric_at(z)), 1e-8);
    }
    for (const auto& z : interior_samples(pd, 64, 300 + n)) {
      EXPECT_LT(einstein_residual(metric_from_potential(pd.canonical_potential(z))), 1e-8);
    }
  }
}

TEST(Einstein, PolydiscExamplePoint) {
  const auto pd = polydisc_model(2);
  EXPECT_LT(einstein_residual(metric_from_potential(pd.canonical_potential({0.5, cplx(0, -0.3)}))), 1e-8);
}

TEST(Einstein, WrongNormalisationIsDetected) {
  EXPECT_GT(einstein_residual(ball_metric_at({0.0, 0.0}, 2.0)), 0.1);
}

TEST(GradNorm, BallLaw) {
  for (int n = 1; n <= 3; ++n)
    for (const auto& z : ball_grid(n, 0.9, 64, 400 + n)) {
      const auto p = potential_at(potentials::ball_log_psi(n), z, 2, n + 1.0);
      EXPECT_NEAR(grad_norm_sq(p, metric_from_potential(p)), oracle::ball_grad_norm_sq(z), 1e-9);
    }
  const auto p = potential_at(potentials::ball_log_psi(2), {0.5, 0.0}, 2, 3.0);
  EXPECT_NEAR(grad_norm_sq(p, metric_from_potential(p)), 2.25, 1e-12);
  const auto p0 = potential_at(potentials::ball_log_psi(2), {0.0, 0.0}, 2, 3.0);
  EXPECT_EQ(grad_norm_sq(p0, metric_from_potential(p0)), 0.0);
}

TEST(GradNorm, PolydiscLaw) {
  const auto pd = polydisc_model(2);
  const auto p = pd.canonical_potential({0.5, 0.5}, 2);
  EXPECT_NEAR(grad_norm_sq(p, metric_from_potential(p)), 3.0, 1e-12);
  for (const auto& z : interior_samples(pd, 20, 7)) {
    const auto q = pd.canonical_potential(z, 2);
    EXPECT_NEAR(grad_norm_sq(q, metric_from_potential(q)), oracle::polydisc_grad_norm_sq(z), 1e-9);
  }
}

TEST(Covariant, MixedSecondEqualsLambdaMetric) {
  const auto p = potential_at(potentials::ball_log_psi(2), {0.3, 0.1}, 4, 3.0);
  const auto m = metric_from_potential(p);
  const auto c = covariant_derivatives(p, m);
  CMatrix scaled = m.h;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) scaled(a, b) *= 3.0;
  EXPECT_LT(max_abs_diff(c.phi2_mixed, scaled), 1e-14);
  EXPECT_LT(max_abs_diff(c.phi2, c.phi2.transpose()), 1e-12);
}

TEST(Covariant, HalfPlaneFirstDerivative) {
  const cplx w(0.0, 1.0);
  const auto p = potential_at(potentials::siegel_log_psi(1), {w}, 4, 2.0);
  const auto m = metric_from_potential(p);
  const auto c = covariant_derivatives(p, m);
  EXPECT_LT(std::abs(c.phi1[0] - cplx(0.0, 1.0)), 1e-14);
  EXPECT_LT(std::abs(c.phi1[0] - oracle::halfplane_phi_w(w)), 1e-14);
  EXPECT_NEAR(m.psi, oracle::halfplane_psi(w), 1e-14);
  EXPECT_NEAR(grad_norm_sq(p, m), 4.0, 1e-13);
}

TEST(Covariant, ThirdDerivativeSymmetryOnBall) {
  Rng rng(23);
  for (int i = 0; i < 20; ++i) {
    const CVec z = rng.in_ball(2, 0.9);
    const auto p = potential_at(potentials::ball_log_psi(2), z, 4, 3.0);
    EXPECT_LT(third_derivative_symmetry(covariant_derivatives(p, metric_from_potential(p))), 1e-9);
  }
}

TEST(Covariant, NeedsOrderThree) {
  const auto p = potential_at(potentials::ball_log_psi(2), {0.1, 0.1}, 2, 3.0);
  EXPECT_THROW(covariant_derivatives(p, metric_from_potential(p)), JetError);
  const auto p3 = potential_at(potentials::ball_log_psi(2), {0.1, 0.1}, 3, 3.0);
  const auto c3 = covariant_derivatives(p3, metric_from_potential(p3));
  EXPECT_FALSE(c3.has_third);
  EXPECT_THROW(identity_residuals(p3, metric_from_potential(p3), c3), JetError);
}

TEST(Identities, HalfPlaneConstantNorm) {
  const auto p = potential_at(potentials::siegel_log_psi(1), {cplx(0.3, 1.2)}, 4, 2.0);
  const auto m = metric_from_potential(p);
  const auto r = identity_residuals(p, m, covariant_derivatives(p, m));
  EXPECT_LT(r.id1, 1e-8);
  EXPECT_LT(r.id2, 1e-8);
  EXPECT_LT(r.curv, 1e-7);
}

TEST(Identities, SiegelConstantNorm) {
  const auto d = halfplane_siegel_model(2);
  for (const auto& z : interior_samples(d, 20, 29)) {
    const auto p = d.canonical_potential(z);
    const auto m = metric_from_potential(p);
    const auto r = identity_residuals(p, m, covariant_derivatives(p, m));
    EXPECT_LT(r.id1, 1e-8);
    EXPECT_LT(r.id2, 1e-8);
    EXPECT_LT(r.curv, 1e-7);
  }
}

TEST(Identities, CurvatureIdentityNeedsNoConstancy) {
  const auto p = potential_at(potentials::ball_log_psi(2), {0.2, cplx(0, -0.4)}, 4, 3.0);
  const auto m = metric_from_potential(p);
  EXPECT_LT(identity_residuals(p, m, covariant_derivatives(p, m)).curv, 1e-7);
}

TEST(Identities, FirstIdentityFailsForBallCanonicalPotential) {
  const auto p = potential_at(potentials::ball_log_psi(2), {0.5, 0.0}, 4, 3.0);
  const auto m = metric_from_potential(p);
  EXPECT_GT(identity_residuals(p, m, covariant_derivatives(p, m)).id1, 0.1);
}

TEST(Invariants, StructureResidualsOnCatalog) {
  for (const std::string name : {"ball", "polydisc", "halfplane", "siegel", "ball-cayley"}) {
    const auto d = make_domain(name, 2);
    for (const auto& z : interior_samples(d, 100, 31)) {
      const auto m = metric_from_potential(d.canonical_potential(z));
      EXPECT_LT(metric_compatibility_residual(m), 1e-9) << name;
      EXPECT_LT(torsion_residual(m), 1e-9) << name;
      EXPECT_LT(curvature_symmetry_residual(m), 1e-9) << name;
      EXPECT_LT(ricci_contraction_residual(m), 1e-9) << name;
      EXPECT_LT(max_abs_diff(m.h * m.h_inv.transpose(), identity_matrix(d.dim)), 1e-12) << name;
    }
  }
}

TEST(Invariants, AutomorphismsAreIsometries) {
  for (const std::string name : {"ball", "polydisc", "siegel"}) {
    const auto d = make_domain(name, 2);
    Rng rng(37);
    for (int i = 0; i < 20; ++i) {
      const auto f = d.random_automorphism(rng);
      const CVec p = d.sample(rng);
      const auto pulled = pullback_potential(d.log_psi, f.forward, PullbackKind::Potential);
      const auto a = potential_at(pulled, p, 2, d.lambda());
      const auto b = d.canonical_potential(f.forward(p), 2);
      const double ga = grad_norm_sq(a, metric_from_potential(a));
      const double gb = grad_norm_sq(b, metric_from_potential(b));
      EXPECT_NEAR(ga, gb, 1e-8 * std::max(1.0, gb)) << name;
    }
  }
}
