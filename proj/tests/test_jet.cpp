#include <kescale/finite_difference.hpp>
#include <kescale/jet.hpp>
#include <kescale/random.hpp>

#include <gtest/gtest.h>

using namespace kescale;

namespace {

Jet random_jet(int n, int k, const CVec& p, Rng& rng) {
  Jet j(n, k, p);
  for (std::size_t i = 0; i < j.coefficients().size(); ++i) j.raw(i) = rng.complex_normal();
  return j;
}

Jet random_real_jet(int n, int k, const CVec& p, Rng& rng) {
  Jet j = random_jet(n, k, p, rng);
  return 0.5 * (j + conj(j));
}

double max_coeff_diff(const Jet& a, const Jet& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i) w = std::max(w, std::abs(a.raw(i) - b.raw(i)));
  return w;
}

}  // namespace

TEST(Lift, CoordinateJetOneDim) {
  const Jet z = lift_coordinate(1, 0, {0.3}, 2);
  EXPECT_EQ(z.constant_term(), cplx(0.3));
  EXPECT_EQ(z.coefficient(MultiIndex::from_slots(1, {0})), cplx(1.0));
  EXPECT_EQ(z.coefficient(MultiIndex::from_slots(1, {}, {0})), cplx(0.0));
  EXPECT_EQ(z.coefficient(MultiIndex::from_slots(1, {0, 0})), cplx(0.0));
}

TEST(Lift, SecondCoordinateTwoDim) {
  const Jet z = lift_coordinate(2, 1, {0.0, cplx(0, 0.5)}, 4);
  EXPECT_EQ(z.constant_term(), cplx(0, 0.5));
  EXPECT_EQ(z.coefficient(MultiIndex::from_slots(2, {1})), cplx(1.0));
  EXPECT_EQ(z.coefficient(MultiIndex::from_slots(2, {0})), cplx(0.0));
}

TEST(Lift, ConjugateMovesUnitToAntiSlot) {
  const Jet zb = conj(lift_coordinate(2, 0, {cplx(0.1, 0.2), 0.0}, 3));
  EXPECT_EQ(zb.constant_term(), cplx(0.1, -0.2));
  EXPECT_EQ(zb.coefficient(MultiIndex::from_slots(2, {}, {0})), cplx(1.0));
  EXPECT_EQ(zb.coefficient(MultiIndex::from_slots(2, {0})), cplx(0.0));
}

TEST(Lift, RejectsBadIndexAndOrder) {
  EXPECT_THROW(lift_coordinate(2, 2, {0.0, 0.0}, 2), JetError);
  EXPECT_THROW(lift_coordinate(1, 0, {0.0}, 5), JetError);
}

TEST(Arith, ZTimesZbar) {
  const Jet z = lift_coordinate(1, 0, {0.0}, 2);
  const Jet p = z * conj(z);
  EXPECT_EQ(p.coefficient(MultiIndex::from_slots(1, {0}, {0})), cplx(1.0));
  double others = 0.0;
  for (std::size_t i = 0; i < p.coefficients().size(); ++i)
    if (p.coefficient(MultiIndex::from_slots(1, {0}, {0})) != p.raw(i)) others = std::max(others, std::abs(p.raw(i)));
  EXPECT_EQ(others, 0.0);
}

TEST(Arith, GeometricSeriesDivision) {
  const Jet z = lift_coordinate(1, 0, {0.0}, 4);
  const Jet q = 1.0 / (1.0 - z * conj(z));
  // 1 / (1 - x) = sum x^k with x = |z|^2.
  EXPECT_NEAR(std::abs(q.constant_term() - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(q.coefficient(MultiIndex::from_slots(1, {0}, {0})) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(q.coefficient(MultiIndex::from_slots(1, {0, 0}, {0, 0})) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(q.coefficient(MultiIndex::from_slots(1, {0, 0})), cplx(0.0));
}

TEST(Arith, DivisionByZeroConstantThrows) {
  const Jet z = lift_coordinate(1, 0, {0.0}, 2);
  EXPECT_THROW(1.0 / z, JetError);
}

TEST(Arith, MismatchedOperandsThrow) {
  const Jet a = lift_coordinate(1, 0, {0.0}, 2);
  const Jet b = lift_coordinate(1, 0, {0.1}, 2);
  const Jet c = lift_coordinate(1, 0, {0.0}, 3);
  EXPECT_THROW(a + b, JetError);
  EXPECT_THROW(a * c, JetError);
}

TEST(Arith, ConjIsInvolution) {
  Rng rng(11);
  const Jet j = random_jet(2, 4, {0.1, -0.2}, rng);
  EXPECT_EQ(max_coeff_diff(conj(conj(j)), j), 0.0);
}

TEST(Properties, RingAxioms) {
  Rng rng(3);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k <= 4; ++k) {
      const CVec p = rng.in_ball(n, 0.5);
      const Jet a = random_jet(n, k, p, rng), b = random_jet(n, k, p, rng), c = random_jet(n, k, p, rng);
      EXPECT_LT(max_coeff_diff((a + b) * c, a * c + b * c), 1e-13);
      EXPECT_LT(max_coeff_diff((a * b) * c, a * (b * c)), 1e-13);
      EXPECT_LT(max_coeff_diff(a * b, b * a), 1e-13);
      EXPECT_LT(max_coeff_diff(a - a, a.zero_like()), 1e-15);
    }
  }
}

TEST(Properties, DivisionInvertsMultiplication) {
  Rng rng(5);
  const CVec p{0.2, cplx(0, -0.1)};
  Jet a = random_jet(2, 4, p, rng), b = random_jet(2, 4, p, rng);
  b.raw(0) += 3.0;
  EXPECT_LT(max_coeff_diff((a / b) * b, a), 1e-12);
}

TEST(Properties, LeibnizOnFirstOrder) {
  Rng rng(7);
  const CVec p{0.3, 0.1};
  const Jet a = random_jet(2, 3, p, rng), b = random_jet(2, 3, p, rng);
  const Jet ab = a * b;
  for (int v = 0; v < 2; ++v) {
    for (const auto& m : {MultiIndex::from_slots(2, {v}), MultiIndex::from_slots(2, {}, {v})}) {
      const cplx lhs = extract_derivative(ab, m);
      const cplx rhs = extract_derivative(a, m) * b.constant_term() + a.constant_term() * extract_derivative(b, m);
      EXPECT_LT(std::abs(lhs - rhs), 1e-13);
    }
  }
}

TEST(Properties, RealFunctionsSatisfyBarSwap) {
  const CVec p{cplx(0.3, 0.2), cplx(-0.1, 0.4)};
  const auto z = lift_coordinates(p, 4);
  const Jet s = z[0] * conj(z[0]) + z[1] * conj(z[1]);
  const Jet phi = -3.0 * log(1.0 - s) + exp(z[0] + conj(z[0])) * s;
  EXPECT_LT(reality_defect(phi), 1e-14);
  EXPECT_GT(reality_defect(z[0] * z[1]), 0.5);
}

TEST(Properties, HolomorphicCompositionsStayHolomorphic) {
  const CVec p{cplx(0.3, 0.2), cplx(-0.1, 0.4)};
  const auto z = lift_coordinates(p, 4);
  const Jet f = exp(z[0] * z[1]) / (2.0 - z[0]) + z[1] * z[1] * z[1];
  EXPECT_EQ(antiholomorphic_part(f), 0.0);
  std::vector<Jet> inner{f, z[0] + z[1]};
  const Jet w = lift_coordinate(2, 0, {f.constant_term(), (z[0] + z[1]).constant_term()}, 4);
  EXPECT_EQ(antiholomorphic_part(compose(w * w, inner)), 0.0);
}

TEST(Transcendental, LogExpInverse) {
  Rng rng(13);
  for (int n = 1; n <= 3; ++n) {
    const CVec p = rng.in_ball(n, 0.5);
    const Jet j = random_real_jet(n, 4, p, rng);
    EXPECT_LT(max_coeff_diff(log(exp(j)), j), 1e-12);
  }
}

TEST(Transcendental, LogOfPoincareDensity) {
  const Jet z = lift_coordinate(1, 0, {0.0}, 2);
  const Jet l = log(pow(1.0 - z * conj(z), -2.0));
  EXPECT_NEAR(l.coefficient(MultiIndex::from_slots(1, {0}, {0})).real(), 2.0, 1e-15);
  EXPECT_NEAR(std::abs(l.constant_term()), 0.0, 1e-15);
}

TEST(Transcendental, ExpOfZeroIsOne) {
  const Jet zero(2, 4, {0.1, 0.2});
  EXPECT_EQ(max_coeff_diff(exp(zero), zero.constant_like(1.0)), 0.0);
}

TEST(Transcendental, LogRejectsNonPositive) {
  const Jet z = lift_coordinate(1, 0, {0.5}, 2);
  EXPECT_THROW(log(z - 1.0), JetError);
  EXPECT_THROW(log(z * cplx(0, 1)), JetError);
  EXPECT_THROW(pow(z - 1.0, 0.5), JetError);
}

TEST(Transcendental, PowMatchesRepeatedProduct) {
  const CVec p{0.3};
  const Jet z = lift_coordinate(1, 0, p, 4);
  const Jet u = 1.0 + z * conj(z);
  EXPECT_LT(max_coeff_diff(pow(u, 3.0), u * u * u), 1e-13);
  EXPECT_LT(max_coeff_diff(pow(u, -1.0), 1.0 / u), 1e-13);
}

TEST(Compose, SquareOfShift) {
  const cplx c(0.2, -0.3);
  const Jet z = lift_coordinate(1, 0, {0.0}, 4);
  const Jet inner = z + c;
  const Jet w = lift_coordinate(1, 0, {c}, 4);
  const Jet lhs = compose(w * w, std::vector<Jet>{inner});
  EXPECT_LT(max_coeff_diff(lhs, inner * inner), 1e-15);
}

TEST(Compose, IdentityMapReturnsOuter) {
  Rng rng(17);
  const CVec p{0.1, 0.2};
  const Jet outer = random_jet(2, 4, p, rng);
  const auto id = lift_coordinates(p, 4);
  EXPECT_LT(max_coeff_diff(compose(outer, id), outer), 1e-15);
}

TEST(Compose, RejectsBaseMismatchAndArity) {
  const Jet outer = lift_coordinate(1, 0, {0.5}, 2);
  const Jet inner = lift_coordinate(1, 0, {0.0}, 2);
  EXPECT_THROW(compose(outer, std::vector<Jet>{inner}), JetError);
  EXPECT_THROW(compose(outer, std::vector<Jet>{inner, inner}), JetError);
}

TEST(Compose, MatchesDirectEvaluationOfNonpolynomialOuter) {
  const CVec p{cplx(0.1, 0.2)};
  const Jet z = lift_coordinate(1, 0, p, 4);
  const Jet g = z / (2.0 - z);
  const CVec w0{g.constant_term()};
  const Jet w = lift_coordinate(1, 0, w0, 4);
  const Jet outer = -2.0 * log(1.0 - w * conj(w));
  const Jet direct = -2.0 * log(1.0 - g * conj(g));
  EXPECT_LT(max_coeff_diff(compose(outer, std::vector<Jet>{g}), direct), 1e-13);
}

TEST(Derivatives, ConstantIndexReturnsValue) {
  const Jet z = lift_coordinate(1, 0, {0.4}, 3);
  EXPECT_EQ(extract_derivative(z * z, MultiIndex::zero(1)), cplx(0.4 * 0.4));
  EXPECT_THROW(extract_derivative(z, MultiIndex::from_slots(1, {0, 0, 0, 0})), JetError);
}

TEST(Derivatives, MixedPartialOfDiscPotentialAtCenter) {
  const Jet z = lift_coordinate(1, 0, {0.0}, 4);
  const Jet phi = -2.0 * log(1.0 - z * conj(z));
  EXPECT_NEAR(extract_derivative(phi, MultiIndex::from_slots(1, {0}, {0})).real(), 2.0, 1e-15);
  // d^2 dbar^2 of -2 log(1-|z|^2) at 0 is 2 * 2!2! * (1/2) = 4.
  EXPECT_NEAR(extract_derivative(phi, MultiIndex::from_slots(1, {0, 0}, {0, 0})).real(), 4.0, 1e-14);
}

TEST(Derivatives, MatchFiniteDifferencesOnSmoothFunctions) {
  Rng rng(19);
  const int n = 2;
  auto jet_fn = [](std::span<const Jet> z) {
    const Jet s = z[0] * conj(z[0]) + 0.5 * z[1] * conj(z[1]);
    return exp(0.3 * (z[0] + conj(z[1]))) * log(2.0 + s) + z[0] * z[1] * conj(z[0]);
  };
  auto scalar = [](const CVec& z) {
    const double s = std::norm(z[0]) + 0.5 * std::norm(z[1]);
    return std::exp(0.3 * (z[0] + std::conj(z[1]))) * std::log(2.0 + s) + z[0] * z[1] * std::conj(z[0]);
  };
  for (int trial = 0; trial < 5; ++trial) {
    const CVec p = rng.in_ball(n, 0.7);
    const Jet j = jet_fn(lift_coordinates(p, 3));
    const auto& t = j.table();
    for (std::size_t i = 1; i < t.count(3); ++i) {
      auto e = t.exponents(i);
      MultiIndex m = MultiIndex::zero(n);
      for (int a = 0; a < n; ++a) {
        m.holo[static_cast<std::size_t>(a)] = e[static_cast<std::size_t>(a)];
        m.anti[static_cast<std::size_t>(a)] = e[static_cast<std::size_t>(n + a)];
      }
      const cplx ad = extract_derivative(j, m);
      const cplx fd = fd_crosscheck(scalar, p, m, 1e-2);
      EXPECT_LT(std::abs(ad - fd), 1e-6 * std::max(1.0, std::abs(ad))) << "degree " << m.degree();
    }
  }
}

TEST(FiniteDifference, ExactOnPolynomials) {
  auto f = [](const CVec& z) { return z[0] * z[0] * std::conj(z[0]) + 3.0 * std::conj(z[0]); };
  const CVec p{cplx(0.2, 0.1)};
  // d dbar of z^2 zbar is 2z.
  EXPECT_LT(std::abs(fd_wirtinger(f, p, MultiIndex::from_slots(1, {0}, {0}), 1e-2) - 2.0 * p[0]), 1e-10);
  EXPECT_LT(std::abs(fd_wirtinger(f, p, MultiIndex::from_slots(1, {0, 0}, {0}), 1e-2) - 2.0), 1e-8);
}

TEST(FiniteDifference, HolomorphicFunctionsHaveNoAntiDerivatives) {
  auto f = [](const CVec& z) { return std::exp(z[0]) / (2.0 - z[1]); };
  const CVec p{cplx(0.2, 0.1), cplx(-0.3, 0.2)};
  EXPECT_LT(std::abs(fd_crosscheck(f, p, MultiIndex::from_slots(2, {}, {0}), 1e-3)), 1e-9);
  EXPECT_LT(std::abs(fd_crosscheck(f, p, MultiIndex::from_slots(2, {0}, {1}), 1e-3)), 1e-7);
}

TEST(FiniteDifference, RejectsOrderFiveAndBadStep) {
  auto f = [](const CVec& z) { return z[0]; };
  EXPECT_THROW(fd_wirtinger(f, {0.0}, MultiIndex::from_slots(1, {0, 0, 0}, {0, 0}), 1e-2), JetError);
  EXPECT_THROW(fd_wirtinger(f, {0.0}, MultiIndex::from_slots(1, {0}), 0.0), JetError);
}
