#include "sphconv/convex.hpp"
#include "sphconv/errors.hpp"

#include <boost/rational.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sphconv;

namespace {

constexpr double kPi = std::numbers::pi;

const BumpProfile& bump01() {
  static const BumpProfile b = BumpProfile::build(0.1);
  return b;
}

SpherePoint polar_point(int n, double v, double phi, Rng& rng) {
  Vec x = Vec::Zero(n + 1);
  x[0] = v * std::sin(phi);
  x[1] = v * std::cos(phi);
  Vec rest(n - 1);
  std::normal_distribution<double> g;
  for (int i = 0; i < n - 1; ++i) rest[i] = g(rng);
  x.tail(n - 1) = rest.normalized() * std::sqrt(1 - v * v);
  return SpherePoint(x);
}

}  // namespace

TEST(LambdaMin, ExamplesExactRational) {
  using Q = boost::rational<long long>;
  EXPECT_EQ(lambda_min_formula(Q(1), Q(1), Q(1)), Q(7, 2));
  EXPECT_EQ(lambda_min_formula(Q(2), Q(0), Q(1)), Q(1));
  EXPECT_EQ(lambda_min_formula(Q(1), Q(2), Q(2)), Q(21, 8));
  EXPECT_DOUBLE_EQ(lambda_min({1, 1, 1}), 3.5);
  EXPECT_DOUBLE_EQ(lambda_min({1, 2, 2}), 2.625);
  EXPECT_DOUBLE_EQ(lambda_min({2, 0, 1}), 1.0);
  EXPECT_THROW(lambda_min({0, 1, 1}), DomainError);
  EXPECT_THROW(lambda_min({1, 1, 0}), DomainError);
  EXPECT_THROW(lambda_min({1, -1, 1}), DomainError);
}

TEST(LambdaMin, ConvexifiesModelFunction) {
  // For Hess h = C g + B with |B| <= c0 and |dh(X)| >= c1 |X|, the
  // exponential's Hessian lam (Hess h + lam dh^2) dominates C/2 once lam
  // exceeds the formula. Check on the 2x2 worst case with dh(X) = c1 cos a.
  for (const HessBounds b : {HessBounds{1, 1, 1}, HessBounds{0.3, 2, 0.5}, HessBounds{2, 0.1, 1.5}}) {
    const double lam = lambda_min(b);
    for (double a = 0.0; a < kPi; a += 0.01) {
      const double along = b.c1 * std::cos(a);
      // Hess h(X,X) >= C - c0 on the normal-to-gradient mix; use the bound C
      // on the tangent part and -c0 on the rest.
      const double hess = b.C * std::sin(a) * std::sin(a) - b.c0 * std::cos(a) * std::cos(a) -
                          2 * b.c0 * std::abs(std::sin(a) * std::cos(a));
      EXPECT_GE(hess + lam * along * along, b.C / 2 - 1e-12) << a;
    }
  }
}

TEST(SingleConvex, ArcsinIdentity) {
  const double c = 0.2;
  for (int i = 1; i <= 100; ++i) {
    const double v = c + (1 - c) * i / 100.0;
    if (v >= 1.0) continue;
    const double f1 = SingleConvexFn::profile_prime(c, v);
    const double f2 = SingleConvexFn::profile_second(c, v);
    EXPECT_LT(f1, 0.0);
    EXPECT_NEAR(f1, -c / (v * std::sqrt(v * v - c * c)), 1e-14);
    EXPECT_LE(std::abs(v * f1 * f1 * f1 + f2 + 2 * f1 / v), 1e-9 * std::max(1.0, std::abs(f2)));
  }
}

TEST(SingleConvex, ProfileDerivativesMatchFiniteDifferences) {
  const double c = 0.2;
  const double h = 1e-6;
  for (double v = 0.3; v < 0.99; v += 0.05) {
    EXPECT_NEAR((SingleConvexFn::profile(c, v + h) - SingleConvexFn::profile(c, v - h)) / (2 * h),
                SingleConvexFn::profile_prime(c, v), 1e-7);
    EXPECT_NEAR((SingleConvexFn::profile_prime(c, v + h) - SingleConvexFn::profile_prime(c, v - h)) / (2 * h),
                SingleConvexFn::profile_second(c, v), 1e-5);
  }
}

TEST(SingleConvex, TangentialHessianPositiveOnLevelDirections) {
  const double c = 0.2;
  const SingleConvexFn fn(c, 1.0);
  const ScalarField phi_t = [&](const SpherePoint& x) { return fn.phi_tilde(x); };
  const PolarRegion K{0.4, 0.95, 0.5, 2 * kPi - 0.5};
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const SpherePoint x = K.sample(3, rng);
    // Directions with d(phi + f(v))(X) = 0, i.e. dphi = -f' dv.
    const Vec g = grad_fd(phi_t, x, 1e-6).vec();
    const TangentVector R = random_unit_tangent(x, rng);
    const Vec Y = R.vec() - (R.vec().dot(g) / g.squaredNorm()) * g;
    const TangentVector X(x, Y.normalized());
    const PolarDifferential d = dphi_dv(x, X);
    EXPECT_NEAR(d.dphi, -SingleConvexFn::profile_prime(c, polar(x).v) * d.dv, 1e-5);
    EXPECT_GT(hess_fd(phi_t, x, X), 0.0);
  }
}

TEST(SingleConvex, ExponentialIsConvexOnK) {
  const double c = 0.2;
  const auto K = PolarRegion{0.4, 0.95, 0.5, 2 * kPi - 0.5}.samples(3, 200, 22);
  const SingleConvexFn fn = single_convex(c, K);
  EXPECT_GT(fn.lambda(), 0.0);
  const ExpConvexified F = fn.exponential();
  Rng rng(23);
  for (const SpherePoint& x : K) {
    for (int k = 0; k < 8; ++k) {
      const TangentVector X = random_unit_tangent(x, rng);
      EXPECT_GE(F.normalized_second_derivative(x, X, 1e-3), fn.bounds().C / 2 - 1e-4);
    }
  }
}

TEST(SingleConvex, RejectsSmallV) {
  const SingleConvexFn fn(0.3, 1.0);
  Rng rng(24);
  EXPECT_THROW(fn.phi_tilde(polar_point(3, 0.25, 1.0, rng)), DomainError);
  const std::vector<SpherePoint> K = {polar_point(3, 0.25, 1.0, rng)};
  EXPECT_THROW(single_convex(0.3, K), DomainError);
}

TEST(Bracket, Examples) {
  const BumpProfile& b = bump01();
  Rng rng(30);
  const SpherePoint x = polar_point(3, 0.7, 2.0, rng);
  const Bracket same = bracket(x, 2.0, b);
  EXPECT_EQ(same.lower, 0.0);
  EXPECT_NEAR(same.upper, 1 - 1.5 * 0.1, 1e-12);

  const SpherePoint far = polar_point(3, 0.7, kPi + 1.5, rng);
  const Bracket wide = bracket(far, 0.5, b);
  EXPECT_NEAR(wide.lower, 2 - 0.1, 1e-10);
  EXPECT_NEAR(b.f(wide.upper), kPi + 1, 1e-10);

  for (int i = 0; i < 200; ++i) {
    const double phi = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi0 = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const Bracket br = bracket(polar_point(3, 0.5, phi, rng), phi0, b);
    EXPECT_LE(br.lower, br.upper);
    if (std::abs(phi - phi0) <= kPi) EXPECT_EQ(br.lower, 0.0);
  }
}

TEST(HEval, Examples) {
  const BumpProfile& b = bump01();
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const double v = 0.25 + 0.75 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi0 = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const SpherePoint x = polar_point(3, v, phi, rng);
    if (std::abs(phi - phi0) <= kPi) {
      EXPECT_NEAR(H_eval(x, phi0, 0.0, b), -v * std::cos(phi - phi0) + 1, 1e-12);
      EXPECT_GE(H_eval(x, phi0, 0.0, b), 0.0);
    }
    EXPECT_LT(H_eval(x, phi0, bracket(x, phi0, b).upper, b), -0.05);
  }
  const SpherePoint c0 = family_center(3, 1.3);
  EXPECT_NEAR(H_eval(c0, 1.3, 0.0, b), 0.0, 1e-15);
}

TEST(Psi, ExamplesAndBranchConsistency) {
  const ConvexFamily fam(bump01(), 5.0);
  EXPECT_NEAR(fam.psi(family_center(3, 2.0), 2.0), 0.0, 1e-15);
  EXPECT_NEAR(fam.psi_bisect(family_center(3, 2.0), 2.0), 0.0, 1e-12);

  // (x, x_phi0) = 1.5c with |phi - phi0| <= pi: both branches give 1 - 1.5c.
  Rng rng(40);
  const double v = 0.6;
  const double dphi = std::acos(0.15 / v);
  const SpherePoint edge = polar_point(3, v, 2.0 + dphi, rng);
  EXPECT_NEAR(fam.psi(edge, 2.0), 1 - 0.15, 1e-12);
  EXPECT_NEAR(fam.psi_bisect(edge, 2.0), 1 - 0.15, 1e-10);

  int checked = 0;
  while (checked < 1000) {
    const double vv = 0.21 + 0.79 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi0 = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const SpherePoint x = polar_point(3, vv, phi, rng);
    const double dot = x.coords().dot(family_center(3, phi0).coords());
    if (dot < 0.15 || std::abs(phi - phi0) > kPi) continue;
    ++checked;
    EXPECT_NEAR(fam.psi_bisect(x, phi0), 1 - dot, 1e-10);
  }
}

TEST(Psi, RootOfHOutsideClosedFormRegion) {
  const ConvexFamily fam(bump01(), 5.0);
  Rng rng(41);
  int checked = 0;
  while (checked < 300) {
    const double vv = 0.21 + 0.79 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const double phi0 = 0.05 + (2 * kPi - 0.1) * std::uniform_real_distribution<double>(0, 1)(rng);
    const SpherePoint x = polar_point(3, vv, phi, rng);
    const double dot = x.coords().dot(family_center(3, phi0).coords());
    if (dot >= 0.15 && std::abs(phi - phi0) <= kPi) continue;
    ++checked;
    const double p = fam.psi(x, phi0);
    EXPECT_LE(std::abs(H_eval(x, phi0, p, bump01())), 1e-12);
    EXPECT_GE(p, 1 - 0.15 - 1e-12);
  }
  EXPECT_THROW(fam.psi(polar_point(3, 0.19, 1.0, rng), 2.0), DomainError);
}

TEST(FamilyF, ValuesAndMonotonicity) {
  const ConvexFamily fam(bump01(), 5.0);
  EXPECT_LE(fam.F(family_center(3, 2.0), 2.0), 1e-15);
  EXPECT_GE(fam.F(family_center(3, 2.0), 2.0), 0.0);
  Rng rng(42);
  const double v = 0.6;
  const SpherePoint edge = polar_point(3, v, 2.0 + std::acos(0.15 / v), rng);
  EXPECT_NEAR(fam.F(edge, 2.0), 1.0, 1e-11);
  EXPECT_NEAR(fam.normalizer(), std::expm1(5.0 * 0.85), 1e-12);

  // Along the meridian away from the centre psi grows, and so does F.
  double prev = -1;
  for (int k = 0; k < 100; ++k) {
    const double phi = 2.0 + 0.03 * k;
    const SpherePoint x = polar_point(3, 0.8, phi, rng);
    const double value = fam.F(x, 2.0);
    EXPECT_GE(value, 0.0);
    EXPECT_GT(value, prev);
    prev = value;
  }
}

TEST(FamilyF, ZeroOnlyAtCentre) {
  const ConvexFamily fam(bump01(), 5.0);
  Rng rng(43);
  for (int i = 0; i < 2000; ++i) {
    const SpherePoint x = PolarRegion{0.25, 1.0, 0.1, 2 * kPi - 0.1}.sample(3, rng);
    const double phi0 = 1.0 + 4.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double F = fam.F(x, phi0);
    if (dist(x, family_center(3, phi0)) > 1e-5) EXPECT_GT(F, 1e-10);
  }
}

TEST(FamilyF, LargeLambdaStaysFinite) {
  const ConvexFamily fam(bump01(), 5000.0);
  Rng rng(44);
  const SpherePoint x = polar_point(3, 0.5, 4.0, rng);
  const double F = fam.F(x, 1.0);
  EXPECT_TRUE(std::isinf(F) || F > 1.0);
  EXPECT_NEAR(fam.F(family_center(3, 1.0), 1.0), 0.0, 1e-300);
}

TEST(FamilyF, JsonRoundTrip) {
  const ConvexFamily fam(bump01(), 17.5);
  const ConvexFamily back = ConvexFamily::from_json(fam.to_json());
  Rng rng(45);
  const SpherePoint x = polar_point(3, 0.7, 3.0, rng);
  EXPECT_EQ(back.lambda0(), 17.5);
  EXPECT_NEAR(back.F(x, 2.5), fam.F(x, 2.5), 1e-14);
}

TEST(EstimateBounds, PsiHessianOnTheCapRegion) {
  // Inside V_phi0 psi = 1 - <x, x_phi0>, so Hess psi = (1 - psi) g >= 1.5c g.
  const ConvexFamily fam(bump01(), 5.0);
  Rng rng(46);
  const ScalarField f = fam.psi_field(2.0);
  const SpherePoint centre = family_center(3, 2.0);
  for (int i = 0; i < 200; ++i) {
    const SpherePoint x = PolarRegion{0.5, 1.0, 1.2, 2.8}.sample(3, rng);
    if (x.coords().dot(centre.coords()) < 0.2) continue;
    const TangentVector X = random_unit_tangent(x, rng);
    EXPECT_GE(hess_fd(f, x, X), 0.15 - 5e-6);
  }
}

TEST(EstimateBounds, CalibratedFamilyHasPositiveBounds) {
  FamilyCalibration cfg;
  cfg.n_phi = 8;
  cfg.points_per_phi = 40;
  const CalibratedFamily cal = calibrate_family(cfg);
  EXPECT_GT(cal.estimate.bounds.C, 0.0);
  EXPECT_GT(cal.estimate.bounds.c1, 0.0);
  EXPECT_GT(cal.estimate.bounds.c0, 0.0);
  EXPECT_NEAR(cal.family.lambda0(), lambda_min(cal.estimate.bounds), 1e-9 * cal.family.lambda0());
}

TEST(EstimateBounds, RejectsConcaveField) {
  const ScalarField x1 = [](const SpherePoint& x) { return x[0]; };
  const auto K = PolarRegion{0.5, 0.9, 1.0, 2.0}.samples(3, 20, 47);
  EXPECT_THROW(estimate_bounds(x1, K), CertificationError);
}
