#include "sphconv/bump.hpp"
#include "sphconv/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace sphconv;

namespace {

using boost::math::quadrature::gauss_kronrod;

double kernel_mass() {
  static const double Z =
      gauss_kronrod<double, 61>::integrate([](double s) { return BumpProfile::kernel(s); }, 0.0, 1.0, 15, 1e-14);
  return Z;
}

// Independent adaptive quadrature for h1.
double oracle_h1(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const auto h = [](double s) { return BumpProfile::kernel(s); };
  return gauss_kronrod<double, 61>::integrate(h, 0.0, t, 15, 1e-14) / kernel_mass();
}

// int_0^T h1 = T h1(T) - int_0^T s h(s) ds / Z, by parts.
double oracle_h1_integral(double T) {
  const auto sh = [](double s) { return s * BumpProfile::kernel(s); };
  return T * oracle_h1(T) - gauss_kronrod<double, 61>::integrate(sh, 0.0, T, 15, 1e-14) / kernel_mass();
}

}  // namespace

TEST(Kernel, SupportAndSymmetry) {
  EXPECT_EQ(BumpProfile::kernel(0.0), 0.0);
  EXPECT_EQ(BumpProfile::kernel(1.0), 0.0);
  EXPECT_EQ(BumpProfile::kernel(-0.5), 0.0);
  EXPECT_NEAR(BumpProfile::kernel(0.5), std::exp(-4.0), 1e-16);
  for (int k = 1; k < 100; ++k) {
    const double t = k / 100.0;
    EXPECT_NEAR(BumpProfile::kernel(t), BumpProfile::kernel(1.0 - t), 1e-9 * BumpProfile::kernel(t));
  }
}

TEST(Bump, H1MatchesAdaptiveQuadrature) {
  const BumpProfile b = BumpProfile::build(0.1);
  for (double t = 0.0; t <= 1.0; t += 0.037) EXPECT_NEAR(b.h1(t), oracle_h1(t), 1e-12) << t;
  EXPECT_NEAR(b.h1(0.5), 0.5, 1e-14);
}

TEST(Bump, BetaIsOneBySymmetry) {
  // h is symmetric about 1/2, so h1(s) + h1(1-s) = 1 and the integral of
  // h1 over [0,1] is exactly 1/2: the mass condition holds at beta = 1.
  for (double c : {0.05, 0.1, 0.2, 1.0 / 3.0}) {
    const BumpProfile b = BumpProfile::build(c);
    EXPECT_NEAR(b.beta(), 1.0, 1e-9) << c;
    EXPECT_NEAR(b.h2_integral(), c / 2, 1e-10) << c;
  }
}

TEST(Bump, MassIsDecreasingInBeta) {
  const BumpProfile b = BumpProfile::build(0.1);
  double prev = b.h2_mass(0.01);
  for (double beta = 0.02; beta < 50.0; beta *= 1.3) {
    const double m = b.h2_mass(beta);
    EXPECT_LT(m, prev);
    prev = m;
  }
}

TEST(Bump, RejectsBadWidth) {
  EXPECT_THROW(BumpProfile::build(0.0), DomainError);
  EXPECT_THROW(BumpProfile::build(0.34), DomainError);
  EXPECT_THROW(BumpProfile::build(-0.1), DomainError);
}

TEST(Bump, RegimeExamples) {
  for (double c : {0.05, 0.1, 0.2}) {
    const BumpProfile b = BumpProfile::build(c);
    EXPECT_NEAR(b.f(1.0 - 1.5 * c), 0.0, 1e-12);
    EXPECT_NEAR(b.f(1.0 - 0.5 * c), c / 2, 1e-10);
    EXPECT_NEAR(b.f(10.0), 9.0 + c, 1e-9);
    EXPECT_EQ(b.f(-3.0), 0.0);
  }
}

TEST(Bump, Invariants) {
  const double c = 0.1;
  const BumpProfile b = BumpProfile::build(c);
  for (double t = -1.0; t < 3.0; t += 1e-3) {
    if (t <= 1 - 1.5 * c) EXPECT_LE(std::abs(b.f(t)), 1e-12);
    if (t >= 1 - 0.5 * c) EXPECT_NEAR(b.f(t), t - 1 + c, 1e-10);
    EXPECT_GE(b.f_prime(t), 0.0);
    EXPECT_LE(b.f_prime(t), 1.0);
  }
}

TEST(Bump, FMatchesAdaptiveIntegralOfH2) {
  const double c = 0.1;
  const BumpProfile b = BumpProfile::build(c);
  for (double s = 0.0; s <= c; s += c / 17) {
    const double ref = c * oracle_h1_integral(s / c);  // beta = 1
    EXPECT_NEAR(b.f(1 - 1.5 * c + s), ref, 1e-11) << s;
  }
}

TEST(Bump, DerivativesMatchFiniteDifferences) {
  const double c = 0.1;
  const BumpProfile b = BumpProfile::build(c);
  const double h = 1e-5;
  for (double t = 0.8; t < 1.0; t += 0.0031) {
    EXPECT_NEAR((b.f(t + h) - b.f(t - h)) / (2 * h), b.f_prime(t), 1e-7) << t;
    EXPECT_NEAR((b.f_prime(t + h) - b.f_prime(t - h)) / (2 * h), b.f_second(t), 1e-5) << t;
  }
}

TEST(Bump, InversesRoundTrip) {
  const double c = 0.1;
  const BumpProfile b = BumpProfile::build(c);
  EXPECT_NEAR(b.inverse_upper(0.0), 1 - 1.5 * c, 1e-15);
  EXPECT_NEAR(b.inverse_lower(1.0), 2 - c, 1e-12);
  for (double y = 1e-4; y < 2.0; y *= 1.37) {
    const double lo = b.inverse_lower(y);
    const double hi = b.inverse_upper(y);
    EXPECT_NEAR(b.f(lo), y, 1e-12) << y;
    EXPECT_NEAR(b.f(hi), y, 1e-12) << y;
    EXPECT_LE(lo, hi + 1e-12);
  }
}

TEST(Bump, CopiesShareTables) {
  const BumpProfile a = BumpProfile::build(0.2, 64);
  const BumpProfile b = a;
  EXPECT_EQ(a.f(0.75), b.f(0.75));
  EXPECT_EQ(b.panels(), 64);
}
