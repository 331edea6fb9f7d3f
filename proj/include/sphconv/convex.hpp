#pragma once

// Strictly convex functions on compact subsets of the complement V of the
// closed half-equator {x1 = 0, x2 >= 0} in S^n:
//
//  * the single function lambda^{-1} exp(lambda (phi + arcsin(c / v))),
//  * the family F(., phi0) whose minimum sits at x_phi0 = (sin phi0, cos phi0, 0, ...),
//    built from the implicit function psi(x, phi0) solving H(x, phi0, psi) = 0.

#include "sphconv/bump.hpp"
#include "sphconv/sphere.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace sphconv {

/// Lower bound C of the Hessian on level-set tangents, sup-norm c0 of the
/// Hessian and lower bound c1 of the gradient norm, measured over samples.
struct HessBounds {
  double C = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
};

/// c1^{-2} (C/2 + c0 + 2 c0^2 / C). Generic so that it can be evaluated in
/// exact rational arithmetic.
template <typename T>
T lambda_min_formula(const T& C, const T& c0, const T& c1) {
  const T two(2);
  return (C / two + c0 + two * c0 * c0 / C) / (c1 * c1);
}

/// Throws DomainError unless C > 0, c0 >= 0 and c1 > 0.
double lambda_min(const HessBounds& bounds);

/// lambda^{-1} exp(lambda h) for a base function h >= 0.
///
/// The value overflows for the lambdas the calibration produces, so the
/// convexity checks work with the rescaled second derivative
///   exp(-lambda h(x)) (F o g)''(0) = (h o g)''(0) + lambda ((h o g)'(0))^2,
/// which is a lower bound for (F o g)''(0) because h >= 0.
struct ExpConvexified {
  ScalarField base;
  double lambda = 1.0;

  double value(const SpherePoint& x) const;
  double log_value(const SpherePoint& x) const;
  double normalized_second_derivative(const SpherePoint& x, const TangentVector& X, double h) const;
};

struct BoundsConfig {
  std::size_t n_directions = 32;
  double h = 1e-3;
  std::uint64_t seed = 7;
};

/// Where a bound was attained, for diagnostics.
struct BoundsWitness {
  std::size_t field = 0;
  std::size_t sample = 0;
};

struct BoundsEstimate {
  HessBounds bounds;
  BoundsWitness argmin_C;
  std::size_t evaluations = 0;
};

struct SampledField {
  ScalarField field;
  std::vector<SpherePoint> points;
};

/// Samples every field at its points: c1 = min |grad_fd|, c0 = max |hess_fd|
/// over random unit directions, C = min hess_fd over the same directions
/// projected onto the kernel of the FD gradient. Throws CertificationError
/// when C <= 0 or c1 <= 0.
BoundsEstimate estimate_bounds(const std::vector<SampledField>& fields, const BoundsConfig& cfg = {});
BoundsEstimate estimate_bounds(const ScalarField& field, const std::vector<SpherePoint>& K,
                               const BoundsConfig& cfg = {});

/// Single convex function phi + arcsin(c / v) made strictly convex by
/// exponentiation.
class SingleConvexFn {
 public:
  SingleConvexFn(double c, double lambda, HessBounds bounds = {});

  double c() const { return c_; }
  double lambda() const { return lambda_; }
  const HessBounds& bounds() const { return bounds_; }

  /// phi + arcsin(c / v); DomainError when v <= c.
  double phi_tilde(const SpherePoint& x) const;
  /// lambda^{-1} exp(lambda phi_tilde); +inf on overflow.
  double value(const SpherePoint& x) const;
  ExpConvexified exponential() const;

  /// arcsin(c / v) and its first two derivatives in v.
  static double profile(double c, double v);
  static double profile_prime(double c, double v);
  static double profile_second(double c, double v);

 private:
  double c_;
  double lambda_;
  HessBounds bounds_;
};

/// Measures HessBounds of phi + arcsin(c/v) over K and sets lambda = lambda_min.
/// Throws DomainError if some sample has v <= c.
SingleConvexFn single_convex(double c, const std::vector<SpherePoint>& K, const BoundsConfig& cfg = {});

/// I_x = [m_x, M_x].
struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

Bracket bracket(const SpherePoint& x, double phi0, const BumpProfile& bump);

/// The piecewise function H(x, phi0, t) whose zero in t defines psi.
double H_eval(const SpherePoint& x, double phi0, double t, const BumpProfile& bump);

/// x_phi0 = (sin phi0, cos phi0, 0, ..., 0).
SpherePoint family_center(int n, double phi0);

class ConvexFamily {
 public:
  ConvexFamily(BumpProfile bump, double lambda0);

  double c() const { return bump_.c(); }
  const BumpProfile& bump() const { return bump_; }
  double lambda0() const { return lambda0_; }
  /// exp(lambda0 (1 - 3c/2)) - 1; +inf when it overflows.
  double normalizer() const;

  /// psi(x, phi0). DomainError for x outside U = {v > 2c}; ConvergenceError
  /// if the bracket does not straddle a sign change.
  double psi(const SpherePoint& x, double phi0) const;
  /// psi by bisection even where the closed form 1 - (x, x_phi0) applies.
  double psi_bisect(const SpherePoint& x, double phi0) const;
  /// (exp(lambda0 psi) - 1) / (exp(lambda0 (1 - 3c/2)) - 1), evaluated
  /// stably; +inf on overflow.
  double F(const SpherePoint& x, double phi0) const;

  ScalarField psi_field(double phi0) const;
  /// psi with the closed-form branch carried in long double.
  long double psi_extended(const SpherePoint& x, double phi0) const;
  /// lambda0^{-1} exp(lambda0 psi(., phi0)); F is a positive multiple of it
  /// minus a constant, so both have the same convexity.
  ExpConvexified exponential(double phi0) const;

  nlohmann::json to_json() const;
  /// Rebuilds the bump profile from (c, panels) and checks beta.
  static ConvexFamily from_json(const nlohmann::json& j);

 private:
  BumpProfile bump_;
  double lambda0_;
};

double psi(const SpherePoint& x, double phi0, const ConvexFamily& family);
double family_F(const SpherePoint& x, double phi0, const ConvexFamily& family);

/// Compact parameter set K x Phi used to calibrate lambda0.
struct FamilyCalibration {
  int n = 3;
  double c = 0.1;
  std::size_t points_per_phi = 160;
  std::size_t n_phi = 64;
  BoundsConfig bounds;
  std::uint64_t seed = 11;
  int panels = 4096;

  /// K = {v >= 3c, phi in [c, 2pi - c]}.
  PolarRegion region() const;
  /// n_phi equally spaced values spanning [c, 2pi - c].
  std::vector<double> phis() const;
};

struct CalibratedFamily {
  ConvexFamily family;
  BoundsEstimate estimate;
};

/// Estimates (c2, c3, c4) of psi over K x Phi and sets lambda0 = lambda_min.
CalibratedFamily calibrate_family(const FamilyCalibration& cfg);

}  // namespace sphconv
