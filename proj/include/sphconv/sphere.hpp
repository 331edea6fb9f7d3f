#pragma once

// Extrinsic geometry of the unit sphere S^n in R^{n+1}: points, tangent
// vectors, the polar coordinates (v, phi) of the first two coordinates,
// the chart onto the complement of the closed half-equator
// {x1 = 0, x2 >= 0}, great circles, and finite-difference derivatives
// taken along great circles.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace sphconv {

using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

class SpherePoint {
 public:
  /// Normalizes `coords`. Throws DomainError for fewer than three
  /// coordinates (n < 2) or a (near) zero vector.
  explicit SpherePoint(Vec coords);

  const Vec& coords() const { return coords_; }
  double operator[](Eigen::Index i) const { return coords_[i]; }
  /// Intrinsic dimension n of the sphere S^n.
  int dim() const { return static_cast<int>(coords_.size()) - 1; }
  Eigen::Index ambient() const { return coords_.size(); }

  /// Unit vector e_i in R^{ambient}.
  static SpherePoint basis(Eigen::Index ambient, Eigen::Index i);

 private:
  Vec coords_;
};

class TangentVector {
 public:
  /// Throws DomainError unless |<vec, base>| <= 1e-10 * max(1, |vec|).
  TangentVector(SpherePoint base, Vec vec);

  /// Orthogonal projection of an ambient vector onto T_base S^n.
  static TangentVector project(const SpherePoint& base, const Vec& v);

  const SpherePoint& base() const { return base_; }
  const Vec& vec() const { return vec_; }
  double norm() const { return vec_.norm(); }
  TangentVector normalized() const;
  TangentVector scaled(double s) const { return TangentVector(base_, s * vec_, Unchecked{}); }

 private:
  struct Unchecked {};
  TangentVector(SpherePoint base, Vec vec, Unchecked) : base_(std::move(base)), vec_(std::move(vec)) {}

  SpherePoint base_;
  Vec vec_;
};

/// Point of the chart domain (0, 2pi) x D^{n-1}.
struct ChartPoint {
  double theta = 0.0;
  Vec y;
};

struct PolarData {
  double v = 0.0;
  double phi = 0.0;
};

struct PolarDifferential {
  double dphi = 0.0;
  double dv = 0.0;
};

using ScalarField = std::function<double(const SpherePoint&)>;

/// (x1, x2) = (v sin(phi), v cos(phi)) with v in (0, 1], phi in (0, 2pi).
/// Throws DomainError when x1^2 + x2^2 < 1e-24 or x lies on the closed
/// half-equator {x1 = 0, x2 >= 0}.
PolarData polar(const SpherePoint& x);

/// True iff x is off the closed half-equator {x1 = 0, x2 >= 0}.
bool in_complement(const SpherePoint& x);

/// (theta, y) -> (sqrt(1-|y|^2) sin(theta), sqrt(1-|y|^2) cos(theta), y).
SpherePoint chart(const ChartPoint& p);
ChartPoint chart_inv(const SpherePoint& x);

/// cos(t) x + sin(t) X, renormalized. X must be a unit tangent at x.
SpherePoint geodesic(const SpherePoint& x, const TangentVector& X, double t);

/// Great circle through X.base() with initial velocity X (any length).
SpherePoint great_circle(const TangentVector& X, double t);

/// Spherical distance arccos(<x1, x2>) with the inner product clamped.
double dist(const SpherePoint& x1, const SpherePoint& x2);

/// Central second difference of F along the great circle with velocity X:
/// (F(g(h)) - 2F(x) + F(g(-h))) / h^2.
double hess_fd(const ScalarField& F, const SpherePoint& x, const TangentVector& X,
               double h = 1e-3);

/// Central first difference (F(g(h)) - F(g(-h))) / 2h.
double deriv_fd(const ScalarField& F, const SpherePoint& x, const TangentVector& X,
                double h = 1e-3);

/// Riemannian gradient from central differences along an orthonormal
/// tangent frame.
TangentVector grad_fd(const ScalarField& F, const SpherePoint& x, double h = 1e-3);

/// (dphi(X), dv(X)) from dx1 = sin(phi) dv + x2 dphi,
/// dx2 = cos(phi) dv - x1 dphi. Throws DomainError when v < 1e-12.
PolarDifferential dphi_dv(const SpherePoint& x, const TangentVector& X);

/// Orthonormal basis of T_x S^n (n vectors).
std::vector<Vec> tangent_basis(const SpherePoint& x);

/// Closed-form Hessians Hess F(X, X) of the coordinate functions.
namespace identities {
double hess_x1(const SpherePoint& x, const TangentVector& X);
double hess_x2(const SpherePoint& x, const TangentVector& X);
double hess_v(const SpherePoint& x, const TangentVector& X);
double hess_phi(const SpherePoint& x, const TangentVector& X);
/// Hess(1 - <., p>)(X, X) = <x, p> |X|^2, i.e. Hess(1 - cos(rho_p)) = cos(rho_p) g.
double hess_one_minus_cos_dist(const SpherePoint& p, const SpherePoint& x, const TangentVector& X);
}  // namespace identities

/// Deterministic per-item seed (SplitMix64 mixing of the inputs).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniformly distributed point on S^n.
SpherePoint random_point(int n, Rng& rng);
/// Gaussian tangent vector at x, normalized.
TangentVector random_unit_tangent(const SpherePoint& x, Rng& rng);

/// Compact region {v in [v_min, v_max], phi in [phi_min, phi_max]} of the
/// half-equator complement.
struct PolarRegion {
  double v_min = 0.3;
  double v_max = 1.0;
  double phi_min = 0.1;
  double phi_max = 6.183185307179586;

  bool contains(const SpherePoint& x) const;
  /// v and phi uniform in their ranges; the remaining coordinates are a
  /// uniform direction scaled to sqrt(1 - v^2).
  SpherePoint sample(int n, Rng& rng) const;
  std::vector<SpherePoint> samples(int n, std::size_t count, std::uint64_t seed) const;
};

}  // namespace sphconv
