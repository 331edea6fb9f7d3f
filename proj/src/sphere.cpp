#include "sphconv/sphere.hpp"

#include "sphconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sphconv {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

SpherePoint::SpherePoint(Vec coords) : coords_(std::move(coords)) {
  if (coords_.size() < 3) throw DomainError("SpherePoint needs n >= 2 (at least 3 coordinates)");
  const double norm = coords_.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm)) throw DomainError("SpherePoint from zero or non-finite vector");
  coords_ /= norm;
}

SpherePoint SpherePoint::basis(Eigen::Index ambient, Eigen::Index i) {
  Vec e = Vec::Zero(ambient);
  e[i] = 1.0;
  return SpherePoint(std::move(e));
}

TangentVector::TangentVector(SpherePoint base, Vec vec) : base_(std::move(base)), vec_(std::move(vec)) {
  if (vec_.size() != base_.ambient()) throw DomainError("tangent vector has wrong dimension");
  const double normal = vec_.dot(base_.coords());
  if (std::abs(normal) > 1e-10 * std::max(1.0, vec_.norm())) {
    throw DomainError("vector is not tangent to the sphere at its base point");
  }
}

TangentVector TangentVector::project(const SpherePoint& base, const Vec& v) {
  Vec t = v - v.dot(base.coords()) * base.coords();
  return TangentVector(base, std::move(t), Unchecked{});
}

TangentVector TangentVector::normalized() const {
  const double n = vec_.norm();
  if (n == 0.0) throw DomainError("cannot normalize a zero tangent vector");
  return TangentVector(base_, vec_ / n, Unchecked{});
}

PolarData polar(const SpherePoint& x) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double v2 = x1 * x1 + x2 * x2;
  if (v2 < 1e-24) throw DomainError("polar: x1^2 + x2^2 vanishes");
  if (x1 == 0.0 && x2 >= 0.0) throw DomainError("polar: point lies on the removed half-equator");
  double phi = std::atan2(x1, x2);
  if (phi < 0.0) phi += kTwoPi;
  if (!(phi > 0.0 && phi < kTwoPi)) throw DomainError("polar: angle at the cut");
  return {std::sqrt(v2), phi};
}

bool in_complement(const SpherePoint& x) { return !(x[0] == 0.0 && x[1] >= 0.0); }

SpherePoint chart(const ChartPoint& p) {
  const Eigen::Index n = p.y.size() + 1;
  if (n < 2) throw DomainError("chart: need n >= 2");
  const double y2 = p.y.squaredNorm();
  if (!(y2 < 1.0)) throw DomainError("chart: |y| must be < 1");
  if (!(p.theta > 0.0 && p.theta < kTwoPi)) throw DomainError("chart: theta must lie in (0, 2pi)");
  const double r = std::sqrt(1.0 - y2);
  Vec c(n + 1);
  c[0] = r * std::sin(p.theta);
  c[1] = r * std::cos(p.theta);
  c.tail(n - 1) = p.y;
  return SpherePoint(std::move(c));
}

ChartPoint chart_inv(const SpherePoint& x) {
  const PolarData pd = polar(x);
  return ChartPoint{pd.phi, x.coords().tail(x.ambient() - 2)};
}

SpherePoint great_circle(const TangentVector& X, double t) {
  const double speed = X.norm();
  if (speed == 0.0) return X.base();
  const Vec dir = X.vec() / speed;
  return SpherePoint(std::cos(speed * t) * X.base().coords() + std::sin(speed * t) * dir);
}

SpherePoint geodesic(const SpherePoint& x, const TangentVector& X, double t) {
  if (std::abs(X.norm() - 1.0) > 1e-10) throw DomainError("geodesic: direction must be a unit vector");
  if ((X.base().coords() - x.coords()).norm() > 1e-12) throw DomainError("geodesic: direction not based at x");
  return SpherePoint(std::cos(t) * x.coords() + std::sin(t) * X.vec());
}

double dist(const SpherePoint& x1, const SpherePoint& x2) {
  return std::acos(std::clamp(x1.coords().dot(x2.coords()), -1.0, 1.0));
}

double hess_fd(const ScalarField& F, const SpherePoint& x, const TangentVector& X, double h) {
  const TangentVector at_x = TangentVector::project(x, X.vec());
  return (F(great_circle(at_x, h)) - 2.0 * F(x) + F(great_circle(at_x, -h))) / (h * h);
}

double deriv_fd(const ScalarField& F, const SpherePoint& x, const TangentVector& X, double h) {
  const TangentVector at_x = TangentVector::project(x, X.vec());
  return (F(great_circle(at_x, h)) - F(great_circle(at_x, -h))) / (2.0 * h);
}

std::vector<Vec> tangent_basis(const SpherePoint& x) {
  const Eigen::Index a = x.ambient();
  Eigen::MatrixXd m(a, 1);
  m.col(0) = x.coords();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a, a);
  std::vector<Vec> basis;
  basis.reserve(static_cast<std::size_t>(a - 1));
  for (Eigen::Index k = 1; k < a; ++k) {
    Vec e = q.col(k);
    e -= e.dot(x.coords()) * x.coords();
    basis.push_back(e.normalized());
  }
  return basis;
}

TangentVector grad_fd(const ScalarField& F, const SpherePoint& x, double h) {
  Vec g = Vec::Zero(x.ambient());
  for (const Vec& e : tangent_basis(x)) {
    const TangentVector E = TangentVector::project(x, e);
    g += deriv_fd(F, x, E, h) * e;
  }
  return TangentVector::project(x, g);
}

PolarDifferential dphi_dv(const SpherePoint& x, const TangentVector& X) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double v2 = x1 * x1 + x2 * x2;
  const double v = std::sqrt(v2);
  if (v < 1e-12) throw DomainError("dphi_dv: v vanishes");
  const double X1 = X.vec()[0];
  const double X2 = X.vec()[1];
  // The 2x2 system has determinant -v.
  return {(x2 * X1 - x1 * X2) / v2, (x1 * X1 + x2 * X2) / v};
}

namespace identities {

double hess_x1(const SpherePoint& x, const TangentVector& X) { return -x[0] * X.vec().squaredNorm(); }

double hess_x2(const SpherePoint& x, const TangentVector& X) { return -x[1] * X.vec().squaredNorm(); }

double hess_v(const SpherePoint& x, const TangentVector& X) {
  const double v = std::hypot(x[0], x[1]);
  const PolarDifferential d = dphi_dv(x, X);
  return -v * X.vec().squaredNorm() + v * d.dphi * d.dphi;
}

double hess_phi(const SpherePoint& x, const TangentVector& X) {
  const double v = std::hypot(x[0], x[1]);
  const PolarDifferential d = dphi_dv(x, X);
  return -2.0 * d.dphi * d.dv / v;
}

double hess_one_minus_cos_dist(const SpherePoint& p, const SpherePoint& x, const TangentVector& X) {
  return x.coords().dot(p.coords()) * X.vec().squaredNorm();
}

}  // namespace identities

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

SpherePoint random_point(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec c(n + 1);
  do {
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = gauss(rng);
  } while (c.norm() < 1e-8);
  return SpherePoint(std::move(c));
}

TangentVector random_unit_tangent(const SpherePoint& x, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec c(x.ambient());
  for (;;) {
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = gauss(rng);
    TangentVector t = TangentVector::project(x, c);
    if (t.norm() > 1e-8) return t.normalized();
  }
}

bool PolarRegion::contains(const SpherePoint& x) const {
  if (!in_complement(x)) return false;
  const double v = std::hypot(x[0], x[1]);
  if (v < 1e-12) return false;
  const PolarData p = polar(x);
  return p.v >= v_min && p.v <= v_max && p.phi >= phi_min && p.phi <= phi_max;
}

SpherePoint PolarRegion::sample(int n, Rng& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double v = v_min + (v_max - v_min) * uni(rng);
  const double phi = phi_min + (phi_max - phi_min) * uni(rng);
  Vec c(n + 1);
  c[0] = v * std::sin(phi);
  c[1] = v * std::cos(phi);
  if (n >= 2) {
    Vec rest(n - 1);
    for (Eigen::Index i = 0; i < rest.size(); ++i) rest[i] = gauss(rng);
    const double rn = rest.norm();
    const double r = std::sqrt(std::max(0.0, 1.0 - v * v));
    c.tail(n - 1) = rn > 0.0 ? Vec(rest * (r / rn)) : Vec::Zero(n - 1);
  }
  return SpherePoint(std::move(c));
}

std::vector<SpherePoint> PolarRegion::samples(int n, std::size_t count, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<SpherePoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(n, rng));
  return out;
}

}  // namespace sphconv
