#include "sphconv/convex.hpp"

#include "sphconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sphconv {

namespace {

constexpr double kPi = std::numbers::pi;

double second_difference(double minus, double center, double plus, double h) {
  return (plus - 2.0 * center + minus) / (h * h);
}

double H_polar(double v, double phi, double phi0, double t, const BumpProfile& bump) {
  const double ft = bump.f(t);
  const double shift = (phi <= phi0) ? ft : -ft;
  return -v * std::cos(phi - phi0 + shift) + ft - t + 1.0;
}

}  // namespace

double lambda_min(const HessBounds& b) {
  if (!(b.C > 0.0) || !(b.c0 >= 0.0) || !(b.c1 > 0.0)) {
    throw DomainError("lambda_min needs C > 0, c0 >= 0, c1 > 0");
  }
  return lambda_min_formula(b.C, b.c0, b.c1);
}

double ExpConvexified::value(const SpherePoint& x) const { return std::exp(lambda * base(x)) / lambda; }

double ExpConvexified::log_value(const SpherePoint& x) const { return lambda * base(x) - std::log(lambda); }

double ExpConvexified::normalized_second_derivative(const SpherePoint& x, const TangentVector& X,
                                                    double h) const {
  const TangentVector at_x = TangentVector::project(x, X.vec());
  const double minus = base(great_circle(at_x, -h));
  const double center = base(x);
  const double plus = base(great_circle(at_x, h));
  const double first = (plus - minus) / (2.0 * h);
  return second_difference(minus, center, plus, h) + lambda * first * first;
}

BoundsEstimate estimate_bounds(const std::vector<SampledField>& fields, const BoundsConfig& cfg) {
  BoundsEstimate est;
  est.bounds.C = std::numeric_limits<double>::infinity();
  est.bounds.c0 = 0.0;
  est.bounds.c1 = std::numeric_limits<double>::infinity();
  const double h = cfg.h;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const ScalarField& F = fields[i].field;
    for (std::size_t j = 0; j < fields[i].points.size(); ++j) {
      const SpherePoint& x = fields[i].points[j];
      Rng rng(derive_seed(cfg.seed, i, j));
      const double center = F(x);
      const TangentVector grad = grad_fd(F, x, h);
      const double gnorm = grad.norm();
      est.bounds.c1 = std::min(est.bounds.c1, gnorm);
      const Vec unit_grad = gnorm > 0.0 ? Vec(grad.vec() / gnorm) : Vec::Zero(x.ambient());
      auto along = [&](const TangentVector& X) {
        return second_difference(F(great_circle(X, -h)), center, F(great_circle(X, h)), h);
      };
      for (std::size_t k = 0; k < cfg.n_directions; ++k) {
        const TangentVector X = random_unit_tangent(x, rng);
        est.bounds.c0 = std::max(est.bounds.c0, std::abs(along(X)));
        const TangentVector Y = TangentVector::project(x, X.vec() - X.vec().dot(unit_grad) * unit_grad);
        if (Y.norm() < 1e-8) continue;
        const double tangential = along(Y.normalized());
        if (tangential < est.bounds.C) {
          est.bounds.C = tangential;
          est.argmin_C = {i, j};
        }
        est.evaluations += 4;
      }
      est.evaluations += 1 + 2 * static_cast<std::size_t>(x.dim());
    }
  }
  if (!(est.bounds.C > 0.0)) {
    throw CertificationError("tangential Hessian bound is not positive (C = " + std::to_string(est.bounds.C) + ")");
  }
  if (!(est.bounds.c1 > 0.0)) throw CertificationError("gradient vanishes on the sample set");
  return est;
}

BoundsEstimate estimate_bounds(const ScalarField& field, const std::vector<SpherePoint>& K,
                               const BoundsConfig& cfg) {
  return estimate_bounds(std::vector<SampledField>{{field, K}}, cfg);
}

SingleConvexFn::SingleConvexFn(double c, double lambda, HessBounds bounds)
    : c_(c), lambda_(lambda), bounds_(bounds) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("single convex function needs c in (0, 1)");
  if (!(lambda > 0.0)) throw DomainError("single convex function needs lambda > 0");
}

double SingleConvexFn::profile(double c, double v) { return std::asin(c / v); }

double SingleConvexFn::profile_prime(double c, double v) { return -c / (v * std::sqrt(v * v - c * c)); }

double SingleConvexFn::profile_second(double c, double v) {
  const double q = v * v - c * c;
  return c / (v * v * std::sqrt(q)) + c / (q * std::sqrt(q));
}

double SingleConvexFn::phi_tilde(const SpherePoint& x) const {
  const PolarData p = polar(x);
  if (!(p.v > c_)) throw DomainError("phi + arcsin(c/v) needs v > c");
  return p.phi + profile(c_, p.v);
}

double SingleConvexFn::value(const SpherePoint& x) const { return std::exp(lambda_ * phi_tilde(x)) / lambda_; }

ExpConvexified SingleConvexFn::exponential() const {
  const SingleConvexFn self = *this;
  return ExpConvexified{[self](const SpherePoint& x) { return self.phi_tilde(x); }, lambda_};
}

SingleConvexFn single_convex(double c, const std::vector<SpherePoint>& K, const BoundsConfig& cfg) {
  for (const SpherePoint& x : K) {
    if (!(polar(x).v > c)) throw DomainError("single_convex: sample with v <= c");
  }
  const SingleConvexFn probe(c, 1.0);
  const BoundsEstimate est =
      estimate_bounds([probe](const SpherePoint& x) { return probe.phi_tilde(x); }, K, cfg);
  return SingleConvexFn(c, lambda_min(est.bounds), est.bounds);
}

Bracket bracket(const SpherePoint& x, double phi0, const BumpProfile& bump) {
  const double gap = std::abs(polar(x).phi - phi0);
  return {bump.inverse_lower(std::max(0.0, gap - kPi)), bump.inverse_upper(gap)};
}

double H_eval(const SpherePoint& x, double phi0, double t, const BumpProfile& bump) {
  const PolarData p = polar(x);
  return H_polar(p.v, p.phi, phi0, t, bump);
}

SpherePoint family_center(int n, double phi0) {
  Vec c = Vec::Zero(n + 1);
  c[0] = std::sin(phi0);
  c[1] = std::cos(phi0);
  return SpherePoint(std::move(c));
}

ConvexFamily::ConvexFamily(BumpProfile bump, double lambda0) : bump_(std::move(bump)), lambda0_(lambda0) {
  if (!(lambda0 > 0.0)) throw DomainError("convex family needs lambda0 > 0");
}

double ConvexFamily::normalizer() const { return std::expm1(lambda0_ * bump_.flat_end()); }

double ConvexFamily::psi_bisect(const SpherePoint& x, double phi0) const {
  const PolarData p = polar(x);
  if (!(p.v > 2.0 * c())) throw DomainError("psi: point outside U = {v > 2c}");
  const double gap = std::abs(p.phi - phi0);
  double lo = bump_.inverse_lower(std::max(0.0, gap - kPi));
  double hi = bump_.inverse_upper(gap);
  double h_lo = H_polar(p.v, p.phi, phi0, lo, bump_);
  double h_hi = H_polar(p.v, p.phi, phi0, hi, bump_);
  if (!(h_lo >= 0.0 && h_hi < 0.0)) {
    throw ConvergenceError("psi: bracket [m_x, M_x] does not contain a sign change");
  }
  if (h_lo == 0.0) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double h_mid = H_polar(p.v, p.phi, phi0, mid, bump_);
    if (h_mid == 0.0) return mid;
    if (h_mid > 0.0) {
      lo = mid;
      h_lo = h_mid;
    } else {
      hi = mid;
      h_hi = h_mid;
    }
  }
  return std::abs(h_lo) <= std::abs(h_hi) ? lo : hi;
}

double ConvexFamily::psi(const SpherePoint& x, double phi0) const { return static_cast<double>(psi_extended(x, phi0)); }

// The closed form 1 - (x, x_phi0) is evaluated in long double: F amplifies
// errors in psi by lambda0, which the calibration puts near 1e8.
long double ConvexFamily::psi_extended(const SpherePoint& x, double phi0) const {
  const PolarData p = polar(x);
  if (!(p.v > 2.0 * c())) throw DomainError("psi: point outside U = {v > 2c}");
  const long double dot = static_cast<long double>(x[0]) * std::sin(static_cast<long double>(phi0)) +
                          static_cast<long double>(x[1]) * std::cos(static_cast<long double>(phi0));
  // f vanishes to all orders past 1 - 3c/2 (f(1 - 3c/2 + d) < exp(-c/d)), so
  // the closed form solves H = 0 to double precision slightly beyond V_phi0.
  if (dot >= 1.5L * c() - 1e-9L && std::abs(p.phi - phi0) <= kPi) return std::max(0.0L, 1.0L - dot);
  return psi_bisect(x, phi0);
}

double ConvexFamily::F(const SpherePoint& x, double phi0) const {
  const long double s = psi_extended(x, phi0);
  const long double a = 1.0L - 1.5L * c();
  const long double lambda = lambda0_;
  if (lambda * a < 11000.0L) return static_cast<double>(std::expm1(lambda * s) / std::expm1(lambda * a));
  return static_cast<double>(std::exp(lambda * (s - a)) * (-std::expm1(-lambda * s)) / (-std::expm1(-lambda * a)));
}

ScalarField ConvexFamily::psi_field(double phi0) const {
  const ConvexFamily self = *this;
  return [self, phi0](const SpherePoint& x) { return self.psi(x, phi0); };
}

ExpConvexified ConvexFamily::exponential(double phi0) const { return ExpConvexified{psi_field(phi0), lambda0_}; }

nlohmann::json ConvexFamily::to_json() const {
  return nlohmann::json{{"c", c()}, {"beta", bump_.beta()}, {"lambda0", lambda0_}, {"panels", bump_.panels()}};
}

ConvexFamily ConvexFamily::from_json(const nlohmann::json& j) {
  BumpProfile bump = BumpProfile::build(j.at("c").get<double>(), j.at("panels").get<int>());
  const double beta = j.at("beta").get<double>();
  if (std::abs(bump.beta() - beta) > 1e-12 * std::max(1.0, beta)) {
    throw DomainError("serialized beta does not match the rebuilt bump profile");
  }
  return ConvexFamily(std::move(bump), j.at("lambda0").get<double>());
}

double psi(const SpherePoint& x, double phi0, const ConvexFamily& family) { return family.psi(x, phi0); }

double family_F(const SpherePoint& x, double phi0, const ConvexFamily& family) { return family.F(x, phi0); }

PolarRegion FamilyCalibration::region() const { return PolarRegion{3.0 * c, 1.0, c, 2.0 * kPi - c}; }

std::vector<double> FamilyCalibration::phis() const {
  std::vector<double> out;
  out.reserve(n_phi);
  const double lo = c;
  const double hi = 2.0 * kPi - c;
  for (std::size_t k = 0; k < n_phi; ++k) {
    out.push_back(n_phi == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / (n_phi - 1));
  }
  return out;
}

CalibratedFamily calibrate_family(const FamilyCalibration& cfg) {
  BumpProfile bump = BumpProfile::build(cfg.c, cfg.panels);
  const ConvexFamily probe(bump, 1.0);
  const PolarRegion K = cfg.region();
  std::vector<SampledField> fields;
  const std::vector<double> phis = cfg.phis();
  for (std::size_t k = 0; k < phis.size(); ++k) {
    fields.push_back({probe.psi_field(phis[k]), K.samples(cfg.n, cfg.points_per_phi, derive_seed(cfg.seed, k))});
  }
  BoundsEstimate est = estimate_bounds(fields, cfg.bounds);
  return CalibratedFamily{ConvexFamily(std::move(bump), lambda_min(est.bounds)), est};
}

}  // namespace sphconv
