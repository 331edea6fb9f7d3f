#include "sphconv/cert.hpp"

#include "sphconv/errors.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace sphconv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_vec(std::ostream& out, const Vec& v) {
  out << '"';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << '"';
}

template <typename SecondDerivative>
void certify_into(ConvexityReport& report, const SecondDerivative& second, const std::vector<SpherePoint>& K,
                  double phi0, std::size_t sample_offset, const CertifyConfig& cfg) {
  for (std::size_t i = 0; i < K.size(); ++i) {
    const std::size_t id = sample_offset + i;
    Rng rng(derive_seed(cfg.seed, id));
    CertifyRow worst;
    worst.second_derivative = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < cfg.n_directions; ++d) {
      const TangentVector X = random_unit_tangent(K[i], rng);
      const double value = second(K[i], X);
      CertifyRow row{id, phi0, K[i].coords(), X.vec(), value};
      if (cfg.keep_all_rows) report.rows.push_back(row);
      if (!(value >= worst.second_derivative)) worst = std::move(row);
    }
    if (!cfg.keep_all_rows && cfg.n_directions > 0) report.rows.push_back(worst);
    if (!(worst.second_derivative >= report.min_second_derivative)) {
      report.min_second_derivative = worst.second_derivative;
      report.argmin_sample = id;
      report.argmin_location = worst.location;
      report.argmin_direction = worst.direction;
      report.argmin_phi0 = phi0;
    }
  }
  report.n_samples += K.size();
}

ConvexityReport empty_report(const CertifyConfig& cfg) {
  ConvexityReport r;
  r.n_directions = cfg.n_directions;
  r.margin = cfg.margin;
  r.min_second_derivative = std::numeric_limits<double>::infinity();
  return r;
}

void finish(ConvexityReport& r) { r.pass = r.min_second_derivative >= r.margin; }

}  // namespace

nlohmann::json ConvexityReport::summary() const {
  return nlohmann::json{{"n_samples", n_samples},
                        {"n_directions", n_directions},
                        {"min_second_derivative", min_second_derivative},
                        {"argmin_sample", argmin_sample},
                        {"argmin_location", vec_json(argmin_location)},
                        {"argmin_direction", vec_json(argmin_direction)},
                        {"argmin_phi0", argmin_phi0},
                        {"margin", margin},
                        {"pass", pass}};
}

void ConvexityReport::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "sample,phi0,location,direction,second_derivative\n";
  for (const CertifyRow& r : rows) {
    out << r.sample << ',' << r.phi0 << ',';
    write_vec(out, r.location);
    out << ',';
    write_vec(out, r.direction);
    out << ',' << r.second_derivative << '\n';
  }
  out.precision(old);
}

ConvexityReport certify(const ScalarField& F, const std::vector<SpherePoint>& K, const CertifyConfig& cfg) {
  ConvexityReport r = empty_report(cfg);
  certify_into(
      r, [&](const SpherePoint& x, const TangentVector& X) { return hess_fd(F, x, X, cfg.h); }, K, 0.0, 0, cfg);
  finish(r);
  return r;
}

ConvexityReport certify(const ExpConvexified& F, const std::vector<SpherePoint>& K, const CertifyConfig& cfg) {
  ConvexityReport r = empty_report(cfg);
  certify_into(
      r, [&](const SpherePoint& x, const TangentVector& X) { return F.normalized_second_derivative(x, X, cfg.h); },
      K, 0.0, 0, cfg);
  finish(r);
  return r;
}

ConvexityReport certify_family(const ConvexFamily& family, const std::vector<double>& phis,
                               const std::vector<std::vector<SpherePoint>>& K, const CertifyConfig& cfg) {
  if (phis.size() != K.size()) throw DomainError("certify_family: one sample set per phi0 is required");
  ConvexityReport r = empty_report(cfg);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < phis.size(); ++k) {
    const ExpConvexified F = family.exponential(phis[k]);
    certify_into(
        r, [&](const SpherePoint& x, const TangentVector& X) { return F.normalized_second_derivative(x, X, cfg.h); },
        K[k], phis[k], offset, cfg);
    offset += K[k].size();
  }
  finish(r);
  return r;
}

SpherePoint witness_curve(double theta, const Vec& y, double t) {
  Vec x(y.size() + 2);
  x[0] = std::sin(t);
  x[1] = std::cos(t) * std::sin(theta);
  x.tail(y.size()) = y * (std::cos(t) * std::cos(theta));
  return SpherePoint(std::move(x));
}

nlohmann::json GeodesicWitness::summary() const {
  nlohmann::json cross = nlohmann::json::array();
  for (const Crossing& c : crossings) cross.push_back({{"t", c.t}, {"v", c.v}, {"reason", c.reason}});
  return nlohmann::json{{"theta", theta},
                        {"y", vec_json(y)},
                        {"samples", t.size()},
                        {"evaluable", evaluable()},
                        {"n_crossings", crossings.size()},
                        {"crossings", cross},
                        {"t_max", t_max},
                        {"grid_second_derivative", grid_second_derivative},
                        {"refined_second_derivative", refined_second_derivative},
                        {"max_closure_error", max_closure_error}};
}

GeodesicWitness trace_witness(const ScalarField& F, double theta, const Vec& y, std::size_t samples, double h) {
  if (samples < 3) throw DomainError("trace_witness: need at least 3 samples");
  if (!(theta > 0.0 && theta <= std::numbers::pi / 2 + 1e-15)) throw DomainError("trace_witness: theta not in (0, pi/2]");
  if (y.size() < 1 || std::abs(y.norm() - 1.0) > 1e-12) throw DomainError("trace_witness: y must be a unit vector");

  GeodesicWitness w;
  w.theta = theta;
  w.y = y;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double dt = kTwoPi / static_cast<double>(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = dt * static_cast<double>(k);
    const SpherePoint x = witness_curve(theta, y, t);
    w.t.push_back(t);
    // Evaluate on the raw curve point, not the renormalized one, to expose drift.
    Vec raw(y.size() + 2);
    raw[0] = std::sin(t);
    raw[1] = std::cos(t) * std::sin(theta);
    raw.tail(y.size()) = y * (std::cos(t) * std::cos(theta));
    w.max_closure_error = std::max(w.max_closure_error, std::abs(raw.norm() - 1.0));
    try {
      w.values.push_back(F(x));
    } catch (const Error& e) {
      w.values.push_back(nan);
      w.crossings.push_back({t, std::hypot(x[0], x[1]), e.what()});
    }
  }
  const Vec end = witness_curve(theta, y, kTwoPi).coords();
  w.max_closure_error = std::max(w.max_closure_error, (end - witness_curve(theta, y, 0.0).coords()).norm());

  if (!w.crossings.empty()) {
    w.grid_second_derivative = nan;
    w.refined_second_derivative = nan;
    w.t_max = nan;
    return w;
  }
  std::size_t k = 0;
  for (std::size_t i = 1; i < samples; ++i) {
    if (w.values[i] > w.values[k]) k = i;
  }
  w.argmax = k;
  const double fm = w.values[(k + samples - 1) % samples];
  const double f0 = w.values[k];
  const double fp = w.values[(k + 1) % samples];
  w.grid_second_derivative = (fp - 2.0 * f0 + fm) / (dt * dt);
  const double denom = fp - 2.0 * f0 + fm;
  const double shift = denom < 0.0 ? 0.5 * (fm - fp) / denom : 0.0;
  w.t_max = w.t[k] + shift * dt;
  const auto Fg = [&](double t) { return F(witness_curve(theta, y, t)); };
  w.refined_second_derivative = (Fg(w.t_max + h) - 2.0 * Fg(w.t_max) + Fg(w.t_max - h)) / (h * h);
  return w;
}

GeodesicWitness witness_no_convexity(const ScalarField& F, double theta, const Vec& y, std::size_t samples,
                                     double h) {
  GeodesicWitness w = trace_witness(F, theta, y, samples, h);
  if (!w.evaluable()) {
    const Crossing& c = w.crossings.front();
    throw DomainError("witness_no_convexity: function not evaluable at t=" + std::to_string(c.t) +
                      " (v=" + std::to_string(c.v) + "): " + c.reason);
  }
  return w;
}

nlohmann::json LevelSetReport::summary() const {
  return nlohmann::json{{"phi0", phi0},
                        {"t0", t0},
                        {"plane_level", plane_level},
                        {"normal", vec_json(normal)},
                        {"level_in_range", level_in_range},
                        {"plane_points", plane_points},
                        {"max_psi_residual", max_psi_residual},
                        {"solved_points", solved_points},
                        {"max_plane_residual", max_plane_residual},
                        {"pass", pass}};
}

LevelSetReport level_set_shape(const ConvexFamily& family, double phi0, double t0, int n, std::size_t points,
                               std::uint64_t seed) {
  const BumpProfile& bump = family.bump();
  const double c = bump.c();
  if (t0 < bump.flat_end()) throw DomainError("level_set_shape: t0 below 1 - 1.5c");
  LevelSetReport r;
  r.phi0 = phi0;
  r.t0 = t0;
  const double ft = bump.f(t0);
  r.plane_level = ft - t0 + 1.0;
  r.level_in_range = r.plane_level >= c - 1e-12 && r.plane_level <= 1.5 * c + 1e-12;
  r.normal = Vec::Zero(n + 1);
  r.normal[0] = std::sin(phi0 - ft);
  r.normal[1] = std::cos(phi0 - ft);

  const auto usable = [&](const SpherePoint& x) {
    const double v = std::hypot(x[0], x[1]);
    if (v <= 2.0 * c + 1e-9) return false;
    try {
      return polar(x).phi < phi0;
    } catch (const DomainError&) {
      return false;
    }
  };

  // Points of the plane {<x, y(t0)> = level} on the phi < phi0 side, kept
  // when t0 lies in their bracket so the root of H there is unique.
  Rng rng(seed);
  const double a = r.plane_level;
  const SpherePoint normal(r.normal);
  for (std::size_t attempt = 0; attempt < 50 * points && r.plane_points < points; ++attempt) {
    const Vec w = random_unit_tangent(normal, rng).vec();
    const SpherePoint x(a * r.normal + std::sqrt(1.0 - a * a) * w);
    if (!usable(x)) continue;
    const Bracket br = bracket(x, phi0, bump);
    if (t0 < br.lower || t0 > br.upper) continue;
    r.max_psi_residual = std::max(r.max_psi_residual, std::abs(family.psi(x, phi0) - t0));
    ++r.plane_points;
  }

  // Root-solve psi = t0 along geodesics leaving x_phi0 towards smaller phi.
  const SpherePoint centre = family_center(n, phi0);
  Vec back = Vec::Zero(n + 1);
  back[0] = -std::cos(phi0);
  back[1] = std::sin(phi0);
  const auto psi_at = [&](const SpherePoint& x) {
    return usable(x) ? family.psi(x, phi0) : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t attempt = 0; attempt < 50 * points && r.solved_points < points; ++attempt) {
    const Vec side = random_unit_tangent(centre, rng).vec();
    const double spread = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    const TangentVector X = TangentVector::project(centre, back + spread * side).normalized();
    double lo = 0.0;
    double hi = -1.0;
    for (double s = 0.01; s < kTwoPi; s += 0.01) {
      const double p = psi_at(great_circle(X, s));
      if (std::isnan(p)) break;
      if (p >= t0) {
        hi = s;
        break;
      }
      lo = s;
    }
    if (hi < 0.0) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (psi_at(great_circle(X, mid)) >= t0 ? hi : lo) = mid;
    }
    const SpherePoint x = great_circle(X, 0.5 * (lo + hi));
    if (!usable(x)) continue;
    r.max_plane_residual = std::max(r.max_plane_residual, std::abs(x.coords().dot(r.normal) - a));
    ++r.solved_points;
  }
  r.pass = r.level_in_range && r.plane_points > 0 && r.solved_points > 0 && r.max_psi_residual <= 1e-9 &&
           r.max_plane_residual <= 1e-9;
  return r;
}

}  // namespace sphconv
