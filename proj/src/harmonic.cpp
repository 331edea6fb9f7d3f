#include "sphconv/harmonic.hpp"

#include "sphconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sphconv {

namespace {

double min_spacing(const DomainMesh& mesh) {
  return *std::min_element(mesh.length().begin(), mesh.length().end());
}

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Sum_j w_ij u_j and sum_j w_ij at vertex i.
double neighbour_sum(const DomainMesh& mesh, const double* U, int d, int i, double* out) {
  std::fill(out, out + d, 0.0);
  double wsum = 0.0;
  for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
    const double w = mesh.weight()[e];
    const double* uj = U + static_cast<std::ptrdiff_t>(mesh.nbr()[e]) * d;
    for (int k = 0; k < d; ++k) out[k] += w * uj[k];
    wsum += w;
  }
  return wsum;
}

// One relaxation step at vertex i, reading neighbours from `src` and writing to `dst`.
void relax(const DomainMesh& mesh, const double* src, double* dst, int d, int i, double damping, double* s) {
  const double wsum = neighbour_sum(mesh, src, d, i, s);
  double sn = 0.0;
  for (int k = 0; k < d; ++k) sn += s[k] * s[k];
  if (std::sqrt(sn) < 1e-12) throw DegeneracyError("solver: neighbour average vanishes at vertex " + std::to_string(i));
  const double* ui = src + static_cast<std::ptrdiff_t>(i) * d;
  double* vi = dst + static_cast<std::ptrdiff_t>(i) * d;
  double nn = 0.0;
  for (int k = 0; k < d; ++k) {
    const double avg = s[k] / wsum;
    s[k] = ui[k] + damping * (avg - ui[k]);
    nn += s[k] * s[k];
  }
  if (nn < 1e-300) throw DegeneracyError("solver: damped update vanishes at vertex " + std::to_string(i));
  const double inv = 1.0 / std::sqrt(nn);
  for (int k = 0; k < d; ++k) vi[k] = s[k] * inv;
}

// Energy and interior tension sup in one pass over the edges.
std::pair<double, double> measure(const DomainMesh& mesh, const double* U, int d, bool interior_only, double* s) {
  double E = 0.0;
  double sup = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    const double* ui = U + static_cast<std::ptrdiff_t>(i) * d;
    std::fill(s, s + d, 0.0);
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const double w = mesh.weight()[e];
      const double* uj = U + static_cast<std::ptrdiff_t>(mesh.nbr()[e]) * d;
      double sq = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = uj[k] - ui[k];
        s[k] += w * diff;
        sq += diff * diff;
      }
      E += w * sq;
    }
    if (interior_only && mesh.on_boundary(i)) continue;
    double dot = 0.0;
    for (int k = 0; k < d; ++k) dot += s[k] * ui[k];
    double nn = 0.0;
    for (int k = 0; k < d; ++k) nn += (s[k] - dot * ui[k]) * (s[k] - dot * ui[k]);
    sup = std::max(sup, std::sqrt(nn) / mesh.mu(i));
  }
  // Each undirected edge was visited twice.
  return {0.25 * E, sup};
}

void sweep_active(const DomainMesh& mesh, Eigen::MatrixXd& U, Eigen::MatrixXd& next, const std::vector<int>& active,
                  const SolverConfig& cfg, double* scratch) {
  const int d = static_cast<int>(U.rows());
  if (cfg.scheme == Scheme::GaussSeidel) {
    for (int i : active) relax(mesh, U.data(), U.data(), d, i, cfg.damping, scratch);
  } else {
    for (int i : active) relax(mesh, U.data(), next.data(), d, i, cfg.damping, scratch);
    for (int i : active) U.col(i) = next.col(i);
  }
}

SolveResult run_solver(const SphereMap& init, const SolverConfig& cfg, bool closed) {
  cfg.validate();
  const DomainMesh& mesh = init.mesh();
  if (closed && std::any_of(mesh.boundary().begin(), mesh.boundary().end(), [](char b) { return b != 0; })) {
    throw DomainError("solve_closed: mesh has boundary vertices");
  }
  std::vector<int> active;
  for (int i = 0; i < mesh.size(); ++i)
    if (closed || !mesh.on_boundary(i)) active.push_back(i);

  SolveResult result{init, 0, 0.0, {}, true};
  Eigen::MatrixXd& U = result.map.mutable_values();
  Eigen::MatrixXd next = U;
  const int d = static_cast<int>(U.rows());
  std::vector<double> scratch(d);
  auto [prev_energy, residual] = measure(mesh, U.data(), d, !closed, scratch.data());
  result.residual = residual;
  while (result.residual > cfg.tolerance) {
    if (result.sweeps >= cfg.max_iterations) {
      throw ConvergenceError("solver: tension " + std::to_string(result.residual) + " after " +
                             std::to_string(result.sweeps) + " sweeps");
    }
    sweep_active(mesh, U, next, active, cfg, scratch.data());
    ++result.sweeps;
    const auto [e, res] = measure(mesh, U.data(), d, !closed, scratch.data());
    if (cfg.record_energy) {
      if (e > prev_energy * (1.0 + 1e-13) + 1e-300) result.energy_monotone = false;
      result.energy_trace.push_back(e);
    }
    prev_energy = e;
    result.residual = res;
  }
  return result;
}

// Vertices of B_R(y0) and the distance vector.
std::vector<int> ball_vertices(const std::vector<double>& d, double R) {
  std::vector<int> v;
  for (int i = 0; i < static_cast<int>(d.size()); ++i)
    if (d[i] < R) v.push_back(i);
  return v;
}

}  // namespace

SphereMap::SphereMap(MeshPtr mesh, Eigen::MatrixXd values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw DomainError("SphereMap: null mesh");
  if (values_.cols() != mesh_->size()) throw DomainError("SphereMap: one value per vertex is required");
  if (values_.rows() < 3) throw DomainError("SphereMap: target must be S^n with n >= 2");
  for (Eigen::Index i = 0; i < values_.cols(); ++i) {
    const double n = values_.col(i).norm();
    if (!(n > 1e-300) || !std::isfinite(n)) throw DomainError("SphereMap: zero or non-finite value");
    values_.col(i) /= n;
  }
}

SphereMap SphereMap::constant(MeshPtr mesh, const SpherePoint& p) {
  const int n = mesh->size();
  return SphereMap(std::move(mesh), p.coords().replicate(1, n));
}

SphereMap SphereMap::from_function(MeshPtr mesh, const std::function<Vec(const Eigen::VectorXd&)>& f) {
  const Vec first = f(mesh->position(0));
  Eigen::MatrixXd U(first.size(), mesh->size());
  U.col(0) = first;
  for (int i = 1; i < mesh->size(); ++i) U.col(i) = f(mesh->position(i));
  return SphereMap(std::move(mesh), std::move(U));
}

double energy(const SphereMap& u) {
  const DomainMesh& mesh = u.mesh();
  const Eigen::MatrixXd& U = u.values();
  double E = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const int j = mesh.nbr()[e];
      if (j > i) E += mesh.weight()[e] * (U.col(i) - U.col(j)).squaredNorm();
    }
  }
  return 0.5 * E;
}

Vec energy_density(const SphereMap& u) {
  const DomainMesh& mesh = u.mesh();
  const Eigen::MatrixXd& U = u.values();
  Vec rho(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) {
    double s = 0.0;
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      s += mesh.weight()[e] * (U.col(i) - U.col(mesh.nbr()[e])).squaredNorm();
    }
    rho[i] = 0.5 * s / mesh.mu(i);
  }
  return rho;
}

Eigen::MatrixXd tension(const SphereMap& u) {
  const DomainMesh& mesh = u.mesh();
  const Eigen::MatrixXd& U = u.values();
  Eigen::MatrixXd T(U.rows(), U.cols());
  for (int i = 0; i < mesh.size(); ++i) {
    Vec s = Vec::Zero(U.rows());
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) s += mesh.weight()[e] * (U.col(mesh.nbr()[e]) - U.col(i));
    s -= s.dot(U.col(i)) * U.col(i);
    T.col(i) = s / mesh.mu(i);
  }
  return T;
}

double tension_sup(const SphereMap& u, bool interior_only) {
  const DomainMesh& mesh = u.mesh();
  const Eigen::MatrixXd& U = u.values();
  const int d = static_cast<int>(U.rows());
  std::vector<double> s(d);
  double sup = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    if (interior_only && mesh.on_boundary(i)) continue;
    neighbour_sum(mesh, U.data(), d, i, s.data());
    double wsum = 0.0;
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) wsum += mesh.weight()[e];
    const double* ui = U.data() + static_cast<std::ptrdiff_t>(i) * d;
    double dot = 0.0;
    for (int k = 0; k < d; ++k) {
      s[k] -= wsum * ui[k];
      dot += s[k] * ui[k];
    }
    double nn = 0.0;
    for (int k = 0; k < d; ++k) nn += std::pow(s[k] - dot * ui[k], 2);
    sup = std::max(sup, std::sqrt(nn) / mesh.mu(i));
  }
  return sup;
}

double oscillation(const SphereMap& u, const std::vector<int>& vertices) {
  std::vector<int> all;
  const std::vector<int>* set = &vertices;
  if (vertices.empty()) {
    all.resize(u.size());
    for (int i = 0; i < u.size(); ++i) all[i] = i;
    set = &all;
  }
  // Largest distance is smallest inner product.
  double min_dot = 1.0;
  const Eigen::MatrixXd& U = u.values();
  for (std::size_t a = 0; a < set->size(); ++a) {
    for (std::size_t b = a + 1; b < set->size(); ++b) min_dot = std::min(min_dot, U.col((*set)[a]).dot(U.col((*set)[b])));
  }
  // acos loses precision near 1, so use the chord for tiny separations.
  if (min_dot > 0.999) {
    double chord = 0.0;
    for (std::size_t a = 0; a < set->size(); ++a)
      for (std::size_t b = a + 1; b < set->size(); ++b)
        chord = std::max(chord, (U.col((*set)[a]) - U.col((*set)[b])).norm());
    return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
  }
  return std::acos(std::clamp(min_dot, -1.0, 1.0));
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw DomainError("SolverConfig: tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("SolverConfig: damping must lie in (0, 1]");
  if (max_iterations < 0) throw DomainError("SolverConfig: max_iterations must be nonnegative");
}

nlohmann::json SolveResult::summary() const {
  return {{"sweeps", sweeps},
          {"residual", residual},
          {"energy", energy(map)},
          {"energy_monotone", energy_monotone},
          {"oscillation", map.size() <= 6000 ? oscillation(map) : std::numeric_limits<double>::quiet_NaN()}};
}

SolveResult solve_dirichlet(const SphereMap& init, const SolverConfig& cfg) { return run_solver(init, cfg, false); }

SolveResult solve_closed(const SphereMap& init, const SolverConfig& cfg) { return run_solver(init, cfg, true); }

void sweep(SphereMap& u, const SolverConfig& cfg) {
  cfg.validate();
  const DomainMesh& mesh = u.mesh();
  std::vector<int> active;
  for (int i = 0; i < mesh.size(); ++i)
    if (!mesh.on_boundary(i)) active.push_back(i);
  Eigen::MatrixXd& U = u.mutable_values();
  Eigen::MatrixXd next = U;
  std::vector<double> scratch(U.rows());
  sweep_active(mesh, U, next, active, cfg, scratch.data());
}

nlohmann::json SubharmonicityReport::summary() const {
  return {{"K0", K0},
          {"slack", slack},
          {"checked", checked},
          {"violations", violations},
          {"fraction", fraction},
          {"worst_margin", worst_margin}};
}

SubharmonicityReport subharmonicity_report(const SphereMap& u, const ScalarField& F, double K0, double slack) {
  const DomainMesh& mesh = u.mesh();
  SubharmonicityReport r;
  r.K0 = K0;
  r.slack = slack < 0.0 ? 10.0 * min_spacing(mesh) : slack;
  Vec f(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) f[i] = F(u.at(i));
  const Vec lap = laplacian_apply(mesh, f);
  const Vec dens = energy_density(u);
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.size(); ++i) {
    if (mesh.on_boundary(i)) continue;
    const double margin = lap[i] - K0 * dens[i];
    r.worst_margin = std::min(r.worst_margin, margin);
    ++r.checked;
    if (margin < -r.slack) ++r.violations;
  }
  r.fraction = r.checked ? static_cast<double>(r.violations) / static_cast<double>(r.checked) : 0.0;
  return r;
}

nlohmann::json TelescopeReport::summary() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"R", r.R},
                         {"lhs", r.lhs},
                         {"f_plus_R", r.f_plus_R},
                         {"f_plus_half", r.f_plus_half},
                         {"rhs", r.rhs},
                         {"ratio", r.ratio}});
  }
  return {{"rows", rows_json},         {"C5", C5},           {"rhs_sum", rhs_sum},
          {"telescope_error", telescope_error}, {"F_range", F_range}, {"min_lhs", min_lhs},
          {"pigeonhole_ok", pigeonhole_ok}};
}

TelescopeReport telescoping_report(const SphereMap& u, const ScalarField& F, int y0, const std::vector<double>& radii) {
  const DomainMesh& mesh = u.mesh();
  const std::vector<double> d = mesh.distances_from(y0);
  Vec f(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) f[i] = F(u.at(i));
  const Vec dens = energy_density(u);
  const auto sup_in = [&](double R) {
    double s = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < mesh.size(); ++i)
      if (d[i] < R) s = std::max(s, f[i]);
    return s;
  };
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  TelescopeReport rep;
  rep.min_lhs = std::numeric_limits<double>::infinity();
  for (double R : sorted) {
    TelescopeRow row;
    row.R = R;
    double V_half = 0.0;
    double E_half = 0.0;
    for (int i = 0; i < mesh.size(); ++i) {
      if (d[i] < 0.5 * R) {
        V_half += mesh.mu(i);
        E_half += mesh.mu(i) * dens[i];
      }
    }
    row.lhs = R * R / V_half * E_half;
    row.f_plus_R = sup_in(R);
    row.f_plus_half = sup_in(0.5 * R);
    row.rhs = row.f_plus_R - row.f_plus_half;
    if (row.rhs > 0.0) {
      row.ratio = row.lhs / row.rhs;
    } else {
      row.ratio = row.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    rep.C5 = std::max(rep.C5, row.ratio);
    rep.rhs_sum += row.rhs;
    rep.min_lhs = std::min(rep.min_lhs, row.lhs);
    rep.rows.push_back(row);
  }
  if (!rep.rows.empty()) {
    // Dyadic rows telescope when each R/2 is the next radius.
    double expected = rep.rows.front().f_plus_R - rep.rows.back().f_plus_half;
    bool dyadic = true;
    for (std::size_t k = 0; k + 1 < rep.rows.size(); ++k) dyadic = dyadic && rep.rows[k].f_plus_half == rep.rows[k + 1].f_plus_R;
    rep.telescope_error = dyadic ? std::abs(rep.rhs_sum - expected) : std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < mesh.size(); ++i) {
      if (d[i] < rep.rows.front().R) {
        lo = std::min(lo, f[i]);
        hi = std::max(hi, f[i]);
      }
    }
    rep.F_range = hi - lo;
    rep.pigeonhole_ok = rep.min_lhs <= rep.C5 * rep.rhs_sum / static_cast<double>(rep.rows.size()) + 1e-15 ||
                        std::isinf(rep.C5);
  }
  return rep;
}

HarnackRow harnack_decay(const DomainMesh& mesh, const Vec& v, int y0, double R) {
  const std::vector<double> d = mesh.distances_from(y0);
  HarnackRow row;
  row.center = y0;
  row.R = R;
  row.v_plus_R = -std::numeric_limits<double>::infinity();
  row.v_plus_half = row.v_plus_R;
  double mass = 0.0;
  double sum = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    if (d[i] < R) row.v_plus_R = std::max(row.v_plus_R, v[i]);
    if (d[i] < 0.5 * R) {
      row.v_plus_half = std::max(row.v_plus_half, v[i]);
      mass += mesh.mu(i);
      sum += mesh.mu(i) * v[i];
    }
  }
  row.v_mean_half = sum / mass;
  const double denom = row.v_plus_R - row.v_mean_half;
  if (!(std::abs(denom) > 1e-14 * std::max(1.0, std::abs(row.v_plus_R)))) {
    throw DomainError("harnack_decay: sup over B_R equals the mean over B_{R/2}");
  }
  row.delta = (row.v_plus_R - row.v_plus_half) / denom;
  return row;
}

nlohmann::json HarnackReport::summary() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"center", r.center},
                         {"R", r.R},
                         {"v_plus_R", r.v_plus_R},
                         {"v_plus_half", r.v_plus_half},
                         {"v_mean_half", r.v_mean_half},
                         {"delta", r.delta},
                         {"degenerate", r.degenerate}});
  }
  return {{"rows", rows_json}, {"min_delta", min_delta}, {"pass", pass}};
}

HarnackReport harnack_sweep(const DomainMesh& mesh, const Vec& v, const std::vector<int>& centers,
                            const std::vector<double>& radii) {
  HarnackReport rep;
  rep.min_delta = std::numeric_limits<double>::infinity();
  for (int c : centers) {
    for (double R : radii) {
      try {
        rep.rows.push_back(harnack_decay(mesh, v, c, R));
        rep.min_delta = std::min(rep.min_delta, rep.rows.back().delta);
      } catch (const DomainError&) {
        HarnackRow row;
        row.center = c;
        row.R = R;
        row.degenerate = true;
        rep.rows.push_back(row);
      }
    }
  }
  rep.pass = !(rep.min_delta <= 0.0);
  return rep;
}

nlohmann::json OscProfile::summary() const {
  return {{"center", center}, {"radii", radii}, {"osc", osc}, {"monotone", monotone}};
}

OscProfile oscillation_profile(const SphereMap& u, int y0, const std::vector<double>& radii) {
  OscProfile p;
  p.center = y0;
  p.radii = radii;
  std::sort(p.radii.begin(), p.radii.end());
  const std::vector<double> d = u.mesh().distances_from(y0);
  for (double R : p.radii) p.osc.push_back(oscillation(u, ball_vertices(d, R)));
  for (std::size_t k = 1; k < p.osc.size(); ++k) p.monotone = p.monotone && p.osc[k] >= p.osc[k - 1];
  return p;
}

HolderFit holder_fit(const OscProfile& profile) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < profile.radii.size(); ++k) {
    if (profile.osc[k] >= 1e-12) {
      x.push_back(std::log(profile.radii[k]));
      y.push_back(std::log(profile.osc[k]));
    }
  }
  if (x.size() < 3) throw FitError("holder_fit: fewer than 3 rows with positive oscillation");
  Eigen::MatrixXd A(x.size(), 2);
  Vec b(static_cast<Eigen::Index>(y.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    A(static_cast<Eigen::Index>(k), 0) = x[k];
    A(static_cast<Eigen::Index>(k), 1) = 1.0;
    b[static_cast<Eigen::Index>(k)] = y[k];
  }
  const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
  HolderFit fit;
  fit.sigma = sol[0];
  fit.constant = std::exp(sol[1]);
  fit.rows_used = x.size();
  fit.pass = fit.sigma > 0.0 && profile.monotone;
  return fit;
}

nlohmann::json ShrinkReport::summary() const {
  return {{"delta", delta},
          {"radius", radius},
          {"cap_radius", cap_radius},
          {"centre", vec_json(centre)},
          {"halvings", halvings}};
}

ShrinkReport image_shrinking(const SphereMap& u, int y0, double R1, double c) {
  if (!(c > 0.0 && c < 2.0 / 3.0)) throw DomainError("image_shrinking: c must lie in (0, 2/3)");
  const std::vector<double> d = u.mesh().distances_from(y0);
  ShrinkReport rep;
  rep.cap_radius = std::acos(1.5 * c);
  double delta = 1.0;
  for (int k = 0; k <= 20; ++k, delta *= 0.5) {
    std::vector<int> verts = ball_vertices(d, delta * R1);
    if (verts.empty()) verts.push_back(y0);
    const SpherePoint centre = extrinsic_mean(u, verts);
    double radius = 0.0;
    for (int i : verts) radius = std::max(radius, dist(centre, u.at(i)));
    if (radius <= rep.cap_radius) {
      rep.delta = delta;
      rep.radius = radius;
      rep.centre = centre.coords();
      rep.halvings = k;
      return rep;
    }
  }
  throw ShrinkError("image_shrinking: no dyadic delta >= 2^-20 confines the image");
}

SpherePoint extrinsic_mean(const SphereMap& u, const std::vector<int>& vertices) {
  Vec s = Vec::Zero(u.ambient());
  for (int i : vertices) s += u.mesh().mu(i) * u.values().col(i);
  if (s.norm() < 1e-12) throw DegeneracyError("extrinsic_mean: weighted sum vanishes");
  return SpherePoint(s);
}

SpherePoint chart_mean(const SphereMap& u, const std::vector<int>& vertices) {
  double mass = 0.0;
  double theta = 0.0;
  Vec y = Vec::Zero(u.ambient() - 2);
  for (int i : vertices) {
    const ChartPoint p = chart_inv(u.at(i));
    const double m = u.mesh().mu(i);
    mass += m;
    theta += m * p.theta;
    y += m * p.y;
  }
  if (!(mass > 0.0)) throw DomainError("chart_mean: empty vertex set");
  return chart(ChartPoint{theta / mass, y / mass});
}

ChartLipschitz chart_bilipschitz(const std::vector<ChartPoint>& samples, std::size_t directions, std::uint64_t seed,
                                 double h) {
  ChartLipschitz out{std::numeric_limits<double>::infinity(), 0.0};
  Rng rng(seed);
  std::normal_distribution<double> g;
  for (const ChartPoint& p : samples) {
    const Eigen::Index k = p.y.size();
    for (std::size_t s = 0; s < directions; ++s) {
      double dt = g(rng);
      Vec dy(k);
      for (Eigen::Index i = 0; i < k; ++i) dy[i] = g(rng);
      const double norm = std::sqrt(dt * dt + dy.squaredNorm());
      dt /= norm;
      dy /= norm;
      const Vec plus = chart(ChartPoint{p.theta + h * dt, p.y + h * dy}).coords();
      const Vec minus = chart(ChartPoint{p.theta - h * dt, p.y - h * dy}).coords();
      const double ratio = (plus - minus).norm() / (2.0 * h);
      out.K3 = std::min(out.K3, ratio);
      out.K4 = std::max(out.K4, ratio);
    }
  }
  return out;
}

nlohmann::json SingularEnergy::summary() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& a : annuli) {
    rows.push_back({{"r_inner", a.r_inner}, {"r_outer", a.r_outer}, {"energy", a.energy}, {"analytic", a.analytic}});
  }
  return {{"n", n},         {"N", N},         {"eps", eps},         {"spacing", spacing}, {"annuli", rows},
          {"total", total}, {"analytic", analytic}, {"tension_sup", tension_sup}};
}

SingularEnergy singular_energy(int n, int N, double eps) {
  if (n < 2) throw DomainError("singular_energy: n must be at least 2");
  auto mesh = std::make_shared<const DomainMesh>(punctured_ball(n, N, eps));
  const SphereMap u = SphereMap::from_function(mesh, [n](const Eigen::VectorXd& x) {
    Vec out = Vec::Zero(std::max(n, 3));
    out.head(n) = x;
    return out;
  });
  SingularEnergy out;
  out.n = n;
  out.N = N;
  out.eps = eps;
  out.spacing = 2.0 / N;
  const double sphere_area = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  const auto radial = [&](double a, double b) {
    const double integral = n == 2 ? std::log(b / a) : (std::pow(b, n - 2) - std::pow(a, n - 2)) / (n - 2);
    return (n - 1) * sphere_area * integral;
  };
  // Dyadic annuli from the outer rim inwards, the last one ending at eps.
  std::vector<double> edges{1.0};
  while (edges.back() * 0.5 > eps) edges.push_back(edges.back() * 0.5);
  edges.push_back(eps);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) out.annuli.push_back({edges[k + 1], edges[k], 0.0, radial(edges[k + 1], edges[k])});
  const Vec dens = energy_density(u);
  for (int i = 0; i < mesh->size(); ++i) {
    if (mesh->on_boundary(i)) continue;
    const double r = mesh->position(i).norm();
    const double e = mesh->mu(i) * dens[i];
    out.total += e;
    for (AnnulusRow& a : out.annuli) {
      if (r >= a.r_inner && r < a.r_outer) {
        a.energy += e;
        break;
      }
    }
  }
  out.analytic = radial(eps, 1.0);
  out.tension_sup = tension_sup(u, true);
  return out;
}

double weak_residual(const SphereMap& u, const Eigen::MatrixXd& xi) {
  const Eigen::MatrixXd T = tension(u);
  const DomainMesh& mesh = u.mesh();
  double s = 0.0;
  double norm2 = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    if (mesh.on_boundary(i)) continue;
    s += mesh.mu(i) * T.col(i).dot(xi.col(i));
    norm2 += mesh.mu(i) * xi.col(i).squaredNorm();
  }
  return norm2 > 0.0 ? std::abs(s) / std::sqrt(norm2) : 0.0;
}

SpherePoint random_in_cap(const SpherePoint& p, double r, Rng& rng) {
  // Rejection from the uniform sphere keeps the distribution uniform on the cap.
  const double cos_r = std::cos(r);
  if (r >= std::numbers::pi) return random_point(p.dim(), rng);
  if (r < 0.5) {
    // For small caps, sample the angle with density proportional to sin^{n-1}.
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (;;) {
      const double t = r * uni(rng);
      if (uni(rng) * std::pow(std::sin(r), p.dim() - 1) <= std::pow(std::sin(t), p.dim() - 1)) {
        return geodesic(p, random_unit_tangent(p, rng), t);
      }
    }
  }
  for (;;) {
    const SpherePoint x = random_point(p.dim(), rng);
    if (x.coords().dot(p.coords()) >= cos_r) return x;
  }
}

}  // namespace sphconv
