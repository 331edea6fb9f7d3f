#include "sphconv/experiments.hpp"

#include "sphconv/bump.hpp"
#include "sphconv/cert.hpp"
#include "sphconv/convex.hpp"
#include "sphconv/gauss.hpp"
#include "sphconv/harmonic.hpp"
#include "sphconv/mesh.hpp"
#include "sphconv/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace sphconv {

namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

struct Cell {
  std::string text;
  template <typename T>
    requires std::is_arithmetic_v<T>
  Cell(T v) {
    if constexpr (std::is_floating_point_v<T>) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      text = os.str();
    } else {
      text = std::to_string(v);
    }
  }
  Cell(const char* s) : text(s) {}
  Cell(std::string s) : text(std::move(s)) {}
};

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { line(header); }
  void row(std::initializer_list<Cell> cells) {
    std::vector<std::string> t;
    for (const Cell& c : cells) t.push_back(c.text);
    line(t);
  }
  std::string str() const { return os_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os_ << (k ? "," : "") << cells[k];
    os_ << '\n';
  }
  std::ostringstream os_;
};

// Named pass/fail checks; a NaN value fails every comparison.
class Checks {
 public:
  void le(const std::string& name, double value, double bound) { add(name, value, "<=", bound, value <= bound); }
  void lt(const std::string& name, double value, double bound) { add(name, value, "<", bound, value < bound); }
  void ge(const std::string& name, double value, double bound) { add(name, value, ">=", bound, value >= bound); }
  void gt(const std::string& name, double value, double bound) { add(name, value, ">", bound, value > bound); }
  void within(const std::string& name, double value, double lo, double hi) {
    list_.push_back({{"name", name}, {"value", value}, {"op", "in"}, {"lower", lo}, {"upper", hi},
                     {"pass", value >= lo && value <= hi}});
  }
  void holds(const std::string& name, bool ok) { list_.push_back({{"name", name}, {"op", "true"}, {"pass", ok}}); }

  bool pass() const {
    return std::all_of(list_.begin(), list_.end(), [](const json& c) { return c.at("pass").get<bool>(); });
  }
  const json& list() const { return list_; }

 private:
  void add(const std::string& name, double value, const char* op, double bound, bool ok) {
    list_.push_back({{"name", name}, {"value", value}, {"op", op}, {"bound", bound}, {"pass", ok}});
  }
  json list_ = json::array();
};

ExperimentResult finish(const ExperimentConfig& cfg, json results, const Checks& checks,
                        std::map<std::string, std::string> files) {
  ExperimentResult r;
  r.subcommand = cfg.subcommand;
  r.pass = checks.pass();
  r.summary = {{"subcommand", cfg.subcommand},
               {"config", cfg.to_json()},
               {"results", std::move(results)},
               {"checks", checks.list()},
               {"pass", r.pass}};
  r.files = std::move(files);
  return r;
}

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

SpherePoint south() { return SpherePoint(Vec::Unit(3, 1) * -1.0); }

Vec exp_south(double t, double alpha) {
  Vec v(3);
  v << std::sin(t) * std::cos(alpha), -std::cos(t), std::sin(t) * std::sin(alpha);
  return v;
}

// Smooth boundary data inside the cap of radius pi/4 about the south pole.
SphereMap cap_data(const MeshPtr& mesh, double L) {
  return SphereMap::from_function(mesh, [L](const Eigen::VectorXd& p) {
    const double x = p[0] / L, y = p[1] / L;
    Vec v(3);
    v << 0.7 * std::sin(3 * x + 1), -1, 0.7 * std::cos(2 * y * x + 2 * y);
    return v;
  });
}

// Boundary data winding once around a cap of radius 1.5 about the south pole.
SphereMap spread_data(const MeshPtr& mesh, double L) {
  return SphereMap::from_function(mesh, [L](const Eigen::VectorXd& p) {
    const double a = p[0] / L - 0.5, b = p[1] / L - 0.5;
    return exp_south(3.0 * std::max(std::abs(a), std::abs(b)), std::atan2(b, a));
  });
}

ScalarField rho_squared(const SpherePoint& p) {
  return [p](const SpherePoint& x) {
    const double d = dist(p, x);
    return d * d;
  };
}

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.tolerance = cfg.tolerance;
  s.max_iterations = cfg.max_iterations;
  s.scheme = cfg.scheme == "jacobi" ? Scheme::Jacobi : Scheme::GaussSeidel;
  s.damping = cfg.damping;
  s.seed = cfg.seed;
  return s;
}

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Vec random_unit(int dim, Rng& rng) {
  std::normal_distribution<double> g;
  Vec y(dim);
  for (int i = 0; i < dim; ++i) y[i] = g(rng);
  return y.normalized();
}

std::string tag(int N) { return "N" + std::to_string(N); }

double max_over_min(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

void need(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// --- hessians -------------------------------------------------------------

ExperimentResult run_hessians(const ExperimentConfig& cfg) {
  need(!cfg.dims.empty(), "hessians needs at least one entry in dims");
  const ScalarField fields[4] = {[](const SpherePoint& x) { return x[0]; },
                                 [](const SpherePoint& x) { return x[1]; },
                                 [](const SpherePoint& x) { return polar(x).v; },
                                 [](const SpherePoint& x) { return polar(x).phi; }};
  const char* names[4] = {"x1", "x2", "v", "phi"};
  const double h = cfg.h;
  const PolarRegion region{cfg.v_min, 1.0, 0.1, 2 * kPi - 0.1};
  Checks checks;
  Csv csv({"n", "sample", "v", "field", "exact", "error_h", "error_h2"});
  json results = json::object();
  for (int n : cfg.dims) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(n)));
    double max_err[4] = {0, 0, 0, 0}, sum_h[4] = {0, 0, 0, 0}, sum_h2[4] = {0, 0, 0, 0};
    for (std::uint64_t i = 0; i < cfg.samples; ++i) {
      const SpherePoint x = region.sample(n, rng);
      const TangentVector X = random_unit_tangent(x, rng);
      const double exact[4] = {identities::hess_x1(x, X), identities::hess_x2(x, X), identities::hess_v(x, X),
                               identities::hess_phi(x, X)};
      for (int k = 0; k < 4; ++k) {
        const double e1 = std::abs(hess_fd(fields[k], x, X, h) - exact[k]);
        const double e2 = std::abs(hess_fd(fields[k], x, X, h / 2) - exact[k]);
        max_err[k] = std::max(max_err[k], e1);
        sum_h[k] += e1;
        sum_h2[k] += e2;
        csv.row({n, i, polar(x).v, names[k], exact[k], e1, e2});
      }
    }
    json dim = json::object();
    for (int k = 0; k < 4; ++k) {
      const double ratio = sum_h[k] / sum_h2[k];
      const std::string key = "n" + std::to_string(n) + "." + names[k];
      dim[names[k]] = {{"max_error", max_err[k]}, {"ratio", ratio}};
      checks.le("hessian." + key + ".max_error", max_err[k], 5 * h * h);
      checks.within("hessian." + key + ".ratio", ratio, 3.5, 4.5);
    }
    results["n" + std::to_string(n)] = dim;
  }
  return finish(cfg, results, checks, {{"hessians.csv", csv.str()}});
}

// --- certify --------------------------------------------------------------

ExperimentResult run_certify(const ExperimentConfig& cfg) {
  const double c = cfg.c;
  Checks checks;
  Csv ident({"v", "f_prime", "f_second", "residual"});
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double v = c + (1 - c) * (i + 1) / 101.0;
    const double f1 = SingleConvexFn::profile_prime(c, v);
    const double f2 = SingleConvexFn::profile_second(c, v);
    const double r = std::abs(v * f1 * f1 * f1 + f2 + 2 * f1 / v);
    worst = std::max(worst, r);
    ident.row({v, f1, f2, r});
  }
  checks.le("identity.max_residual", worst, 1e-9);

  const PolarRegion K{3 * c, 1.0, c, 2 * kPi - c};
  BoundsConfig bc;
  bc.n_directions = cfg.directions;
  bc.h = cfg.h;
  bc.seed = derive_seed(cfg.seed, 1);
  const SingleConvexFn fn = single_convex(c, K.samples(cfg.n, cfg.samples, derive_seed(cfg.seed, 2)), bc);
  CertifyConfig cc;
  cc.n_directions = cfg.directions;
  cc.h = cfg.h;
  cc.margin = 0.25 * fn.bounds().C;
  cc.seed = derive_seed(cfg.seed, 3);
  const ConvexityReport report = certify(fn.exponential(), K.samples(cfg.n, cfg.samples, derive_seed(cfg.seed, 4)), cc);
  checks.ge("certify.min_second_derivative", report.min_second_derivative, 0.25 * fn.bounds().C);

  std::ostringstream rows;
  report.write_csv(rows);
  const json results = {
      {"identity_max_residual", worst},
      {"lambda", fn.lambda()},
      {"bounds", {{"C", fn.bounds().C}, {"c0", fn.bounds().c0}, {"c1", fn.bounds().c1}}},
      {"report", report.summary()},
  };
  return finish(cfg, results, checks, {{"identity.csv", ident.str()}, {"certify.csv", rows.str()}});
}

// --- family ---------------------------------------------------------------

ExperimentResult run_family(const ExperimentConfig& cfg) {
  const double c = cfg.c;
  const int n = cfg.n;
  Checks checks;
  json results = json::object();

  const BumpProfile bump = BumpProfile::build(c);
  Csv bump_csv({"t", "f", "f_prime"});
  double flat = 0.0, linear = 0.0, fp_min = 1.0, fp_max = 0.0;
  std::vector<double> ts;
  for (int k = 0; k <= 3000; ++k) ts.push_back(k * 1e-3);
  ts.insert(ts.end(), {bump.flat_end(), bump.linear_start(), 10.0, 100.0});
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    const double f = bump.f(t), fp = bump.f_prime(t);
    if (t <= bump.flat_end()) flat = std::max(flat, std::abs(f));
    if (t >= bump.linear_start()) linear = std::max(linear, std::abs(f - (t - 1 + c)));
    fp_min = std::min(fp_min, fp);
    fp_max = std::max(fp_max, fp);
    if (k % 10 == 0) bump_csv.row({t, f, fp});
  }
  const double mass_error = std::abs(bump.h2_integral() - c / 2);
  checks.le("bump.flat_max", flat, 1e-10);
  checks.le("bump.linear_max", linear, 1e-10);
  checks.ge("bump.f_prime_min", fp_min, 0.0);
  checks.le("bump.f_prime_max", fp_max, 1.0);
  checks.le("bump.mass_error", mass_error, 1e-10);
  results["bump"] = {{"beta", bump.beta()}, {"flat_max", flat}, {"linear_max", linear},
                     {"f_prime_min", fp_min}, {"f_prime_max", fp_max}, {"mass_error", mass_error}};

  FamilyCalibration fc;
  fc.n = n;
  fc.c = c;
  fc.points_per_phi = cfg.points_per_phi;
  fc.n_phi = cfg.phi_count;
  fc.bounds.n_directions = cfg.directions;
  fc.bounds.h = cfg.h;
  fc.bounds.seed = derive_seed(cfg.seed, 1);
  fc.seed = derive_seed(cfg.seed, 2);
  const CalibratedFamily cal = calibrate_family(fc);
  const ConvexFamily& fam = cal.family;
  results["lambda0"] = fam.lambda0();
  results["bounds"] = {{"C", cal.estimate.bounds.C}, {"c0", cal.estimate.bounds.c0}, {"c1", cal.estimate.bounds.c1}};

  // (a) closed form against bisection where (x, x_phi0) >= 1.5c and |phi - phi0| <= pi.
  Rng rng(derive_seed(cfg.seed, 3));
  const PolarRegion U{2 * c + 1e-3, 1.0, c, 2 * kPi - c};
  double psi_gap = 0.0;
  for (std::uint64_t k = 0; k < cfg.samples;) {
    const SpherePoint x = U.sample(n, rng);
    const double phi0 = uniform(rng, c, 2 * kPi - c);
    if (x.coords().dot(family_center(n, phi0).coords()) < 1.5 * c || std::abs(polar(x).phi - phi0) > kPi) continue;
    ++k;
    psi_gap = std::max(psi_gap, std::abs(fam.psi(x, phi0) - fam.psi_bisect(x, phi0)));
  }
  checks.le("psi.closed_vs_bisection", psi_gap, 1e-10);

  // (b) F vanishes at the centre and equals 1 on {(x, x_phi0) = 1.5c, |phi - phi0| <= pi}.
  double at_centre = 0.0;
  for (double phi0 : fc.phis()) at_centre = std::max(at_centre, std::abs(fam.F(family_center(n, phi0), phi0)));
  double on_level = 0.0;
  for (std::uint64_t k = 0; k < cfg.samples;) {
    const double v = uniform(rng, 2 * c + 1e-3, 1.0);
    const double phi0 = uniform(rng, c, 2 * kPi - c);
    const double phi = phi0 + (uniform(rng, 0, 1) < 0.5 ? -1 : 1) * std::acos(1.5 * c / v);
    if (phi <= 0 || phi >= 2 * kPi) continue;
    const SpherePoint x = PolarRegion{v, v, phi, phi}.sample(n, rng);
    // Keep points whose rounded coordinates sit within 1e-18 of the set;
    // F varies by about lambda0 |dot - 1.5c| across it.
    const long double dot = static_cast<long double>(x[0]) * std::sin(static_cast<long double>(phi0)) +
                            static_cast<long double>(x[1]) * std::cos(static_cast<long double>(phi0));
    if (std::abs(dot - 1.5L * c) > 1e-18L) continue;
    ++k;
    on_level = std::max(on_level, std::abs(fam.F(x, phi0) - 1.0));
  }
  checks.le("F.at_centre", at_centre, 1e-9);
  checks.le("F.level_one", on_level, 1e-9);

  // (c) certification over K x Phi on fresh samples.
  const std::vector<double> phis = fc.phis();
  std::vector<std::vector<SpherePoint>> K;
  for (std::size_t k = 0; k < phis.size(); ++k)
    K.push_back(fc.region().samples(n, cfg.points_per_phi, derive_seed(cfg.seed, 100 + k)));
  CertifyConfig cc;
  cc.n_directions = cfg.directions;
  cc.h = cfg.h;
  cc.seed = derive_seed(cfg.seed, 4);
  const ConvexityReport report = certify_family(fam, phis, K, cc);
  checks.gt("certify.min_second_derivative", report.min_second_derivative, 0.0);

  results["psi_gap"] = psi_gap;
  results["F_at_centre"] = at_centre;
  results["F_level_one"] = on_level;
  results["report"] = report.summary();
  results["family"] = fam.to_json();
  std::ostringstream rows;
  report.write_csv(rows);
  return finish(cfg, results, checks, {{"bump.csv", bump_csv.str()}, {"certify.csv", rows.str()}});
}

// --- maximality -----------------------------------------------------------

ExperimentResult run_maximality(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  const double c = cfg.c;
  need(2 * c < 1, "maximality needs c < 1/2");
  Rng rng(cfg.seed);
  std::normal_distribution<double> g;
  Checks checks;
  Csv curves({"geodesic", "theta", "function", "t_max", "grid_second_derivative", "refined_second_derivative"});
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.runs; ++k) {
    const double theta = uniform(rng, 0.05, kPi / 2);
    const Vec y = random_unit(n - 1, rng);
    Eigen::MatrixXd A(n + 1, n + 1);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) A(i, j) = g(rng);
    const Vec b = random_unit(n + 1, rng);
    const Vec p = random_unit(n + 1, rng);
    const std::vector<ScalarField> supplied = {
        [A, b](const SpherePoint& x) { return std::sin(x.coords().dot(A * x.coords())) + std::exp(b.dot(x.coords())); },
        [n](const SpherePoint& x) { return x[n]; },
        [p](const SpherePoint& x) { return 1.0 - std::pow(x.coords().dot(p), 2); },
    };
    for (std::size_t f = 0; f < supplied.size(); ++f) {
      const GeodesicWitness w = witness_no_convexity(supplied[f], theta, y, cfg.samples, cfg.h);
      worst = std::max(worst, w.refined_second_derivative);
      curves.row({k, theta, f, w.t_max, w.grid_second_derivative, w.refined_second_derivative});
    }
  }
  checks.le("witness.max_second_derivative", worst, 1e-6);

  // Geodesics with theta <= arcsin(2c) dip to v = sin(theta) <= 2c, outside U.
  const ConvexFamily fam(BumpProfile::build(c), cfg.lambda0);
  Csv crossings({"geodesic", "theta", "phi0", "t", "v", "reason"});
  int left = 0;
  json family_rows = json::array();
  for (int k = 0; k < cfg.runs; ++k) {
    const double theta = std::asin(2 * c) * (k + 1) / cfg.runs;
    const double phi0 = uniform(rng, c, 2 * kPi - c);
    const Vec y = random_unit(n - 1, rng);
    const GeodesicWitness w = trace_witness([&](const SpherePoint& x) { return fam.F(x, phi0); }, theta, y, cfg.samples,
                                           cfg.h);
    bool outside = false;
    for (const Crossing& cr : w.crossings) {
      outside = outside || cr.v <= 2 * c;
      crossings.row({k, theta, phi0, cr.t, cr.v, cr.reason});
    }
    left += outside ? 1 : 0;
    family_rows.push_back({{"theta", theta}, {"phi0", phi0}, {"crossings", w.crossings.size()}, {"leaves_U", outside}});
  }
  checks.ge("family.geodesics_leaving_U", left, cfg.runs);
  const json results = {{"max_refined_second_derivative", worst}, {"family_geodesics", family_rows}};
  return finish(cfg, results, checks, {{"witness.csv", curves.str()}, {"crossings.csv", crossings.str()}});
}

// --- dvp ------------------------------------------------------------------

ExperimentResult run_dvp(const ExperimentConfig& cfg) {
  need(!cfg.radii.empty(), "dvp needs radii");
  const double L = cfg.L;
  const DomainMesh T = flat_torus(2, cfg.N, L);
  Rng rng(cfg.seed);
  std::uniform_int_distribution<int> pick(0, T.size() - 1);
  const std::vector<int> centers = {pick(rng), pick(rng), pick(rng)};
  const DoublingEstimate dbl = doubling_constant(T, centers, cfg.radii);
  Checks checks;
  checks.within("doubling.K1", dbl.K1, 3.2, 4.8);
  Csv dcsv({"center", "R", "V_R", "V_2R", "ratio"});
  for (const DoublingRow& r : dbl.rows) dcsv.row({r.center, r.R, r.V_R, r.V_2R, r.ratio});

  const DomainMesh I = interval(cfg.interval_N, L);
  std::vector<int> all(I.size());
  for (int i = 0; i < I.size(); ++i) all[i] = i;
  const double mu2 = neumann_mu2(I, all).mu2;
  const double K2 = 1.0 / (L * L * mu2);
  checks.le("poincare.interval_relative_error", std::abs(K2 * kPi * kPi - 1.0), 0.03);

  Csv ccsv({"ball", "center", "R", "vertices", "h", "bound", "mu2"});
  int violations = 0;
  for (int k = 0; k < cfg.runs; ++k) {
    const int center = pick(rng);
    const double R = uniform(rng, 0.04, 0.2) * L;
    const BallStats b = ball(T, center, R);
    const CheegerEstimate ce = cheeger_lower_bound(T, b.vertices, 8, derive_seed(cfg.seed, k));
    if (ce.bound > ce.mu2) ++violations;
    ccsv.row({k, center, R, b.vertices.size(), ce.h, ce.bound, ce.mu2});
  }
  checks.le("cheeger.violations", violations, 0);
  const json results = {{"doubling", dbl.summary()},
                        {"interval_mu2", mu2},
                        {"interval_K2", K2},
                        {"cheeger_violations", violations}};
  return finish(cfg, results, checks, {{"doubling.csv", dcsv.str()}, {"cheeger.csv", ccsv.str()}});
}

// --- green ----------------------------------------------------------------

ExperimentResult run_green(const ExperimentConfig& cfg) {
  need(!cfg.radii.empty(), "green needs radii");
  const DomainMesh T = flat_torus(2, cfg.N, cfg.L);
  const int y0 = 0;
  Checks checks;
  Csv gcsv({"R", "V_half", "sup_omega", "inf_omega", "min_G"});
  std::vector<double> sups, infs;
  double min_G = std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (double R : cfg.radii) {
    const GreenProfile gp = omega_R(T, y0, R);
    sups.push_back(gp.sup_omega);
    infs.push_back(gp.inf_omega);
    min_G = std::min(min_G, gp.min_G);
    gcsv.row({R, gp.V_half, gp.sup_omega, gp.inf_omega, gp.min_G});
    rows.push_back(gp.summary());
  }
  checks.le("omega.sup_variation", max_over_min(sups), 2.0);
  checks.le("omega.inf_variation", max_over_min(infs), 2.0);
  checks.gt("omega.inf_min", *std::min_element(infs.begin(), infs.end()), 0.0);

  const double R = *std::max_element(cfg.radii.begin(), cfg.radii.end());
  const double rho = R / 8;
  const GreenProfile gp = mollified_green(T, y0, R, rho, {1e-12, 20000});
  min_G = std::min(min_G, gp.min_G);
  checks.ge("green.min_G", min_G, 0.0);
  const auto d = T.distances_from(y0);
  Rng rng(cfg.seed);
  std::normal_distribution<double> g;
  Csv icsv({"field", "dirichlet_form", "average", "error"});
  double worst = 0.0;
  for (int k = 0; k < cfg.runs; ++k) {
    Vec phi = Vec::Zero(T.size());
    for (int i = 0; i < T.size(); ++i)
      if (gp.in_ball[i]) phi[i] = g(rng);
    double avg = 0.0;
    for (int i = 0; i < T.size(); ++i)
      if (d[i] < rho) avg += T.mu(i) * phi[i];
    avg /= gp.V_rho;
    const double lhs = dirichlet_form(T, gp.G, phi);
    worst = std::max(worst, std::abs(lhs - avg));
    icsv.row({k, lhs, avg, std::abs(lhs - avg)});
  }
  checks.le("green.identity_error", worst, 1e-9);
  const json results = {{"omega", rows}, {"identity_error", worst}, {"min_G", min_G}, {"identity_profile", gp.summary()}};
  return finish(cfg, results, checks, {{"omega.csv", gcsv.str()}, {"identity.csv", icsv.str()}});
}

// --- dirichlet ------------------------------------------------------------

ExperimentResult run_dirichlet(const ExperimentConfig& cfg) {
  need(!cfg.refinements.empty(), "dirichlet needs refinements");
  const auto F = rho_squared(south());
  const double K0 = kPi / 2;
  Checks checks;
  Csv trace({"N", "sweep", "energy"});
  Csv sub({"N", "checked", "violations", "fraction", "worst_margin", "slack", "violations_zero_slack"});
  json rows = json::array();
  std::vector<double> fractions;
  for (int N : cfg.refinements) {
    const SolveResult r = solve_dirichlet(cap_data(share(grid_box(2, N, cfg.L)), cfg.L), solver_config(cfg));
    SphereMap u = r.map;
    const double e0 = energy(u);
    for (int k = 0; k < 10; ++k) sweep(u, solver_config(cfg));
    const double drift = std::abs(energy(u) - e0);
    const SubharmonicityReport rep = subharmonicity_report(r.map, F, K0);
    const SubharmonicityReport sharp = subharmonicity_report(r.map, F, K0, 0.0);
    for (std::size_t k = 0; k < r.energy_trace.size(); ++k) trace.row({N, k + 1, r.energy_trace[k]});
    sub.row({N, rep.checked, rep.violations, rep.fraction, rep.worst_margin, rep.slack, sharp.violations});
    checks.le("solver." + tag(N) + ".residual", r.residual, cfg.tolerance);
    checks.holds("solver." + tag(N) + ".energy_monotone", r.energy_monotone);
    checks.le("solver." + tag(N) + ".energy_drift", drift, 1e-12 * std::max(1.0, e0));
    if (!fractions.empty())
      checks.le("subharmonicity." + tag(N) + ".fraction", rep.fraction, fractions.back() / 1.5);
    fractions.push_back(rep.fraction);
    json row = r.summary();
    row["N"] = N;
    row["energy"] = e0;
    row["energy_drift"] = drift;
    row["subharmonicity"] = rep.summary();
    row["subharmonicity_zero_slack"] = sharp.summary();
    rows.push_back(row);
  }
  if (fractions.size() == 1) checks.le("subharmonicity." + tag(cfg.refinements[0]) + ".fraction", fractions[0], 1.0);
  return finish(cfg, {{"K0", K0}, {"levels", rows}}, checks,
                {{"energy_trace.csv", trace.str()}, {"subharmonicity.csv", sub.str()}});
}

// --- liouville ------------------------------------------------------------

ExperimentResult run_liouville(const ExperimentConfig& cfg) {
  const double L = cfg.L;
  auto mesh = share(flat_torus(2, cfg.N, L));
  Checks checks;
  Csv csv({"run", "sweeps", "oscillation", "energy"});
  double worst_osc = 0.0, worst_energy = 0.0;
  bool monotone = true;
  for (int k = 0; k < cfg.runs; ++k) {
    Rng rng(derive_seed(cfg.seed, k));
    Eigen::MatrixXd U(3, mesh->size());
    for (int i = 0; i < mesh->size(); ++i) U.col(i) = random_in_cap(south(), kPi / 3, rng).coords();
    const SolveResult r = solve_closed(SphereMap(mesh, U), solver_config(cfg));
    const double osc = oscillation(r.map), e = energy(r.map);
    worst_osc = std::max(worst_osc, osc);
    worst_energy = std::max(worst_energy, e);
    monotone = monotone && r.energy_monotone;
    csv.row({k, r.sweeps, osc, e});
  }
  checks.le("liouville.max_oscillation", worst_osc, 1e-8);
  checks.le("liouville.max_energy", worst_energy, 1e-12);
  checks.holds("liouville.energy_monotone", monotone);

  auto control = SphereMap::from_function(mesh, [L](const Eigen::VectorXd& x) {
    const double a = 2 * kPi * x[0] / L + 0.3 * std::sin(2 * kPi * x[1] / L);
    Vec v(3);
    v << std::cos(a), std::sin(a), 0.0;
    return v;
  });
  const SolveResult r = solve_closed(control, solver_config(cfg));
  const double geodesic = 2 * kPi * kPi;
  const double e = energy(r.map);
  checks.le("control.energy_relative_error", std::abs(e - geodesic) / geodesic, 0.05);
  checks.gt("control.oscillation", oscillation(r.map), 1.0);
  const json results = {{"max_oscillation", worst_osc},
                        {"max_energy", worst_energy},
                        {"control", {{"energy", e}, {"closed_geodesic_energy", geodesic},
                                     {"oscillation", oscillation(r.map)}, {"sweeps", r.sweeps}}}};
  return finish(cfg, results, checks, {{"runs.csv", csv.str()}});
}

// --- singular -------------------------------------------------------------

double sphere_area(int k) { return 2 * std::pow(kPi, (k + 1) / 2.0) / std::tgamma((k + 1) / 2.0); }

ExperimentResult run_singular(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  Checks checks;
  json results = json::object();
  std::map<std::string, std::string> files;
  if (n == 2) {
    need(cfg.eps_list.size() >= 2, "singular with n = 2 needs at least two eps_list entries");
    Csv csv({"eps", "total", "analytic"});
    // Least squares of the energy against log(1 / eps).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(cfg.eps_list.size());
    json rows = json::array();
    for (double e : cfg.eps_list) {
      const SingularEnergy s = singular_energy(2, cfg.N, e);
      const double x = std::log(1.0 / e);
      sx += x;
      sy += s.total;
      sxx += x * x;
      sxy += x * s.total;
      csv.row({e, s.total, s.analytic});
      rows.push_back({{"eps", e}, {"total", s.total}, {"analytic", s.analytic}});
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    checks.le("energy.log_slope_relative_error", std::abs(slope - 2 * kPi) / (2 * kPi), 0.05);
    results["planar"] = rows;
    results["log_slope"] = slope;
    files["planar.csv"] = csv.str();
  } else {
    const SingularEnergy s = singular_energy(n, cfg.N, cfg.eps);
    const double limit = (n - 1) * sphere_area(n - 1) / (n - 2);
    checks.le("energy.relative_error", std::abs(s.total - limit) / limit, 0.02);
    Csv csv({"r_inner", "r_outer", "energy", "analytic"});
    for (const AnnulusRow& a : s.annuli) csv.row({a.r_inner, a.r_outer, a.energy, a.analytic});
    results["energy"] = s.summary();
    results["ball_energy"] = limit;
    files["annuli.csv"] = csv.str();
  }

  // Weak residual against smooth tangent fields supported in 0.2 < |x| < 0.8.
  Csv wcsv({"N", "weak_residual"});
  double prev = 0.0;
  json weak = json::array();
  for (int N : cfg.refinements) {
    auto mesh = share(punctured_ball(n, N, cfg.eps));
    // The planar map lands on the equator of S^2.
    const int m = std::max(n, 3);
    auto u = SphereMap::from_function(mesh, [m](const Eigen::VectorXd& x) {
      Vec out = Vec::Zero(m);
      out.head(x.size()) = x;
      return out;
    });
    Eigen::MatrixXd xi(m, mesh->size());
    for (int i = 0; i < mesh->size(); ++i) {
      const Vec x = mesh->position(i);
      const double r = x.norm();
      const double chi = (r > 0.2 && r < 0.8) ? std::pow(std::sin(kPi * (r - 0.2) / 0.6), 4) : 0.0;
      Vec a = Vec::Zero(m);
      for (int j = 0; j < n; ++j)
        a[j] = std::sin((j + 1) * x[j] + 2 * x[(j + 1) % n] - x[(j + 2) % n] * x[j] + j);
      const Vec ui = u.values().col(i);
      xi.col(i) = chi * (a - a.dot(ui) * ui);
    }
    const double w = weak_residual(u, xi);
    if (prev > 0.0) checks.ge("weak_residual." + tag(N) + ".decay", prev / w, 1.7);
    prev = w;
    wcsv.row({N, w});
    weak.push_back({{"N", N}, {"weak_residual", w}});
  }
  results["weak_residual"] = weak;
  files["weak_residual.csv"] = wcsv.str();
  return finish(cfg, results, checks, std::move(files));
}

// --- telescope ------------------------------------------------------------

ExperimentResult run_telescope(const ExperimentConfig& cfg) {
  need(!cfg.refinements.empty() && !cfg.radii.empty(), "telescope needs refinements and radii");
  const double L = cfg.L;
  const auto F = rho_squared(south());
  Checks checks;
  Csv csv({"N", "R", "lhs", "f_plus_R", "f_plus_half", "rhs", "ratio"});
  std::vector<double> C5;
  json levels = json::array();
  std::shared_ptr<SolveResult> finest;
  for (int N : cfg.refinements) {
    auto r = std::make_shared<SolveResult>(solve_dirichlet(cap_data(share(grid_box(2, N, L)), L), solver_config(cfg)));
    const int y0 = r->map.mesh().nearest_vertex(Eigen::Vector2d(L / 2, L / 2));
    const TelescopeReport rep = telescoping_report(r->map, F, y0, cfg.radii);
    for (const TelescopeRow& t : rep.rows) csv.row({N, t.R, t.lhs, t.f_plus_R, t.f_plus_half, t.rhs, t.ratio});
    checks.holds("telescope." + tag(N) + ".finite", std::isfinite(rep.C5) && rep.C5 > 0);
    checks.le("telescope." + tag(N) + ".identity_error", rep.telescope_error, 1e-12);
    checks.holds("telescope." + tag(N) + ".pigeonhole", rep.pigeonhole_ok);
    C5.push_back(rep.C5);
    json level = rep.summary();
    level["N"] = N;
    levels.push_back(level);
    finest = r;
  }
  if (C5.size() > 1) checks.le("telescope.C5_variation", max_over_min(C5), 1.5);

  // Harnack decay of v = rho^2 o u on balls of the finest map.
  const SphereMap& u = finest->map;
  Vec v(u.size());
  for (int i = 0; i < u.size(); ++i) v[i] = F(u.at(i));
  Rng rng(cfg.seed);
  Csv hcsv({"ball", "center", "R", "v_plus_R", "v_plus_half", "v_mean_half", "delta", "degenerate"});
  double min_delta = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.runs; ++k) {
    const int center = u.mesh().nearest_vertex(Eigen::Vector2d(uniform(rng, 0.3, 0.7) * L, uniform(rng, 0.3, 0.7) * L));
    const double R = uniform(rng, 0.1, 0.25) * L;
    const HarnackReport rep = harnack_sweep(u.mesh(), v, {center}, {R});
    for (const HarnackRow& h : rep.rows) {
      hcsv.row({k, center, R, h.v_plus_R, h.v_plus_half, h.v_mean_half, h.delta, h.degenerate ? 1 : 0});
      if (!h.degenerate) min_delta = std::min(min_delta, h.delta);
    }
  }
  checks.gt("harnack.min_delta", min_delta, 0.0);
  return finish(cfg, {{"levels", levels}, {"harnack_min_delta", min_delta}}, checks,
                {{"telescope.csv", csv.str()}, {"harnack.csv", hcsv.str()}});
}

// --- holder ---------------------------------------------------------------

ExperimentResult run_holder(const ExperimentConfig& cfg) {
  need(cfg.radii.size() >= 3, "holder needs at least three radii");
  const double L = cfg.L;
  auto mesh = share(grid_box(2, cfg.N, L));
  const int y0 = mesh->nearest_vertex(Eigen::Vector2d(L / 2, L / 2));
  Checks checks;
  Csv csv({"map", "R", "oscillation"});

  const SolveResult r = solve_dirichlet(spread_data(mesh, L), solver_config(cfg));
  const OscProfile prof = oscillation_profile(r.map, y0, cfg.radii);
  const HolderFit fit = holder_fit(prof);
  for (std::size_t k = 0; k < prof.radii.size(); ++k) csv.row({"spread", prof.radii[k], prof.osc[k]});
  checks.holds("holder.monotone", prof.monotone);
  checks.gt("holder.sigma_positive", fit.sigma, 0.0);
  checks.le("holder.sigma_upper", fit.sigma, 1.2);
  const ShrinkReport shrink = image_shrinking(r.map, y0, 0.75 * L, cfg.c);
  checks.lt("shrinking.delta", shrink.delta, 1.0);

  auto smooth = SphereMap::from_function(mesh, [L](const Eigen::VectorXd& x) { return exp_south(0.8 * x[0] / L, 0.0); });
  const OscProfile sprof = oscillation_profile(smooth, y0, cfg.radii);
  const HolderFit sfit = holder_fit(sprof);
  for (std::size_t k = 0; k < sprof.radii.size(); ++k) csv.row({"smooth", sprof.radii[k], sprof.osc[k]});
  checks.within("control.sigma", sfit.sigma, 0.9, 1.1);

  const json results = {
      {"solve", r.summary()},
      {"profile", prof.summary()},
      {"fit", {{"sigma", fit.sigma}, {"constant", fit.constant}, {"rows_used", fit.rows_used}}},
      {"shrinking", shrink.summary()},
      {"control_fit", {{"sigma", sfit.sigma}, {"constant", sfit.constant}, {"rows_used", sfit.rows_used}}},
  };
  return finish(cfg, results, checks, {{"oscillation.csv", csv.str()}});
}

// --- gauss ----------------------------------------------------------------

ExperimentResult run_gauss(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  Rng rng(cfg.seed);
  Checks checks;
  auto line = share(interval(4, 1.0));
  Csv csv({"case", "closed_form", "oracle", "error"});
  double worst = 0.0;
  for (int k = 0; k < cfg.runs; ++k) {
    const HalfEquator he = HalfEquator::random(n, rng);
    Eigen::MatrixXd U(n + 1, 4);
    for (int i = 0; i < 4; ++i) U.col(i) = random_point(n, rng).coords();
    const SphereMap map(line, U);
    const GaussImageReport rep = classify_gauss_image(map, he, 0.1);
    double oracle = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
      oracle = std::min(oracle, half_equator_distance_sampled(map.at(i), he, static_cast<int>(cfg.samples)));
    worst = std::max(worst, std::abs(rep.min_distance - oracle));
    csv.row({k, rep.min_distance, oracle, std::abs(rep.min_distance - oracle)});
  }
  checks.le("classify.oracle_error", worst, 1e-3);

  Csv ccsv({"N", "orthogonality", "tension_sup"});
  double prev = 0.0;
  json clifford = json::array();
  for (int N : cfg.refinements) {
    const double orth = clifford_orthogonality(N, 2 * N);
    const double t = tension_sup(clifford_normal_gauss(N), false);
    checks.le("clifford." + tag(N) + ".orthogonality", orth, 1e-12);
    if (prev > 0.0) checks.ge("clifford." + tag(N) + ".tension_decay", prev / t, 3.5);
    prev = t;
    ccsv.row({N, orth, t});
    clifford.push_back({{"N", N}, {"orthogonality", orth}, {"tension_sup", t}});
  }

  // The Clifford image meets every half-equator of S^3.
  double farthest = 0.0;
  if (!cfg.refinements.empty()) {
    const SphereMap nu = clifford_normal_gauss(cfg.refinements.front());
    for (int k = 0; k < 100; ++k)
      farthest = std::max(farthest, classify_gauss_image(nu, HalfEquator::random(3, rng), 0.0).min_distance);
  }
  const json results = {{"classify_max_error", worst}, {"clifford", clifford},
                        {"clifford_max_distance_to_half_equators", farthest}};
  return finish(cfg, results, checks, {{"classify.csv", csv.str()}, {"clifford.csv", ccsv.str()}});
}

// --- bernstein ------------------------------------------------------------

bool on_rim(double x, double y, double L) {
  return x * (L - x) < 1e-12 * L * L || y * (L - y) < 1e-12 * L * L;
}

ExperimentResult run_bernstein(const ExperimentConfig& cfg) {
  const double L = cfg.L;
  MinimalConfig mc;
  mc.tolerance = cfg.tolerance;
  mc.max_iterations = cfg.max_iterations;
  mc.damping = cfg.damping;
  Checks checks;
  std::map<std::string, std::string> files;

  const auto affine = [](double x, double y) { return 0.8 * x - 0.3 * y + 1; };
  const MinimalResult a =
      minimal_graph_solve(GraphSurface::box(cfg.N, L, [&](double x, double y) { return on_rim(x, y, L) ? affine(x, y) : 0.0; }), mc);
  const double affine_osc = oscillation(gauss_map_graph(a.surface));
  checks.le("affine.gauss_oscillation", affine_osc, 1e-8);

  const auto torus = GraphSurface::torus(cfg.N, L, Eigen::Vector2d(0.5, 0.3), [L](double x, double y) {
    return 0.05 * L * std::sin(2 * kPi * x / L) * std::cos(2 * kPi * y / L);
  });
  checks.le("torus.slope_bound", torus.slope_bound(), 1.0);
  const MinimalResult t = minimal_graph_solve(torus, mc);
  checks.le("torus.gauss_oscillation", t.gauss_oscillation_trace.back(), 1e-6);
  Csv tcsv({"iteration", "residual", "gauss_oscillation"});
  for (std::size_t k = 0; k < t.residual_trace.size(); ++k)
    tcsv.row({k + 1, t.residual_trace[k], t.gauss_oscillation_trace[k]});
  files["torus_trace.csv"] = tcsv.str();

  // Gauss map of a nonaffine minimal graph: harmonic for the induced metric away from the corners.
  Csv rcsv({"N", "iterations", "residual", "tension_sup"});
  double prev = 0.0;
  json rv = json::array();
  for (int N : cfg.refinements) {
    const MinimalResult r = minimal_graph_solve(GraphSurface::box(N, L, [L](double x, double y) {
                                                  return 0.3 * x + 0.2 * y +
                                                         (on_rim(x, y, L) ? 0.1 * L * std::sin(2 * kPi * x / L + 1) *
                                                                                std::cos(kPi * y / L)
                                                                          : 0.0);
                                                }),
                                                mc);
    const double ts = gauss_tension_induced_sup(r.surface, 0.25);
    if (prev > 0.0) checks.ge("ruh_vilms." + tag(N) + ".tension_decay", prev / ts, 1.7);
    prev = ts;
    rcsv.row({N, r.iterations, r.residual, ts});
    rv.push_back({{"N", N}, {"iterations", r.iterations}, {"residual", r.residual}, {"tension_sup", ts}});
  }
  files["ruh_vilms.csv"] = rcsv.str();

  Csv dcsv({"surface", "R", "theta"});
  const DensityProfile plane = density_profile(plane_samples(400, 4.0), Eigen::Vector3d::Zero(), {0.1, 0.5, 1.0, 1.5});
  checks.holds("density.plane.monotone", plane.monotone);
  checks.holds("density.plane.near_one", plane.near_one_at_small_R);
  for (const DensityRow& r : plane.rows) dcsv.row({"plane", r.R, r.theta});
  json catenoid = nullptr;
  if (!cfg.radii.empty()) {
    const DensityProfile cat = density_profile(catenoid_samples(2000, 200, 7.0), Eigen::Vector3d(1, 0, 0), cfg.radii);
    checks.holds("density.catenoid.monotone", cat.monotone);
    checks.holds("density.catenoid.near_one", cat.near_one_at_small_R);
    for (const DensityRow& r : cat.rows) dcsv.row({"catenoid", r.R, r.theta});
    // Two sheets seen from far away.
    if (cat.rows.back().R >= 100) checks.le("density.catenoid.far_theta_error", std::abs(cat.rows.back().theta - 2), 0.02);
    catenoid = cat.summary();
  }
  files["density.csv"] = dcsv.str();

  const json results = {{"affine", {{"iterations", a.iterations}, {"residual", a.residual}, {"gauss_oscillation", affine_osc}}},
                        {"torus", t.summary()},
                        {"ruh_vilms", rv},
                        {"density_plane", plane.summary()},
                        {"density_catenoid", catenoid}};
  return finish(cfg, results, checks, std::move(files));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  static const std::map<std::string, std::function<ExperimentResult(const ExperimentConfig&)>> table = {
      {"hessians", run_hessians},   {"certify", run_certify},     {"family", run_family},
      {"maximality", run_maximality}, {"dvp", run_dvp},           {"green", run_green},
      {"dirichlet", run_dirichlet}, {"liouville", run_liouville}, {"singular", run_singular},
      {"telescope", run_telescope}, {"holder", run_holder},       {"gauss", run_gauss},
      {"bernstein", run_bernstein},
  };
  return table.at(cfg.subcommand)(cfg);
}

}  // namespace sphconv
