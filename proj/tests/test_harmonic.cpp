#include "sphconv/errors.hpp"
#include "sphconv/harmonic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sphconv;

namespace {

constexpr double kPi = std::numbers::pi;

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

SpherePoint south() { return SpherePoint(Vec::Unit(3, 1) * -1.0); }

Vec exp_south(double t, double alpha) {
  Vec v(3);
  v << std::sin(t) * std::cos(alpha), -std::cos(t), std::sin(t) * std::sin(alpha);
  return v;
}

// Smooth boundary data inside the cap of radius pi/4 about the south pole.
SphereMap cap_data(const MeshPtr& mesh) {
  return SphereMap::from_function(mesh, [](const Eigen::VectorXd& x) {
    Vec v(3);
    v << 0.7 * std::sin(3 * x[0] + 1), -1, 0.7 * std::cos(2 * x[1] * x[0] + 2 * x[1]);
    return v;
  });
}

// Boundary data winding once around a cap of radius 1.5 about the south pole.
SphereMap spread_data(const MeshPtr& mesh) {
  return SphereMap::from_function(mesh, [](const Eigen::VectorXd& x) {
    const double a = x[0] - 0.5, b = x[1] - 0.5;
    return exp_south(3.0 * std::max(std::abs(a), std::abs(b)), std::atan2(b, a));
  });
}

ScalarField rho_squared(const SpherePoint& p) {
  return [p](const SpherePoint& x) {
    const double d = dist(p, x);
    return d * d;
  };
}

const SolveResult& converged_cap_map() {
  static const SolveResult r = solve_dirichlet(cap_data(share(grid_box(2, 16, 1.0))));
  return r;
}

}  // namespace

TEST(SphereMap, NormalizesColumnsAndRejectsZero) {
  auto mesh = share(interval(4, 1.0));
  Eigen::MatrixXd U = Eigen::MatrixXd::Constant(3, 4, 2.0);
  SphereMap u(mesh, U);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(u.values().col(i).norm(), 1.0, 1e-15);
  U(0, 2) = U(1, 2) = U(2, 2) = 0.0;
  EXPECT_THROW(SphereMap(mesh, U), DomainError);
  EXPECT_THROW(SphereMap(mesh, Eigen::MatrixXd::Ones(3, 3)), DomainError);
  EXPECT_THROW(SphereMap(mesh, Eigen::MatrixXd::Ones(2, 4)), DomainError);
}

TEST(Energy, ConstantMapHasNoEnergyOrTension) {
  auto u = SphereMap::constant(share(grid_box(2, 8, 1.0)), south());
  EXPECT_EQ(energy(u), 0.0);
  EXPECT_EQ(tension_sup(u, false), 0.0);
  EXPECT_EQ(oscillation(u), 0.0);
}

TEST(Energy, EquatorLoopMatchesClosedForm) {
  for (int N : {8, 32, 100}) {
    auto u = SphereMap::from_function(share(flat_torus(1, N, 1.0)), [](const Eigen::VectorXd& x) {
      Vec v(3);
      v << std::cos(2 * kPi * x[0]), std::sin(2 * kPi * x[0]), 0.0;
      return v;
    });
    const double s = std::sin(kPi / N);
    EXPECT_NEAR(energy(u), 2.0 * N * N * s * s, 1e-10 * N * N);
    // A closed geodesic traversed at constant speed is harmonic.
    EXPECT_LT(tension_sup(u, false), 1e-9 * N * N);
  }
}

TEST(Energy, DensityIntegratesToTwiceEnergy) {
  auto u = spread_data(share(grid_box(2, 12, 1.0)));
  const Vec dens = energy_density(u);
  EXPECT_NEAR(u.mesh().mu().dot(dens), 2.0 * energy(u), 1e-12 * energy(u));
  EXPECT_GE(dens.minCoeff(), 0.0);
}

TEST(Tension, IsTangentAndMatchesSupNorm) {
  auto u = spread_data(share(grid_box(2, 10, 1.0)));
  const Eigen::MatrixXd T = tension(u);
  double sup = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(T.col(i).dot(u.values().col(i)), 0.0, 1e-10 * (1 + T.col(i).norm()));
    if (!u.mesh().on_boundary(i)) sup = std::max(sup, T.col(i).norm());
  }
  EXPECT_NEAR(tension_sup(u), sup, 1e-10 * sup);
}

TEST(Oscillation, MatchesLargestPairwiseDistance) {
  auto mesh = share(interval(3, 1.0));
  Eigen::MatrixXd U(3, 3);
  U.col(0) = exp_south(0.0, 0.0);
  U.col(1) = exp_south(0.4, 0.0);
  U.col(2) = exp_south(0.9, kPi);
  SphereMap u(mesh, U);
  EXPECT_NEAR(oscillation(u), 1.3, 1e-12);
  EXPECT_NEAR(oscillation(u, {0, 1}), 0.4, 1e-12);
  U.col(1) = exp_south(1e-9, 0.0);
  EXPECT_NEAR(oscillation(SphereMap(mesh, U), {0, 1}), 1e-9, 1e-16);
}

TEST(Solver, DirichletConvergesMonotonically) {
  const SolveResult& r = converged_cap_map();
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_TRUE(r.energy_monotone);
  EXPECT_EQ(static_cast<int>(r.energy_trace.size()), r.sweeps);
  for (std::size_t k = 1; k < r.energy_trace.size(); ++k) EXPECT_LE(r.energy_trace[k], r.energy_trace[k - 1] * (1 + 1e-13));
  // Boundary values are untouched.
  const SphereMap init = cap_data(share(grid_box(2, 16, 1.0)));
  for (int i = 0; i < init.size(); ++i)
    if (init.mesh().on_boundary(i)) EXPECT_EQ(r.map.values().col(i), init.values().col(i));
}

TEST(Solver, EnergyStableOverExtraSweeps) {
  SphereMap u = converged_cap_map().map;
  const double e0 = energy(u);
  for (int k = 0; k < 10; ++k) sweep(u);
  EXPECT_NEAR(energy(u), e0, 1e-12);
}

TEST(Solver, JacobiReachesSameMap) {
  SolverConfig cfg;
  cfg.scheme = Scheme::Jacobi;
  cfg.damping = 0.5;
  const SolveResult r = solve_dirichlet(cap_data(share(grid_box(2, 16, 1.0))), cfg);
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LT((r.map.values() - converged_cap_map().map.values()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Solver, Errors) {
  SolverConfig bad;
  bad.damping = 1.5;
  EXPECT_THROW(bad.validate(), DomainError);
  bad.damping = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);

  SolverConfig one;
  one.max_iterations = 1;
  EXPECT_THROW(solve_dirichlet(cap_data(share(grid_box(2, 16, 1.0))), one), ConvergenceError);
  EXPECT_THROW(solve_closed(cap_data(share(grid_box(2, 4, 1.0)))), DomainError);

  // Antipodal neighbours leave no direction to move in.
  Eigen::MatrixXd P(1, 4);
  P << 0, 1, 2, 3;
  auto path = share(DomainMesh(P, {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}, {2, 3, 1.0, 1.0}}, Vec::Ones(4), {1, 0, 0, 1}));
  Eigen::MatrixXd U(3, 4);
  U.col(0) = Vec::Unit(3, 0);
  U.col(1) = Vec::Unit(3, 2);
  U.col(2) = -Vec::Unit(3, 0);
  U.col(3) = Vec::Unit(3, 2);
  EXPECT_THROW(solve_dirichlet(SphereMap(path, U)), DegeneracyError);
}

TEST(Liouville, CapDataOnTorusBecomesConstant) {
  auto mesh = share(flat_torus(2, 12, 1.0));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    Eigen::MatrixXd U(3, mesh->size());
    for (int i = 0; i < mesh->size(); ++i) U.col(i) = random_in_cap(south(), kPi / 3, rng).coords();
    const SolveResult r = solve_closed(SphereMap(mesh, U));
    EXPECT_LE(oscillation(r.map), 1e-8);
    EXPECT_LE(energy(r.map), 1e-12);
    EXPECT_TRUE(r.energy_monotone);
  }
}

TEST(Liouville, EquatorControlStaysNonconstant) {
  const int N = 16;
  auto mesh = share(flat_torus(2, N, 1.0));
  auto u = SphereMap::from_function(mesh, [](const Eigen::VectorXd& x) {
    const double a = 2 * kPi * x[0] + 0.3 * std::sin(2 * kPi * x[1]);
    Vec v(3);
    v << std::cos(a), std::sin(a), 0.0;
    return v;
  });
  const SolveResult r = solve_closed(u);
  const double s = std::sin(kPi / N);
  EXPECT_NEAR(energy(r.map), 2.0 * N * N * s * s, 1e-8);
  EXPECT_NEAR(energy(r.map), 2 * kPi * kPi, 0.05 * 2 * kPi * kPi);
  EXPECT_GT(oscillation(r.map), 3.0);
}

TEST(Subharmonicity, SharpConstantHoldsOnConvergedMap) {
  const SolveResult& r = converged_cap_map();
  const auto F = rho_squared(south());
  const auto rep = subharmonicity_report(r.map, F, kPi / 2, 0.0);
  EXPECT_EQ(rep.checked, 225u);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_GT(rep.worst_margin, 0.0);
  const auto loose = subharmonicity_report(r.map, F, kPi / 2);
  EXPECT_NEAR(loose.slack, 10.0 / 16, 1e-12);
  // A constant far above the Hessian bound must be violated.
  EXPECT_GT(subharmonicity_report(r.map, F, 50.0, 0.0).fraction, 0.5);
}

TEST(Telescope, SumTelescopesAndPigeonholeHolds) {
  const SolveResult& r = converged_cap_map();
  const int y0 = r.map.mesh().nearest_vertex(Eigen::Vector2d(0.5, 0.5));
  const auto rep = telescoping_report(r.map, rho_squared(south()), y0, {0.1, 0.4, 0.2});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows.front().R, 0.4);
  EXPECT_LE(rep.telescope_error, 1e-12);
  EXPECT_NEAR(rep.rhs_sum, rep.rows.front().f_plus_R - rep.rows.back().f_plus_half, 1e-12);
  EXPECT_TRUE(std::isfinite(rep.C5));
  EXPECT_GT(rep.C5, 0.0);
  EXPECT_TRUE(rep.pigeonhole_ok);
  EXPECT_LE(rep.rhs_sum, rep.F_range + 1e-15);
  for (const auto& row : rep.rows) EXPECT_GE(row.rhs, 0.0);
}

TEST(Harnack, LinearFunctionGivesLatticeClosedForm) {
  const int N = 32;
  auto mesh = grid_box(2, N, 1.0);
  Vec v(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) v[i] = mesh.position(i)[0];
  const int y0 = mesh.nearest_vertex(Eigen::Vector2d(0.5, 0.5));
  const double h = 1.0 / N;
  for (double R : {0.2, 0.3, 0.45}) {
    // Largest lattice offset strictly inside each radius; the half-ball mean is the centre by symmetry.
    const double aR = std::ceil(R / h - 1) * h;
    const double ah = std::ceil(R / (2 * h) - 1) * h;
    const HarnackRow row = harnack_decay(mesh, v, y0, R);
    EXPECT_NEAR(row.v_mean_half, 0.5, 1e-14);
    EXPECT_NEAR(row.delta, (aR - ah) / aR, 1e-12) << R;
  }
}

TEST(Harnack, DegenerateBallsAreFlagged) {
  auto mesh = grid_box(2, 8, 1.0);
  const Vec v = Vec::Constant(mesh.size(), 2.0);
  EXPECT_THROW(harnack_decay(mesh, v, 40, 0.3), DomainError);
  const auto rep = harnack_sweep(mesh, v, {40, 41}, {0.3});
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_TRUE(rep.rows[0].degenerate);
  EXPECT_TRUE(rep.pass);
}

TEST(Harnack, ConvergedMapHasPositiveDecay) {
  const SolveResult& r = converged_cap_map();
  const auto F = rho_squared(south());
  Vec v(r.map.size());
  for (int i = 0; i < r.map.size(); ++i) v[i] = F(r.map.at(i));
  std::vector<int> centers;
  for (double a : {0.3, 0.5, 0.7})
    for (double b : {0.3, 0.5, 0.7}) centers.push_back(r.map.mesh().nearest_vertex(Eigen::Vector2d(a, b)));
  const auto rep = harnack_sweep(r.map.mesh(), v, centers, {0.2, 0.25});
  EXPECT_EQ(rep.rows.size(), 18u);
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.min_delta, 0.0);
}

TEST(Holder, SmoothMapFitsExponentOne) {
  auto mesh = share(grid_box(2, 64, 1.0));
  auto u = SphereMap::from_function(mesh, [](const Eigen::VectorXd& x) { return exp_south(0.8 * x[0], 0.0); });
  const int y0 = mesh->nearest_vertex(Eigen::Vector2d(0.5, 0.5));
  const auto prof = oscillation_profile(u, y0, {0.4, 0.05, 0.1, 0.2});
  EXPECT_TRUE(prof.monotone);
  EXPECT_EQ(prof.radii.front(), 0.05);
  const HolderFit fit = holder_fit(prof);
  EXPECT_NEAR(fit.sigma, 1.0, 0.1);
  EXPECT_TRUE(fit.pass);
}

TEST(Holder, FitNeedsThreeNontrivialRows) {
  auto mesh = share(grid_box(2, 8, 1.0));
  auto u = SphereMap::constant(mesh, south());
  EXPECT_THROW(holder_fit(oscillation_profile(u, 40, {0.1, 0.2, 0.4})), FitError);
}

TEST(Shrinking, SpreadDataNeedsSmallerBall) {
  auto mesh = share(grid_box(2, 16, 1.0));
  const int y0 = mesh->nearest_vertex(Eigen::Vector2d(0.5, 0.5));
  const auto spread = image_shrinking(spread_data(mesh), y0, 0.75, 0.1);
  EXPECT_LT(spread.delta, 1.0);
  EXPECT_LE(spread.radius, spread.cap_radius);
  EXPECT_NEAR(spread.cap_radius, std::acos(0.15), 1e-15);
  const auto flat = image_shrinking(SphereMap::constant(mesh, south()), y0, 0.75, 0.1);
  EXPECT_EQ(flat.delta, 1.0);
  EXPECT_EQ(flat.halvings, 0);
  EXPECT_THROW(image_shrinking(SphereMap::constant(mesh, south()), y0, 0.75, 0.7), DomainError);
}

TEST(Means, ExtrinsicAndChartMeans) {
  auto mesh = share(interval(2, 1.0));
  Eigen::MatrixXd U(3, 2);
  U.col(0) = exp_south(0.3, 0.0);
  U.col(1) = exp_south(0.3, kPi);
  SphereMap u(mesh, U);
  EXPECT_LT(dist(extrinsic_mean(u, {0, 1}), south()), 1e-12);
  EXPECT_LT(dist(chart_mean(u, {0}), u.at(0)), 1e-12);
  U.col(1) = -U.col(0);
  EXPECT_THROW(extrinsic_mean(SphereMap(mesh, U), {0, 1}), DegeneracyError);
}

TEST(Means, ChartBiLipschitzBoundsAreOrdered) {
  Rng rng(4);
  std::vector<ChartPoint> samples;
  for (int k = 0; k < 20; ++k) samples.push_back(chart_inv(random_in_cap(south(), kPi / 3, rng)));
  const auto L = chart_bilipschitz(samples);
  EXPECT_GT(L.K3, 0.0);
  EXPECT_LE(L.K3, L.K4);
  EXPECT_TRUE(std::isfinite(L.K4));
}

TEST(Singular, ThreeDimensionalEnergyApproaches8Pi) {
  const auto s = singular_energy(3, 32, 0.02);
  double sum = 0.0, analytic = 0.0;
  for (const auto& a : s.annuli) {
    sum += a.energy;
    analytic += a.analytic;
  }
  EXPECT_NEAR(sum, s.total, 1e-10);
  EXPECT_NEAR(analytic, s.analytic, 1e-10);
  EXPECT_NEAR(s.analytic, 8 * kPi * 0.98, 1e-10);
  EXPECT_NEAR(s.total, 8 * kPi, 0.04 * 8 * kPi);
  EXPECT_THROW(singular_energy(1, 8, 0.1), DomainError);
}

TEST(Singular, PlanarEnergyGrowsLogarithmically) {
  const auto a = singular_energy(2, 256, 0.1);
  const auto b = singular_energy(2, 256, 0.025);
  const double slope = (b.total - a.total) / std::log(4.0);
  EXPECT_NEAR(slope, 2 * kPi, 0.05 * 2 * kPi);
}

TEST(Singular, WeakResidualDecaysUnderRefinement) {
  double prev = 0.0;
  for (int N : {16, 32, 64}) {
    auto mesh = share(punctured_ball(3, N, 0.02));
    auto u = SphereMap::from_function(mesh, [](const Eigen::VectorXd& x) { return Vec(x); });
    Eigen::MatrixXd xi(3, mesh->size());
    for (int i = 0; i < mesh->size(); ++i) {
      const Eigen::Vector3d x = mesh->position(i);
      const double r = x.norm();
      const double chi = (r > 0.2 && r < 0.8) ? std::pow(std::sin(kPi * (r - 0.2) / 0.6), 4) : 0.0;
      const Eigen::Vector3d a(std::sin(x[0] + 2 * x[1]), std::cos(3 * x[2] - x[0]), std::sin(x[1] * x[2] + 1));
      const Eigen::Vector3d ui = u.values().col(i);
      xi.col(i) = chi * (a - a.dot(ui) * ui);
    }
    const double w = weak_residual(u, xi);
    if (prev > 0.0) EXPECT_GE(prev / w, 1.7);
    prev = w;
  }
}

TEST(RandomInCap, StaysInsideForSmallAndLargeCaps) {
  Rng rng(9);
  for (double r : {0.1, 1.0, 2.0}) {
    double far = 0.0;
    for (int k = 0; k < 500; ++k) far = std::max(far, dist(random_in_cap(south(), r, rng), south()));
    EXPECT_LE(far, r + 1e-12);
    EXPECT_GT(far, 0.8 * r);
  }
}
