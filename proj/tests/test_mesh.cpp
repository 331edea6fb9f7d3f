#include "sphconv/errors.hpp"
#include "sphconv/mesh.hpp"
#include "sphconv/sphere.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sphconv;

namespace {

constexpr double kPi = std::numbers::pi;

// Dense generalized eigenvalues of the Neumann problem, as an oracle.
double dense_mu2(const DomainMesh& mesh) {
  Eigen::MatrixXd K = Eigen::MatrixXd(stiffness_matrix(mesh));
  Eigen::MatrixXd M = mesh.mu().asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  return es.eigenvalues()[1];
}

DomainMesh path(int n) {
  Eigen::MatrixXd P(1, n);
  std::vector<EdgeSpec> edges;
  for (int i = 0; i < n; ++i) {
    P(0, i) = i;
    if (i + 1 < n) edges.push_back({i, i + 1, 1.0, 1.0});
  }
  return DomainMesh(P, edges, Vec::Ones(n), {});
}

std::vector<int> all_vertices(const DomainMesh& m) {
  std::vector<int> v(m.size());
  for (int i = 0; i < m.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(Constructors, TorusMeasureAndDegree) {
  for (int m : {1, 2, 3}) {
    const DomainMesh T = flat_torus(m, 8, 2.5);
    EXPECT_NEAR(T.total_measure(), std::pow(2.5, m), 1e-12);
    for (int i = 0; i < T.size(); ++i) EXPECT_EQ(T.degree(i), 2 * m);
    EXPECT_TRUE(T.connected());
    EXPECT_DOUBLE_EQ(T.R0(), 2.5 / 4);
  }
  EXPECT_THROW(flat_torus(2, 3, 1.0), DomainError);
  EXPECT_THROW(flat_torus(2, 8, 0.0), DomainError);
}

TEST(Constructors, DiskVertexCount) {
  for (int N : {16, 32, 64}) {
    const DomainMesh D = disk(2, N, 1.0);
    EXPECT_NEAR(D.size(), kPi * N * N / 4, N);
    EXPECT_TRUE(D.connected());
    for (int i = 0; i < D.size(); ++i) {
      if (D.on_boundary(i)) EXPECT_GT(D.position(i).norm(), 1.0 - 2.0 / N * 1.5);
    }
  }
}

TEST(Constructors, PuncturedBallFlagsBothRims) {
  const double eps = 0.2;
  const int N = 16;
  const DomainMesh B = punctured_ball(3, N, eps);
  bool inner = false;
  bool outer = false;
  for (int i = 0; i < B.size(); ++i) {
    const double r = B.position(i).norm();
    const bool shell = r > eps && r < 1.0;
    EXPECT_EQ(B.on_boundary(i), !shell);
    if (B.on_boundary(i) && r <= eps) inner = true;
    if (B.on_boundary(i) && r >= 1.0) outer = true;
  }
  EXPECT_TRUE(inner);
  EXPECT_TRUE(outer);
  EXPECT_THROW(punctured_ball(3, N, 0.0), DomainError);
}

TEST(Constructors, GridBoxAndInterval) {
  const DomainMesh G = grid_box(2, 10, 1.0);
  EXPECT_EQ(G.size(), 121);
  EXPECT_EQ(std::count(G.boundary().begin(), G.boundary().end(), 1), 40);
  const DomainMesh I = interval(10, 2.0);
  EXPECT_NEAR(I.total_measure(), 2.0, 1e-14);
  EXPECT_NEAR(I.position(0)[0], 0.1, 1e-15);
}

TEST(ConditionD, DistanceBelowGraphDistance) {
  Rng rng(1);
  const std::vector<DomainMesh> meshes = {flat_torus(2, 16, 1.0), disk(2, 20, 1.0), punctured_ball(3, 10, 0.2),
                                          interval(30, 1.0), grid_box(3, 6, 1.0)};
  for (const DomainMesh& m : meshes) {
    std::uniform_int_distribution<int> pick(0, m.size() - 1);
    for (int k = 0; k < 50; ++k) {
      const int i = pick(rng);
      const auto g = m.graph_distances_from(i);
      const auto d = m.distances_from(i);
      for (int r = 0; r < 20; ++r) {
        const int j = pick(rng);
        EXPECT_LE(d[j], g[j] + 1e-12) << m.kind();
      }
    }
  }
}

TEST(Doubling, TorusNearFour) {
  const DomainMesh T = flat_torus(2, 128, 1.0);
  const DoublingEstimate est = doubling_constant(T, {0, 5000, 12345}, {1.0 / 32, 1.0 / 16, 1.0 / 8});
  EXPECT_GE(est.K1, 3.2);
  EXPECT_LE(est.K1, 4.8);
  EXPECT_NEAR(est.nu0, std::log(est.K1) / std::log(2.0), 1e-15);
  // Growth bound V(R) <= K1 (R/r)^nu0 V(r), and doubling twice.
  for (const auto& row : est.rows) {
    const double V4 = ball(T, row.center, 4 * row.R).volume;
    EXPECT_LE(V4, est.K1 * est.K1 * row.V_R * (1 + 1e-12));
    EXPECT_LE(V4, est.K1 * std::pow(4.0, est.nu0) * row.V_R);
  }
}

TEST(Doubling, StableUnderRefinement) {
  const std::vector<double> radii = {1.0 / 32, 1.0 / 16, 1.0 / 8};
  const double coarse = doubling_constant(flat_torus(2, 128, 1.0), {0}, radii).K1;
  const double fine = doubling_constant(flat_torus(2, 256, 1.0), {0}, radii).K1;
  EXPECT_LE(coarse - fine, 0.2 * fine);
}

TEST(Neumann, MatchesDenseSolver) {
  for (const DomainMesh& m : {path(3), path(7), grid_box(2, 5, 1.0)}) {
    EXPECT_NEAR(neumann_mu2(m, all_vertices(m)).mu2, dense_mu2(m), 1e-8 * dense_mu2(m));
  }
}

TEST(Neumann, IntervalPoincareConstant) {
  const double R = 1.7;
  const DomainMesh I = interval(256, R);
  const double mu2 = neumann_mu2(I, all_vertices(I)).mu2;
  EXPECT_NEAR(mu2, kPi * kPi / (R * R), 1e-4 * mu2);
  EXPECT_NEAR(1.0 / (R * R * mu2), 1.0 / (kPi * kPi), 0.03 / (kPi * kPi));
}

TEST(Neumann, TorusBallsScaleInvariant) {
  const DomainMesh T = flat_torus(2, 128, 1.0);
  const PoincareEstimate P = poincare_constant(T, {0}, {1.0 / 8, 1.0 / 4});
  ASSERT_EQ(P.rows.size(), 2u);
  EXPECT_NEAR(P.rows[0].K2, P.rows[1].K2, 0.02 * P.rows[1].K2);
  // Euclidean disk: K2 <= 4 / pi^2.
  EXPECT_LE(P.K2, 4.0 / (kPi * kPi));
}

TEST(Cheeger, TwoVertexGraph) {
  Eigen::MatrixXd P(1, 2);
  P << 0.0, 1.0;
  const DomainMesh two(P, {{0, 1, 1.0, 1.0}}, Vec::Ones(2), {});
  const CheegerEstimate c = cheeger_lower_bound(two, {0, 1});
  EXPECT_DOUBLE_EQ(c.h, 1.0);
  EXPECT_DOUBLE_EQ(c.bound, 0.25);
  EXPECT_NEAR(c.mu2, 2.0, 1e-10);
}

TEST(Cheeger, PathAndRandomBalls) {
  const DomainMesh p3 = path(3);
  EXPECT_LE(cheeger_lower_bound(p3, {0, 1, 2}).bound, dense_mu2(p3));
  const DomainMesh T = flat_torus(2, 64, 1.0);
  Rng rng(2);
  std::uniform_int_distribution<int> pick(0, T.size() - 1);
  std::uniform_real_distribution<double> radius(0.04, 0.2);
  int violations = 0;
  for (int k = 0; k < 50; ++k) {
    const BallStats b = ball(T, pick(rng), radius(rng));
    const CheegerEstimate c = cheeger_lower_bound(T, b.vertices);
    if (c.bound > c.mu2) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Laplacian, Examples) {
  const DomainMesh T = flat_torus(2, 64, 2.0);
  EXPECT_LE(laplacian_apply(T, Vec::Constant(T.size(), 3.0)).cwiseAbs().maxCoeff(), 1e-12);

  const DomainMesh I = interval(50, 1.0);
  Vec t2(I.size());
  for (int i = 0; i < I.size(); ++i) t2[i] = std::pow(I.position(i)[0], 2);
  const Vec lap = laplacian_apply(I, t2);
  for (int i = 1; i + 1 < I.size(); ++i) EXPECT_NEAR(lap[i], 2.0, 1e-10);

  double err_coarse = 0;
  for (int N : {32, 64}) {
    const DomainMesh G = flat_torus(2, N, 2.0);
    Vec s(G.size());
    for (int i = 0; i < G.size(); ++i) s[i] = std::sin(2 * kPi * G.position(i)[0] / 2.0);
    const double err = (laplacian_apply(G, s) + std::pow(kPi, 2) * s).cwiseAbs().maxCoeff();
    if (N == 64) EXPECT_NEAR(err_coarse / err, 4.0, 0.1);
    err_coarse = err;
  }
}

TEST(Laplacian, SymmetricInMuInnerProduct) {
  const DomainMesh D = disk(2, 20, 1.0);
  Rng rng(3);
  std::normal_distribution<double> g;
  Vec a(D.size()), b(D.size());
  for (int i = 0; i < D.size(); ++i) {
    a[i] = g(rng);
    b[i] = g(rng);
  }
  const Vec mu = D.mu();
  EXPECT_NEAR(a.dot(mu.cwiseProduct(laplacian_apply(D, b))), b.dot(mu.cwiseProduct(laplacian_apply(D, a))), 1e-9);
  EXPECT_NEAR(-a.dot(mu.cwiseProduct(laplacian_apply(D, b))), dirichlet_form(D, a, b), 1e-9);
}

TEST(DirichletSolve, ReproducesLinearAndSolvesPoisson) {
  const DomainMesh G = grid_box(2, 20, 1.0);
  std::vector<char> region(G.size());
  Vec lin(G.size());
  for (int i = 0; i < G.size(); ++i) {
    region[i] = !G.on_boundary(i);
    lin[i] = 2 * G.position(i)[0] - G.position(i)[1] + 0.5;
  }
  const Vec v = dirichlet_solve(G, region, Vec::Zero(G.size()), lin);
  EXPECT_LE((v - lin).cwiseAbs().maxCoeff(), 1e-9);

  // -Delta u = 2 with u = x (1 - x) is exact for the second difference.
  Vec exact(G.size());
  for (int i = 0; i < G.size(); ++i) exact[i] = G.position(i)[0] * (1 - G.position(i)[0]);
  const Vec u = dirichlet_solve(G, region, Vec::Constant(G.size(), 2.0), exact);
  EXPECT_LE((u - exact).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(dirichlet_solve(G, std::vector<char>(G.size(), 0), Vec::Zero(G.size())), DomainError);
}

TEST(Green, NonnegativeAndWeakIdentity) {
  const DomainMesh T = flat_torus(2, 64, 1.0);
  const int y0 = 32 * 64 + 32;
  const double R = 0.25;
  const GreenProfile gp = mollified_green(T, y0, R, R / 8, {1e-12, 20000});
  EXPECT_GE(gp.min_G, 0.0);
  Rng rng(4);
  std::normal_distribution<double> g;
  const auto d = T.distances_from(y0);
  for (int k = 0; k < 20; ++k) {
    Vec phi = Vec::Zero(T.size());
    for (int i = 0; i < T.size(); ++i)
      if (gp.in_ball[i]) phi[i] = g(rng);
    double avg = 0.0;
    for (int i = 0; i < T.size(); ++i)
      if (d[i] < R / 8) avg += T.mu(i) * phi[i];
    avg /= gp.V_rho;
    EXPECT_NEAR(dirichlet_form(T, gp.G, phi), avg, 1e-9);
  }
}

TEST(Green, OmegaBoundsStableAcrossRadii) {
  const DomainMesh T = flat_torus(2, 128, 1.0);
  std::vector<double> sups, infs;
  for (double R : {1.0 / 16, 1.0 / 8, 1.0 / 4}) {
    const GreenProfile gp = omega_R(T, 0, R);
    EXPECT_GE(gp.min_G, 0.0);
    EXPECT_GT(gp.inf_omega, 0.0);
    sups.push_back(gp.sup_omega);
    infs.push_back(gp.inf_omega);
  }
  EXPECT_LE(*std::max_element(sups.begin(), sups.end()), 2 * *std::min_element(sups.begin(), sups.end()));
  EXPECT_LE(*std::max_element(infs.begin(), infs.end()), 2 * *std::min_element(infs.begin(), infs.end()));
}

TEST(Green, RejectsBallTouchingBoundary) {
  const DomainMesh D = disk(2, 20, 1.0);
  EXPECT_THROW(mollified_green(D, D.nearest_vertex(Eigen::Vector2d(0, 0)), 1.0, 0.1), DomainError);
  EXPECT_THROW(mollified_green(flat_torus(2, 16, 1.0), 0, 0.6, 0.1), DomainError);
}

TEST(Io, CsvRoundTrip) {
  const DomainMesh D = disk(2, 10, 1.0);
  std::stringstream v, e;
  D.write_csv(v, e);
  const DomainMesh back = DomainMesh::read_csv(v, e);
  ASSERT_EQ(back.size(), D.size());
  EXPECT_EQ(back.n_edges(), D.n_edges());
  EXPECT_EQ(back.boundary(), D.boundary());
  EXPECT_LE((back.positions() - D.positions()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((back.mu() - D.mu()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(D.summary().at("vertices"), D.size());
}
