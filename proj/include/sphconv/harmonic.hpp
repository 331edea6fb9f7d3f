#pragma once

#include "sphconv/mesh.hpp"
#include "sphconv/sphere.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sphconv {

using MeshPtr = std::shared_ptr<const DomainMesh>;

/// Vertex-indexed map into S^n; column i is the value at vertex i.
class SphereMap {
 public:
  SphereMap(MeshPtr mesh, Eigen::MatrixXd values);
  static SphereMap constant(MeshPtr mesh, const SpherePoint& p);
  static SphereMap from_function(MeshPtr mesh, const std::function<Vec(const Eigen::VectorXd&)>& f);

  const DomainMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& mutable_values() { return values_; }
  int size() const { return static_cast<int>(values_.cols()); }
  int ambient() const { return static_cast<int>(values_.rows()); }
  SpherePoint at(int i) const { return SpherePoint(values_.col(i)); }

 private:
  MeshPtr mesh_;
  Eigen::MatrixXd values_;
};

/// 1/2 sum over edges of w_ij |u_i - u_j|^2 (chordal).
double energy(const SphereMap& u);
/// |du|^2_i = 1/2 sum_j w_ij |u_i - u_j|^2 / mu_i, so that energy = 1/2 sum_i mu_i |du|^2_i.
Vec energy_density(const SphereMap& u);
/// Tangential part of sum_j w_ij (u_j - u_i) / mu_i, one column per vertex.
Eigen::MatrixXd tension(const SphereMap& u);
/// max |tension| over vertices (interior only when requested).
double tension_sup(const SphereMap& u, bool interior_only = true);

/// Max pairwise spherical distance over a vertex set (all vertices if empty).
double oscillation(const SphereMap& u, const std::vector<int>& vertices = {});

enum class Scheme { GaussSeidel, Jacobi };

struct SolverConfig {
  double tolerance = 1e-10;
  int max_iterations = 200000;
  Scheme scheme = Scheme::GaussSeidel;
  double damping = 1.0;
  std::uint64_t seed = 1;
  bool record_energy = true;

  void validate() const;
};

struct SolveResult {
  SphereMap map;
  int sweeps = 0;
  double residual = 0.0;
  std::vector<double> energy_trace;  // energy after each sweep
  bool energy_monotone = true;
  nlohmann::json summary() const;
};

/// Relaxation u_i <- normalize(u_i + damping (avg_i - u_i)) at interior
/// vertices; boundary values are those of `init`.
SolveResult solve_dirichlet(const SphereMap& init, const SolverConfig& cfg = {});
/// Same iteration on a mesh without boundary.
SolveResult solve_closed(const SphereMap& init, const SolverConfig& cfg = {});
/// One relaxation sweep in place; boundary vertices are held fixed.
void sweep(SphereMap& u, const SolverConfig& cfg = {});

struct SubharmonicityReport {
  double K0 = 0.0;
  double slack = 0.0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double fraction = 0.0;
  double worst_margin = 0.0;  // min of Delta(F o u) - K0 |du|^2
  nlohmann::json summary() const;
};

/// Checks (Delta(F o u))_i >= K0 |du|^2_i - slack at interior vertices.
/// A negative slack selects the default 10 * spacing.
SubharmonicityReport subharmonicity_report(const SphereMap& u, const ScalarField& F, double K0, double slack = -1.0);

struct TelescopeRow {
  double R = 0.0;
  double lhs = 0.0;
  double f_plus_R = 0.0;
  double f_plus_half = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct TelescopeReport {
  std::vector<TelescopeRow> rows;
  double C5 = 0.0;       // max ratio
  double rhs_sum = 0.0;  // telescopes to f_{+,R_max} - f_{+,R_min / 2}
  double telescope_error = 0.0;
  double F_range = 0.0;  // sup F - inf F over the largest ball
  double min_lhs = 0.0;
  bool pigeonhole_ok = false;  // min lhs <= C5 * rhs_sum / rows
  nlohmann::json summary() const;
};

TelescopeReport telescoping_report(const SphereMap& u, const ScalarField& F, int y0, const std::vector<double>& radii);

struct HarnackRow {
  int center = 0;
  double R = 0.0;
  double v_plus_R = 0.0;
  double v_plus_half = 0.0;
  double v_mean_half = 0.0;
  double delta = 0.0;
  bool degenerate = false;
};

/// delta = (v_{+,R} - v_{+,R/2}) / (v_{+,R} - mean_{R/2} v). DomainError if the
/// denominator vanishes.
HarnackRow harnack_decay(const DomainMesh& mesh, const Vec& v, int y0, double R);

struct HarnackReport {
  std::vector<HarnackRow> rows;
  double min_delta = 0.0;
  bool pass = false;
  nlohmann::json summary() const;
};

/// harnack_decay over centers x radii; constant balls pass trivially.
HarnackReport harnack_sweep(const DomainMesh& mesh, const Vec& v, const std::vector<int>& centers,
                            const std::vector<double>& radii);

struct OscProfile {
  int center = 0;
  std::vector<double> radii;
  std::vector<double> osc;
  bool monotone = true;
  nlohmann::json summary() const;
};

OscProfile oscillation_profile(const SphereMap& u, int y0, const std::vector<double>& radii);

struct HolderFit {
  double sigma = 0.0;
  double constant = 0.0;  // osc ~ constant * R^sigma
  std::size_t rows_used = 0;
  bool pass = false;
};

/// Least squares of log osc against log R over rows with osc >= 1e-12.
HolderFit holder_fit(const OscProfile& profile);

struct ShrinkReport {
  double delta = 1.0;
  double radius = 0.0;  // max distance from the centre over u(B_{delta R1})
  double cap_radius = 0.0;
  Vec centre;
  int halvings = 0;
  nlohmann::json summary() const;
};

/// Largest dyadic delta with u(B_{delta R1}(y0)) inside the geodesic ball of
/// radius arccos(1.5 c) about its normalized extrinsic mean.
ShrinkReport image_shrinking(const SphereMap& u, int y0, double R1, double c);

/// Normalized mu-weighted extrinsic mean.
SpherePoint extrinsic_mean(const SphereMap& u, const std::vector<int>& vertices);
/// chart applied to the mu-weighted mean of chart_inv(u); requires the image in the complement.
SpherePoint chart_mean(const SphereMap& u, const std::vector<int>& vertices);

struct ChartLipschitz {
  double K3 = 0.0;  // min |chart_* X| / |X|
  double K4 = 0.0;  // max
};

/// Finite-difference bi-Lipschitz constants of the chart over sampled chart points.
ChartLipschitz chart_bilipschitz(const std::vector<ChartPoint>& samples, std::size_t directions = 8,
                                 std::uint64_t seed = 1, double h = 1e-6);

struct AnnulusRow {
  double r_inner = 0.0;
  double r_outer = 0.0;
  double energy = 0.0;    // sum mu |du|^2 over interior vertices in the annulus
  double analytic = 0.0;  // (n - 1) |S^{n-1}| int r^{n-3} dr
};

struct SingularEnergy {
  int n = 0;
  int N = 0;
  double eps = 0.0;
  double spacing = 0.0;
  std::vector<AnnulusRow> annuli;
  double total = 0.0;     // int |du|^2 over the shell, vertex sum
  double analytic = 0.0;  // same over eps < r < 1
  double tension_sup = 0.0;
  nlohmann::json summary() const;
};

/// x / |x| on punctured_ball(n, N, eps).
SingularEnergy singular_energy(int n, int N, double eps);

/// Sum mu_i <tau_i, xi_i> / |xi| for a tangent field xi (one column per vertex).
double weak_residual(const SphereMap& u, const Eigen::MatrixXd& xi);

/// Uniform point in the geodesic cap of radius r about p.
SpherePoint random_in_cap(const SpherePoint& p, double r, Rng& rng);

}  // namespace sphconv
