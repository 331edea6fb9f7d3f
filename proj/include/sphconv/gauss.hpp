#pragma once

// Gauss maps of graphs and of the Clifford torus, distance to a half-equator,
// and a Picard solver for the minimal surface equation on two-dimensional grids.

#include "sphconv/harmonic.hpp"
#include "sphconv/mesh.hpp"
#include "sphconv/sphere.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <iosfwd>
#include <vector>

namespace sphconv {

/// Graph of f over [0, L]^2 (box) or over the torus [0, L)^2 with
/// f = slope . x + periodic part.  Heights live on grid nodes indexed
/// i + n j with n nodes per side; gradients live on cells.
class GraphSurface {
 public:
  /// Box: heights has (N + 1)^2 entries.  Torus: N^2 periodic parts.
  GraphSurface(int N, double L, bool periodic, Vec heights, Eigen::Vector2d slope = Eigen::Vector2d::Zero());

  static GraphSurface box(int N, double L, const std::function<double(double, double)>& f);
  static GraphSurface torus(int N, double L, const Eigen::Vector2d& slope,
                            const std::function<double(double, double)>& periodic_part);

  int N() const { return N_; }
  double L() const { return L_; }
  double h() const { return L_ / N_; }
  bool periodic() const { return periodic_; }
  int nodes_per_side() const { return periodic_ ? N_ : N_ + 1; }
  const Vec& heights() const { return heights_; }
  Vec& mutable_heights() { return heights_; }
  const Eigen::Vector2d& slope() const { return slope_; }
  bool on_rim(int i, int j) const;

  /// Full height at node (i, j); torus indices may run past N.
  double height(int i, int j) const;
  /// Gradient at the centre of cell (i, j); 2 x N^2, column i + N j.
  Eigen::Matrix2Xd cell_gradients() const;
  double slope_bound() const;

  void write_csv(std::ostream& os) const;
  nlohmann::json summary() const;

 private:
  int N_;
  double L_;
  bool periodic_;
  Vec heights_;
  Eigen::Vector2d slope_;
};

/// Cell-centre mesh of the graph domain: N x N cells, outer ring flagged
/// as boundary on the box, periodic on the torus.
DomainMesh cell_mesh(const GraphSurface& surface);

/// Upward unit normal (-grad f, 1) / sqrt(1 + |grad f|^2) per cell.
SphereMap gauss_map_graph(const GraphSurface& surface);

/// Tangential part of the Laplace-Beltrami operator of the induced metric
/// applied to the Gauss map, at every cell off the outer ring (zero on it).
Eigen::MatrixXd gauss_tension_induced(const GraphSurface& surface);
/// Sup over cells whose centres lie at least margin * L from the rim.
double gauss_tension_induced_sup(const GraphSurface& surface, double margin = 0.0);

/// The set {<x, e1> = 0, <x, e2> >= 0} in S^n.
struct HalfEquator {
  Vec e1;
  Vec e2;

  HalfEquator(Vec e1, Vec e2);
  static HalfEquator standard(int n);
  static HalfEquator random(int n, Rng& rng);
  int dim() const { return static_cast<int>(e1.size()) - 1; }
};

double half_equator_distance(const SpherePoint& x, const HalfEquator& he);

/// Brute-force distance: minimum over a dense grid of the half great circle
/// through e2 and the component of x orthogonal to e1 and e2.
double half_equator_distance_sampled(const SpherePoint& x, const HalfEquator& he, int samples = 100000);

/// Minimum over points drawn uniformly from the set itself.
double half_equator_distance_random(const SpherePoint& x, const HalfEquator& he, int samples, Rng& rng);

struct GaussImageReport {
  double min_distance = 0.0;
  int argmin = 0;
  Vec cap_center;
  double cap_radius = 0.0;
  double eps = 0.0;
  bool avoided = false;
  nlohmann::json summary() const;
};

GaussImageReport classify_gauss_image(const SphereMap& map, const HalfEquator& he, double eps);

Vec clifford_point(double u, double v);
Vec clifford_normal(double u, double v);

/// Normal Gauss map of the Clifford torus on an Nu x Nv grid of the (u, v)
/// torus, with edge weights and measures of the induced metric (du^2 + dv^2) / 2.
/// Throws CertificationError if any orthogonality check exceeds 1e-12.
SphereMap clifford_normal_gauss(int Nu, int Nv);
inline SphereMap clifford_normal_gauss(int N) { return clifford_normal_gauss(N, 2 * N); }

/// Largest of |<nu, M>|, |<nu, M_u>|, |<nu, M_v>| over the grid.
double clifford_orthogonality(int Nu, int Nv);

struct MinimalConfig {
  double tolerance = 1e-8;  // sup of the discrete mean curvature operator
  int max_iterations = 500;
  double damping = 1.0;  // Picard relaxation in (0, 1]
  double slope_limit = 1e3;
  CGConfig cg{1e-13, 20000};

  void validate() const;
};

struct MinimalResult {
  GraphSurface surface;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_trace;
  std::vector<double> gauss_oscillation_trace;  // osc of the Gauss map after each iteration
  nlohmann::json summary() const;
};

/// Discrete operator (1/h^2) sum_e a_e (f_j - f_i) with a_e the mean of
/// 1 / sqrt(1 + |grad f|^2) over the cells adjacent to edge e, at free nodes.
Vec minimal_surface_operator(const GraphSurface& surface);

/// Damped Picard iteration: freeze a_e, solve the weighted Laplace problem by
/// CG, relax.  Rim heights (box) or the slope (torus) are held fixed.
MinimalResult minimal_graph_solve(const GraphSurface& init, const MinimalConfig& cfg = {});

/// Embedded surface samples with area weights.
struct SurfaceSamples {
  Eigen::Matrix3Xd points;
  Vec area;
};

/// Midpoint samples of the square [-L/2, L/2]^2 in the plane z = 0.
SurfaceSamples plane_samples(int N, double L);
/// Catenoid (cosh s cos t, cosh s sin t, s), |s| <= s_max, midpoint rule in (s, t).
SurfaceSamples catenoid_samples(int Ns, int Nt, double s_max);

struct DensityRow {
  double R = 0.0;
  double theta = 0.0;
};

struct DensityProfile {
  std::vector<DensityRow> rows;
  double max_drop = 0.0;  // largest relative decrease between consecutive radii
  bool monotone = false;  // max_drop <= slack
  bool near_one_at_small_R = false;
  nlohmann::json summary() const;
};

/// Theta(y0, R) = area(B_R(y0)) / (pi R^2) for each radius, ascending.
DensityProfile density_profile(const SurfaceSamples& surface, const Eigen::Vector3d& y0,
                               const std::vector<double>& radii, double slack = 0.02);

}  // namespace sphconv
