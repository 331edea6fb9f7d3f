#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sphconv {

using Vec = Eigen::VectorXd;

enum class DistanceMode { Euclidean, Periodic, Graph };

struct EdgeSpec {
  int i = 0;
  int j = 0;
  double weight = 0.0;
  double length = 0.0;
};

/// Weighted graph with vertex measures standing in for a Riemannian domain.
/// Adjacency is stored both ways in CSR form.
class DomainMesh {
 public:
  /// positions: one column per vertex.
  DomainMesh(Eigen::MatrixXd positions, const std::vector<EdgeSpec>& edges, Vec mu, std::vector<char> boundary,
             DistanceMode mode = DistanceMode::Euclidean, Vec period = {}, double R0 = 0.0,
             std::string kind = "custom");

  int dim() const { return static_cast<int>(positions_.rows()); }
  int size() const { return static_cast<int>(positions_.cols()); }
  const Eigen::MatrixXd& positions() const { return positions_; }
  Eigen::VectorXd position(int i) const { return positions_.col(i); }
  const Vec& mu() const { return mu_; }
  double mu(int i) const { return mu_[i]; }
  bool on_boundary(int i) const { return boundary_[i] != 0; }
  const std::vector<char>& boundary() const { return boundary_; }
  DistanceMode mode() const { return mode_; }
  const Vec& period() const { return period_; }
  double R0() const { return R0_; }
  const std::string& kind() const { return kind_; }
  double total_measure() const { return mu_.sum(); }
  std::size_t n_edges() const { return nbr_.size() / 2; }

  // Neighbours of i are nbr()[offset(i)] .. nbr()[offset(i+1)-1].
  int offset(int i) const { return offsets_[i]; }
  const std::vector<int>& nbr() const { return nbr_; }
  const std::vector<double>& weight() const { return weight_; }
  const std::vector<double>& length() const { return length_; }
  int degree(int i) const { return offsets_[i + 1] - offsets_[i]; }

  /// Displacement x_j - x_i, wrapped on periodic meshes.
  Eigen::VectorXd displacement(int i, int j) const;
  double distance(int i, int j) const;
  std::vector<double> distances_from(int i) const;
  /// Shortest-path distance with edge lengths, always available.
  std::vector<double> graph_distances_from(int i) const;
  bool connected() const;

  /// Vertex nearest to a point (Euclidean / wrapped).
  int nearest_vertex(const Eigen::VectorXd& x) const;

  void write_csv(std::ostream& vertices, std::ostream& edges) const;
  static DomainMesh read_csv(std::istream& vertices, std::istream& edges, DistanceMode mode = DistanceMode::Euclidean,
                             Vec period = {}, double R0 = 0.0);
  nlohmann::json summary() const;

 private:
  Eigen::MatrixXd positions_;
  Vec mu_;
  std::vector<char> boundary_;
  DistanceMode mode_;
  Vec period_;
  double R0_;
  std::string kind_;
  std::vector<int> offsets_;
  std::vector<int> nbr_;
  std::vector<double> weight_;
  std::vector<double> length_;
};

/// m-dimensional flat torus [0, L)^m with N^m vertices.
DomainMesh flat_torus(int m, int N, double L);
/// Grid points of [-r0, r0]^m with spacing 2 r0 / N inside the closed ball of radius r0;
/// vertices with a grid neighbour outside are flagged as boundary.
DomainMesh disk(int m, int N, double r0);
/// Grid [0, L]^m with N + 1 points per side, boundary on the faces.
DomainMesh grid_box(int m, int N, double L);
/// Cell centres of [-1, 1]^n with spacing 2 / N. Vertices with eps < |x| < 1 are
/// interior; their grid neighbours outside that shell are the (flagged) boundary.
DomainMesh punctured_ball(int n, int N, double eps);
/// N cells of width length / N, vertices at cell centres.
DomainMesh interval(int N, double length);

struct BallStats {
  int center = 0;
  double R = 0.0;
  double volume = 0.0;
  std::vector<int> vertices;
};

BallStats ball(const DomainMesh& mesh, int center, double R);
BallStats ball(const DomainMesh& mesh, const std::vector<double>& dist_from_center, int center, double R);

struct DoublingRow {
  int center = 0;
  double R = 0.0;
  double V_R = 0.0;
  double V_2R = 0.0;
  double ratio = 0.0;
};

struct DoublingEstimate {
  double K1 = 0.0;
  double nu0 = 0.0;
  std::vector<DoublingRow> rows;
  nlohmann::json summary() const;
};

/// max V(y, 2R) / V(y, R) over centers x radii, and nu0 = log K1 / log 2.
DoublingEstimate doubling_constant(const DomainMesh& mesh, const std::vector<int>& centers,
                                   const std::vector<double>& radii);

struct CGConfig {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 20000;
};

struct NeumannEigen {
  double mu2 = 0.0;
  Vec fiedler;  // indexed like the vertex subset
  int iterations = 0;
};

/// Second eigenvalue of the Neumann Laplacian of the subgraph induced by
/// `vertices`, by inverse power iteration on mu-mean-zero fields.
NeumannEigen neumann_mu2(const DomainMesh& mesh, const std::vector<int>& vertices, double tolerance = 1e-10,
                         int max_iterations = 500, std::uint64_t seed = 1);

struct PoincareRow {
  int center = 0;
  double R = 0.0;
  double mu2 = 0.0;
  double K2 = 0.0;
};

struct PoincareEstimate {
  double K2 = 0.0;
  std::vector<PoincareRow> rows;
  nlohmann::json summary() const;
};

/// max over balls of 1 / (R^2 mu2(B_R(y))).
PoincareEstimate poincare_constant(const DomainMesh& mesh, const std::vector<int>& centers,
                                   const std::vector<double>& radii);

struct CheegerEstimate {
  double h = 0.0;      // best sweep-cut ratio found
  double bound = 0.0;  // h^2 / 4
  double mu2 = 0.0;
  std::size_t cuts_tried = 0;
};

/// Sweep cuts along the Fiedler vector and along random coordinate
/// directions. Boundary measure of a cut is sum w_ij l_ij over cut edges.
CheegerEstimate cheeger_lower_bound(const DomainMesh& mesh, const std::vector<int>& vertices,
                                    std::size_t random_sweeps = 8, std::uint64_t seed = 1);

Vec laplacian_apply(const DomainMesh& mesh, const Vec& field);

/// Symmetric stiffness matrix sum_edges w (e_i - e_j)(e_i - e_j)^T.
Eigen::SparseMatrix<double> stiffness_matrix(const DomainMesh& mesh);

/// Solves -(Delta v)_i = rhs_i for i in region, v = outside on the rest.
Vec dirichlet_solve(const DomainMesh& mesh, const std::vector<char>& region, const Vec& rhs, const Vec& outside = {},
                    const CGConfig& cfg = {});

struct GreenProfile {
  int y0 = 0;
  double R = 0.0;
  double rho = 0.0;
  double V_rho = 0.0;
  double V_half = 0.0;  // V(y0, R/2)
  Vec G;
  Vec omega;  // V(R/2) / R^2 * G
  std::vector<char> in_ball;
  double sup_omega = 0.0;  // over B_R
  double inf_omega = 0.0;  // over B_{R/2}
  double min_G = 0.0;
  nlohmann::json summary() const;
};

/// Discrete mollified Green function of B_R(y0) with zero values outside.
GreenProfile mollified_green(const DomainMesh& mesh, int y0, double R, double rho, const CGConfig& cfg = {});
/// omega^R: the profile with rho = R / 2.
GreenProfile omega_R(const DomainMesh& mesh, int y0, double R, const CGConfig& cfg = {});

/// sum over edges of w_ij (a_i - a_j)(b_i - b_j).
double dirichlet_form(const DomainMesh& mesh, const Vec& a, const Vec& b);

}  // namespace sphconv
