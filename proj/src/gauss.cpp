#include "sphconv/gauss.hpp"

#include "sphconv/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace sphconv {

namespace {

constexpr double kPi = std::numbers::pi;

int wrap(int i, int n) { return ((i % n) + n) % n; }

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Unit vector orthogonal to both a and b, built from the coordinate basis.
Vec orthogonal_unit(const Vec& a, const Vec& b) {
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    Vec w = Vec::Unit(a.size(), k);
    w -= w.dot(a) * a;
    w -= w.dot(b) * b;
    if (w.norm() > 0.5) return w.normalized();
  }
  throw DomainError("half-equator: ambient dimension too small");
}

// Weighted cell-centre lattice; u and v edge weights follow the cell aspect ratio.
DomainMesh lattice(int Nu, int Nv, double hu, double hv, bool periodic, double area_scale, const std::string& kind) {
  const int count = Nu * Nv;
  Eigen::MatrixXd P(2, count);
  std::vector<EdgeSpec> edges;
  std::vector<char> boundary(count, 0);
  for (int j = 0; j < Nv; ++j) {
    for (int i = 0; i < Nu; ++i) {
      const int id = i + Nu * j;
      P(0, id) = periodic ? i * hu : (i + 0.5) * hu;
      P(1, id) = periodic ? j * hv : (j + 0.5) * hv;
      if (!periodic) boundary[id] = i == 0 || j == 0 || i == Nu - 1 || j == Nv - 1;
      if (periodic || i + 1 < Nu) edges.push_back({id, wrap(i + 1, Nu) + Nu * j, hv / hu, hu});
      if (periodic || j + 1 < Nv) edges.push_back({id, i + Nu * wrap(j + 1, Nv), hu / hv, hv});
    }
  }
  Vec period;
  if (periodic) period = Eigen::Vector2d(Nu * hu, Nv * hv);
  const double R0 = 0.25 * std::min(Nu * hu, Nv * hv);
  return DomainMesh(std::move(P), edges, Vec::Constant(count, area_scale * hu * hv), std::move(boundary),
                    periodic ? DistanceMode::Periodic : DistanceMode::Euclidean, period, R0, kind);
}

}  // namespace

GraphSurface::GraphSurface(int N, double L, bool periodic, Vec heights, Eigen::Vector2d slope)
    : N_(N), L_(L), periodic_(periodic), heights_(std::move(heights)), slope_(slope) {
  if (N < 4) throw DomainError("GraphSurface: N must be at least 4");
  if (!(L > 0.0)) throw DomainError("GraphSurface: side length must be positive");
  const int n = nodes_per_side();
  if (heights_.size() != static_cast<Eigen::Index>(n) * n) throw DomainError("GraphSurface: wrong number of heights");
  if (!heights_.allFinite() || !slope_.allFinite()) throw DomainError("GraphSurface: non-finite height");
  if (!periodic && !slope_.isZero()) throw DomainError("GraphSurface: slope is only used on the torus");
}

GraphSurface GraphSurface::box(int N, double L, const std::function<double(double, double)>& f) {
  const double h = L / N;
  Vec H((N + 1) * (N + 1));
  for (int j = 0; j <= N; ++j)
    for (int i = 0; i <= N; ++i) H[i + (N + 1) * j] = f(i * h, j * h);
  return GraphSurface(N, L, false, std::move(H));
}

GraphSurface GraphSurface::torus(int N, double L, const Eigen::Vector2d& slope,
                                 const std::function<double(double, double)>& periodic_part) {
  const double h = L / N;
  Vec H(N * N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) H[i + N * j] = periodic_part(i * h, j * h);
  return GraphSurface(N, L, true, std::move(H), slope);
}

bool GraphSurface::on_rim(int i, int j) const { return !periodic_ && (i == 0 || j == 0 || i == N_ || j == N_); }

double GraphSurface::height(int i, int j) const {
  if (!periodic_) return heights_[i + (N_ + 1) * j];
  return slope_[0] * i * h() + slope_[1] * j * h() + heights_[wrap(i, N_) + N_ * wrap(j, N_)];
}

Eigen::Matrix2Xd GraphSurface::cell_gradients() const {
  Eigen::Matrix2Xd G(2, N_ * N_);
  const double inv = 0.5 / h();
  for (int j = 0; j < N_; ++j) {
    for (int i = 0; i < N_; ++i) {
      const double f00 = height(i, j), f10 = height(i + 1, j), f01 = height(i, j + 1), f11 = height(i + 1, j + 1);
      G(0, i + N_ * j) = (f10 - f00 + f11 - f01) * inv;
      G(1, i + N_ * j) = (f01 - f00 + f11 - f10) * inv;
    }
  }
  return G;
}

double GraphSurface::slope_bound() const { return cell_gradients().colwise().norm().maxCoeff(); }

void GraphSurface::write_csv(std::ostream& os) const {
  os << "x,y,f\n" << std::setprecision(17);
  const int n = nodes_per_side();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) os << i * h() << ',' << j * h() << ',' << height(i, j) << '\n';
}

nlohmann::json GraphSurface::summary() const {
  return {{"N", N_},
          {"L", L_},
          {"periodic", periodic_},
          {"slope", {slope_[0], slope_[1]}},
          {"slope_bound", slope_bound()}};
}

DomainMesh cell_mesh(const GraphSurface& surface) {
  if (!surface.periodic() && surface.N() < 3) throw DomainError("cell_mesh: too few cells");
  return lattice(surface.N(), surface.N(), surface.h(), surface.h(), surface.periodic(), 1.0,
                 surface.periodic() ? "graph_cells_torus" : "graph_cells_box");
}

SphereMap gauss_map_graph(const GraphSurface& surface) {
  const Eigen::Matrix2Xd G = surface.cell_gradients();
  Eigen::MatrixXd nu(3, G.cols());
  for (Eigen::Index c = 0; c < G.cols(); ++c) {
    nu.col(c) = Eigen::Vector3d(-G(0, c), -G(1, c), 1.0) / std::sqrt(1.0 + G.col(c).squaredNorm());
  }
  return SphereMap(std::make_shared<const DomainMesh>(cell_mesh(surface)), std::move(nu));
}

Eigen::MatrixXd gauss_tension_induced(const GraphSurface& surface) {
  const int N = surface.N();
  const double h = surface.h();
  const bool per = surface.periodic();
  const Eigen::Matrix2Xd G = surface.cell_gradients();
  const SphereMap nu_map = gauss_map_graph(surface);
  const Eigen::MatrixXd& nu = nu_map.values();
  // A = sqrt(g) g^{-1} = W I - grad f grad f^T / W.
  std::vector<Eigen::Matrix2d> A(N * N);
  Vec W(N * N);
  for (int c = 0; c < N * N; ++c) {
    W[c] = std::sqrt(1.0 + G.col(c).squaredNorm());
    A[c] = W[c] * Eigen::Matrix2d::Identity() - G.col(c) * G.col(c).transpose() / W[c];
  }
  const auto id = [&](int i, int j) { return wrap(i, N) + N * wrap(j, N); };
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(3, N * N);
  const int lo = per ? 0 : 1;
  const int hi = per ? N : N - 1;
  for (int j = lo; j < hi; ++j) {
    for (int i = lo; i < hi; ++i) {
      const int c = id(i, j);
      const int e = id(i + 1, j), w = id(i - 1, j), n = id(i, j + 1), s = id(i, j - 1);
      const Eigen::Vector3d u = nu.col(c);
      Eigen::Vector3d lap = (0.5 * (A[c](0, 0) + A[e](0, 0)) * (nu.col(e) - u) -
                             0.5 * (A[c](0, 0) + A[w](0, 0)) * (u - nu.col(w))) /
                            (h * h);
      lap += (0.5 * (A[c](1, 1) + A[n](1, 1)) * (nu.col(n) - u) - 0.5 * (A[c](1, 1) + A[s](1, 1)) * (u - nu.col(s))) /
             (h * h);
      const auto dy = [&](int a, int b) -> Eigen::Vector3d { return (nu.col(id(a, b + 1)) - nu.col(id(a, b - 1))) / (2 * h); };
      const auto dx = [&](int a, int b) -> Eigen::Vector3d { return (nu.col(id(a + 1, b)) - nu.col(id(a - 1, b))) / (2 * h); };
      lap += (A[e](0, 1) * dy(i + 1, j) - A[w](0, 1) * dy(i - 1, j)) / (2 * h);
      lap += (A[n](1, 0) * dx(i, j + 1) - A[s](1, 0) * dx(i, j - 1)) / (2 * h);
      lap /= W[c];
      T.col(c) = lap - lap.dot(u) * u;
    }
  }
  return T;
}

double gauss_tension_induced_sup(const GraphSurface& surface, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) throw DomainError("gauss_tension_induced_sup: margin must lie in [0, 1/2)");
  const Eigen::MatrixXd T = gauss_tension_induced(surface);
  const int N = surface.N();
  const double cut = margin * surface.L() - 1e-12;
  double sup = 0.0;
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const double x = (i + 0.5) * surface.h(), y = (j + 0.5) * surface.h();
      if (surface.periodic() || std::min({x, y, surface.L() - x, surface.L() - y}) >= cut) {
        sup = std::max(sup, T.col(i + N * j).norm());
      }
    }
  }
  return sup;
}

HalfEquator::HalfEquator(Vec a, Vec b) : e1(std::move(a)), e2(std::move(b)) {
  if (e1.size() != e2.size() || e1.size() < 3) throw DomainError("HalfEquator: need two vectors in R^{n+1}, n >= 2");
  if (std::abs(e1.norm() - 1.0) > 1e-12 || std::abs(e2.norm() - 1.0) > 1e-12) {
    throw DomainError("HalfEquator: e1 and e2 must be unit vectors");
  }
  if (std::abs(e1.dot(e2)) > 1e-12) throw DomainError("HalfEquator: e1 and e2 must be orthogonal");
}

HalfEquator HalfEquator::standard(int n) { return HalfEquator(Vec::Unit(n + 1, 0), Vec::Unit(n + 1, 1)); }

HalfEquator HalfEquator::random(int n, Rng& rng) {
  std::normal_distribution<double> g;
  Vec a(n + 1), b(n + 1);
  for (int k = 0; k <= n; ++k) a[k] = g(rng);
  for (int k = 0; k <= n; ++k) b[k] = g(rng);
  a.normalize();
  b -= b.dot(a) * a;
  b.normalize();
  b -= b.dot(a) * a;  // second pass keeps the 1e-12 invariant
  return HalfEquator(a, b.normalized());
}

double half_equator_distance(const SpherePoint& x, const HalfEquator& he) {
  const Vec& p = x.coords();
  if (p.size() != he.e1.size()) throw DomainError("half_equator_distance: dimension mismatch");
  const double a = p.dot(he.e1);
  const double b = p.dot(he.e2);
  const double rest = (p - a * he.e1 - b * he.e2).norm();
  // Foot point on the great sphere <., e1> = 0 lies in the half when b >= 0;
  // otherwise the nearest point is on the boundary sphere <., e1> = <., e2> = 0.
  if (b >= 0.0) return std::atan2(std::abs(a), std::hypot(b, rest));
  return std::atan2(std::hypot(a, b), rest);
}

double half_equator_distance_sampled(const SpherePoint& x, const HalfEquator& he, int samples) {
  if (samples < 2) throw DomainError("half_equator_distance_sampled: need at least 2 samples");
  const Vec& p = x.coords();
  Vec w = p - p.dot(he.e1) * he.e1 - p.dot(he.e2) * he.e2;
  w = w.norm() > 1e-12 ? Vec(w.normalized()) : orthogonal_unit(he.e1, he.e2);
  const double b = p.dot(he.e2);
  const double c = p.dot(w);
  double best = -2.0;
  for (int k = 0; k < samples; ++k) {
    const double t = -0.5 * kPi + kPi * k / (samples - 1);
    best = std::max(best, b * std::cos(t) + c * std::sin(t));
  }
  return std::acos(std::clamp(best, -1.0, 1.0));
}

double half_equator_distance_random(const SpherePoint& x, const HalfEquator& he, int samples, Rng& rng) {
  std::normal_distribution<double> g;
  const Eigen::Index d = he.e1.size();
  double best = -2.0;
  Vec y(d);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index k = 0; k < d; ++k) y[k] = g(rng);
    y -= y.dot(he.e1) * he.e1;
    const double b = y.dot(he.e2);
    if (b < 0.0) y -= 2.0 * b * he.e2;
    best = std::max(best, x.coords().dot(y) / y.norm());
  }
  return std::acos(std::clamp(best, -1.0, 1.0));
}

nlohmann::json GaussImageReport::summary() const {
  return {{"min_distance", min_distance}, {"argmin", argmin},       {"cap_center", vec_json(cap_center)},
          {"cap_radius", cap_radius},     {"eps", eps},             {"avoided", avoided}};
}

GaussImageReport classify_gauss_image(const SphereMap& map, const HalfEquator& he, double eps) {
  GaussImageReport r;
  r.eps = eps;
  r.min_distance = std::numeric_limits<double>::infinity();
  Vec mean = Vec::Zero(map.ambient());
  for (int i = 0; i < map.size(); ++i) {
    const double d = half_equator_distance(map.at(i), he);
    if (d < r.min_distance) {
      r.min_distance = d;
      r.argmin = i;
    }
    mean += map.values().col(i);
  }
  r.avoided = r.min_distance >= eps;
  // A balanced image has no mean direction; the whole sphere is the enclosing cap then.
  if (mean.norm() < 1e-9 * map.size()) {
    r.cap_center = map.values().col(0);
    r.cap_radius = kPi;
    return r;
  }
  r.cap_center = mean.normalized();
  const SpherePoint c(r.cap_center);
  for (int i = 0; i < map.size(); ++i) r.cap_radius = std::max(r.cap_radius, dist(c, map.at(i)));
  return r;
}

Vec clifford_point(double u, double v) {
  Vec x(4);
  x << std::cos(u), std::sin(u), std::cos(v), std::sin(v);
  return x / std::sqrt(2.0);
}

Vec clifford_normal(double u, double v) {
  Vec x(4);
  x << std::cos(u), std::sin(u), -std::cos(v), -std::sin(v);
  return x / std::sqrt(2.0);
}

double clifford_orthogonality(int Nu, int Nv) {
  double worst = 0.0;
  for (int j = 0; j < Nv; ++j) {
    for (int i = 0; i < Nu; ++i) {
      const double u = 2 * kPi * i / Nu, v = 2 * kPi * j / Nv;
      const Vec nu = clifford_normal(u, v);
      Vec Mu(4), Mv(4);
      Mu << -std::sin(u), std::cos(u), 0.0, 0.0;
      Mv << 0.0, 0.0, -std::sin(v), std::cos(v);
      worst = std::max({worst, std::abs(nu.dot(clifford_point(u, v))), std::abs(nu.dot(Mu)) / std::sqrt(2.0),
                        std::abs(nu.dot(Mv)) / std::sqrt(2.0)});
    }
  }
  return worst;
}

SphereMap clifford_normal_gauss(int Nu, int Nv) {
  if (Nu < 4 || Nv < 4) throw DomainError("clifford_normal_gauss: grid must be at least 4 x 4");
  const double orth = clifford_orthogonality(Nu, Nv);
  if (orth > 1e-12) throw CertificationError("clifford_normal_gauss: normal not orthogonal to the torus");
  // Positions in induced-metric units: the metric is (du^2 + dv^2) / 2.
  const double s = 1.0 / std::sqrt(2.0);
  auto mesh = std::make_shared<const DomainMesh>(
      lattice(Nu, Nv, s * 2 * kPi / Nu, s * 2 * kPi / Nv, true, 1.0, "clifford_torus"));
  Eigen::MatrixXd nu(4, Nu * Nv);
  for (int j = 0; j < Nv; ++j)
    for (int i = 0; i < Nu; ++i) nu.col(i + Nu * j) = clifford_normal(2 * kPi * i / Nu, 2 * kPi * j / Nv);
  return SphereMap(std::move(mesh), std::move(nu));
}

void MinimalConfig::validate() const {
  if (!(tolerance > 0.0)) throw DomainError("MinimalConfig: tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("MinimalConfig: damping must lie in (0, 1]");
  if (max_iterations < 0) throw DomainError("MinimalConfig: max_iterations must be nonnegative");
  if (!(slope_limit > 0.0)) throw DomainError("MinimalConfig: slope_limit must be positive");
}

nlohmann::json MinimalResult::summary() const {
  return {{"iterations", iterations},
          {"residual", residual},
          {"slope_bound", surface.slope_bound()},
          {"gauss_oscillation", gauss_oscillation_trace.empty() ? 0.0 : gauss_oscillation_trace.back()}};
}

namespace {

struct GridEdge {
  int a, b;     // node indices
  int ia, ja;   // node a grid coordinates
  int dir;      // 0: +x, 1: +y
};

std::vector<GridEdge> grid_edges(const GraphSurface& s) {
  const int n = s.nodes_per_side();
  std::vector<GridEdge> edges;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (s.periodic() || i + 1 < n) edges.push_back({i + n * j, wrap(i + 1, n) + n * j, i, j, 0});
      if (s.periodic() || j + 1 < n) edges.push_back({i + n * j, i + n * wrap(j + 1, n), i, j, 1});
    }
  }
  return edges;
}

// Mean of 1 / W over the cells adjacent to each edge.
Vec edge_coefficients(const GraphSurface& s, const std::vector<GridEdge>& edges) {
  const int N = s.N();
  const Eigen::Matrix2Xd G = s.cell_gradients();
  Vec invW(N * N);
  for (int c = 0; c < N * N; ++c) invW[c] = 1.0 / std::sqrt(1.0 + G.col(c).squaredNorm());
  Vec a(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const GridEdge& e = edges[k];
    // Cells on either side: (i, j-1), (i, j) for x edges; (i-1, j), (i, j) for y edges.
    const int ci[2] = {e.dir == 0 ? e.ia : e.ia - 1, e.ia};
    const int cj[2] = {e.dir == 0 ? e.ja - 1 : e.ja, e.ja};
    double sum = 0.0;
    int count = 0;
    for (int t = 0; t < 2; ++t) {
      int i = ci[t], j = cj[t];
      if (s.periodic()) {
        i = wrap(i, N);
        j = wrap(j, N);
      } else if (i < 0 || j < 0 || i >= N || j >= N) {
        continue;
      }
      sum += invW[i + N * j];
      ++count;
    }
    a[static_cast<Eigen::Index>(k)] = sum / count;
  }
  return a;
}

double edge_difference(const GraphSurface& s, const GridEdge& e) {
  return e.dir == 0 ? s.height(e.ia + 1, e.ja) - s.height(e.ia, e.ja) : s.height(e.ia, e.ja + 1) - s.height(e.ia, e.ja);
}

Vec apply_operator(const GraphSurface& s, const std::vector<GridEdge>& edges, const Vec& a) {
  const int n = s.nodes_per_side();
  Vec r = Vec::Zero(n * n);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double flux = a[static_cast<Eigen::Index>(k)] * edge_difference(s, edges[k]);
    r[edges[k].a] += flux;
    r[edges[k].b] -= flux;
  }
  r /= s.h() * s.h();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (s.on_rim(i, j)) r[i + n * j] = 0.0;
  return r;
}

}  // namespace

Vec minimal_surface_operator(const GraphSurface& surface) {
  const auto edges = grid_edges(surface);
  return apply_operator(surface, edges, edge_coefficients(surface, edges));
}

MinimalResult minimal_graph_solve(const GraphSurface& init, const MinimalConfig& cfg) {
  cfg.validate();
  const auto edges = grid_edges(init);
  const int n = init.nodes_per_side();
  const bool per = init.periodic();
  // Free nodes: interior of the box, or all torus nodes but node 0 (the additive gauge).
  std::vector<int> slot(n * n, -1);
  int free_count = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (per ? (i + j > 0) : !init.on_rim(i, j)) slot[i + n * j] = free_count++;

  MinimalResult result{init, 0, 0.0, {}, {}};
  GraphSurface& s = result.surface;
  Vec a = edge_coefficients(s, edges);
  result.residual = apply_operator(s, edges, a).cwiseAbs().maxCoeff();
  while (result.residual > cfg.tolerance) {
    if (result.iterations >= cfg.max_iterations) {
      throw ConvergenceError("minimal_graph_solve: residual " + std::to_string(result.residual) + " after " +
                             std::to_string(result.iterations) + " iterations");
    }
    std::vector<Eigen::Triplet<double>> trip;
    Vec rhs = Vec::Zero(free_count);
    Vec guess(free_count);
    for (int v = 0; v < n * n; ++v)
      if (slot[v] >= 0) guess[slot[v]] = s.heights()[v];
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const GridEdge& e = edges[k];
      const double w = a[static_cast<Eigen::Index>(k)];
      const int sa = slot[e.a], sb = slot[e.b];
      // Affine jump across the edge on the torus: f_b - f_a = p_b - p_a + jump.
      const double jump = per ? s.slope()[e.dir] * s.h() : 0.0;
      if (sa >= 0) {
        trip.emplace_back(sa, sa, w);
        rhs[sa] += w * jump;
        if (sb >= 0) trip.emplace_back(sa, sb, -w);
        else rhs[sa] += w * s.heights()[e.b];
      }
      if (sb >= 0) {
        trip.emplace_back(sb, sb, w);
        rhs[sb] -= w * jump;
        if (sa >= 0) trip.emplace_back(sb, sa, -w);
        else rhs[sb] += w * s.heights()[e.a];
      }
    }
    Eigen::SparseMatrix<double> K(free_count, free_count);
    K.setFromTriplets(trip.begin(), trip.end());
    // Solve for the correction so CG accuracy is relative to the current defect.
    const Vec defect = rhs - K * guess;
    const double target = 1e-3 * cfg.tolerance * s.h() * s.h() / std::max(defect.norm(), 1e-300);
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(std::clamp(target, 1e-15, cfg.cg.tolerance));
    cg.setMaxIterations(cfg.cg.max_iterations);
    cg.compute(K);
    const Vec delta = cg.solve(defect);
    if (cg.info() != Eigen::Success && !(cg.error() < 1e-8)) {
      throw ConvergenceError("minimal_graph_solve: CG did not converge");
    }
    Vec& H = s.mutable_heights();
    for (int v = 0; v < n * n; ++v)
      if (slot[v] >= 0) H[v] += cfg.damping * delta[slot[v]];
    ++result.iterations;
    const double slope = s.slope_bound();
    if (!(slope <= cfg.slope_limit)) {
      throw SlopeBlowupError("minimal_graph_solve: slope " + std::to_string(slope) + " exceeds the limit");
    }
    a = edge_coefficients(s, edges);
    result.residual = apply_operator(s, edges, a).cwiseAbs().maxCoeff();
    result.residual_trace.push_back(result.residual);
    result.gauss_oscillation_trace.push_back(oscillation(gauss_map_graph(s)));
  }
  return result;
}

SurfaceSamples plane_samples(int N, double L) {
  if (N < 1 || !(L > 0.0)) throw DomainError("plane_samples: need N >= 1 and L > 0");
  const double h = L / N;
  SurfaceSamples out{Eigen::Matrix3Xd(3, N * N), Vec::Constant(N * N, h * h)};
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) out.points.col(i + N * j) = Eigen::Vector3d(-0.5 * L + (i + 0.5) * h, -0.5 * L + (j + 0.5) * h, 0.0);
  return out;
}

SurfaceSamples catenoid_samples(int Ns, int Nt, double s_max) {
  if (Ns < 1 || Nt < 3 || !(s_max > 0.0)) throw DomainError("catenoid_samples: bad resolution or extent");
  const double ds = 2.0 * s_max / Ns, dt = 2.0 * kPi / Nt;
  SurfaceSamples out{Eigen::Matrix3Xd(3, Ns * Nt), Vec(Ns * Nt)};
  for (int k = 0; k < Ns; ++k) {
    const double s = -s_max + (k + 0.5) * ds;
    for (int l = 0; l < Nt; ++l) {
      const double t = (l + 0.5) * dt;
      out.points.col(k * Nt + l) = Eigen::Vector3d(std::cosh(s) * std::cos(t), std::cosh(s) * std::sin(t), s);
      out.area[k * Nt + l] = std::cosh(s) * std::cosh(s) * ds * dt;
    }
  }
  return out;
}

nlohmann::json DensityProfile::summary() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows) r.push_back({{"R", row.R}, {"theta", row.theta}});
  return {{"rows", r}, {"max_drop", max_drop}, {"monotone", monotone}, {"near_one_at_small_R", near_one_at_small_R}};
}

DensityProfile density_profile(const SurfaceSamples& surface, const Eigen::Vector3d& y0,
                               const std::vector<double>& radii, double slack) {
  if (radii.empty()) throw DomainError("density_profile: no radii");
  std::vector<double> R = radii;
  std::sort(R.begin(), R.end());
  if (!(R.front() > 0.0)) throw DomainError("density_profile: radii must be positive");
  const Vec d = (surface.points.colwise() - y0).colwise().norm().transpose();
  DensityProfile p;
  for (double r : R) {
    double area = 0.0;
    for (Eigen::Index k = 0; k < d.size(); ++k)
      if (d[k] < r) area += surface.area[k];
    p.rows.push_back({r, area / (kPi * r * r)});
  }
  for (std::size_t k = 1; k < p.rows.size(); ++k) {
    p.max_drop = std::max(p.max_drop, (p.rows[k - 1].theta - p.rows[k].theta) / p.rows[k - 1].theta);
  }
  p.monotone = p.max_drop <= slack;
  p.near_one_at_small_R = std::abs(p.rows.front().theta - 1.0) <= 0.05;
  return p;
}

}  // namespace sphconv
