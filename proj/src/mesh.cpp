#include "sphconv/mesh.hpp"

#include "sphconv/errors.hpp"
#include "sphconv/sphere.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <functional>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

namespace sphconv {

namespace {

using Index = Eigen::Index;

// Multi-index <-> flat index on a box with n points per side.
struct GridIndex {
  int m;
  int n;
  std::vector<int> unflatten(long idx) const {
    std::vector<int> k(m);
    for (int d = 0; d < m; ++d) {
      k[d] = static_cast<int>(idx % n);
      idx /= n;
    }
    return k;
  }
  long flatten(const std::vector<int>& k) const {
    long idx = 0;
    for (int d = m - 1; d >= 0; --d) idx = idx * n + k[d];
    return idx;
  }
  long count() const {
    long c = 1;
    for (int d = 0; d < m; ++d) c *= n;
    return c;
  }
};

void check_grid(int m, int N) {
  if (m < 1 || m > 4) throw DomainError("mesh: dimension must be in [1, 4]");
  if (N < 4) throw DomainError("mesh: N must be at least 4");
}

// Subset of a box grid selected by `keep`, with grid edges between kept points.
DomainMesh grid_subset(int m, int npts, double h, const std::function<Eigen::VectorXd(const std::vector<int>&)>& pos,
                       const std::vector<char>& keep, const std::vector<char>& boundary_of_full,
                       const std::function<bool(long, long)>& edge_ok, double R0, const std::string& kind) {
  const GridIndex grid{m, npts};
  std::vector<long> local(keep.size(), -1);
  long count = 0;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) local[i] = count++;
  Eigen::MatrixXd P(m, count);
  Vec mu = Vec::Constant(count, std::pow(h, m));
  std::vector<char> boundary(count, 0);
  std::vector<EdgeSpec> edges;
  const double w = std::pow(h, m - 2);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    const std::vector<int> k = grid.unflatten(static_cast<long>(i));
    P.col(local[i]) = pos(k);
    boundary[local[i]] = boundary_of_full[i];
    for (int d = 0; d < m; ++d) {
      if (k[d] + 1 >= npts) continue;
      std::vector<int> kk = k;
      ++kk[d];
      const long j = grid.flatten(kk);
      if (keep[j] && edge_ok(static_cast<long>(i), j)) {
        edges.push_back({static_cast<int>(local[i]), static_cast<int>(local[j]), w, h});
      }
    }
  }
  return DomainMesh(std::move(P), edges, std::move(mu), std::move(boundary), DistanceMode::Euclidean, {}, R0, kind);
}

std::vector<double> dijkstra(const DomainMesh& mesh, int source) {
  std::vector<double> d(mesh.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  d[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [dist, i] = queue.top();
    queue.pop();
    if (dist > d[i]) continue;
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const int j = mesh.nbr()[e];
      const double nd = dist + mesh.length()[e];
      if (nd < d[j]) {
        d[j] = nd;
        queue.push({nd, j});
      }
    }
  }
  return d;
}

std::vector<double> read_csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

// CG for a symmetric positive (semi)definite sparse system.
Vec cg_solve(const Eigen::SparseMatrix<double>& A, const Vec& b, const CGConfig& cfg, const char* who) {
  if (b.norm() == 0.0) return Vec::Zero(b.size());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(cfg.tolerance);
  cg.setMaxIterations(cfg.max_iterations);
  cg.compute(A);
  Vec x = cg.solve(b);
  const double rel = (A * x - b).norm() / b.norm();
  if (cg.info() != Eigen::Success && !(rel <= cfg.tolerance * 10)) {
    throw ConvergenceError(std::string(who) + ": CG did not converge (relative residual " + std::to_string(rel) + ")");
  }
  return x;
}

}  // namespace

DomainMesh::DomainMesh(Eigen::MatrixXd positions, const std::vector<EdgeSpec>& edges, Vec mu,
                       std::vector<char> boundary, DistanceMode mode, Vec period, double R0, std::string kind)
    : positions_(std::move(positions)),
      mu_(std::move(mu)),
      boundary_(std::move(boundary)),
      mode_(mode),
      period_(std::move(period)),
      R0_(R0),
      kind_(std::move(kind)) {
  const int n = size();
  if (n < 1) throw DomainError("DomainMesh: no vertices");
  if (mu_.size() != n) throw DomainError("DomainMesh: measure size mismatch");
  if (boundary_.empty()) boundary_.assign(n, 0);
  if (static_cast<int>(boundary_.size()) != n) throw DomainError("DomainMesh: boundary size mismatch");
  if ((mu_.array() <= 0.0).any()) throw DomainError("DomainMesh: vertex measures must be positive");
  if (mode_ == DistanceMode::Periodic && period_.size() != dim()) throw DomainError("DomainMesh: period size mismatch");
  std::vector<int> deg(n, 0);
  for (const EdgeSpec& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n || e.i == e.j) throw DomainError("DomainMesh: bad edge");
    if (e.weight < 0.0 || e.length <= 0.0) throw DomainError("DomainMesh: bad edge weight or length");
    ++deg[e.i];
    ++deg[e.j];
  }
  offsets_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  nbr_.resize(offsets_[n]);
  weight_.resize(offsets_[n]);
  length_.resize(offsets_[n]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (const EdgeSpec& e : edges) {
    for (const auto& [a, b] : {std::pair{e.i, e.j}, std::pair{e.j, e.i}}) {
      const int slot = fill[a]++;
      nbr_[slot] = b;
      weight_[slot] = e.weight;
      length_[slot] = e.length;
    }
  }
}

Eigen::VectorXd DomainMesh::displacement(int i, int j) const {
  Eigen::VectorXd d = positions_.col(j) - positions_.col(i);
  if (mode_ == DistanceMode::Periodic) {
    for (Index k = 0; k < d.size(); ++k) d[k] -= period_[k] * std::round(d[k] / period_[k]);
  }
  return d;
}

double DomainMesh::distance(int i, int j) const {
  if (mode_ == DistanceMode::Graph) return graph_distances_from(i)[j];
  return displacement(i, j).norm();
}

std::vector<double> DomainMesh::distances_from(int i) const {
  if (mode_ == DistanceMode::Graph) return graph_distances_from(i);
  std::vector<double> d(size());
  for (int j = 0; j < size(); ++j) d[j] = displacement(i, j).norm();
  return d;
}

std::vector<double> DomainMesh::graph_distances_from(int i) const { return dijkstra(*this, i); }

bool DomainMesh::connected() const {
  const auto d = dijkstra(*this, 0);
  return std::all_of(d.begin(), d.end(), [](double x) { return std::isfinite(x); });
}

int DomainMesh::nearest_vertex(const Eigen::VectorXd& x) const {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < size(); ++j) {
    Eigen::VectorXd d = positions_.col(j) - x;
    if (mode_ == DistanceMode::Periodic) {
      for (Index k = 0; k < d.size(); ++k) d[k] -= period_[k] * std::round(d[k] / period_[k]);
    }
    const double dn = d.squaredNorm();
    if (dn < best_d) {
      best_d = dn;
      best = j;
    }
  }
  return best;
}

void DomainMesh::write_csv(std::ostream& vertices, std::ostream& edges) const {
  const auto pv = vertices.precision(17);
  const auto pe = edges.precision(17);
  vertices << "id";
  for (int d = 0; d < dim(); ++d) vertices << ",x" << d;
  vertices << ",mu,boundary\n";
  for (int i = 0; i < size(); ++i) {
    vertices << i;
    for (int d = 0; d < dim(); ++d) vertices << ',' << positions_(d, i);
    vertices << ',' << mu_[i] << ',' << int(boundary_[i]) << '\n';
  }
  edges << "i,j,weight,length\n";
  for (int i = 0; i < size(); ++i) {
    for (int e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      if (nbr_[e] > i) edges << i << ',' << nbr_[e] << ',' << weight_[e] << ',' << length_[e] << '\n';
    }
  }
  vertices.precision(pv);
  edges.precision(pe);
}

DomainMesh DomainMesh::read_csv(std::istream& vertices, std::istream& edges, DistanceMode mode, Vec period,
                                double R0) {
  std::string line;
  if (!std::getline(vertices, line)) throw DomainError("read_csv: empty vertex file");
  const int cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int m = cols - 3;
  if (m < 1) throw DomainError("read_csv: malformed vertex header");
  std::vector<std::vector<double>> rows;
  while (std::getline(vertices, line)) {
    if (line.empty()) continue;
    rows.push_back(read_csv_row(line));
    if (static_cast<int>(rows.back().size()) != cols) throw DomainError("read_csv: malformed vertex row");
  }
  Eigen::MatrixXd P(m, static_cast<Index>(rows.size()));
  Vec mu(static_cast<Index>(rows.size()));
  std::vector<char> boundary(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<std::size_t>(rows[r][0]) != r) throw DomainError("read_csv: vertex ids must be 0..n-1 in order");
    for (int d = 0; d < m; ++d) P(d, static_cast<Index>(r)) = rows[r][1 + d];
    mu[static_cast<Index>(r)] = rows[r][1 + m];
    boundary[r] = rows[r][2 + m] != 0.0;
  }
  std::vector<EdgeSpec> E;
  std::getline(edges, line);
  while (std::getline(edges, line)) {
    if (line.empty()) continue;
    const auto v = read_csv_row(line);
    if (v.size() != 4) throw DomainError("read_csv: malformed edge row");
    E.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3]});
  }
  return DomainMesh(std::move(P), E, std::move(mu), std::move(boundary), mode, std::move(period), R0);
}

nlohmann::json DomainMesh::summary() const {
  return nlohmann::json{{"kind", kind_},
                        {"dim", dim()},
                        {"vertices", size()},
                        {"edges", n_edges()},
                        {"total_measure", total_measure()},
                        {"boundary_vertices", std::count(boundary_.begin(), boundary_.end(), 1)},
                        {"R0", R0_}};
}

DomainMesh flat_torus(int m, int N, double L) {
  check_grid(m, N);
  if (!(L > 0.0)) throw DomainError("flat_torus: side length must be positive");
  const GridIndex grid{m, N};
  const double h = L / N;
  const long count = grid.count();
  Eigen::MatrixXd P(m, count);
  std::vector<EdgeSpec> edges;
  const double w = std::pow(h, m - 2);
  for (long i = 0; i < count; ++i) {
    const std::vector<int> k = grid.unflatten(i);
    for (int d = 0; d < m; ++d) P(d, i) = k[d] * h;
    for (int d = 0; d < m; ++d) {
      std::vector<int> kk = k;
      kk[d] = (kk[d] + 1) % N;
      edges.push_back({static_cast<int>(i), static_cast<int>(grid.flatten(kk)), w, h});
    }
  }
  return DomainMesh(std::move(P), edges, Vec::Constant(count, std::pow(h, m)), std::vector<char>(count, 0),
                    DistanceMode::Periodic, Vec::Constant(m, L), L / 4.0, "flat_torus");
}

DomainMesh disk(int m, int N, double r0) {
  check_grid(m, N);
  if (!(r0 > 0.0)) throw DomainError("disk: radius must be positive");
  const int npts = N + 1;
  const GridIndex grid{m, npts};
  const double h = 2.0 * r0 / N;
  const auto pos = [&](const std::vector<int>& k) {
    Eigen::VectorXd x(m);
    for (int d = 0; d < m; ++d) x[d] = -r0 + k[d] * h;
    return x;
  };
  std::vector<char> keep(grid.count(), 0);
  for (long i = 0; i < grid.count(); ++i) keep[i] = pos(grid.unflatten(i)).norm() <= r0 * (1.0 + 1e-12);
  std::vector<char> boundary(grid.count(), 0);
  for (long i = 0; i < grid.count(); ++i) {
    if (!keep[i]) continue;
    const std::vector<int> k = grid.unflatten(i);
    for (int d = 0; d < m && !boundary[i]; ++d) {
      for (int s : {-1, 1}) {
        std::vector<int> kk = k;
        kk[d] += s;
        if (kk[d] < 0 || kk[d] >= npts || !keep[grid.flatten(kk)]) boundary[i] = 1;
      }
    }
  }
  return grid_subset(m, npts, h, pos, keep, boundary, [](long, long) { return true; }, 0.9 * r0, "disk");
}

DomainMesh grid_box(int m, int N, double L) {
  check_grid(m, N);
  if (!(L > 0.0)) throw DomainError("grid_box: side length must be positive");
  const int npts = N + 1;
  const GridIndex grid{m, npts};
  const double h = L / N;
  const auto pos = [&](const std::vector<int>& k) {
    Eigen::VectorXd x(m);
    for (int d = 0; d < m; ++d) x[d] = k[d] * h;
    return x;
  };
  std::vector<char> keep(grid.count(), 1);
  std::vector<char> boundary(grid.count(), 0);
  for (long i = 0; i < grid.count(); ++i) {
    const std::vector<int> k = grid.unflatten(i);
    boundary[i] = std::any_of(k.begin(), k.end(), [&](int x) { return x == 0 || x == N; });
  }
  return grid_subset(m, npts, h, pos, keep, boundary, [](long, long) { return true; }, L / 4.0, "grid_box");
}

DomainMesh punctured_ball(int n, int N, double eps) {
  check_grid(n, N);
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("punctured_ball: eps must lie in (0, 0.5)");
  // Cell centres, so the origin is never a vertex.
  const int npts = N;
  const GridIndex grid{n, npts};
  const double h = 2.0 / N;
  const auto pos = [&](const std::vector<int>& k) {
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d) x[d] = -1.0 + (k[d] + 0.5) * h;
    return x;
  };
  std::vector<char> interior(grid.count(), 0);
  for (long i = 0; i < grid.count(); ++i) {
    const double r = pos(grid.unflatten(i)).norm();
    interior[i] = r > eps && r < 1.0;
  }
  std::vector<char> keep = interior;
  std::vector<char> boundary(grid.count(), 0);
  for (long i = 0; i < grid.count(); ++i) {
    if (!interior[i]) continue;
    const std::vector<int> k = grid.unflatten(i);
    for (int d = 0; d < n; ++d) {
      for (int s : {-1, 1}) {
        std::vector<int> kk = k;
        kk[d] += s;
        if (kk[d] < 0 || kk[d] >= npts) continue;
        const long j = grid.flatten(kk);
        if (!interior[j]) {
          keep[j] = 1;
          boundary[j] = 1;
        }
      }
    }
  }
  return grid_subset(
      n, npts, h, pos, keep, boundary, [&](long a, long b) { return interior[a] || interior[b]; }, 0.5,
      "punctured_ball");
}

DomainMesh interval(int N, double length) {
  if (N < 2) throw DomainError("interval: need at least 2 cells");
  if (!(length > 0.0)) throw DomainError("interval: length must be positive");
  const double h = length / N;
  Eigen::MatrixXd P(1, N);
  std::vector<EdgeSpec> edges;
  for (int i = 0; i < N; ++i) {
    P(0, i) = (i + 0.5) * h;
    if (i + 1 < N) edges.push_back({i, i + 1, 1.0 / h, h});
  }
  return DomainMesh(std::move(P), edges, Vec::Constant(N, h), std::vector<char>(N, 0), DistanceMode::Euclidean, {},
                    length / 2.0, "interval");
}

BallStats ball(const DomainMesh& mesh, const std::vector<double>& d, int center, double R) {
  BallStats b;
  b.center = center;
  b.R = R;
  for (int j = 0; j < mesh.size(); ++j) {
    if (d[j] < R) {
      b.vertices.push_back(j);
      b.volume += mesh.mu(j);
    }
  }
  return b;
}

BallStats ball(const DomainMesh& mesh, int center, double R) {
  return ball(mesh, mesh.distances_from(center), center, R);
}

nlohmann::json DoublingEstimate::summary() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"center", r.center}, {"R", r.R}, {"V_R", r.V_R}, {"V_2R", r.V_2R}, {"ratio", r.ratio}});
  return {{"K1", K1}, {"nu0", nu0}, {"rows", rows_json}};
}

DoublingEstimate doubling_constant(const DomainMesh& mesh, const std::vector<int>& centers,
                                   const std::vector<double>& radii) {
  DoublingEstimate est;
  for (int c : centers) {
    const std::vector<double> d = mesh.distances_from(c);
    for (double R : radii) {
      DoublingRow row{c, R, ball(mesh, d, c, R).volume, ball(mesh, d, c, 2.0 * R).volume, 0.0};
      row.ratio = row.V_2R / row.V_R;
      est.K1 = std::max(est.K1, row.ratio);
      est.rows.push_back(row);
    }
  }
  est.nu0 = std::log(est.K1) / std::log(2.0);
  return est;
}

NeumannEigen neumann_mu2(const DomainMesh& mesh, const std::vector<int>& vertices, double tolerance,
                         int max_iterations, std::uint64_t seed) {
  const Index n = static_cast<Index>(vertices.size());
  if (n < 2) throw DomainError("neumann_mu2: need at least two vertices");
  std::vector<int> local(mesh.size(), -1);
  for (Index a = 0; a < n; ++a) local[vertices[a]] = static_cast<int>(a);
  std::vector<Eigen::Triplet<double>> trip;
  Vec M(n);
  for (Index a = 0; a < n; ++a) {
    const int i = vertices[a];
    M[a] = mesh.mu(i);
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const int b = local[mesh.nbr()[e]];
      if (b < 0) continue;
      trip.emplace_back(a, a, mesh.weight()[e]);
      trip.emplace_back(a, b, -mesh.weight()[e]);
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  // K is singular on constants; iterates are kept mu-orthogonal to them.
  const double total = M.sum();
  const auto project = [&](Vec& x) { x.array() -= M.dot(x) / total; };
  const auto mnorm = [&](const Vec& x) { return std::sqrt(x.dot(M.asDiagonal() * x)); };

  Rng rng(seed);
  std::normal_distribution<double> g;
  Vec x(n);
  for (Index a = 0; a < n; ++a) x[a] = g(rng);
  project(x);
  x /= mnorm(x);

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(20 * static_cast<int>(n) + 1000);
  cg.compute(K);
  NeumannEigen out;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    Vec y = cg.solve(M.asDiagonal() * x);
    project(y);
    const double norm = mnorm(y);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ConvergenceError("neumann_mu2: degenerate iterate");
    x = y / norm;
    const double rq = x.dot(K * x);
    out.iterations = it;
    if (std::abs(rq - prev) <= tolerance * rq) {
      out.mu2 = rq;
      out.fiedler = x;
      return out;
    }
    prev = rq;
  }
  throw ConvergenceError("neumann_mu2: inverse iteration did not converge");
}

nlohmann::json PoincareEstimate::summary() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back({{"center", r.center}, {"R", r.R}, {"mu2", r.mu2}, {"K2", r.K2}});
  return {{"K2", K2}, {"rows", rows_json}};
}

PoincareEstimate poincare_constant(const DomainMesh& mesh, const std::vector<int>& centers,
                                   const std::vector<double>& radii) {
  PoincareEstimate est;
  for (int c : centers) {
    const std::vector<double> d = mesh.distances_from(c);
    for (double R : radii) {
      const BallStats b = ball(mesh, d, c, R);
      const double mu2 = neumann_mu2(mesh, b.vertices).mu2;
      const PoincareRow row{c, R, mu2, 1.0 / (R * R * mu2)};
      est.K2 = std::max(est.K2, row.K2);
      est.rows.push_back(row);
    }
  }
  return est;
}

CheegerEstimate cheeger_lower_bound(const DomainMesh& mesh, const std::vector<int>& vertices,
                                    std::size_t random_sweeps, std::uint64_t seed) {
  const NeumannEigen eig = neumann_mu2(mesh, vertices, 1e-10, 500, seed);
  const std::size_t n = vertices.size();
  std::vector<char> in_region(mesh.size(), 0);
  double total = 0.0;
  for (int v : vertices) {
    in_region[v] = 1;
    total += mesh.mu(v);
  }
  CheegerEstimate est;
  est.mu2 = eig.mu2;
  est.h = std::numeric_limits<double>::infinity();

  const auto sweep = [&](const std::vector<double>& key) {
    for (int dir : {1, -1}) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return dir * key[a] < dir * key[b]; });
      std::vector<char> in_set(mesh.size(), 0);
      double vol = 0.0;
      double cut = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const int i = vertices[order[k]];
        for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
          const int j = mesh.nbr()[e];
          if (!in_region[j]) continue;
          const double wl = mesh.weight()[e] * mesh.length()[e];
          cut += in_set[j] ? -wl : wl;
        }
        in_set[i] = 1;
        vol += mesh.mu(i);
        if (vol > 0.5 * total) break;
        est.h = std::min(est.h, cut / vol);
        ++est.cuts_tried;
      }
    }
  };

  sweep(std::vector<double>(eig.fiedler.data(), eig.fiedler.data() + n));
  Rng rng(seed);
  std::normal_distribution<double> g;
  for (std::size_t s = 0; s < random_sweeps; ++s) {
    Eigen::VectorXd dir(mesh.dim());
    for (int d = 0; d < mesh.dim(); ++d) dir[d] = g(rng);
    std::vector<double> key(n);
    for (std::size_t a = 0; a < n; ++a) key[a] = mesh.displacement(vertices[0], vertices[a]).dot(dir);
    sweep(key);
  }
  est.bound = 0.25 * est.h * est.h;
  return est;
}

Vec laplacian_apply(const DomainMesh& mesh, const Vec& field) {
  if (field.size() != mesh.size()) throw DomainError("laplacian_apply: field size mismatch");
  Vec out(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) {
    double s = 0.0;
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) s += mesh.weight()[e] * (field[mesh.nbr()[e]] - field[i]);
    out[i] = s / mesh.mu(i);
  }
  return out;
}

Eigen::SparseMatrix<double> stiffness_matrix(const DomainMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < mesh.size(); ++i) {
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      trip.emplace_back(i, i, mesh.weight()[e]);
      trip.emplace_back(i, mesh.nbr()[e], -mesh.weight()[e]);
    }
  }
  Eigen::SparseMatrix<double> K(mesh.size(), mesh.size());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

double dirichlet_form(const DomainMesh& mesh, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < mesh.size(); ++i) {
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const int j = mesh.nbr()[e];
      if (j > i) s += mesh.weight()[e] * (a[i] - a[j]) * (b[i] - b[j]);
    }
  }
  return s;
}

Vec dirichlet_solve(const DomainMesh& mesh, const std::vector<char>& region, const Vec& rhs, const Vec& outside,
                    const CGConfig& cfg) {
  const int n = mesh.size();
  if (static_cast<int>(region.size()) != n || rhs.size() != n) throw DomainError("dirichlet_solve: size mismatch");
  const Vec out_values = outside.size() == 0 ? Vec::Zero(n) : outside;
  std::vector<int> local(n, -1);
  int count = 0;
  for (int i = 0; i < n; ++i)
    if (region[i]) local[i] = count++;
  if (count == 0) throw DomainError("dirichlet_solve: empty region");
  std::vector<Eigen::Triplet<double>> trip;
  Vec b(count);
  bool anchored = false;
  for (int i = 0; i < n; ++i) {
    if (local[i] < 0) continue;
    const int a = local[i];
    b[a] = mesh.mu(i) * rhs[i];
    for (int e = mesh.offset(i); e < mesh.offset(i + 1); ++e) {
      const int j = mesh.nbr()[e];
      const double w = mesh.weight()[e];
      trip.emplace_back(a, a, w);
      if (local[j] >= 0) {
        trip.emplace_back(a, local[j], -w);
      } else {
        b[a] += w * out_values[j];
        anchored = true;
      }
    }
  }
  if (!anchored) throw DomainError("dirichlet_solve: region has no boundary contact");
  Eigen::SparseMatrix<double> A(count, count);
  A.setFromTriplets(trip.begin(), trip.end());
  const Vec x = cg_solve(A, b, cfg, "dirichlet_solve");
  Vec v = out_values;
  for (int i = 0; i < n; ++i)
    if (local[i] >= 0) v[i] = x[local[i]];
  return v;
}

nlohmann::json GreenProfile::summary() const {
  return {{"y0", y0},       {"R", R},           {"rho", rho},           {"V_rho", V_rho},
          {"V_half", V_half}, {"sup_omega", sup_omega}, {"inf_omega", inf_omega}, {"min_G", min_G}};
}

GreenProfile mollified_green(const DomainMesh& mesh, int y0, double R, double rho, const CGConfig& cfg) {
  if (!(R > 0.0) || !(rho > 0.0) || rho > R) throw DomainError("mollified_green: need 0 < rho <= R");
  if (mesh.mode() == DistanceMode::Periodic && 2.0 * R >= mesh.period().minCoeff()) {
    throw DomainError("mollified_green: ball wraps around the torus");
  }
  const std::vector<double> d = mesh.distances_from(y0);
  GreenProfile p;
  p.y0 = y0;
  p.R = R;
  p.rho = rho;
  p.in_ball.assign(mesh.size(), 0);
  Vec rhs = Vec::Zero(mesh.size());
  for (int i = 0; i < mesh.size(); ++i) {
    if (d[i] < R) {
      if (mesh.on_boundary(i)) throw DomainError("mollified_green: ball touches the mesh boundary");
      p.in_ball[i] = 1;
    }
    if (d[i] < rho) p.V_rho += mesh.mu(i);
    if (d[i] < 0.5 * R) p.V_half += mesh.mu(i);
  }
  for (int i = 0; i < mesh.size(); ++i)
    if (d[i] < rho) rhs[i] = 1.0 / p.V_rho;
  p.G = dirichlet_solve(mesh, p.in_ball, rhs, {}, cfg);
  p.omega = p.G * (p.V_half / (R * R));
  p.sup_omega = -std::numeric_limits<double>::infinity();
  p.inf_omega = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.size(); ++i) {
    if (d[i] < R) p.sup_omega = std::max(p.sup_omega, p.omega[i]);
    if (d[i] < 0.5 * R) p.inf_omega = std::min(p.inf_omega, p.omega[i]);
  }
  p.min_G = p.G.minCoeff();
  return p;
}

GreenProfile omega_R(const DomainMesh& mesh, int y0, double R, const CGConfig& cfg) {
  return mollified_green(mesh, y0, R, 0.5 * R, cfg);
}

}  // namespace sphconv
