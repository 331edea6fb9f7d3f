#pragma once

#include "sphconv/convex.hpp"
#include "sphconv/sphere.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sphconv {

struct CertifyConfig {
  std::size_t n_directions = 32;
  double h = 1e-3;
  double margin = 0.0;
  std::uint64_t seed = 5;
  bool keep_all_rows = false;  // otherwise one row per sample (its worst direction)
};

struct CertifyRow {
  std::size_t sample = 0;
  double phi0 = 0.0;
  Vec location;
  Vec direction;
  double second_derivative = 0.0;
};

struct ConvexityReport {
  std::size_t n_samples = 0;
  std::size_t n_directions = 0;
  double min_second_derivative = 0.0;
  std::size_t argmin_sample = 0;
  Vec argmin_location;
  Vec argmin_direction;
  double argmin_phi0 = 0.0;
  double margin = 0.0;
  bool pass = false;
  std::vector<CertifyRow> rows;

  nlohmann::json summary() const;
  void write_csv(std::ostream& out) const;
};

/// Second derivative along geodesics through each sample in random unit
/// directions. Directions for sample i depend only on (seed, i).
ConvexityReport certify(const ScalarField& F, const std::vector<SpherePoint>& K, const CertifyConfig& cfg = {});

/// Same, for lambda^-1 exp(lambda h) measured as h'' + lambda h'^2, which
/// bounds the true second derivative from below whenever h >= 0.
ConvexityReport certify(const ExpConvexified& F, const std::vector<SpherePoint>& K, const CertifyConfig& cfg = {});

/// The family over K x Phi; K[k] holds the samples used with phis[k].
ConvexityReport certify_family(const ConvexFamily& family, const std::vector<double>& phis,
                               const std::vector<std::vector<SpherePoint>>& K, const CertifyConfig& cfg = {});

/// t -> (sin t, cos t sin theta, y cos t cos theta), a closed unit-speed geodesic.
SpherePoint witness_curve(double theta, const Vec& y, double t);

struct Crossing {
  double t = 0.0;
  double v = 0.0;
  std::string reason;
};

struct GeodesicWitness {
  double theta = 0.0;
  Vec y;
  std::vector<double> t;
  std::vector<double> values;  // F along the curve; NaN where not evaluable
  std::vector<Crossing> crossings;
  std::size_t argmax = 0;
  double t_max = 0.0;
  double grid_second_derivative = 0.0;     // discrete second difference at the grid argmax
  double refined_second_derivative = 0.0;  // central difference at the parabolic refinement
  double max_closure_error = 0.0;          // | |gamma| - 1 | and |gamma(2 pi) - gamma(0)|

  bool evaluable() const { return crossings.empty(); }
  nlohmann::json summary() const;
};

/// Samples F along the witness curve and never throws for evaluation failures.
GeodesicWitness trace_witness(const ScalarField& F, double theta, const Vec& y, std::size_t samples = 4096,
                              double h = 1e-3);

/// As trace_witness, but raises DomainError naming the first crossing.
GeodesicWitness witness_no_convexity(const ScalarField& F, double theta, const Vec& y, std::size_t samples = 4096,
                                     double h = 1e-3);

struct LevelSetReport {
  double phi0 = 0.0;
  double t0 = 0.0;
  double plane_level = 0.0;  // f(t0) - t0 + 1
  Vec normal;                // y(t0)
  bool level_in_range = false;
  std::size_t plane_points = 0;
  double max_psi_residual = 0.0;  // |psi - t0| at sampled plane points
  std::size_t solved_points = 0;
  double max_plane_residual = 0.0;  // |<x, y(t0)> - level| at root-solved points
  bool pass = false;

  nlohmann::json summary() const;
};

LevelSetReport level_set_shape(const ConvexFamily& family, double phi0, double t0, int n = 3,
                               std::size_t points = 200, std::uint64_t seed = 3);

}  // namespace sphconv
