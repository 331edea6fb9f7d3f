#pragma once

#include <memory>
#include <vector>

namespace sphconv {

/// Smooth monotone profile f on [0, inf) with
///   f = 0 on [0, 1 - 3c/2],   f(t) = t - 1 + c on [1 - c/2, inf),   0 <= f' <= 1,
/// assembled from the exponential bump h(t) = exp(-1/(t(1-t))):
///   h1(t) = int_0^t h / int_0^1 h,   h2(s) = h1(s/c)^beta,   f(t) = int_0^{t-1+3c/2} h2,
/// with beta chosen so that int_0^c h2 = c/2.
///
/// h1 and f are tabulated at panel nodes (8-point Gauss-Legendre per
/// panel) and evaluated by quintic Hermite interpolation from the exact
/// first and second derivatives, so f is C^2 to rounding.
class BumpProfile {
 public:
  /// c in (0, 1/3]. Throws DomainError otherwise, ConvergenceError if the
  /// beta bisection does not converge in 200 steps.
  static BumpProfile build(double c, int panels = 4096);

  double c() const { return c_; }
  double beta() const { return beta_; }
  int panels() const { return panels_; }

  /// End of the flat regime, 1 - 3c/2.
  double flat_end() const { return 1.0 - 1.5 * c_; }
  /// Start of the linear regime, 1 - c/2.
  double linear_start() const { return 1.0 - 0.5 * c_; }

  static double kernel(double t);
  double h1(double t) const;
  double h2(double s) const;
  /// int_0^c h2 from the quadrature table.
  double h2_integral() const { return tables_->f.back(); }

  double f(double t) const;
  double f_prime(double t) const;
  double f_second(double t) const;

  /// Smallest t >= 0 with f(t) >= y.
  double inverse_lower(double y) const;
  /// Largest t >= 0 with f(t) <= y (y >= 0).
  double inverse_upper(double y) const;

  /// c * int_0^1 h1(s)^beta ds, the quantity the beta bisection drives to c/2.
  double h2_mass(double beta) const;

 private:
  BumpProfile() = default;

  double h1_prime(double t) const;
  double h1_second(double t) const;
  double h2_prime(double s) const;
  double fs(double s) const;  // int_0^s h2 for s in [0, c]

  double c_ = 0.0;
  double beta_ = 1.0;
  int panels_ = 0;
  double kernel_mass_ = 0.0;
  struct Tables {
    std::vector<double> h1;   // h1 at k / panels
    std::vector<double> f;    // int_0^{c k / panels} h2
    std::vector<double> h2;   // h2 and h2' at the same nodes
    std::vector<double> h2p;
  };
  // Immutable after build; shared so copies of the profile are cheap.
  std::shared_ptr<Tables> tables_;
};

}  // namespace sphconv
