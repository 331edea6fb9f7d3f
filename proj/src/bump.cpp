#include "sphconv/bump.hpp"

#include "sphconv/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sphconv {

namespace {

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <typename Fn>
double gauss_legendre(Fn&& fn, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) sum += kGlWeights[i] * fn(mid + half * kGlNodes[i]);
  return half * sum;
}

// Quintic Hermite interpolation on one panel of width w at local tau in [0, 1].
double quintic(double tau, double w, double p0, double d0, double s0, double p1, double d1, double s1) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  const double t4 = t3 * tau;
  const double t5 = t4 * tau;
  const double H0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
  const double H1 = tau - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
  const double H2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double H3 = 0.5 * t3 - t4 + 0.5 * t5;
  const double H4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
  const double H5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
  return H0 * p0 + H1 * w * d0 + H2 * w * w * s0 + H3 * w * w * s1 + H4 * w * d1 + H5 * p1;
}

double kernel_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double q = t * (1.0 - t);
  return BumpProfile::kernel(t) * (1.0 - 2.0 * t) / (q * q);
}

}  // namespace

double BumpProfile::kernel(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (t * (1.0 - t)));
}

double BumpProfile::h1_prime(double t) const { return kernel(t) / kernel_mass_; }

double BumpProfile::h1_second(double t) const { return kernel_prime(t) / kernel_mass_; }

double BumpProfile::h1(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double x = t * panels_;
  const int k = std::min(static_cast<int>(x), panels_ - 1);
  const double w = 1.0 / panels_;
  const double a = static_cast<double>(k) * w;
  const double b = static_cast<double>(k + 1) * w;
  return quintic(x - k, w, tables_->h1[k], h1_prime(a), h1_second(a), tables_->h1[k + 1], h1_prime(b),
                 h1_second(b));
}

double BumpProfile::h2(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= c_) return 1.0;
  return std::pow(h1(s / c_), beta_);
}

double BumpProfile::h2_prime(double s) const {
  if (s <= 0.0 || s >= c_) return 0.0;
  const double base = h1(s / c_);
  if (base <= 0.0) return 0.0;
  return beta_ * std::pow(base, beta_ - 1.0) * h1_prime(s / c_) / c_;
}

double BumpProfile::fs(double s) const {
  if (s <= 0.0) return 0.0;
  const double w = c_ / panels_;
  const double x = s / w;
  const int k = std::min(static_cast<int>(x), panels_ - 1);
  return quintic(x - k, w, tables_->f[k], tables_->h2[k], tables_->h2p[k], tables_->f[k + 1], tables_->h2[k + 1],
                 tables_->h2p[k + 1]);
}

double BumpProfile::f(double t) const {
  const double s = t - flat_end();
  if (s <= 0.0) return 0.0;
  if (s >= c_) return h2_integral() + (s - c_);
  return fs(s);
}

double BumpProfile::f_prime(double t) const { return h2(t - flat_end()); }

double BumpProfile::f_second(double t) const { return h2_prime(t - flat_end()); }

double BumpProfile::h2_mass(double beta) const {
  double sum = 0.0;
  const double w = 1.0 / panels_;
  for (int k = 0; k < panels_; ++k) {
    sum += gauss_legendre([&](double s) { return std::pow(h1(s), beta); }, k * w, (k + 1) * w);
  }
  return c_ * sum;
}

BumpProfile BumpProfile::build(double c, int panels) {
  if (!(c > 0.0 && c <= 1.0 / 3.0)) throw DomainError("bump profile needs c in (0, 1/3]");
  if (panels < 16) throw DomainError("bump profile needs at least 16 panels");
  BumpProfile b;
  b.tables_ = std::make_shared<Tables>();
  b.c_ = c;
  b.panels_ = panels;

  const double w = 1.0 / panels;
  std::vector<double> cumulative(static_cast<std::size_t>(panels) + 1, 0.0);
  for (int k = 0; k < panels; ++k) {
    cumulative[k + 1] = cumulative[k] + gauss_legendre(kernel, k * w, (k + 1) * w);
  }
  b.kernel_mass_ = cumulative.back();
  b.tables_->h1.resize(cumulative.size());
  for (std::size_t k = 0; k < cumulative.size(); ++k) b.tables_->h1[k] = cumulative[k] / b.kernel_mass_;
  b.tables_->h1.back() = 1.0;

  // beta -> c int_0^1 h1^beta is strictly decreasing from c to 0; bisect in log(beta).
  const double target = 0.5 * c;
  double lo = std::log(1e-6);
  double hi = std::log(1e6);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mass = b.h2_mass(std::exp(mid));
    if (std::abs(mass - target) <= 1e-14 || hi - lo < 1e-15) {
      lo = hi = mid;
      converged = true;
      break;
    }
    if (mass > target) lo = mid;
    else hi = mid;
  }
  if (!converged) throw ConvergenceError("beta bisection did not converge");
  b.beta_ = std::exp(lo);

  const double ws = c / panels;
  b.tables_->h2.resize(static_cast<std::size_t>(panels) + 1);
  b.tables_->h2p.resize(static_cast<std::size_t>(panels) + 1);
  for (int k = 0; k <= panels; ++k) {
    const double s = (k == panels) ? c : k * ws;
    b.tables_->h2[k] = b.h2(s);
    b.tables_->h2p[k] = b.h2_prime(s);
  }
  b.tables_->f.assign(static_cast<std::size_t>(panels) + 1, 0.0);
  for (int k = 0; k < panels; ++k) {
    b.tables_->f[k + 1] =
        b.tables_->f[k] + gauss_legendre([&](double s) { return b.h2(s); }, k * ws, (k + 1) * ws);
  }
  return b;
}

double BumpProfile::inverse_lower(double y) const {
  if (y <= 0.0) return 0.0;
  const double mass = h2_integral();
  if (y >= mass) return linear_start() + (y - mass);
  double lo = 0.0;
  double hi = c_;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (fs(mid) >= y) hi = mid;
    else lo = mid;
  }
  return flat_end() + hi;
}

double BumpProfile::inverse_upper(double y) const {
  if (y < 0.0) throw DomainError("inverse_upper: f takes no negative values");
  if (y == 0.0) return flat_end();
  const double mass = h2_integral();
  if (y >= mass) return linear_start() + (y - mass);
  double lo = 0.0;
  double hi = c_;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (fs(mid) <= y) lo = mid;
    else hi = mid;
  }
  return flat_end() + lo;
}

}  // namespace sphconv
