#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tsdeconv/errors.hpp"

namespace tsdeconv {

/// Quantile function of the standard normal distribution.
///
/// Uses Acklam's rational approximation (relative error below 1.15e-9) and
/// polishes it with two Halley iterations against the erfc-based CDF, which
/// brings the result to full double precision (well inside 1e-8 everywhere).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0, 1)");
  }

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement against Phi(x) = erfc(-x / sqrt 2) / 2.
  for (int iter = 0; iter < 2; ++iter) {
    const double err = 0.5 * std::erfc(-x / 1.4142135623730950488) - p;
    const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
    if (pdf <= 0.0) break;
    const double u = err / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// Thresholds splitting the standard normal into `bins` equiprobable regions:
/// Phi^{-1}(k / bins) for k = 1 .. bins-1, in increasing order.
inline std::vector<double> gaussian_breakpoints(int bins) {
  if (bins < 2) throw std::invalid_argument("gaussian_breakpoints: need at least 2 bins");
  std::vector<double> cuts(static_cast<std::size_t>(bins - 1));
  for (int k = 1; k < bins; ++k) {
    cuts[static_cast<std::size_t>(k - 1)] =
        inverse_normal_cdf(static_cast<double>(k) / static_cast<double>(bins));
  }
  // The approximation is symmetric only up to rounding; enforce it exactly.
  for (int k = 1; k <= bins - k; ++k) {
    const double lo = cuts[static_cast<std::size_t>(k - 1)];
    const double hi = cuts[static_cast<std::size_t>(bins - k - 1)];
    const double mag = 0.5 * (std::fabs(lo) + std::fabs(hi));
    cuts[static_cast<std::size_t>(k - 1)] = -mag;
    cuts[static_cast<std::size_t>(bins - k - 1)] = mag;
  }
  if (bins % 2 == 0) cuts[static_cast<std::size_t>(bins / 2 - 1)] = 0.0;
  return cuts;
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cont_frac(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double betainc(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("betainc: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_cont_frac(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability of Student's t with `dof` degrees of freedom:
/// P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2).
inline double student_t_two_sided(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_sided: dof must be positive");
  if (!std::isfinite(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return betainc(0.5 * dof, 0.5, dof / (dof + t * t));
}

}  // namespace tsdeconv
