#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sss/types.hpp"

namespace sss {

/// Standard normal CDF. Absolute error well below 1e-12 for |z| <= 8.
template <typename Scalar>
Scalar normal_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

/// Standard normal density.
template <typename Scalar>
Scalar normal_pdf(Scalar z) {
  const Scalar inv_sqrt_2pi =
      Scalar(1) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  return inv_sqrt_2pi * std::exp(-z * z / Scalar(2));
}

/// Inverse standard normal CDF: rational initial estimate polished by two
/// Newton steps on normal_cdf, accurate to better than 1e-10 on (0, 1).
template <typename Scalar>
Scalar normal_cdf_inv(Scalar p) {
  if (!(p > Scalar(0)) || !(p < Scalar(1)))
    throw InputError("normal quantile requires a probability in (0, 1)");

  // Acklam's rational approximation (relative error ~1.15e-9).
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
  const double pd = static_cast<double>(p);
  const double p_low = 0.02425;
  double x;
  if (pd < p_low) {
    const double q = std::sqrt(-2.0 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (pd > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = pd - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  auto z = static_cast<Scalar>(x);
  for (int iter = 0; iter < 2; ++iter) {
    const Scalar err = normal_cdf(z) - p;
    const Scalar dens = normal_pdf(z);
    if (dens <= Scalar(0)) break;
    z -= err / dens;
  }
  return z;
}

/// Gumbel norming constants for the maximum of n standard normals:
/// a_n = sqrt(2 ln n), b_n = a_n - (ln ln n + ln 4*pi) / (2 a_n).
template <typename Scalar>
struct NormingConstants {
  Scalar a = Scalar(0);
  Scalar b = Scalar(0);
};

template <typename Scalar = double>
NormingConstants<Scalar> norming_constants(std::uint64_t n) {
  if (n < 3) throw InputError("norming constants require n >= 3");
  const Scalar ln_n = std::log(static_cast<Scalar>(n));
  const Scalar a = std::sqrt(Scalar(2) * ln_n);
  const Scalar b =
      a - (std::log(ln_n) + std::log(Scalar(4) * std::numbers::pi_v<Scalar>)) /
              (Scalar(2) * a);
  return {a, b};
}

/// u_n(x) = x / a_n + b_n.
template <typename Scalar>
Scalar norming_threshold(Scalar x, std::uint64_t n) {
  const auto nc = norming_constants<Scalar>(n);
  return x / nc.a + nc.b;
}

/// Extremal-constant upper bound for the slope statistic field: 2 Phi(C) - 1,
/// with C = sqrt(ln g) / h.
template <typename Scalar>
Scalar theta_bound_slope(Scalar c_scale) {
  if (!(c_scale > Scalar(0)))
    throw InputError("scale constant C must be positive");
  return Scalar(2) * normal_cdf(c_scale) - Scalar(1);
}

/// Extremal-constant upper bound for the curvature statistic field:
/// 2 Phi(sqrt(6) C / 2) - 1.
template <typename Scalar>
Scalar theta_bound_curvature(Scalar c_scale) {
  if (!(c_scale > Scalar(0)))
    throw InputError("scale constant C must be positive");
  const Scalar arg = std::sqrt(Scalar(6)) * c_scale / Scalar(2);
  return Scalar(2) * normal_cdf(arg) - Scalar(1);
}

template <typename Scalar>
Scalar theta_bound(DerivOrder order, Scalar c_scale) {
  return order == DerivOrder::slope ? theta_bound_slope(c_scale)
                                    : theta_bound_curvature(c_scale);
}

template <typename Scalar>
struct CriticalValue {
  Scalar x = Scalar(0);  // Gumbel quantile
  Scalar u = Scalar(0);  // resolved critical value u_{g^2}(x)
};

/// Solves 2N exp(-theta e^{-x}) - (2N - 1) = 1 - alpha for x and maps it to
/// u = x / a_{g^2} + b_{g^2}. A pixel-direction pair is significant when
/// |T| >= u; the two-sided budget is the 2N factor. With `one_sided` the
/// budget 2N is replaced by N and only the upper tail is tested.
template <typename Scalar>
CriticalValue<Scalar> critical_value(Scalar alpha, int n_directions, Index g,
                                     Scalar theta, bool one_sided = false) {
  if (!(alpha > Scalar(0)) || !(alpha < Scalar(1)))
    throw InputError("alpha must lie in (0, 1)");
  if (n_directions < 1) throw InputError("need at least one direction");
  if (!(theta > Scalar(0)) || !(theta <= Scalar(1)))
    throw InputError("theta must lie in (0, 1]");
  if (g < 3) throw InputError("interior side length g must be >= 3");

  const Scalar budget =
      alpha / (Scalar(n_directions) * (one_sided ? Scalar(1) : Scalar(2)));
  // exp(-theta e^{-x}) = 1 - budget  =>  x = -ln(-ln(1 - budget) / theta)
  const Scalar x = -std::log(-std::log1p(-budget) / theta);
  const auto n = static_cast<std::uint64_t>(g) * static_cast<std::uint64_t>(g);
  return {x, norming_threshold(x, n)};
}

/// Fully resolved threshold for one (order, bandwidth, interior) combination.
template <typename Scalar>
struct ThresholdSpec {
  Scalar alpha = Scalar(0.05);
  int n_directions = 1;
  DerivOrder order = DerivOrder::slope;
  Index g = 0;       // effective interior side length
  Scalar h = 0;      // bandwidth, pixels
  Scalar c_scale = 0;      // C = sqrt(ln g) / h
  Scalar theta_bound = 0;  // operational upper bound for the extremal constant
  Scalar x_quantile = 0;
  Scalar u_crit = 0;
  bool one_sided = false;
};

template <typename Scalar>
ThresholdSpec<Scalar> make_threshold(Scalar alpha, int n_directions, Index g,
                                     Scalar h, DerivOrder order,
                                     bool one_sided = false) {
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  if (g < 3) throw InputError("interior side length g must be >= 3");
  ThresholdSpec<Scalar> spec;
  spec.alpha = alpha;
  spec.n_directions = n_directions;
  spec.order = order;
  spec.g = g;
  spec.h = h;
  spec.c_scale = std::sqrt(std::log(static_cast<Scalar>(g))) / h;
  spec.theta_bound = theta_bound(order, spec.c_scale);
  spec.one_sided = one_sided;
  const auto cv = critical_value(alpha, n_directions, g, spec.theta_bound, one_sided);
  spec.x_quantile = cv.x;
  spec.u_crit = cv.u;
  return spec;
}

}  // namespace sss
