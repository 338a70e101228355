#pragma once

#include <cmath>
#include <numbers>

#include "sss/kernel.hpp"
#include "sss/types.hpp"

namespace sss {

/// Large-lattice limit of the lag-(i, j) autocorrelation of the slope
/// statistic field in direction (u, v):
/// (1 - (iu + jv)^2 / (2 h^2)) exp(-(i^2 + j^2) / (4 h^2)).
template <typename Scalar>
Scalar rho_slope(Scalar lag_i, Scalar lag_j, Scalar u, Scalar v, Scalar h) {
  require_unit_direction(Direction<Scalar>{u, v});
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  const Scalar proj = lag_i * u + lag_j * v;
  const Scalar h2 = h * h;
  return (Scalar(1) - proj * proj / (Scalar(2) * h2)) *
         std::exp(-(lag_i * lag_i + lag_j * lag_j) / (Scalar(4) * h2));
}

/// Same for the curvature statistic field:
/// (1 - (iu + jv)^2 / h^2 + (iu + jv)^4 / (12 h^4)) exp(-(i^2 + j^2) / (4 h^2)).
template <typename Scalar>
Scalar rho_curvature(Scalar lag_i, Scalar lag_j, Scalar u, Scalar v, Scalar h) {
  require_unit_direction(Direction<Scalar>{u, v});
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  const Scalar proj = lag_i * u + lag_j * v;
  const Scalar p2 = proj * proj;
  const Scalar h2 = h * h;
  return (Scalar(1) - p2 / h2 + p2 * p2 / (Scalar(12) * h2 * h2)) *
         std::exp(-(lag_i * lag_i + lag_j * lag_j) / (Scalar(4) * h2));
}

template <typename Scalar>
Scalar rho(DerivOrder order, Scalar lag_i, Scalar lag_j, Scalar u, Scalar v,
           Scalar h) {
  return order == DerivOrder::slope ? rho_slope(lag_i, lag_j, u, v, h)
                                    : rho_curvature(lag_i, lag_j, u, v, h);
}

/// Cross-moment F_i(k) = (1/(2 pi h^2)) * integral of
/// x^k exp(-((x - i)^2 + x^2) / (2 h^2)) dx, in closed form for k = 0..4.
template <typename Scalar>
Scalar f_moment(Scalar i, int k, Scalar h) {
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  const Scalar h2 = h * h;
  const Scalar f0 =
      std::exp(-i * i / (Scalar(4) * h2)) /
      (Scalar(2) * std::sqrt(std::numbers::pi_v<Scalar> * h2));
  switch (k) {
    case 0:
      return f0;
    case 1:
      return (i / Scalar(2)) * f0;
    case 2:
      return (h2 / Scalar(2) + i * i / Scalar(4)) * f0;
    case 3:
      return (Scalar(3) * i * h2 / Scalar(4) + i * i * i / Scalar(8)) * f0;
    case 4:
      return (Scalar(3) * h2 * h2 / Scalar(4) +
              Scalar(3) * i * i * h2 / Scalar(4) +
              detail::ipow(i, 4) / Scalar(16)) *
             f0;
    default:
      throw InputError("f_moment order k must lie in 0..4");
  }
}

/// Closed-form limit of the squared slope-weight sum: 1 / (8 pi). The finite
/// truncated sums used by the statistics approach this value; it serves as a
/// cross-check only.
template <typename Scalar>
Scalar slope_weight_sq_limit() {
  return Scalar(1) / (Scalar(8) * std::numbers::pi_v<Scalar>);
}

/// Closed-form limit of the squared curvature-weight sum: 3 h^2 / (16 pi).
template <typename Scalar>
Scalar curvature_weight_sq_limit(Scalar h) {
  return Scalar(3) * h * h / (Scalar(16) * std::numbers::pi_v<Scalar>);
}

/// Finite-sum correlation between the 0-degree and 90-degree slope weight
/// fields over the truncated lattice. Zero by odd-moment cancellation; the
/// computed value is returned so callers can observe the residual.
template <typename Scalar>
Scalar cross_direction_corr_zero(Scalar h = Scalar(4), Index radius = -1) {
  if (radius < 0) radius = kernel_radius(h);
  Scalar num = 0, den_row = 0, den_col = 0;
  for (Index dy = -radius; dy <= radius; ++dy) {
    for (Index dx = -radius; dx <= radius; ++dx) {
      const Scalar k = kernel_weight(Scalar(dx), Scalar(dy), h);
      const Scalar k2 = k * k;
      num += Scalar(dx) * Scalar(dy) * k2;
      den_row += Scalar(dx) * Scalar(dx) * k2;
      den_col += Scalar(dy) * Scalar(dy) * k2;
    }
  }
  return num / std::sqrt(den_row * den_col);
}

/// Plug-in (1/n normalized) empirical lag correlation of a field.
template <typename Scalar>
Scalar empirical_lag_correlation(const Matrix<Scalar>& field, Index lag_i,
                                 Index lag_j) {
  const Index rows = field.rows(), cols = field.cols();
  const Index ai = std::abs(lag_i), aj = std::abs(lag_j);
  if (ai >= rows || aj >= cols)
    throw InputError("lag exceeds field dimensions");
  const Scalar mean = field.mean();
  const Scalar var = (field.array() - mean).square().mean();
  if (!(var > Scalar(0))) throw NumericError("constant field has no correlation");

  // overlap of the field with itself shifted by (lag_i, lag_j)
  const Index r0 = std::max<Index>(Index(0), -lag_i);
  const Index c0 = std::max<Index>(Index(0), -lag_j);
  const Index nr = rows - ai;
  const Index nc = cols - aj;
  const auto a = field.block(r0, c0, nr, nc).array() - mean;
  const auto b = field.block(r0 + lag_i, c0 + lag_j, nr, nc).array() - mean;
  const Scalar cov = (a * b).mean();
  return cov / var;
}

}  // namespace sss
