#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sss/grid.hpp"
#include "sss/types.hpp"

namespace sss {

inline constexpr double kDefaultSupportFactor = 4.0;

/// Spherically symmetric Gaussian kernel with standard deviation h pixels:
/// K_h(dx, dy) = exp(-(dx^2 + dy^2) / (2 h^2)) / (2 pi h^2).
template <typename Scalar>
Scalar kernel_weight(Scalar dx, Scalar dy, Scalar h) {
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  const Scalar h2 = h * h;
  return std::exp(-(dx * dx + dy * dy) / (Scalar(2) * h2)) /
         (Scalar(2) * std::numbers::pi_v<Scalar> * h2);
}

/// Truncation radius ceil(support_factor * h). Gaussian mass beyond the
/// default 4h is below 1e-4 per tail in each axis.
template <typename Scalar>
Index kernel_radius(Scalar h, Scalar support_factor = Scalar(kDefaultSupportFactor)) {
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  if (!(support_factor >= Scalar(1)))
    throw InputError("support factor must be >= 1");
  return static_cast<Index>(std::ceil(support_factor * h));
}

/// Directional first-derivative weight: (u dx + v dy) K_h(dx, dy).
template <typename Scalar>
Scalar slope_weight(Scalar dx, Scalar dy, Scalar u, Scalar v, Scalar h) {
  require_unit_direction(Direction<Scalar>{u, v});
  return (u * dx + v * dy) * kernel_weight(dx, dy, h);
}

/// Directional second-derivative weight: ((u dx + v dy)^2 - h^2) K_h(dx, dy).
template <typename Scalar>
Scalar curvature_weight(Scalar dx, Scalar dy, Scalar u, Scalar v, Scalar h) {
  require_unit_direction(Direction<Scalar>{u, v});
  const Scalar proj = u * dx + v * dy;
  return (proj * proj - h * h) * kernel_weight(dx, dy, h);
}

/// Kernel values tabulated over the truncated square support
/// [-radius, radius]^2; table(radius + dx, radius + dy) = K_h(dx, dy).
template <typename Scalar>
struct KernelWeights {
  Scalar h = Scalar(1);
  Index radius = 0;
  Matrix<Scalar> table;

  static KernelWeights make(Scalar h, Index radius) {
    if (radius < 1) throw InputError("kernel radius must be >= 1");
    KernelWeights kw;
    kw.h = h;
    kw.radius = radius;
    kw.table.resize(2 * radius + 1, 2 * radius + 1);
    for (Index dy = -radius; dy <= radius; ++dy)
      for (Index dx = -radius; dx <= radius; ++dx)
        kw.table(radius + dx, radius + dy) =
            kernel_weight(Scalar(dx), Scalar(dy), h);
    return kw;
  }

  Scalar at(Index dx, Index dy) const {
    return table(radius + dx, radius + dy);
  }
};

namespace detail {

template <typename Scalar>
Scalar ipow(Scalar t, int m) {
  Scalar r = Scalar(1);
  for (int i = 0; i < m; ++i) r *= t;
  return r;
}

/// 1-D Gaussian factor of the separable kernel, standard deviation h.
template <typename Scalar>
Scalar gauss1(Scalar t, Scalar h) {
  return std::exp(-t * t / (Scalar(2) * h * h)) /
         std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * h * h);
}

/// Taps t^m gauss1(t) over t in [-radius, radius].
template <typename Scalar>
Vector<Scalar> axis_moment_taps(Scalar h, Index radius, int m) {
  Vector<Scalar> taps(2 * radius + 1);
  for (Index t = -radius; t <= radius; ++t)
    taps(t + radius) = ipow(Scalar(t), m) * gauss1(Scalar(t), h);
  return taps;
}

/// out(i, j) = sum_t taps(t + R) src(i, col0 + j + t), zero outside src.
template <typename Scalar>
Matrix<Scalar> correlate_cols(const Matrix<Scalar>& src,
                              const Vector<Scalar>& taps, Index col0,
                              Index ncols) {
  const Index radius = (taps.size() - 1) / 2;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(src.rows(), ncols);
  for (Index j = 0; j < ncols; ++j) {
    const Index lo = std::max<Index>(-radius, -(col0 + j));
    const Index hi = std::min<Index>(radius, src.cols() - 1 - (col0 + j));
    for (Index t = lo; t <= hi; ++t)
      out.col(j) += taps(t + radius) * src.col(col0 + j + t);
  }
  return out;
}

/// out(i, j) = sum_t taps(t + R) src(row0 + i + t, j), zero outside src.
template <typename Scalar>
Matrix<Scalar> correlate_rows(const Matrix<Scalar>& src,
                              const Vector<Scalar>& taps, Index row0,
                              Index nrows) {
  const Index radius = (taps.size() - 1) / 2;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(nrows, src.cols());
  for (Index t = -radius; t <= radius; ++t) {
    // valid output rows i: 0 <= row0 + i + t < src.rows()
    const Index i_begin = std::max<Index>(Index(0), -row0 - t);
    const Index i_end = std::min<Index>(nrows, src.rows() - row0 - t);
    if (i_begin >= i_end) continue;
    const Index len = i_end - i_begin;
    out.middleRows(i_begin, len) +=
        taps(t + radius) * src.middleRows(row0 + i_begin + t, len);
  }
  return out;
}

/// Clipped power sums of squared axis taps: for each of `count` positions
/// starting at `begin` on an axis of length `extent`, the sum of
/// t^m gauss1(t)^2 over the in-image tap range.
template <typename Scalar>
Vector<Scalar> axis_square_sums(Scalar h, Index radius, int m, Index extent,
                                Index begin, Index count) {
  Vector<Scalar> prefix(2 * radius + 2);
  prefix(0) = Scalar(0);
  for (Index t = -radius; t <= radius; ++t) {
    const Scalar g = gauss1(Scalar(t), h);
    prefix(t + radius + 1) = prefix(t + radius) + ipow(Scalar(t), m) * g * g;
  }
  Vector<Scalar> sums(count);
  for (Index p = 0; p < count; ++p) {
    const Index a = begin + p;
    const Index lo = std::max<Index>(-radius, -a);
    const Index hi = std::min<Index>(radius, extent - 1 - a);
    sums(p) = prefix(hi + radius + 1) - prefix(lo + radius);
  }
  return sums;
}

/// Per-pixel sum of squared directional weights over the clipped truncated
/// support; constant over the region whenever margin >= radius.
template <typename Scalar>
Matrix<Scalar> weight_square_field(Index rows, Index cols,
                                   const InteriorRegion& region, Scalar h,
                                   Index radius, Direction<Scalar> dir,
                                   DerivOrder order) {
  const Scalar u = dir.u;
  const Scalar v = dir.v;
  auto row_sums = [&](int m) {
    return axis_square_sums(h, radius, m, rows, region.row_begin(),
                            region.g_rows);
  };
  auto col_sums = [&](int m) {
    return axis_square_sums(h, radius, m, cols, region.col_begin(),
                            region.g_cols);
  };
  const Vector<Scalar> s0r = row_sums(0), s1r = row_sums(1), s2r = row_sums(2);
  const Vector<Scalar> s0c = col_sums(0), s1c = col_sums(1), s2c = col_sums(2);

  if (order == DerivOrder::slope) {
    return u * u * (s2r * s0c.transpose()) +
           Scalar(2) * u * v * (s1r * s1c.transpose()) +
           v * v * (s0r * s2c.transpose());
  }
  const Vector<Scalar> s3r = row_sums(3), s4r = row_sums(4);
  const Vector<Scalar> s3c = col_sums(3), s4c = col_sums(4);
  const Scalar h2 = h * h;
  Matrix<Scalar> quartic = ipow(u, 4) * (s4r * s0c.transpose()) +
                           Scalar(4) * ipow(u, 3) * v * (s3r * s1c.transpose()) +
                           Scalar(6) * u * u * v * v * (s2r * s2c.transpose()) +
                           Scalar(4) * u * ipow(v, 3) * (s1r * s3c.transpose()) +
                           ipow(v, 4) * (s0r * s4c.transpose());
  Matrix<Scalar> quadratic = u * u * (s2r * s0c.transpose()) +
                             Scalar(2) * u * v * (s1r * s1c.transpose()) +
                             v * v * (s0r * s2c.transpose());
  return quartic - Scalar(2) * h2 * quadratic +
         h2 * h2 * (s0r * s0c.transpose());
}

}  // namespace detail

/// Lattice moment of the truncated kernel:
/// G_mk = sum over [-radius, radius]^2 of dx^m dy^k K_h(dx, dy).
/// Mirrored lattice points are paired so odd moments cancel exactly.
template <typename Scalar>
Scalar moment_sum(int m, int k, Scalar h, Index radius) {
  if (m < 0 || m > 4 || k < 0 || k > 4)
    throw InputError("moment orders must lie in 0..4");
  if (radius < 1) throw InputError("radius must be >= 1");
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  using detail::ipow;
  Scalar total = Scalar(0);
  for (Index dx = 0; dx <= radius; ++dx) {
    for (Index dy = 0; dy <= radius; ++dy) {
      const Scalar w = kernel_weight(Scalar(dx), Scalar(dy), h);
      const Scalar pxp = ipow(Scalar(dx), m), pxn = ipow(Scalar(-dx), m);
      const Scalar pyp = ipow(Scalar(dy), k), pyn = ipow(Scalar(-dy), k);
      Scalar group;
      if (dx == 0 && dy == 0) {
        group = pxp * pyp * w;
      } else if (dx == 0) {
        group = pxp * pyp * w + pxp * pyn * w;
      } else if (dy == 0) {
        group = pxp * pyp * w + pxn * pyp * w;
      } else {
        group = (pxp * pyp * w + pxn * pyp * w) +
                (pxp * pyn * w + pxn * pyn * w);
      }
      total += group;
    }
  }
  return total;
}

/// H_mk selection for moment_images.
enum class MomentSet { first, second, both };

/// How kernel-weighted sums are evaluated. `direct` is the reference double
/// sum; `separable` is the fast 1-D pass equivalent, unit-checked against it.
enum class SumMethod { direct, separable };

/// Kernel-weighted data sums H_mk centred at every interior pixel. Sums clip
/// at the image boundary; with margin >= radius no clipping occurs.
template <typename Scalar>
struct MomentImages {
  InteriorRegion region;
  Scalar h = Scalar(0);
  Index radius = 0;
  bool has_first = false;
  bool has_second = false;
  Matrix<Scalar> h10, h01;             // first-order moments
  Matrix<Scalar> h00, h20, h11, h02;   // second-order moments
};

template <typename Scalar>
MomentImages<Scalar> moment_images(const ImageGrid<Scalar>& grid, Scalar h,
                                   const InteriorRegion& region, MomentSet set,
                                   SumMethod method = SumMethod::direct,
                                   Index radius = -1) {
  if (radius < 0) radius = kernel_radius(h);
  if (radius < 1) throw InputError("kernel radius must be >= 1");
  const bool first = set != MomentSet::second;
  const bool second = set != MomentSet::first;

  MomentImages<Scalar> mi;
  mi.region = region;
  mi.h = h;
  mi.radius = radius;
  mi.has_first = first;
  mi.has_second = second;

  const auto& y = grid.values();
  const Index rows = grid.rows(), cols = grid.cols();
  const Index r0 = region.row_begin(), c0 = region.col_begin();

  if (method == SumMethod::separable) {
    using detail::axis_moment_taps;
    using detail::correlate_cols;
    using detail::correlate_rows;
    const Vector<Scalar> t0 = axis_moment_taps(h, radius, 0);
    const Vector<Scalar> t1 = axis_moment_taps(h, radius, 1);
    const Matrix<Scalar> c0pass = correlate_cols(y, t0, c0, region.g_cols);
    const Matrix<Scalar> c1pass = correlate_cols(y, t1, c0, region.g_cols);
    if (first) {
      mi.h10 = correlate_rows(c0pass, t1, r0, region.g_rows);
      mi.h01 = correlate_rows(c1pass, t0, r0, region.g_rows);
    }
    if (second) {
      const Vector<Scalar> t2 = axis_moment_taps(h, radius, 2);
      const Matrix<Scalar> c2pass = correlate_cols(y, t2, c0, region.g_cols);
      mi.h00 = correlate_rows(c0pass, t0, r0, region.g_rows);
      mi.h20 = correlate_rows(c0pass, t2, r0, region.g_rows);
      mi.h11 = correlate_rows(c1pass, t1, r0, region.g_rows);
      mi.h02 = correlate_rows(c2pass, t0, r0, region.g_rows);
    }
    return mi;
  }

  const auto kw = KernelWeights<Scalar>::make(h, radius);
  auto zero = [&] { return Matrix<Scalar>::Zero(region.g_rows, region.g_cols); };
  if (first) {
    mi.h10 = zero();
    mi.h01 = zero();
  }
  if (second) {
    mi.h00 = zero();
    mi.h20 = zero();
    mi.h11 = zero();
    mi.h02 = zero();
  }
  for (Index jl = 0; jl < region.g_cols; ++jl) {
    const Index c = c0 + jl;
    const Index dy_lo = std::max<Index>(-radius, -c);
    const Index dy_hi = std::min<Index>(radius, cols - 1 - c);
    for (Index il = 0; il < region.g_rows; ++il) {
      const Index r = r0 + il;
      const Index dx_lo = std::max<Index>(-radius, -r);
      const Index dx_hi = std::min<Index>(radius, rows - 1 - r);
      Scalar s10 = 0, s01 = 0, s00 = 0, s20 = 0, s11 = 0, s02 = 0;
      for (Index dy = dy_lo; dy <= dy_hi; ++dy) {
        for (Index dx = dx_lo; dx <= dx_hi; ++dx) {
          const Scalar wy = kw.at(dx, dy) * y(r + dx, c + dy);
          const Scalar fx = Scalar(dx), fy = Scalar(dy);
          if (first) {
            s10 += fx * wy;
            s01 += fy * wy;
          }
          if (second) {
            s00 += wy;
            s20 += fx * fx * wy;
            s11 += fx * fy * wy;
            s02 += fy * fy * wy;
          }
        }
      }
      if (first) {
        mi.h10(il, jl) = s10;
        mi.h01(il, jl) = s01;
      }
      if (second) {
        mi.h00(il, jl) = s00;
        mi.h20(il, jl) = s20;
        mi.h11(il, jl) = s11;
        mi.h02(il, jl) = s02;
      }
    }
  }
  return mi;
}

/// Local-quadratic derivative estimates per interior pixel. First derivatives
/// are per pixel unit, second derivatives per pixel^2.
template <typename Scalar>
struct DerivativeEstimates {
  InteriorRegion region;
  Matrix<Scalar> a10, a01, a20, a11, a02;
};

template <typename Scalar>
DerivativeEstimates<Scalar> derivatives_from_moments(
    const MomentImages<Scalar>& mi) {
  if (!mi.has_first || !mi.has_second)
    throw NumericError("derivative estimates need both moment sets");
  const Scalar h2 = mi.h * mi.h;
  const Scalar h4 = h2 * h2;
  DerivativeEstimates<Scalar> d;
  d.region = mi.region;
  d.a10 = mi.h10 / h2;
  d.a01 = mi.h01 / h2;
  d.a11 = mi.h11 / (Scalar(2) * h4);
  d.a20 = (mi.h20 - h2 * mi.h00) / (Scalar(2) * h4);
  d.a02 = (mi.h02 - h2 * mi.h00) / (Scalar(2) * h4);
  return d;
}

template <typename Scalar>
DerivativeEstimates<Scalar> estimate_derivatives(
    const ImageGrid<Scalar>& grid, Scalar h, const InteriorRegion& region,
    SumMethod method = SumMethod::direct, Index radius = -1) {
  return derivatives_from_moments(
      moment_images(grid, h, region, MomentSet::both, method, radius));
}

/// One directional statistic field assembled from precomputed moment images.
/// rows/cols are the full-image dimensions, needed for boundary clipping of
/// the denominator.
template <typename Scalar>
StatField<Scalar> stat_field_from_moments(const MomentImages<Scalar>& mi,
                                          Index rows, Index cols,
                                          Direction<Scalar> dir,
                                          DerivOrder order, Scalar sigma) {
  require_unit_direction(dir);
  if (!(sigma > Scalar(0)))
    throw InputError(
        "sigma must be positive; supply a known noise scale when it cannot "
        "be estimated from the data");
  Matrix<Scalar> num;
  if (order == DerivOrder::slope) {
    if (!mi.has_first) throw NumericError("slope field needs first moments");
    num = dir.u * mi.h10 + dir.v * mi.h01;
  } else {
    if (!mi.has_second)
      throw NumericError("curvature field needs second moments");
    const Scalar h2 = mi.h * mi.h;
    num = dir.u * dir.u * mi.h20 + Scalar(2) * dir.u * dir.v * mi.h11 +
          dir.v * dir.v * mi.h02 - h2 * mi.h00;
  }
  const Matrix<Scalar> den2 = detail::weight_square_field(
      rows, cols, mi.region, mi.h, mi.radius, dir, order);
  if (!(den2.minCoeff() > Scalar(0)))
    throw NumericError("zero weight norm in statistic denominator");
  StatField<Scalar> field;
  field.region = mi.region;
  field.direction = dir;
  field.order = order;
  field.sigma_used = sigma;
  field.stats = (num.array() / (sigma * den2.array().sqrt())).matrix();
  return field;
}

/// Standardized directional statistic field T = sum(W Y) / (sigma sqrt(sum W^2))
/// with W the slope or curvature weights; both sums run over the truncated
/// support clipped at the image boundary, so the field has unit variance under
/// i.i.d. noise regardless of clipping.
template <typename Scalar>
StatField<Scalar> standardized_stat_field(const ImageGrid<Scalar>& grid,
                                          Scalar h,
                                          const InteriorRegion& region,
                                          Direction<Scalar> dir,
                                          DerivOrder order, Scalar sigma,
                                          SumMethod method = SumMethod::direct,
                                          Index radius = -1) {
  require_unit_direction(dir);
  if (!(sigma > Scalar(0)))
    throw InputError(
        "sigma must be positive; supply a known noise scale when it cannot "
        "be estimated from the data");
  if (radius < 0) radius = kernel_radius(h);

  if (method == SumMethod::separable) {
    const auto set =
        order == DerivOrder::slope ? MomentSet::first : MomentSet::second;
    const auto mi =
        moment_images(grid, h, region, set, SumMethod::separable, radius);
    return stat_field_from_moments(mi, grid.rows(), grid.cols(), dir, order,
                                   sigma);
  }

  const auto& y = grid.values();
  const Index rows = grid.rows(), cols = grid.cols();
  const auto kw = KernelWeights<Scalar>::make(h, radius);
  const Scalar h2 = h * h;
  StatField<Scalar> field;
  field.region = region;
  field.direction = dir;
  field.order = order;
  field.sigma_used = sigma;
  field.stats.resize(region.g_rows, region.g_cols);
  for (Index jl = 0; jl < region.g_cols; ++jl) {
    const Index c = region.col_begin() + jl;
    const Index dy_lo = std::max<Index>(-radius, -c);
    const Index dy_hi = std::min<Index>(radius, cols - 1 - c);
    for (Index il = 0; il < region.g_rows; ++il) {
      const Index r = region.row_begin() + il;
      const Index dx_lo = std::max<Index>(-radius, -r);
      const Index dx_hi = std::min<Index>(radius, rows - 1 - r);
      Scalar num = 0, den2 = 0;
      for (Index dy = dy_lo; dy <= dy_hi; ++dy) {
        for (Index dx = dx_lo; dx <= dx_hi; ++dx) {
          const Scalar proj = dir.u * Scalar(dx) + dir.v * Scalar(dy);
          const Scalar w = (order == DerivOrder::slope)
                               ? proj * kw.at(dx, dy)
                               : (proj * proj - h2) * kw.at(dx, dy);
          num += w * y(r + dx, c + dy);
          den2 += w * w;
        }
      }
      if (!(den2 > Scalar(0)))
        throw NumericError("zero weight norm in statistic denominator");
      field.stats(il, jl) = num / (sigma * std::sqrt(den2));
    }
  }
  return field;
}

/// Robust noise-scale estimate: first-difference median absolute deviation,
/// sigma = median(|Y(i, j+1) - Y(i, j)|) / (sqrt(2) * 0.674489750196082).
/// Returns 0 for a constant image; downstream operations reject sigma <= 0.
template <typename Scalar>
Scalar estimate_sigma(const ImageGrid<Scalar>& grid) {
  if (grid.cols() < 2)
    throw InputError("sigma estimation needs at least two columns");
  const auto& y = grid.values();
  std::vector<Scalar> diffs;
  diffs.reserve(static_cast<std::size_t>(grid.rows()) *
                static_cast<std::size_t>(grid.cols() - 1));
  for (Index c = 0; c + 1 < grid.cols(); ++c)
    for (Index r = 0; r < grid.rows(); ++r)
      diffs.push_back(std::abs(y(r, c + 1) - y(r, c)));
  const auto mid = diffs.size() / 2;
  std::nth_element(diffs.begin(), diffs.begin() + mid, diffs.end());
  Scalar median = diffs[mid];
  if (diffs.size() % 2 == 0) {
    const auto lower = std::max_element(diffs.begin(), diffs.begin() + mid);
    median = (median + *lower) / Scalar(2);
  }
  const Scalar normal_quartile = Scalar(0.674489750196082L);
  return median / (std::numbers::sqrt2_v<Scalar> * normal_quartile);
}

}  // namespace sss
