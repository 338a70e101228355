#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sss/evt.hpp"
#include "sss/grid.hpp"
#include "sss/kernel.hpp"
#include "sss/types.hpp"

namespace sss {

/// Per-pixel curvature class from signed per-angle significance.
enum class CurvatureCategory : std::uint8_t {
  none = 0,
  peak,
  hole,
  saddle,
  ridge,
  valley
};

inline const char* to_string(CurvatureCategory cat) {
  switch (cat) {
    case CurvatureCategory::peak: return "peak";
    case CurvatureCategory::hole: return "hole";
    case CurvatureCategory::saddle: return "saddle";
    case CurvatureCategory::ridge: return "ridge";
    case CurvatureCategory::valley: return "valley";
    default: return "none";
  }
}

using CategoryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Maps per-angle significance signs (-1 significantly negative, 0
/// insignificant, +1 significantly positive) to a curvature class:
/// all -1 -> peak; all +1 -> hole; both signs -> saddle; some -1 and the
/// rest insignificant -> ridge; some +1 and the rest insignificant ->
/// valley; all 0 -> none.
inline CurvatureCategory classify_signs(const std::vector<int>& signs) {
  int pos = 0, neg = 0;
  for (int s : signs) {
    if (s > 0) ++pos;
    if (s < 0) ++neg;
  }
  const int n = static_cast<int>(signs.size());
  if (pos > 0 && neg > 0) return CurvatureCategory::saddle;
  if (neg == n && n > 0) return CurvatureCategory::peak;
  if (pos == n && n > 0) return CurvatureCategory::hole;
  if (neg > 0) return CurvatureCategory::ridge;
  if (pos > 0) return CurvatureCategory::valley;
  return CurvatureCategory::none;
}

template <typename Scalar>
struct AnalysisOptions {
  SumMethod method = SumMethod::direct;
  Index radius = -1;          // < 0: ceil(4h)
  bool compat_tau_2u2 = false;  // slope joint cutoff 2u^2 instead of u^2
  bool one_sided = false;
};

/// Joint slope significance over the axis directions (1,0) and (0,1).
template <typename Scalar>
struct SlopeResult {
  InteriorRegion region;
  Matrix<Scalar> r_stat;   // max of the two squared directional statistics
  BoolArray significant;   // r_stat >= tau
  Matrix<Scalar> grad_row; // a10 estimates, for streamline tracing
  Matrix<Scalar> grad_col; // a01 estimates
  ThresholdSpec<Scalar> threshold;
  Scalar tau = Scalar(0);  // applied cutoff on r_stat
  Scalar sigma_used = Scalar(0);
};

template <typename Scalar>
SlopeResult<Scalar> slope_analysis(const ImageGrid<Scalar>& grid, Scalar h,
                                   Scalar alpha, Scalar sigma,
                                   const InteriorRegion& region,
                                   const AnalysisOptions<Scalar>& opts = {}) {
  const Index radius = opts.radius < 0 ? kernel_radius(h) : opts.radius;
  const auto mi = moment_images(grid, h, region, MomentSet::first, opts.method,
                                radius);
  const auto t0 = stat_field_from_moments(mi, grid.rows(), grid.cols(),
                                          Direction<Scalar>{1, 0},
                                          DerivOrder::slope, sigma);
  const auto t90 = stat_field_from_moments(mi, grid.rows(), grid.cols(),
                                           Direction<Scalar>{0, 1},
                                           DerivOrder::slope, sigma);
  SlopeResult<Scalar> result;
  result.region = region;
  result.sigma_used = sigma;
  result.r_stat = t0.stats.array()
                      .square()
                      .max(t90.stats.array().square())
                      .matrix();
  result.threshold = make_threshold(alpha, 2, region.g_effective(), h,
                                    DerivOrder::slope, opts.one_sided);
  const Scalar u2 = result.threshold.u_crit * result.threshold.u_crit;
  result.tau = opts.compat_tau_2u2 ? Scalar(2) * u2 : u2;
  result.significant = result.r_stat.array() >= result.tau;
  const Scalar h2 = h * h;
  result.grad_row = mi.h10 / h2;
  result.grad_col = mi.h01 / h2;
  return result;
}

/// Per-angle curvature significance and per-pixel classification.
template <typename Scalar>
struct CurvatureResult {
  InteriorRegion region;
  std::vector<Scalar> angles;
  std::vector<Matrix<Scalar>> stats;  // standardized statistics per angle
  std::vector<SignMatrix> signs;      // one g_rows x g_cols matrix per angle
  CategoryMatrix category;            // CurvatureCategory codes
  ThresholdSpec<Scalar> threshold;
  Scalar sigma_used = Scalar(0);

  CurvatureCategory category_at(Index i, Index j) const {
    return static_cast<CurvatureCategory>(category(i, j));
  }

  long count(CurvatureCategory cat) const {
    return (category.array() == static_cast<std::uint8_t>(cat)).count();
  }
};

template <typename Scalar>
void require_distinct_mod_pi(const std::vector<Scalar>& angles) {
  if (angles.empty()) throw InputError("angle set must not be empty");
  for (std::size_t a = 0; a < angles.size(); ++a)
    for (std::size_t b = a + 1; b < angles.size(); ++b) {
      const Scalar rem =
          std::remainder(angles[a] - angles[b], std::numbers::pi_v<Scalar>);
      if (std::abs(rem) < Scalar(1e-9))
        throw InputError(
            "angles " + std::to_string(static_cast<double>(angles[a])) +
            " and " + std::to_string(static_cast<double>(angles[b])) +
            " coincide modulo pi and test the same curvature direction");
    }
}

template <typename Scalar>
CurvatureResult<Scalar> curvature_analysis(
    const ImageGrid<Scalar>& grid, Scalar h, Scalar alpha, Scalar sigma,
    const std::vector<Scalar>& angles, const InteriorRegion& region,
    const AnalysisOptions<Scalar>& opts = {}) {
  require_distinct_mod_pi(angles);
  const Index radius = opts.radius < 0 ? kernel_radius(h) : opts.radius;
  const auto mi = moment_images(grid, h, region, MomentSet::second,
                                opts.method, radius);

  CurvatureResult<Scalar> result;
  result.region = region;
  result.angles = angles;
  result.sigma_used = sigma;
  result.threshold =
      make_threshold(alpha, static_cast<int>(angles.size()),
                     region.g_effective(), h, DerivOrder::curvature,
                     opts.one_sided);
  const Scalar u = result.threshold.u_crit;

  result.signs.reserve(angles.size());
  result.stats.reserve(angles.size());
  for (const Scalar theta : angles) {
    const auto dir = Direction<Scalar>::from_angle(theta);
    auto field = stat_field_from_moments(
        mi, grid.rows(), grid.cols(), dir, DerivOrder::curvature, sigma);
    SignMatrix sign(region.g_rows, region.g_cols);
    for (Index j = 0; j < region.g_cols; ++j)
      for (Index i = 0; i < region.g_rows; ++i) {
        const Scalar t = field.stats(i, j);
        sign(i, j) = t >= u ? std::int8_t(1) : (t <= -u ? std::int8_t(-1) : std::int8_t(0));
      }
    result.signs.push_back(std::move(sign));
    result.stats.push_back(std::move(field.stats));
  }

  result.category.resize(region.g_rows, region.g_cols);
  const int n_angles = static_cast<int>(angles.size());
  for (Index j = 0; j < region.g_cols; ++j)
    for (Index i = 0; i < region.g_rows; ++i) {
      int pos = 0, neg = 0;
      for (int k = 0; k < n_angles; ++k) {
        const auto s = result.signs[static_cast<std::size_t>(k)](i, j);
        if (s > 0) ++pos;
        if (s < 0) ++neg;
      }
      CurvatureCategory cat;
      if (pos > 0 && neg > 0) cat = CurvatureCategory::saddle;
      else if (neg == n_angles) cat = CurvatureCategory::peak;
      else if (pos == n_angles) cat = CurvatureCategory::hole;
      else if (neg > 0) cat = CurvatureCategory::ridge;
      else if (pos > 0) cat = CurvatureCategory::valley;
      else cat = CurvatureCategory::none;
      result.category(i, j) = static_cast<std::uint8_t>(cat);
    }
  return result;
}

/// Gradient path restricted to the significant region, in absolute image
/// coordinates (row, col).
template <typename Scalar>
struct Streamline {
  enum class Termination { left_region, lost_significance, max_steps, stagnation };
  std::vector<std::array<Scalar, 2>> points;
  Termination terminated_by = Termination::max_steps;
};

namespace detail {

/// Bilinear interpolation of the two gradient components at a local
/// (row, col) position inside [0, g_rows-1] x [0, g_cols-1].
template <typename Scalar>
std::array<Scalar, 2> interpolate_gradient(const Matrix<Scalar>& grad_row,
                                           const Matrix<Scalar>& grad_col,
                                           Scalar x, Scalar y) {
  const Index max_i = grad_row.rows() - 1, max_j = grad_row.cols() - 1;
  Index i0 = std::min<Index>(static_cast<Index>(std::floor(x)), max_i - 1);
  Index j0 = std::min<Index>(static_cast<Index>(std::floor(y)), max_j - 1);
  i0 = std::max<Index>(i0, 0);
  j0 = std::max<Index>(j0, 0);
  const Scalar fx = x - Scalar(i0), fy = y - Scalar(j0);
  auto lerp2 = [&](const Matrix<Scalar>& m) {
    return (Scalar(1) - fx) * ((Scalar(1) - fy) * m(i0, j0) + fy * m(i0, j0 + 1)) +
           fx * ((Scalar(1) - fy) * m(i0 + 1, j0) + fy * m(i0 + 1, j0 + 1));
  };
  return {lerp2(grad_row), lerp2(grad_col)};
}

}  // namespace detail

/// Traces gradient streamlines seeded on a regular lattice of significant
/// pixels. Fixed-step fourth-order Runge-Kutta on the normalized gradient,
/// bilinearly interpolated; a line ends on leaving the interior, entering a
/// non-significant pixel, exceeding max_steps, or a sub-1e-6 step.
template <typename Scalar>
std::vector<Streamline<Scalar>> trace_streamlines(
    const SlopeResult<Scalar>& result, Index seed_stride = 4,
    Scalar step = Scalar(0.5), Index max_steps = 400) {
  if (!(step > Scalar(0))) throw InputError("step must be positive");
  if (seed_stride < 1) throw InputError("seed stride must be >= 1");
  using Line = Streamline<Scalar>;
  using Term = typename Line::Termination;

  const auto& region = result.region;
  const Scalar max_x = Scalar(region.g_rows - 1);
  const Scalar max_y = Scalar(region.g_cols - 1);
  const bool degenerate = region.g_rows < 2 || region.g_cols < 2;

  auto inside = [&](Scalar x, Scalar y) {
    return x >= Scalar(0) && x <= max_x && y >= Scalar(0) && y <= max_y;
  };
  auto unit_gradient = [&](Scalar x, Scalar y) -> std::array<Scalar, 2> {
    const auto g = detail::interpolate_gradient(result.grad_row,
                                                result.grad_col, x, y);
    const Scalar norm = std::hypot(g[0], g[1]);
    if (norm < Scalar(1e-30)) return {Scalar(0), Scalar(0)};
    return {g[0] / norm, g[1] / norm};
  };

  std::vector<Line> lines;
  for (Index i = 0; i < region.g_rows; i += seed_stride) {
    for (Index j = 0; j < region.g_cols; j += seed_stride) {
      if (!result.significant(i, j)) continue;
      Line line;
      Scalar x = Scalar(i), y = Scalar(j);
      line.points.push_back({x + Scalar(region.margin), y + Scalar(region.margin)});
      line.terminated_by = Term::max_steps;
      if (degenerate) {
        line.terminated_by = Term::stagnation;
        lines.push_back(std::move(line));
        continue;
      }
      for (Index s = 0; s < max_steps; ++s) {
        const auto k1 = unit_gradient(x, y);
        const Scalar x2 = x + step / 2 * k1[0], y2 = y + step / 2 * k1[1];
        if (!inside(x2, y2)) { line.terminated_by = Term::left_region; break; }
        const auto k2 = unit_gradient(x2, y2);
        const Scalar x3 = x + step / 2 * k2[0], y3 = y + step / 2 * k2[1];
        if (!inside(x3, y3)) { line.terminated_by = Term::left_region; break; }
        const auto k3 = unit_gradient(x3, y3);
        const Scalar x4 = x + step * k3[0], y4 = y + step * k3[1];
        if (!inside(x4, y4)) { line.terminated_by = Term::left_region; break; }
        const auto k4 = unit_gradient(x4, y4);
        const Scalar dx = step / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        const Scalar dy = step / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        if (std::hypot(dx, dy) < Scalar(1e-6)) {
          line.terminated_by = Term::stagnation;
          break;
        }
        const Scalar nx = x + dx, ny = y + dy;
        if (!inside(nx, ny)) { line.terminated_by = Term::left_region; break; }
        const Index pi = static_cast<Index>(std::lround(nx));
        const Index pj = static_cast<Index>(std::lround(ny));
        if (!result.significant(pi, pj)) {
          line.terminated_by = Term::lost_significance;
          break;
        }
        x = nx;
        y = ny;
        line.points.push_back({x + Scalar(region.margin), y + Scalar(region.margin)});
      }
      lines.push_back(std::move(line));
    }
  }
  return lines;
}

}  // namespace sss
