#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "sss/types.hpp"

namespace sss {

/// Rectangular array of real-valued intensities with spacing metadata.
/// Immutable after construction; safe to share across threads.
template <typename Scalar = double>
class ImageGrid {
 public:
  explicit ImageGrid(Matrix<Scalar> values, Scalar spacing = Scalar(1))
      : values_(std::move(values)), spacing_(spacing) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw InputError("image must have at least one row and one column");
    if (!(spacing_ > Scalar(0)))
      throw InputError("grid spacing must be positive, got " +
                       std::to_string(static_cast<double>(spacing_)));
    for (Index c = 0; c < values_.cols(); ++c)
      for (Index r = 0; r < values_.rows(); ++r)
        if (!std::isfinite(values_(r, c)))
          throw InputError("non-finite intensity at row " + std::to_string(r) +
                           ", col " + std::to_string(c));
  }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  Scalar spacing() const { return spacing_; }
  const Matrix<Scalar>& values() const { return values_; }

 private:
  Matrix<Scalar> values_;
  Scalar spacing_;
};

/// Central evaluation window: `margin` pixels are dropped on every side,
/// leaving a g_rows x g_cols grid of evaluable pixels.
struct InteriorRegion {
  Index margin = 0;
  Index g_rows = 0;
  Index g_cols = 0;

  Index row_begin() const { return margin; }
  Index col_begin() const { return margin; }

  /// Side length used by the extreme-value thresholds. Equals g_rows for a
  /// square interior; floor(sqrt(g_rows * g_cols)) otherwise.
  Index g_effective() const {
    return static_cast<Index>(std::floor(
        std::sqrt(static_cast<double>(g_rows) * static_cast<double>(g_cols))));
  }

  bool is_square() const { return g_rows == g_cols; }

  bool operator==(const InteriorRegion&) const = default;
};

/// Interior with an explicit pixel margin. The margin may be smaller than the
/// kernel truncation radius; weighted sums then clip at the image boundary and
/// the statistic denominators account for the clipped support.
inline InteriorRegion interior_for_dims(Index rows, Index cols, Index margin) {
  if (margin < 0) throw InputError("margin must be non-negative");
  InteriorRegion region;
  region.margin = margin;
  region.g_rows = rows - 2 * margin;
  region.g_cols = cols - 2 * margin;
  if (region.g_rows < 1 || region.g_cols < 1)
    throw InputError("image " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " is too small for margin " +
                     std::to_string(margin) + "; needs at least " +
                     std::to_string(2 * margin + 1) + " pixels per side");
  return region;
}

template <typename Scalar>
InteriorRegion interior_with_margin(const ImageGrid<Scalar>& grid, Index margin) {
  return interior_for_dims(grid.rows(), grid.cols(), margin);
}

/// Interior derived from the kernel support: margin = ceil(support_factor * h),
/// so every evaluable pixel's truncated support lies fully inside the image.
template <typename Scalar>
InteriorRegion interior(const ImageGrid<Scalar>& grid, Scalar h,
                        Scalar support_factor = Scalar(4)) {
  if (!(h > Scalar(0))) throw InputError("bandwidth h must be positive");
  if (!(support_factor >= Scalar(1)))
    throw InputError("support factor must be >= 1");
  const auto margin = static_cast<Index>(std::ceil(support_factor * h));
  return interior_with_margin(grid, margin);
}

/// Per-pixel standardized test statistics for one direction and one
/// derivative order, evaluated over an interior region. Unit variance under
/// the i.i.d. noise null by construction.
template <typename Scalar>
struct StatField {
  InteriorRegion region;
  Direction<Scalar> direction;
  DerivOrder order = DerivOrder::slope;
  Matrix<Scalar> stats;  // g_rows x g_cols
  Scalar sigma_used = Scalar(0);
};

}  // namespace sss
