#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sss {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using SignMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Derivative order of a directional test statistic.
enum class DerivOrder { slope, curvature };

inline const char* to_string(DerivOrder order) {
  return order == DerivOrder::slope ? "slope" : "curvature";
}

/// Bad user input: unreadable files, malformed data, invalid parameters.
/// Mapped to CLI exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside an analysis. Mapped to CLI exit status 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unit vector (u, v); u points along the row axis, v along the column axis.
template <typename Scalar>
struct Direction {
  Scalar u = Scalar(1);
  Scalar v = Scalar(0);

  static Direction from_angle(Scalar theta) {
    return {std::cos(theta), std::sin(theta)};
  }

  bool is_unit(Scalar tol = Scalar(1e-12)) const {
    return std::abs(u * u + v * v - Scalar(1)) < tol;
  }
};

template <typename Scalar>
void require_unit_direction(const Direction<Scalar>& dir) {
  if (!dir.is_unit())
    throw InputError("direction (" + std::to_string(dir.u) + ", " +
                     std::to_string(dir.v) + ") is not a unit vector");
}

}  // namespace sss
