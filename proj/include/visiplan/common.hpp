#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace visiplan {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index or time outside the valid domain of a trajectory or grid.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, scenario or map input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Geometry for which a quantity is undefined (e.g. bearing of a zero vector).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced inside a cost term.
class NumericError : public Error {
 public:
  NumericError(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Returns the representative of `a` closest to `reference` (differs by a
/// multiple of 2*pi).
inline double unwrap_near(double a, double reference) {
  return reference + wrap_angle(a - reference);
}

}  // namespace visiplan
