#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "visiplan/common.hpp"
#include "visiplan/costs.hpp"

namespace visiplan {

struct TargetObservation {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

struct PredictionConfig {
  int degree = 3;
  double ridge = 1e-4;
  /// Sliding history window (s).
  double window = 2.0;
  /// How far past the last observation the polynomial itself is trusted (s).
  double validity_horizon = 1.0;
  double max_speed = 2.5;
  double max_accel = 4.0;

  void validate() const;
};

/// Per-axis polynomial in (t - t_ref), t_ref = time of the last observation.
struct PredictionModel {
  int degree = 0;
  std::array<Eigen::VectorXd, 3> coefficients;
  double t_ref = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  double validity_horizon = 1.0;
  double max_speed = 2.5;
  double max_accel = 4.0;
  double residual_rms = 0.0;
  /// True when the polynomial forecast violated the speed/accel bounds and
  /// was replaced by a saturated constant-velocity tail.
  bool saturated = false;
  Vec3 tail_velocity = Vec3::Zero();

  /// Raw polynomial value / derivatives (no saturation).
  Vec3 polynomial(double t) const;
  Vec3 polynomial_velocity(double t) const;
  Vec3 polynomial_accel(double t) const;

  /// Forecast position with saturation and the constant-velocity tail.
  Vec3 position(double t) const;
  /// True when t lies past the validity horizon (constant-velocity tail).
  bool beyond_horizon(double t) const { return t > window_end + validity_horizon; }
};

/// Ridge-regularized least-squares polynomial fit of the observations within
/// the configured window, solved per axis by a QR factorization. Coefficients
/// of order >= 1 are penalized. A single observation yields a constant model;
/// rank deficiency falls back to degree 1.
PredictionModel fit(const std::vector<TargetObservation>& history, const PredictionConfig& config);

/// Forecast positions at absolute times; `extrapolated` is set when any time
/// falls in the constant-velocity tail.
TargetTrack predict_track(const PredictionModel& model, const std::vector<double>& times);

}  // namespace visiplan
