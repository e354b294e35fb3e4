#include "visiplan/predict.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace visiplan {

void PredictionConfig::validate() const {
  if (degree < 0) throw ConfigError("prediction: degree must be >= 0");
  if (!(ridge >= 0.0)) throw ConfigError("prediction: ridge must be >= 0");
  if (!(window > 0.0)) throw ConfigError("prediction: window must be positive");
  if (!(validity_horizon >= 0.0)) throw ConfigError("prediction: validity_horizon must be >= 0");
  if (!(max_speed > 0.0 && max_accel > 0.0)) throw ConfigError("prediction: bounds must be positive");
}

namespace {

double horner(const Eigen::VectorXd& c, double x) {
  double v = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) v = v * x + c[i];
  return v;
}

double horner_d1(const Eigen::VectorXd& c, double x) {
  double v = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 1; --i) v = v * x + i * c[i];
  return v;
}

double horner_d2(const Eigen::VectorXd& c, double x) {
  double v = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 2; --i) v = v * x + i * (i - 1) * c[i];
  return v;
}

Vec3 clamp_norm(const Vec3& v, double bound) {
  const double n = v.norm();
  return n > bound ? Vec3(v * (bound / n)) : v;
}

}  // namespace

Vec3 PredictionModel::polynomial(double t) const {
  const double x = t - t_ref;
  return {horner(coefficients[0], x), horner(coefficients[1], x), horner(coefficients[2], x)};
}

Vec3 PredictionModel::polynomial_velocity(double t) const {
  const double x = t - t_ref;
  return {horner_d1(coefficients[0], x), horner_d1(coefficients[1], x), horner_d1(coefficients[2], x)};
}

Vec3 PredictionModel::polynomial_accel(double t) const {
  const double x = t - t_ref;
  return {horner_d2(coefficients[0], x), horner_d2(coefficients[1], x), horner_d2(coefficients[2], x)};
}

Vec3 PredictionModel::position(double t) const {
  if (t <= window_end) return polynomial(t);
  if (saturated) return polynomial(window_end) + tail_velocity * (t - window_end);
  const double t_h = window_end + validity_horizon;
  if (t <= t_h) return polynomial(t);
  return polynomial(t_h) + tail_velocity * (t - t_h);
}

PredictionModel fit(const std::vector<TargetObservation>& history, const PredictionConfig& config) {
  config.validate();
  if (history.empty()) throw ConfigError("prediction: empty history");
  for (std::size_t i = 1; i < history.size(); ++i)
    if (!(history[i].t > history[i - 1].t))
      throw ConfigError("prediction: observation timestamps must increase strictly");

  const double t_last = history.back().t;
  std::size_t first = history.size() - 1;
  while (first > 0 && history[first - 1].t >= t_last - config.window) --first;
  if (history.size() >= 2 && first == history.size() - 1) first = history.size() - 2;
  const int m = static_cast<int>(history.size() - first);

  PredictionModel model;
  model.t_ref = t_last;
  model.window_start = history[first].t;
  model.window_end = t_last;
  model.validity_horizon = config.validity_horizon;
  model.max_speed = config.max_speed;
  model.max_accel = config.max_accel;

  int degree = std::min(config.degree, m - 1);
  auto solve = [&](int deg) -> bool {
    const int cols = deg + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + cols, cols);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m + cols, 3);
    for (int r = 0; r < m; ++r) {
      const double x = history[first + r].t - t_last;
      double pw = 1.0;
      for (int c = 0; c < cols; ++c, pw *= x) a(r, c) = pw;
      b.row(r) = history[first + r].position.transpose();
    }
    const double sq = std::sqrt(config.ridge);
    for (int c = 1; c < cols; ++c) a(m + c, c) = sq;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < cols) return false;
    const Eigen::MatrixXd sol = qr.solve(b);
    for (int axis = 0; axis < 3; ++axis) model.coefficients[axis] = sol.col(axis);
    model.degree = deg;
    double ss = 0.0;
    for (int r = 0; r < m; ++r) ss += (a.row(r) * sol - b.row(r)).squaredNorm();
    model.residual_rms = std::sqrt(ss / m);
    return true;
  };
  if (!solve(degree)) {
    if (degree > 1 && solve(1)) {
      degree = 1;
    } else {
      solve(0);
      degree = 0;
    }
  }

  // Trust the polynomial forecast only while it respects the target's
  // kinematic bounds.
  const int checks = 20;
  for (int i = 0; i <= checks && !model.saturated; ++i) {
    const double t = t_last + config.validity_horizon * i / checks;
    if (model.polynomial_velocity(t).norm() > config.max_speed + 1e-9 ||
        model.polynomial_accel(t).norm() > config.max_accel + 1e-9)
      model.saturated = true;
  }
  const double t_tail = model.saturated ? t_last : t_last + config.validity_horizon;
  model.tail_velocity = clamp_norm(model.polynomial_velocity(t_tail), config.max_speed);
  return model;
}

TargetTrack predict_track(const PredictionModel& model, const std::vector<double>& times) {
  TargetTrack track;
  track.c.reserve(times.size());
  for (double t : times) {
    track.c.push_back(model.position(t));
    if (model.saturated ? t > model.window_end : model.beyond_horizon(t)) track.extrapolated = true;
  }
  return track;
}

}  // namespace visiplan
