#include "visiplan/costs.hpp"

#include <algorithm>
#include <cmath>

namespace visiplan {

void VisibilityParams::validate() const {
  if (!(od_min > 0.0 && od_min < od_max)) throw ConfigError("visibility: need 0 < od_min < od_max");
  if (!(rho > 0.0)) throw ConfigError("visibility: rho must be positive");
  if (m_balls < 1) throw ConfigError("visibility: m_balls must be >= 1");
}

void CostWeights::validate() const {
  for (double w : {w_do, w_ao, w_oe, w_f, w_f_phi, w_s, w_s_phi, w_c, w_v})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights: every weight must be finite and >= 0");
}

CostWeights CostWeights::tracking_defaults() {
  CostWeights w;
  w.w_do = 10.0;
  w.w_ao = 100.0;
  w.w_oe = 1.0;
  w.w_f = 10.0;
  w.w_f_phi = 10.0;
  w.w_s = 1e-3;
  w.w_s_phi = 1e-3;
  w.w_c = 1e4;
  w.w_v = 0.1;
  return w;
}

void DynamicLimits::validate() const {
  for (double v : {v_m, a_m, v_phi_m, a_phi_m, d_thr, psi_thr})
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("limits: every limit must be finite and > 0");
}

std::string_view term_name(CostTerm term) {
  switch (term) {
    case CostTerm::kDistance: return "do";
    case CostTerm::kAngle: return "ao";
    case CostTerm::kOcclusion: return "oe";
    case CostTerm::kFeasibility: return "f";
    case CostTerm::kYawFeasibility: return "f_phi";
    case CostTerm::kSmoothness: return "s";
    case CostTerm::kYawSmoothness: return "s_phi";
    case CostTerm::kCollision: return "c";
    case CostTerm::kSafeTracking: return "v";
  }
  return "?";
}

double term_weight(const CostWeights& w, CostTerm term) {
  switch (term) {
    case CostTerm::kDistance: return w.w_do;
    case CostTerm::kAngle: return w.w_ao;
    case CostTerm::kOcclusion: return w.w_oe;
    case CostTerm::kFeasibility: return w.w_f;
    case CostTerm::kYawFeasibility: return w.w_f_phi;
    case CostTerm::kSmoothness: return w.w_s;
    case CostTerm::kYawSmoothness: return w.w_s_phi;
    case CostTerm::kCollision: return w.w_c;
    case CostTerm::kSafeTracking: return w.w_v;
  }
  return 0.0;
}

double best_yaw(const Vec3& p, const Vec3& c, bool as_printed) {
  const Vec3 l = as_printed ? Vec3(p - c) : Vec3(c - p);
  if (l.head<2>().norm() < 1e-12) throw DegenerateGeometry("best_yaw: robot and target coincide horizontally");
  return std::atan2(l.y(), l.x());
}

namespace {

void check_target(const TrajectoryBSpline& traj, const TargetTrack& target) {
  if (static_cast<int>(target.c.size()) != traj.waypoint_count())
    throw ConfigError("target track length must equal the waypoint count (N_c - 2)");
}

Vec3 waypoint_position(const TrajectoryBSpline& traj, int k) {
  return (traj.q[k - 1] + 4.0 * traj.q[k] + traj.q[k + 1]) / 6.0;
}

double waypoint_yaw(const TrajectoryBSpline& traj, int k) {
  return (traj.phi[k - 1] + 4.0 * traj.phi[k] + traj.phi[k + 1]) / 6.0;
}

// Transpose of the (1/6, 4/6, 1/6) waypoint stencil.
void scatter_waypoint(TermResult& r, int k, const Vec3& g) {
  r.grad_q[k - 1] += g / 6.0;
  r.grad_q[k] += g * (4.0 / 6.0);
  r.grad_q[k + 1] += g / 6.0;
}

void scatter_waypoint_yaw(TermResult& r, int k, double g) {
  r.grad_phi[k - 1] += g / 6.0;
  r.grad_phi[k] += g * (4.0 / 6.0);
  r.grad_phi[k + 1] += g / 6.0;
}

constexpr double kDegenerateHorizontal = 1e-6;
constexpr double kHoverSpeed = 1e-3;
// J_v fades in between kHoverSpeed and this speed. Without it the penalty
// jumps from 0 to its full value as a waypoint leaves hover, which traps the
// optimizer around any near-stationary trajectory.
constexpr double kSafeTrackingFullSpeed = 0.5;

}  // namespace

TermResult cost_do(const TrajectoryBSpline& traj, const TargetTrack& target,
                   const VisibilityParams& params) {
  check_target(traj, target);
  const int n = traj.size();
  TermResult r(n);
  const double lo2 = params.od_min * params.od_min, hi2 = params.od_max * params.od_max;
  for (int k = 1; k <= n - 2; ++k) {
    const Vec3 l = waypoint_position(traj, k) - target.c[k - 1];
    const double d2 = l.squaredNorm();
    r.value += penalty(lo2 - d2) + penalty(d2 - hi2);
    const double dj_dd2 = -penalty_derivative(lo2 - d2) + penalty_derivative(d2 - hi2);
    if (dj_dd2 != 0.0) scatter_waypoint(r, k, 2.0 * dj_dd2 * l);
  }
  return r;
}

TermResult cost_ao(const TrajectoryBSpline& traj, const TargetTrack& target, bool as_printed) {
  check_target(traj, target);
  const int n = traj.size();
  TermResult r(n);
  for (int k = 1; k <= n - 2; ++k) {
    const Vec3 l = waypoint_position(traj, k) - target.c[k - 1];
    const double h2 = l.x() * l.x() + l.y() * l.y();
    if (std::sqrt(h2) < kDegenerateHorizontal) continue;
    const double best = as_printed ? std::atan2(l.y(), l.x()) : std::atan2(-l.y(), -l.x());
    const double e = wrap_angle(waypoint_yaw(traj, k) - best);
    r.value += e * e;
    scatter_waypoint_yaw(r, k, 2.0 * e);
    // Both yaw conventions differ by a constant, so the position gradient is
    // the same expression in L = p - c.
    scatter_waypoint(r, k, Vec3(2.0 * e * l.y() / h2, -2.0 * e * l.x() / h2, 0.0));
  }
  return r;
}

TermResult cost_oe(const TrajectoryBSpline& traj, const TargetTrack& target,
                   const VisibilityParams& params, const EsdfField& field) {
  check_target(traj, target);
  const int n = traj.size();
  TermResult r(n);
  const int m = params.m_balls;
  for (int k = 1; k <= n - 2; ++k) {
    const Vec3 p = waypoint_position(traj, k);
    const Vec3& c = target.c[k - 1];
    const Vec3 l = p - c;
    const double d = l.norm();
    const Vec3 dd_dp = d > 1e-12 ? Vec3(l / d) : Vec3::Zero();
    Vec3 grad_p = Vec3::Zero();
    for (int i = 1; i <= m; ++i) {
      const double lambda = static_cast<double>(i) / m;
      const Vec3 center = p + lambda * (c - p);
      const double radius = params.rho * lambda * d;
      Vec3 grad_xi;
      const double xi = field.sample(center, &grad_xi);
      const double f = radius * radius - xi * xi;
      r.value += penalty(f);
      const double gp = penalty_derivative(f);
      if (gp == 0.0) continue;
      grad_p += gp * 2.0 * (params.rho * radius * lambda * dd_dp - (1.0 - lambda) * xi * grad_xi);
    }
    if (!grad_p.isZero(0.0)) scatter_waypoint(r, k, grad_p);
  }
  return r;
}

TermResult cost_feasibility(const TrajectoryBSpline& traj, const DynamicLimits& limits) {
  const int n = traj.size();
  TermResult r(n);
  const double dt = traj.dt;
  const double v2 = limits.v_m * limits.v_m, a2 = limits.a_m * limits.a_m;
  for (int i = 0; i + 1 < n; ++i) {
    const Vec3 v = (traj.q[i + 1] - traj.q[i]) / dt;
    const double x = v.squaredNorm() - v2;
    r.value += penalty(x);
    const double gp = penalty_derivative(x);
    if (gp == 0.0) continue;
    const Vec3 g = gp * 2.0 * v / dt;
    r.grad_q[i + 1] += g;
    r.grad_q[i] -= g;
  }
  for (int i = 0; i + 2 < n; ++i) {
    const Vec3 a = (traj.q[i + 2] - 2.0 * traj.q[i + 1] + traj.q[i]) / (dt * dt);
    const double x = a.squaredNorm() - a2;
    r.value += penalty(x);
    const double gp = penalty_derivative(x);
    if (gp == 0.0) continue;
    const Vec3 g = gp * 2.0 * a / (dt * dt);
    r.grad_q[i + 2] += g;
    r.grad_q[i + 1] -= 2.0 * g;
    r.grad_q[i] += g;
  }
  return r;
}

TermResult cost_yaw_feasibility(const TrajectoryBSpline& traj, const DynamicLimits& limits) {
  const int n = traj.size();
  TermResult r(n);
  const double dt = traj.dt;
  const double v2 = limits.v_phi_m * limits.v_phi_m, a2 = limits.a_phi_m * limits.a_phi_m;
  for (int i = 0; i + 1 < n; ++i) {
    const double v = (traj.phi[i + 1] - traj.phi[i]) / dt;
    const double x = v * v - v2;
    r.value += penalty(x);
    const double g = penalty_derivative(x) * 2.0 * v / dt;
    r.grad_phi[i + 1] += g;
    r.grad_phi[i] -= g;
  }
  for (int i = 0; i + 2 < n; ++i) {
    const double a = (traj.phi[i + 2] - 2.0 * traj.phi[i + 1] + traj.phi[i]) / (dt * dt);
    const double x = a * a - a2;
    r.value += penalty(x);
    const double g = penalty_derivative(x) * 2.0 * a / (dt * dt);
    r.grad_phi[i + 2] += g;
    r.grad_phi[i + 1] -= 2.0 * g;
    r.grad_phi[i] += g;
  }
  return r;
}

TermResult cost_smoothness(const TrajectoryBSpline& traj) {
  const int n = traj.size();
  TermResult r(n);
  const double s = 1.0 / (traj.dt * traj.dt * traj.dt);
  for (int i = 0; i + 3 < n; ++i) {
    const Vec3 j = (traj.q[i + 3] - 3.0 * traj.q[i + 2] + 3.0 * traj.q[i + 1] - traj.q[i]) * s;
    r.value += j.squaredNorm();
    const Vec3 g = 2.0 * j * s;
    r.grad_q[i + 3] += g;
    r.grad_q[i + 2] -= 3.0 * g;
    r.grad_q[i + 1] += 3.0 * g;
    r.grad_q[i] -= g;
  }
  return r;
}

TermResult cost_yaw_smoothness(const TrajectoryBSpline& traj) {
  const int n = traj.size();
  TermResult r(n);
  const double s = 1.0 / (traj.dt * traj.dt * traj.dt);
  for (int i = 0; i + 3 < n; ++i) {
    const double j =
        (traj.phi[i + 3] - 3.0 * traj.phi[i + 2] + 3.0 * traj.phi[i + 1] - traj.phi[i]) * s;
    r.value += j * j;
    const double g = 2.0 * j * s;
    r.grad_phi[i + 3] += g;
    r.grad_phi[i + 2] -= 3.0 * g;
    r.grad_phi[i + 1] += 3.0 * g;
    r.grad_phi[i] -= g;
  }
  return r;
}

TermResult cost_collision(const TrajectoryBSpline& traj, const DynamicLimits& limits,
                          const EsdfField& field, bool trailing_factor) {
  const int n = traj.size();
  TermResult r(n);
  const double thr2 = limits.d_thr * limits.d_thr;
  for (int i = 0; i < n; ++i) {
    Vec3 grad_xi;
    const double xi = field.sample(traj.q[i], &grad_xi);
    const double u = thr2 - xi * xi;
    const double g = penalty(u);
    if (g == 0.0) continue;
    const Vec3 dg = penalty_derivative(u) * (-2.0 * xi) * grad_xi;
    if (trailing_factor) {
      r.value += g * xi;
      r.grad_q[i] += dg * xi + g * grad_xi;
    } else {
      r.value += g;
      r.grad_q[i] += dg;
    }
  }
  return r;
}

TermResult cost_safe_tracking(const TrajectoryBSpline& traj, const DynamicLimits& limits) {
  const int n = traj.size();
  TermResult r(n);
  const double inv2dt = 1.0 / (2.0 * traj.dt);
  const double thr2 = limits.psi_thr * limits.psi_thr;
  for (int k = 1; k <= n - 2; ++k) {
    const Vec3 v = (traj.q[k + 1] - traj.q[k - 1]) * inv2dt;
    const double h2 = v.x() * v.x() + v.y() * v.y();
    const double speed = std::sqrt(h2);
    if (speed < kHoverSpeed) continue;
    // smootherstep fade, C2 at both ends
    const double x = std::min(1.0, (speed - kHoverSpeed) / (kSafeTrackingFullSpeed - kHoverSpeed));
    const double fade = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    const double dfade = x < 1.0 ? 30.0 * x * x * (1.0 - x) * (1.0 - x) /
                                       (kSafeTrackingFullSpeed - kHoverSpeed)
                                 : 0.0;
    const double e = wrap_angle(std::atan2(v.y(), v.x()) - waypoint_yaw(traj, k));
    const double u = e * e - thr2;
    const double pen = penalty(u);
    if (pen == 0.0) continue;
    r.value += fade * pen;
    const double dj_de = fade * penalty_derivative(u) * 2.0 * e;
    const Vec3 dpsi_dv(-v.y() / h2, v.x() / h2, 0.0);
    const Vec3 dspeed_dv(v.x() / speed, v.y() / speed, 0.0);
    const Vec3 gv = (dj_de * dpsi_dv + pen * dfade * dspeed_dv) * inv2dt;
    r.grad_q[k + 1] += gv;
    r.grad_q[k - 1] -= gv;
    scatter_waypoint_yaw(r, k, -dj_de);
  }
  return r;
}

TermResult evaluate_term(CostTerm term, const TrajectoryBSpline& traj, const TargetTrack& target,
                         const EsdfField& field, const CostModel& model) {
  switch (term) {
    case CostTerm::kDistance: return cost_do(traj, target, model.visibility);
    case CostTerm::kAngle: return cost_ao(traj, target, model.options.ao_sign_as_printed);
    case CostTerm::kOcclusion: return cost_oe(traj, target, model.visibility, field);
    case CostTerm::kFeasibility: return cost_feasibility(traj, model.limits);
    case CostTerm::kYawFeasibility: return cost_yaw_feasibility(traj, model.limits);
    case CostTerm::kSmoothness: return cost_smoothness(traj);
    case CostTerm::kYawSmoothness: return cost_yaw_smoothness(traj);
    case CostTerm::kCollision:
      return cost_collision(traj, model.limits, field, model.options.collision_trailing_factor);
    case CostTerm::kSafeTracking: return cost_safe_tracking(traj, model.limits);
  }
  return TermResult(traj.size());
}

CostReport total_cost(const TrajectoryBSpline& traj, const TargetTrack& target,
                      const EsdfField& field, const CostModel& model) {
  const int n = traj.size();
  CostReport report;
  report.grad_q.assign(n, Vec3::Zero());
  report.grad_phi.assign(n, 0.0);
  for (int t = 0; t < kCostTermCount; ++t) {
    const auto term = static_cast<CostTerm>(t);
    const TermResult r = evaluate_term(term, traj, target, field, model);
    bool finite = std::isfinite(r.value);
    for (int i = 0; i < n && finite; ++i)
      finite = r.grad_q[i].allFinite() && std::isfinite(r.grad_phi[i]);
    if (!finite)
      throw NumericError(std::string(term_name(term)),
                         "non-finite value or gradient in cost term J_" + std::string(term_name(term)));
    report.terms[t] = r.value;
    const double w = term_weight(model.weights, term);
    if (w == 0.0) continue;
    report.total += w * r.value;
    for (int i = 0; i < n; ++i) {
      report.grad_q[i] += w * r.grad_q[i];
      report.grad_phi[i] += w * r.grad_phi[i];
    }
  }
  const int fixed = std::min(model.options.fixed_control_points, n);
  for (int i = 0; i < fixed; ++i) {
    report.grad_q[i].setZero();
    report.grad_phi[i] = 0.0;
  }
  return report;
}

}  // namespace visiplan
