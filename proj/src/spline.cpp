#include "visiplan/spline.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace visiplan {

void TrajectoryBSpline::validate() const {
  if (!(dt > 0.0)) throw ConfigError("spline: dt must be positive");
  if (size() < kDegree + 1) throw ConfigError("spline: need at least 4 control points");
  if (phi.size() != q.size()) throw ConfigError("spline: yaw and position control counts differ");
}

Waypoint waypoint(const TrajectoryBSpline& traj, int k) {
  if (k < 1 || k > traj.size() - 2) throw RangeError("waypoint index out of range");
  Waypoint w;
  w.k = k;
  w.p = (traj.q[k - 1] + 4.0 * traj.q[k] + traj.q[k + 1]) / 6.0;
  w.psi = (traj.phi[k - 1] + 4.0 * traj.phi[k] + traj.phi[k + 1]) / 6.0;
  return w;
}

namespace {

template <typename T>
std::vector<T> difference(const std::vector<T>& pts, int order, double dt) {
  if (order < 1 || order > 3) throw RangeError("derivative order must be 1, 2 or 3");
  if (static_cast<int>(pts.size()) < order + 1)
    throw RangeError("too few control points for requested derivative order");
  std::vector<T> cur = pts;
  for (int o = 0; o < order; ++o) {
    std::vector<T> next(cur.size() - 1);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) next[i] = (cur[i + 1] - cur[i]) / dt;
    cur = std::move(next);
  }
  return cur;
}

struct Basis {
  int segment;
  double w[4];
  double dw[4];
  double ddw[4];
};

Basis basis_at(const TrajectoryBSpline& traj, double t) {
  const double dur = traj.duration();
  constexpr double kSlack = 1e-9;
  if (!(t >= -kSlack && t <= dur + kSlack)) throw RangeError("evaluate: time outside trajectory domain");
  t = std::clamp(t, 0.0, dur);
  const double s = t / traj.dt;
  int seg = static_cast<int>(std::floor(s));
  seg = std::clamp(seg, 0, traj.size() - 4);
  const double u = s - seg, u2 = u * u, u3 = u2 * u;
  Basis b;
  b.segment = seg;
  b.w[0] = (1 - u) * (1 - u) * (1 - u) / 6.0;
  b.w[1] = (3 * u3 - 6 * u2 + 4) / 6.0;
  b.w[2] = (-3 * u3 + 3 * u2 + 3 * u + 1) / 6.0;
  b.w[3] = u3 / 6.0;
  b.dw[0] = -(1 - u) * (1 - u) / 2.0;
  b.dw[1] = (3 * u2 - 4 * u) / 2.0;
  b.dw[2] = (-3 * u2 + 2 * u + 1) / 2.0;
  b.dw[3] = u2 / 2.0;
  b.ddw[0] = 1 - u;
  b.ddw[1] = 3 * u - 2;
  b.ddw[2] = -3 * u + 1;
  b.ddw[3] = u;
  return b;
}

}  // namespace

std::vector<Vec3> derivative_control_points(const TrajectoryBSpline& traj, int order) {
  return difference(traj.q, order, traj.dt);
}

std::vector<double> yaw_derivative_control_points(const TrajectoryBSpline& traj, int order) {
  return difference(traj.phi, order, traj.dt);
}

TrajectorySample evaluate(const TrajectoryBSpline& traj, double t) {
  const Basis b = basis_at(traj, t);
  TrajectorySample out{Vec3::Zero(), 0.0};
  for (int j = 0; j < 4; ++j) {
    out.p += b.w[j] * traj.q[b.segment + j];
    out.psi += b.w[j] * traj.phi[b.segment + j];
  }
  return out;
}

TrajectoryState evaluate_state(const TrajectoryBSpline& traj, double t) {
  const Basis b = basis_at(traj, t);
  const double inv = 1.0 / traj.dt, inv2 = inv * inv;
  TrajectoryState s;
  for (int j = 0; j < 4; ++j) {
    const Vec3& qj = traj.q[b.segment + j];
    const double pj = traj.phi[b.segment + j];
    s.p += b.w[j] * qj;
    s.v += b.dw[j] * inv * qj;
    s.a += b.ddw[j] * inv2 * qj;
    s.psi += b.w[j] * pj;
    s.psi_rate += b.dw[j] * inv * pj;
    s.psi_acc += b.ddw[j] * inv2 * pj;
  }
  return s;
}

std::array<Vec3, 3> boundary_control_points(const Vec3& p, const Vec3& v, const Vec3& a, double dt) {
  const Vec3 q1 = p - a * dt * dt / 6.0;
  const Vec3 sum = a * dt * dt + 2.0 * q1;
  const Vec3 diff = 2.0 * v * dt;
  return {(sum - diff) / 2.0, q1, (sum + diff) / 2.0};
}

std::array<double, 3> boundary_control_points(double p, double v, double a, double dt) {
  const double q1 = p - a * dt * dt / 6.0;
  const double sum = a * dt * dt + 2.0 * q1;
  const double diff = 2.0 * v * dt;
  return {(sum - diff) / 2.0, q1, (sum + diff) / 2.0};
}

namespace {

Vec3 path_position(const std::vector<TimedPoint>& path, double t) {
  if (t <= path.front().t) return path.front().p;
  if (t >= path.back().t) return path.back().p;
  auto it = std::upper_bound(path.begin(), path.end(), t,
                             [](double v, const TimedPoint& tp) { return v < tp.t; });
  const TimedPoint& b = *it;
  const TimedPoint& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return (1 - w) * a.p + w * b.p;
}

// Heading of the path segment active at t; nullopt when the path is not
// moving horizontally there.
std::optional<double> path_heading(const std::vector<TimedPoint>& path, double t) {
  if (path.size() < 2) return std::nullopt;
  auto it = std::upper_bound(path.begin(), path.end(), t,
                             [](double v, const TimedPoint& tp) { return v < tp.t; });
  std::size_t i = it == path.begin() ? 0 : static_cast<std::size_t>(it - path.begin()) - 1;
  i = std::min(i, path.size() - 2);
  const Vec3 d = path[i + 1].p - path[i].p;
  if (d.head<2>().norm() < 1e-6) return std::nullopt;
  return std::atan2(d.y(), d.x());
}

}  // namespace

TrajectoryBSpline initialize_from_path(const std::vector<TimedPoint>& path,
                                       const TrajectoryState& current, double dt,
                                       int control_points, const YawReference& yaw_reference,
                                       double ridge) {
  if (path.empty()) throw ConfigError("initialize_from_path: empty path");
  for (std::size_t i = 1; i < path.size(); ++i)
    if (!(path[i].t > path[i - 1].t))
      throw ConfigError("initialize_from_path: path timestamps must increase");
  if (control_points < 4) throw ConfigError("initialize_from_path: need at least 4 control points");
  if (!(dt > 0.0)) throw ConfigError("initialize_from_path: dt must be positive");

  const int n = control_points;
  const int free = n - 3;
  TrajectoryBSpline traj;
  traj.dt = dt;
  traj.q.assign(n, current.p);
  traj.phi.assign(n, current.psi);

  const auto qb = boundary_control_points(current.p, current.v, current.a, dt);
  const auto pb = boundary_control_points(current.psi, current.psi_rate, current.psi_acc, dt);
  for (int i = 0; i < 3; ++i) {
    traj.q[i] = qb[i];
    traj.phi[i] = pb[i];
  }

  // Samples at knots and half-knots over the whole domain. Unknowns are offsets
  // from the current state so the ridge term shrinks towards hovering.
  const int samples = 2 * (n - 3) + 1;
  Eigen::MatrixXd a_free = Eigen::MatrixXd::Zero(samples, free);
  Eigen::MatrixXd rhs(samples, 4);
  double prev_yaw = current.psi;
  for (int r = 0; r < samples; ++r) {
    const double t = 0.5 * dt * r;
    const Basis b = basis_at(traj, t);
    Vec3 fixed_p = Vec3::Zero();
    double fixed_yaw = 0.0;
    for (int j = 0; j < 4; ++j) {
      const int idx = b.segment + j;
      if (idx < 3) {
        fixed_p += b.w[j] * (traj.q[idx] - current.p);
        fixed_yaw += b.w[j] * (traj.phi[idx] - current.psi);
      } else {
        a_free(r, idx - 3) = b.w[j];
      }
    }
    double yaw_target;
    if (yaw_reference) {
      yaw_target = unwrap_near(yaw_reference(t), prev_yaw);
    } else {
      const auto h = path_heading(path, t);
      yaw_target = h ? unwrap_near(*h, prev_yaw) : prev_yaw;
    }
    prev_yaw = yaw_target;
    rhs.row(r).head<3>() = (path_position(path, t) - current.p - fixed_p).transpose();
    rhs(r, 3) = yaw_target - current.psi - fixed_yaw;
  }

  Eigen::MatrixXd normal = a_free.transpose() * a_free;
  normal.diagonal().array() += ridge;
  const Eigen::MatrixXd sol = normal.ldlt().solve(a_free.transpose() * rhs);
  // A least-squares fit of an abrupt heading flip can overshoot; keep
  // neighbouring yaw control points less than pi apart.
  constexpr double kMaxStep = kPi - 1e-6;
  double prev_fit = traj.phi[2];
  for (int i = 0; i < free; ++i) {
    traj.q[i + 3] = current.p + sol.row(i).head<3>().transpose();
    const double fit = current.psi + sol(i, 3);
    traj.phi[i + 3] = traj.phi[i + 2] + std::clamp(fit - prev_fit, -kMaxStep, kMaxStep);
    prev_fit = fit;
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryBSpline& traj, double rate,
                          double time_offset) {
  const auto old_precision = out.precision(17);
  out << "t,x,y,z,psi,vx,vy,vz,yaw_rate\n";
  const double dur = traj.duration();
  const int count = static_cast<int>(std::floor(dur * rate + 1e-9));
  for (int i = 0; i <= count; ++i) {
    const double t = std::min(i / rate, dur);
    const TrajectoryState s = evaluate_state(traj, t);
    out << t + time_offset << ',' << s.p.x() << ',' << s.p.y() << ',' << s.p.z() << ','
        << wrap_angle(s.psi) << ',' << s.v.x() << ',' << s.v.y() << ',' << s.v.z() << ','
        << s.psi_rate << '\n';
  }
  out.precision(old_precision);
}

}  // namespace visiplan
