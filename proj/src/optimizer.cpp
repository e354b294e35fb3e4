#include "visiplan/optimizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

namespace visiplan {

void OptimizerConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("optimizer: max_iterations must be positive");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("optimizer: gradient_tolerance must be positive");
  if (!(relative_cost_tolerance > 0.0))
    throw ConfigError("optimizer: relative_cost_tolerance must be positive");
  if (history_size < 1) throw ConfigError("optimizer: history_size must be positive");
  if (max_line_search_steps < 1) throw ConfigError("optimizer: max_line_search_steps must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("optimizer: armijo must be in (0, 1)");
  if (!(curvature > armijo && curvature < 1.0))
    throw ConfigError("optimizer: curvature must be in (armijo, 1)");
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max_iter";
    case Termination::kBudgetExhausted: return "budget_exhausted";
    case Termination::kLineSearchFailure: return "line_search_failure";
  }
  return "?";
}

namespace {

class Problem {
 public:
  Problem(const TrajectoryBSpline& initial, const TargetTrack& target, const EsdfField& field,
          const CostModel& model, double yaw_scale, bool lock_z)
      : traj_(initial), target_(target), field_(field), model_(model), yaw_scale_(yaw_scale),
        lock_z_(lock_z) {
    fixed_ = std::clamp(model.options.fixed_control_points, 0, initial.size());
    free_ = initial.size() - fixed_;
  }

  int dimension() const { return 4 * free_; }
  int free_points() const { return free_; }
  int fixed_points() const { return fixed_; }

  Eigen::VectorXd pack(const TrajectoryBSpline& t) const {
    Eigen::VectorXd x(dimension());
    for (int j = 0; j < free_; ++j) {
      x.segment<3>(3 * j) = t.q[fixed_ + j];
      x[3 * free_ + j] = t.phi[fixed_ + j] * yaw_scale_;
    }
    return x;
  }

  void unpack(const Eigen::VectorXd& x, TrajectoryBSpline& t) const {
    for (int j = 0; j < free_; ++j) {
      t.q[fixed_ + j] = x.segment<3>(3 * j);
      t.phi[fixed_ + j] = x[3 * free_ + j] / yaw_scale_;
    }
  }

  CostReport evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    unpack(x, traj_);
    CostReport r = total_cost(traj_, target_, field_, model_);
    grad.resize(dimension());
    for (int j = 0; j < free_; ++j) {
      grad.segment<3>(3 * j) = r.grad_q[fixed_ + j];
      if (lock_z_) grad[3 * j + 2] = 0.0;
      grad[3 * free_ + j] = r.grad_phi[fixed_ + j] / yaw_scale_;
    }
    return r;
  }

  TrajectoryBSpline materialize(const Eigen::VectorXd& x) const {
    TrajectoryBSpline t = traj_;
    unpack(x, t);
    return t;
  }

 private:
  TrajectoryBSpline traj_;
  const TargetTrack& target_;
  const EsdfField& field_;
  const CostModel& model_;
  double yaw_scale_;
  bool lock_z_;
  int fixed_ = 3;
  int free_ = 0;
};

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Initial inverse Hessian for the two-loop recursion. Both jerk terms are
// exact quadratics with curvature up to ~1/dt^6, which no scalar guess can
// cover; use their Hessian plus a multiple of the identity per block
// (positions, yaw) fitted to whatever curvature the last step saw beyond it.
class JerkPreconditioner {
 public:
  JerkPreconditioner(int free, int fixed, double dt, double w_pos, double w_yaw, double yaw_scale)
      : free_(free) {
    const int n = free + fixed;
    const double s = 1.0 / (dt * dt * dt);
    const double stencil[4] = {-s, 3.0 * s, -3.0 * s, s};
    jerk_ = Eigen::MatrixXd::Zero(free, free);
    for (int i = 0; i + 3 < n; ++i)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const int ia = i + a - fixed, ib = i + b - fixed;
          if (ia >= 0 && ib >= 0) jerk_(ia, ib) += 2.0 * stencil[a] * stencil[b];
        }
    w_[0] = w_pos;
    w_[1] = w_yaw / (yaw_scale * yaw_scale);
  }

  bool ready() const { return ready_; }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double fallback = y.squaredNorm() / s.dot(y);
    for (int b = 0; b < 2; ++b) {
      const Eigen::VectorXd sb = block(s, b), yb = block(y, b);
      const double ss = sb.squaredNorm();
      if (ss == 0.0) {
        if (!ready_) mu_[b] = fallback;
        continue;
      }
      const double rest = (sb.dot(yb) - sb.dot(apply_jerk(sb, b))) / ss;
      if (rest > 0.0 && std::isfinite(rest))
        mu_[b] = rest;
      else if (!ready_)
        mu_[b] = fallback;
    }
    for (int b = 0; b < 2; ++b) {
      Eigen::MatrixXd m = w_[b] * jerk_;
      m.diagonal().array() += mu_[b];
      llt_[b].compute(m);
    }
    ready_ = true;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& q) const {
    Eigen::VectorXd out(q.size());
    Eigen::Map<const Eigen::MatrixXd> qp(q.data(), 3, free_);
    Eigen::Map<Eigen::MatrixXd> op(out.data(), 3, free_);
    op = llt_[0].solve(qp.transpose()).transpose();
    out.tail(free_) = llt_[1].solve(q.tail(free_));
    return out;
  }

 private:
  // Block 0 holds positions (3 x free, column-major), block 1 yaw.
  Eigen::VectorXd block(const Eigen::VectorXd& v, int b) const {
    return b == 0 ? Eigen::VectorXd(v.head(3 * free_)) : Eigen::VectorXd(v.tail(free_));
  }
  Eigen::VectorXd apply_jerk(const Eigen::VectorXd& v, int b) const {
    if (b == 1) return w_[1] * (jerk_ * v);
    Eigen::Map<const Eigen::MatrixXd> m(v.data(), 3, free_);
    Eigen::MatrixXd r = w_[0] * (m * jerk_);
    return Eigen::Map<Eigen::VectorXd>(r.data(), r.size());
  }

  int free_;
  Eigen::MatrixXd jerk_;
  double w_[2];
  double mu_[2] = {1.0, 1.0};
  Eigen::LLT<Eigen::MatrixXd> llt_[2];
  bool ready_ = false;
};

Eigen::VectorXd two_loop(const Eigen::VectorXd& g, const std::deque<CurvaturePair>& memory,
                         const JerkPreconditioner& h0) {
  Eigen::VectorXd d = -g;
  if (memory.empty()) return d;
  std::vector<double> alpha(memory.size());
  for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
    alpha[i] = memory[i].rho * memory[i].s.dot(d);
    d -= alpha[i] * memory[i].y;
  }
  d = h0.apply(d);
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(d);
    d += (alpha[i] - beta) * memory[i].s;
  }
  return d;
}

struct LineSearchPoint {
  double a = 0.0;
  double f = 0.0;
  double slope = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd g;
  CostReport report;
};

// Minimizer of the cubic through (a0, f0, s0) and (a1, f1, s1), kept inside
// the middle 80% of the interval; bisection when the cubic is unusable.
double cubic_step(const LineSearchPoint& p0, const LineSearchPoint& p1) {
  const double lo = std::min(p0.a, p1.a), hi = std::max(p0.a, p1.a);
  const double margin = 0.1 * (hi - lo);
  const double d1 = p0.slope + p1.slope - 3.0 * (p0.f - p1.f) / (p0.a - p1.a);
  const double disc = d1 * d1 - p0.slope * p1.slope;
  double a = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), p1.a - p0.a);
    const double denom = p1.slope - p0.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double c = p1.a - (p1.a - p0.a) * (p1.slope + d2 - d1) / denom;
      if (std::isfinite(c)) a = c;
    }
  }
  return std::clamp(a, lo + margin, hi - margin);
}

// Strong Wolfe line search (bracketing phase, then zoom). Returns a point
// with a == 0 when nothing satisfying sufficient decrease was found.
LineSearchPoint line_search(Problem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
                            double f0, double slope0, double step, const OptimizerConfig& config) {
  int evaluations = 0;
  auto probe = [&](double a) {
    LineSearchPoint p;
    p.a = a;
    p.x = x + a * d;
    p.report = problem.evaluate(p.x, p.g);
    p.f = p.report.total;
    p.slope = p.g.dot(d);
    ++evaluations;
    return p;
  };
  auto sufficient = [&](const LineSearchPoint& p) { return p.f <= f0 + config.armijo * p.a * slope0; };
  auto curvature_ok = [&](const LineSearchPoint& p) {
    return std::abs(p.slope) <= -config.curvature * slope0;
  };

  LineSearchPoint origin;
  origin.f = f0;
  origin.slope = slope0;

  auto zoom = [&](LineSearchPoint lo, LineSearchPoint hi) {
    while (evaluations < config.max_line_search_steps) {
      LineSearchPoint p = probe(cubic_step(lo, hi));
      if (!sufficient(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (curvature_ok(p)) return p;
        if (p.slope * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return lo;  // best point meeting sufficient decrease (a == 0 if none)
  };

  LineSearchPoint prev = origin;
  double a = step;
  while (evaluations < config.max_line_search_steps) {
    LineSearchPoint p = probe(a);
    if (!std::isfinite(p.f) || !sufficient(p) || (prev.a > 0.0 && p.f >= prev.f)) return zoom(prev, p);
    if (curvature_ok(p)) return p;
    if (p.slope >= 0.0) return zoom(p, prev);
    prev = std::move(p);
    a *= 2.0;
  }
  return prev;
}

}  // namespace

OptimizeResult optimize(const TrajectoryBSpline& initial, const TargetTrack& target,
                        const EsdfField& field, const CostModel& model,
                        const OptimizerConfig& config, const IterationObserver& observer) {
  initial.validate();
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const bool budgeted = config.wall_clock_budget > 0.0 && std::isfinite(config.wall_clock_budget);

  OptimizeResult result;
  result.yaw_scale = model.visibility.od_max;
  Problem problem(initial, target, field, model, result.yaw_scale,
                  config.planar_altitude_lock && field.planar());

  Eigen::VectorXd x = problem.pack(initial);
  Eigen::VectorXd g;
  CostReport report = problem.evaluate(x, g);
  double f = report.total;
  if (observer) observer(0, report);

  auto finish = [&](int iterations, Termination why) {
    // An untouched start is returned as given (no round trip through the
    // yaw scaling).
    result.trajectory = iterations == 0 ? initial : problem.materialize(x);
    // Boundary points are copied verbatim from the input.
    result.final_report = std::move(report);
    result.iterations = iterations;
    result.termination = why;
    return result;
  };

  if (problem.dimension() == 0 || g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance)
    return finish(0, Termination::kConverged);

  std::deque<CurvaturePair> memory;
  JerkPreconditioner h0(problem.free_points(), problem.fixed_points(), initial.dt,
                        model.weights.w_s, model.weights.w_s_phi, result.yaw_scale);
  Eigen::VectorXd x_trial, g_trial;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    Eigen::VectorXd d = two_loop(g, memory, h0);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    const double step = memory.empty() ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;
    const LineSearchPoint found = line_search(problem, x, d, f, slope, step, config);
    if (!(found.a > 0.0)) return finish(iter - 1, Termination::kLineSearchFailure);
    CostReport trial_report = found.report;
    x_trial = found.x;
    g_trial = found.g;

    CurvaturePair pair{x_trial - x, g_trial - g, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.y.squaredNorm() && sy > 0.0) {
      pair.rho = 1.0 / sy;
      h0.update(pair.s, pair.y);
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > config.history_size) memory.pop_front();
    }

    const double decrease = f - trial_report.total;
    x.swap(x_trial);
    g.swap(g_trial);
    report = std::move(trial_report);
    f = report.total;
    if (observer) observer(iter, report);

    if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance || f == 0.0)
      return finish(iter, Termination::kConverged);
    if (decrease <= config.relative_cost_tolerance * std::abs(f + decrease))
      return finish(iter, Termination::kConverged);
    if (budgeted &&
        std::chrono::duration<double>(Clock::now() - start).count() > config.wall_clock_budget)
      return finish(iter, Termination::kBudgetExhausted);
  }
  return finish(config.max_iterations, Termination::kMaxIterations);
}

}  // namespace visiplan
