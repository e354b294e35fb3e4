#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "visiplan/spline.hpp"

namespace visiplan {
namespace {

TrajectoryBSpline make(std::vector<Vec3> q, double dt = 0.1) {
  TrajectoryBSpline t;
  t.dt = dt;
  t.phi.assign(q.size(), 0.0);
  t.q = std::move(q);
  return t;
}

TrajectoryBSpline random_spline(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  TrajectoryBSpline t;
  t.dt = u(rng);
  double yaw = g(rng);
  for (int i = 0; i < n; ++i) {
    t.q.emplace_back(g(rng), g(rng), g(rng));
    t.phi.push_back(yaw);
    yaw += 0.8 * g(rng);
  }
  return t;
}

TEST(Waypoint, ConstantPolygon) {
  const auto t = make({Vec3(2, 3, 1), Vec3(2, 3, 1), Vec3(2, 3, 1), Vec3(2, 3, 1)});
  EXPECT_TRUE(waypoint(t, 1).p.isApprox(Vec3(2, 3, 1)));
  EXPECT_TRUE(waypoint(t, 2).p.isApprox(Vec3(2, 3, 1)));
}

TEST(Waypoint, AffinePrecision) {
  const auto t = make({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)});
  EXPECT_NEAR((waypoint(t, 1).p - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Waypoint, StencilArithmetic) {
  const auto t = make({Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(6, 0, 0), Vec3(6, 0, 0)});
  EXPECT_NEAR((waypoint(t, 1).p - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Waypoint, YawUsesSameStencil) {
  auto t = make({Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  t.phi = {0.0, 0.6, 1.2, 0.0};
  EXPECT_NEAR(waypoint(t, 1).psi, (0.0 + 4 * 0.6 + 1.2) / 6.0, 1e-15);
}

TEST(Waypoint, RangeErrors) {
  const auto t = make({Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  EXPECT_THROW(waypoint(t, 0), RangeError);
  EXPECT_THROW(waypoint(t, 3), RangeError);
  EXPECT_NO_THROW(waypoint(t, 2));
}

TEST(Derivatives, VelocityStencil) {
  const auto t = make({Vec3(0, 0, 0), Vec3(1, 0, 0)}, 0.5);
  const auto v = derivative_control_points(t, 1);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(v[0].isApprox(Vec3(2, 0, 0)));
}

TEST(Derivatives, LineHasZeroAcceleration) {
  std::vector<Vec3> q;
  for (int i = 0; i < 8; ++i) q.emplace_back(0.5 * i, -0.25 * i, 0.1 * i);
  const auto a = derivative_control_points(make(q, 0.2), 2);
  ASSERT_EQ(a.size(), 6u);
  for (const Vec3& x : a) EXPECT_LT(x.norm(), 1e-12);
}

TEST(Derivatives, RangeErrors) {
  const auto t = make({Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  EXPECT_THROW(derivative_control_points(t, 4), RangeError);
  EXPECT_THROW(derivative_control_points(t, 3), RangeError);
  EXPECT_THROW(yaw_derivative_control_points(t, 0), RangeError);
  EXPECT_EQ(derivative_control_points(t, 2).size(), 1u);
}

TEST(Evaluate, ConstantPolygon) {
  const auto t = make(std::vector<Vec3>(6, Vec3(1, -2, 3)));
  for (double s = 0.0; s <= t.duration(); s += 0.01) EXPECT_TRUE(evaluate(t, s).p.isApprox(Vec3(1, -2, 3)));
}

TEST(Evaluate, KnotsMatchWaypoints) {
  std::mt19937_64 rng(1);
  const auto t = random_spline(rng, 10);
  for (int k = 1; k <= t.size() - 2; ++k) {
    const auto s = evaluate(t, (k - 1) * t.dt);
    EXPECT_NEAR((s.p - waypoint(t, k).p).norm(), 0.0, 1e-12);
    EXPECT_NEAR(s.psi, waypoint(t, k).psi, 1e-12);
  }
}

TEST(Evaluate, DomainErrors) {
  const auto t = make(std::vector<Vec3>(5, Vec3::Zero()));
  EXPECT_THROW(evaluate(t, -1e-6), RangeError);
  EXPECT_THROW(evaluate(t, t.duration() + 1e-6), RangeError);
  EXPECT_NO_THROW(evaluate(t, t.duration()));
}

TEST(Evaluate, MatchesDeBoor) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_spline(rng, 4 + trial % 12);
    const auto knots = oracle::uniform_knots(t.size() + 4, t.dt);
    for (int s = 0; s < 20; ++s) {
      const double time = u(rng) * t.duration();
      const auto got = evaluate(t, time);
      const Vec3 want = oracle::de_boor<Vec3>(3, knots, t.q, time);
      ASSERT_NEAR((got.p - want).norm(), 0.0, 1e-10);
      ASSERT_NEAR(got.psi, oracle::de_boor<double>(3, knots, t.phi, time), 1e-10);
    }
  }
}

TEST(Evaluate, StateDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_spline(rng, 9);
    const double time = u(rng) * t.duration();
    const TrajectoryState s = evaluate_state(t, time);
    const TrajectoryState sp = evaluate_state(t, time + h), sm = evaluate_state(t, time - h);
    EXPECT_LT((s.v - (sp.p - sm.p) / (2 * h)).norm(), 1e-5 * (1 + s.v.norm()));
    EXPECT_LT((s.a - (sp.v - sm.v) / (2 * h)).norm(), 1e-4 * (1 + s.a.norm()));
    EXPECT_NEAR(s.psi_rate, (sp.psi - sm.psi) / (2 * h), 1e-5 * (1 + std::abs(s.psi_rate)));
  }
}

TEST(Properties, ConvexHullOfActiveSegment) {
  // Uniform cubic basis weights are nonnegative and sum to one, so each point
  // is a convex combination of its four control points; check per axis bounds
  // and that the barycentric weights recovered from de Boor are valid.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_spline(rng, 4 + trial % 8);
    const double time = u(rng) * t.duration();
    int seg = std::min(static_cast<int>(time / t.dt), t.size() - 4);
    const double s = time / t.dt - seg;
    const double w[4] = {(1 - s) * (1 - s) * (1 - s) / 6, (3 * s * s * s - 6 * s * s + 4) / 6,
                         (-3 * s * s * s + 3 * s * s + 3 * s + 1) / 6, s * s * s / 6};
    Vec3 combo = Vec3::Zero();
    for (int i = 0; i < 4; ++i) {
      ASSERT_GE(w[i], -1e-12);
      combo += w[i] * t.q[seg + i];
    }
    ASSERT_NEAR((combo - evaluate(t, time).p).norm(), 0.0, 1e-9);
    for (int a = 0; a < 3; ++a) {
      double lo = 1e300, hi = -1e300;
      for (int i = 0; i < 4; ++i) {
        lo = std::min(lo, t.q[seg + i][a]);
        hi = std::max(hi, t.q[seg + i][a]);
      }
      const double x = evaluate(t, time).p[a];
      ASSERT_GE(x, lo - 1e-9);
      ASSERT_LE(x, hi + 1e-9);
    }
  }
}

TEST(Properties, VelocityBoundSufficiency) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_spline(rng, 10);
    double v_m = 0.0;
    for (const Vec3& v : derivative_control_points(t, 1)) v_m = std::max(v_m, v.norm());
    for (int s = 0; s <= 400; ++s) {
      const double time = t.duration() * s / 400.0;
      ASSERT_LE(evaluate_state(t, time).v.norm(), v_m + 1e-9);
    }
  }
}

TEST(Properties, AffineInvariance) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_spline(rng, 8);
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = g(rng);
    const Vec3 b(g(rng), g(rng), g(rng));
    auto mapped = t;
    for (Vec3& q : mapped.q) q = m * q + b;
    for (int s = 0; s <= 20; ++s) {
      const double time = t.duration() * s / 20.0;
      ASSERT_NEAR((evaluate(mapped, time).p - (m * evaluate(t, time).p + b)).norm(), 0.0, 1e-9);
    }
  }
}

TEST(Properties, YawContinuity) {
  std::mt19937_64 rng(7);
  const auto t = random_spline(rng, 12);
  double prev = evaluate(t, 0.0).psi;
  for (int s = 1; s <= 10000; ++s) {
    const double psi = evaluate(t, t.duration() * s / 10000.0).psi;
    ASSERT_LT(std::abs(psi - prev), 0.05);
    prev = psi;
  }
}

TEST(InitializeFromPath, SinglePointHover) {
  TrajectoryState cur;
  cur.p = Vec3(1, 2, 3);
  const auto t = initialize_from_path({{0.0, Vec3(1, 2, 3)}}, cur, 0.1, 12);
  ASSERT_EQ(t.size(), 12);
  for (const Vec3& q : t.q) EXPECT_LT((q - Vec3(1, 2, 3)).norm(), 1e-12);
}

TEST(InitializeFromPath, StraightLineMatchesState) {
  TrajectoryState cur;
  cur.p = Vec3(0, 0, 1);
  cur.v = Vec3(1.0, 0.5, 0.0);
  std::vector<TimedPoint> path;
  for (int i = 0; i <= 15; ++i) path.push_back({0.2 * i, cur.p + 0.2 * i * cur.v});
  const auto t = initialize_from_path(path, cur, 0.1, 33);
  const TrajectoryState s = evaluate_state(t, 0.0);
  EXPECT_LT((s.p - cur.p).norm(), 1e-9);
  EXPECT_LT((s.v - cur.v).norm(), 1e-9);
  EXPECT_LT((s.a - cur.a).norm(), 1e-9);
  // The fit follows the line.
  EXPECT_LT((evaluate(t, 1.5).p - (cur.p + 1.5 * cur.v)).norm(), 1e-3);
}

TEST(InitializeFromPath, ReproducesArbitraryState) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    TrajectoryState cur;
    cur.p = Vec3(g(rng), g(rng), g(rng));
    cur.v = Vec3(g(rng), g(rng), g(rng));
    cur.a = Vec3(g(rng), g(rng), g(rng));
    cur.psi = 3 * g(rng);
    cur.psi_rate = g(rng);
    std::vector<TimedPoint> path;
    for (int i = 0; i <= 10; ++i) path.push_back({0.3 * i, Vec3(g(rng), g(rng), g(rng)) * 3.0});
    const auto t = initialize_from_path(path, cur, 0.1, 33);
    const TrajectoryState s = evaluate_state(t, 0.0);
    ASSERT_LT((s.p - cur.p).norm(), 1e-9);
    ASSERT_LT((s.v - cur.v).norm(), 1e-9);
    ASSERT_LT((s.a - cur.a).norm(), 1e-9);
    ASSERT_NEAR(s.psi, cur.psi, 1e-9);
    ASSERT_NEAR(s.psi_rate, cur.psi_rate, 1e-9);
    for (int i = 1; i < t.size(); ++i) ASSERT_LT(std::abs(t.phi[i] - t.phi[i - 1]), kPi);
  }
}

TEST(Boundary, ControlPointsReproduceState) {
  const auto cps = boundary_control_points(Vec3(1, 2, 3), Vec3(0.5, 0, -1), Vec3(2, 1, 0), 0.2);
  const auto t = make({cps[0], cps[1], cps[2], cps[2]}, 0.2);
  const TrajectoryState s = evaluate_state(t, 0.0);
  EXPECT_LT((s.p - Vec3(1, 2, 3)).norm(), 1e-12);
  EXPECT_LT((s.v - Vec3(0.5, 0, -1)).norm(), 1e-12);
  EXPECT_LT((s.a - Vec3(2, 1, 0)).norm(), 1e-12);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const auto t = make(std::vector<Vec3>(5, Vec3::Zero()), 0.5);
  std::ostringstream out;
  write_trajectory_csv(out, t, 10.0);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x,y,z,psi,vx,vy,vz,yaw_rate");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 11);
}

}  // namespace
}  // namespace visiplan
