#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "drafto/errors.hpp"
#include "drafto/kinematics.hpp"
#include "oracles.hpp"

using namespace drafto;

namespace {

constexpr double kPi = std::numbers::pi;

ChainModel two_link() {
  return ChainModel::planar({1.0, 1.0}, Vec::Constant(2, -kPi), Vec::Constant(2, kPi));
}

ChainModel random_spatial(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> axes = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY(),
                            Vec3::UnitX(), Vec3::UnitY()};
  std::vector<Vec3> offsets = {Vec3(0, 0, 0.3), Vec3(0, 0, 0.2), Vec3(0.4, 0, 0),
                               Vec3(0.3, 0, 0), Vec3(0.2, 0, 0)};
  ChainModel c = ChainModel::spatial(axes, offsets, Vec::Constant(5, -2.8), Vec::Constant(5, 2.8));
  c.ee_offset = Vec3(0.1, 0.02 * u(rng), 0);
  return c;
}

Vec random_theta(const ChainModel& c, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec theta(c.dof());
  for (int i = 0; i < theta.size(); ++i) theta(i) = 0.9 * u(rng);
  return theta;
}

}  // namespace

TEST_CASE("planar forward kinematics of the straight two-link arm") {
  const ChainModel c = two_link();
  const auto frames = forward_kinematics(c, Vec::Zero(2));
  REQUIRE(frames.size() == 3);  // joint 0, joint 1, end effector
  CHECK((frames[2].translation() - Vec3(2, 0, 0)).norm() < 1e-15);

  // Elbow up by 90 degrees: tip at (0, 2).
  Vec theta(2);
  theta << kPi / 2, 0.0;
  const auto up = forward_kinematics(c, theta);
  CHECK((up[2].translation() - Vec3(0, 2, 0)).norm() < 1e-12);
}

TEST_CASE("planar FK preserves link lengths for arbitrary joint angles") {
  std::mt19937 rng(3);
  ChainModel c = ChainModel::planar({0.8, 0.5, 1.2}, Vec::Constant(3, -kPi), Vec::Constant(3, kPi));
  for (int trial = 0; trial < 25; ++trial) {
    const Vec theta = 3.0 * random_theta(c, rng);
    const auto frames = forward_kinematics(c, theta);
    for (int k = 0; k + 1 < static_cast<int>(frames.size()) - 1; ++k) {
      const double len = (frames[k + 1].translation() - frames[k].translation()).norm();
      CHECK(std::abs(len - c.lengths[k]) < 1e-12);
    }
  }
}

TEST_CASE("collision-ball centers and Jacobians on the straight arm") {
  ChainModel c = two_link();
  CollisionBall tip;
  tip.link = 1;
  tip.offset = Vec3(1, 0, 0);  // end of the second link, in its own frame
  tip.radius = 0.5;
  c.balls = {tip};

  const auto states = ccb_states(c, Vec::Zero(2));
  REQUIRE(states.size() == 1);
  CHECK((states[0].center - Vec3(2, 0, 0)).norm() < 1e-15);
  // Revolute columns axis x (center - origin): joint 0 sweeps the full
  // 2-unit lever, joint 1 the distal 1-unit lever; both push the tip +y.
  CHECK((states[0].jacobian.col(0) - Vec3(0, 2, 0)).norm() < 1e-12);
  CHECK((states[0].jacobian.col(1) - Vec3(0, 1, 0)).norm() < 1e-12);
  CHECK(states[0].jacobian.col(0).y() > 0.0);
  CHECK(states[0].jacobian.col(1).y() > 0.0);
}

TEST_CASE("a ball on the first link ignores the second joint") {
  ChainModel c = two_link();
  CollisionBall mid;
  mid.link = 0;
  mid.offset = Vec3(0.5, 0, 0);
  mid.radius = 0.1;
  c.balls = {mid};
  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto states = ccb_states(c, random_theta(c, rng));
    CHECK(states[0].jacobian.col(1).norm() == 0.0);
  }
}

TEST_CASE("ball Jacobians match finite differences of the centers") {
  std::mt19937 rng(17);
  ChainModel planar = ChainModel::planar({0.9, 0.7, 0.4}, Vec::Constant(3, -kPi),
                                         Vec::Constant(3, kPi));
  planar.base_x = 0.2;
  planar.base_yaw = 0.3;
  planar.add_default_balls(0.08);
  ChainModel spatial = random_spatial(rng);
  spatial.add_default_balls(0.06);

  for (const ChainModel& c : {planar, spatial}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vec theta = random_theta(c, rng);
      const auto states = ccb_states(c, theta);
      for (std::size_t b = 0; b < states.size(); ++b) {
        auto center = [&](const Vec& th) -> Vec {
          return Vec(ccb_states(c, th)[b].center);
        };
        const Mat fd = oracles::fd_jacobian(center, theta);
        CHECK(oracles::rel_err(states[b].jacobian, fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("default ball generator covers every link") {
  ChainModel c = two_link();
  c.add_default_balls(0.25);
  // ceil(1.0 / 0.5) = 2 balls per link, plus the tool-point ball.
  CHECK(c.balls.size() >= 4);
  for (const CollisionBall& b : c.balls) {
    CHECK(b.radius == 0.25);
    CHECK(b.link >= 0);
    CHECK(b.link < 2);
  }
}

TEST_CASE("end-effector posture of planar chains") {
  ChainModel c = two_link();
  const Posture p = ee_posture(c, Vec::Zero(2));
  REQUIRE(p.x.size() == 3);
  CHECK((p.x - Eigen::Vector3d(2, 0, 0)).norm() < 1e-15);

  // Base yaw rotates the whole chain: tip at (0, 2), yaw pi/2.
  c.base_yaw = kPi / 2;
  const Posture rotated = ee_posture(c, Vec::Zero(2));
  CHECK(rotated.x(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rotated.x(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rotated.x(2) == doctest::Approx(kPi / 2).epsilon(1e-12));

  // Yaw accumulates joint angles.
  c.base_yaw = 0.0;
  Vec theta(2);
  theta << 0.3, -0.8;
  CHECK(ee_posture(c, theta).x(2) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("posture Jacobians match finite differences") {
  std::mt19937 rng(23);
  ChainModel planar = ChainModel::planar({1.0, 0.7}, Vec::Constant(2, -kPi),
                                         Vec::Constant(2, kPi));
  const ChainModel spatial = random_spatial(rng);
  for (const ChainModel& c : {planar, spatial}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vec theta = random_theta(c, rng);
      const Posture p = ee_posture(c, theta);
      // Keep clear of the axis-angle magnitude-pi branch cut.
      if (c.kind == ChainModel::Kind::Spatial && p.x.tail(3).norm() > 2.8) continue;
      auto posture = [&](const Vec& th) -> Vec { return ee_posture(c, th).x; };
      const Mat fd = oracles::fd_jacobian(posture, theta);
      CHECK(oracles::rel_err(p.jacobian, fd) < 1e-4);
    }
  }
}

TEST_CASE("rotation log round-trips axis-angle and picks the short branch") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Vec3 axis(u(rng), u(rng), u(rng));
    if (axis.norm() < 1e-3) continue;
    axis.normalize();
    const double angle = 0.01 + 3.0 * std::abs(u(rng));  // < pi + slack
    if (angle >= kPi) continue;
    const Mat3 R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const Vec3 r = rotation_log(R);
    CHECK((r - angle * axis).norm() < 1e-10);
  }
  // Angles beyond pi come back on the short branch.
  const Mat3 R = Eigen::AngleAxisd(4.0, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 r = rotation_log(R);
  CHECK(r.norm() == doctest::Approx(2 * kPi - 4.0).epsilon(1e-10));
  CHECK(r.z() < 0.0);
  // Identity maps to zero.
  CHECK(rotation_log(Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("log-Jacobian inverse matches its small-angle expansion") {
  CHECK((log_jacobian_inverse(Vec3::Zero()) - Mat3::Identity()).norm() < 1e-15);
  // First-order structure: J^{-1}(r) = I - [r]_x / 2 + O(|r|^2).
  const Vec3 tiny = 1e-5 * Vec3(1, -2, 0.5).normalized();
  Mat3 skew;
  skew << 0, -tiny.z(), tiny.y(), tiny.z(), 0, -tiny.x(), -tiny.y(), tiny.x(), 0;
  CHECK((log_jacobian_inverse(tiny) - (Mat3::Identity() - 0.5 * skew)).norm() < 1e-10);
  // Continuity across the Taylor/generic branch threshold at |r| = 1e-4.
  const Vec3 dir = Vec3(1, -2, 0.5).normalized();
  const Mat3 below = log_jacobian_inverse(0.9999e-4 * dir);
  const Mat3 above = log_jacobian_inverse(1.0001e-4 * dir);
  CHECK((above - below).norm() < 1e-7);
}

TEST_CASE("multi-chain states stack Jacobians block-wise") {
  ChainModel a = two_link();
  a.add_default_balls(0.2);
  ChainModel b = ChainModel::planar({0.5}, Vec::Constant(1, -kPi), Vec::Constant(1, kPi));
  b.base_x = 3.0;
  b.add_default_balls(0.2);
  MultiChainModel model;
  model.chains = {a, b};
  REQUIRE(model.total_dof() == 3);

  std::mt19937 rng(5);
  Vec theta(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 3; ++i) theta(i) = u(rng);
  const MultiBallStates states = multi_ccb_states(model, theta);
  REQUIRE(states.balls.size() == a.balls.size() + b.balls.size());
  for (std::size_t i = 0; i < states.balls.size(); ++i) {
    REQUIRE(states.balls[i].jacobian.cols() == 3);
    if (states.chain_of[i] == 0) {
      CHECK(states.balls[i].jacobian.col(2).norm() == 0.0);  // other chain
    } else {
      CHECK(states.balls[i].jacobian.leftCols(2).norm() == 0.0);
    }
  }
}

TEST_CASE("chain validation rejects inconsistent models") {
  ChainModel c = two_link();
  c.theta_min(0) = 2.0;
  c.theta_max(0) = -2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  ChainModel short_limits = ChainModel::planar({1.0}, Vec::Zero(1), Vec::Ones(1));
  CHECK_NOTHROW(short_limits.validate());
  short_limits.balls.push_back(CollisionBall{5, Vec3::Zero(), 0.1, true});
  CHECK_THROWS_AS(short_limits.validate(), ConfigError);
}
