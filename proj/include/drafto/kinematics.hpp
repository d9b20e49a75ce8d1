#pragma once

#include <string>
#include <vector>

#include "drafto/types.hpp"

namespace drafto {

/// Sphere attached to a link, approximating its geometry for distance
/// queries. `link` indexes the link the ball rides on (0-based); `check`
/// opts the ball out of collision checking (tooling analogue).
struct CollisionBall {
  int link = 0;
  Vec3 offset = Vec3::Zero();  // in the link frame
  double radius = 0.0;
  bool check = true;
};

/// Serial revolute chain. Two classes are supported:
///  - planar: all joints rotate about world +z, link k extends along the
///    local +x axis by lengths[k]; the base pose is (x, y, yaw).
///  - spatial: joint k is a rotation about axes[k] applied after the fixed
///    translation offsets[k]; frames compose as
///    T_k = T_{k-1} * Trans(offsets[k]) * Rot(axes[k], theta_k).
/// Frame k sits at joint k's center with the post-rotation orientation;
/// the end-effector frame adds ee_offset in the last frame.
struct ChainModel {
  enum class Kind { Planar, Spatial };

  Kind kind = Kind::Planar;
  std::string name = "chain";

  // planar
  std::vector<double> lengths;
  double base_x = 0.0, base_y = 0.0, base_yaw = 0.0;

  // spatial
  std::vector<Vec3> axes;     // unit vectors, one per joint
  std::vector<Vec3> offsets;  // fixed translation before each joint
  Iso3 base = Iso3::Identity();

  Vec3 ee_offset = Vec3::Zero();  // tool point in the last joint frame

  Vec theta_min, theta_max;  // joint limits, rad
  std::vector<CollisionBall> balls;

  int dof() const;
  void validate() const;  // throws ConfigError on bad limits/geometry

  static ChainModel planar(std::vector<double> lengths, Vec theta_min, Vec theta_max);
  static ChainModel spatial(std::vector<Vec3> axes, std::vector<Vec3> offsets, Vec theta_min,
                            Vec theta_max);

  /// Place ceil(length / (2 r)) balls of radius r along every link span
  /// (the last span extends to the tool point), replacing any existing list.
  void add_default_balls(double radius);
};

/// One or two chains sharing a world; posture/task coordinates always refer
/// to the first chain's end effector.
struct MultiChainModel {
  std::vector<ChainModel> chains;
  bool self_collision = false;
  bool cross_collision = false;

  int total_dof() const;
  /// Offset of chain i's joints inside the stacked joint vector.
  int dof_offset(int chain) const;
  Vec stacked_theta_min() const;
  Vec stacked_theta_max() const;
  void validate() const;

  static MultiChainModel single(ChainModel chain);
};

/// World pose of every joint frame plus the end-effector frame
/// (frames.size() == dof + 1).
std::vector<Iso3> forward_kinematics(const ChainModel& chain, VecRef theta);

/// A collision ball in world coordinates along with the sensitivity of its
/// center to the chain's joints.
struct BallState {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  bool check = true;
  Mat jacobian;  // 3 x M, d(center)/d(theta)
};

std::vector<BallState> ccb_states(const ChainModel& chain, VecRef theta);

/// Same, but centers/Jacobians are expressed against the stacked joint
/// vector of the multi-chain model; `chain_of` reports which chain each
/// ball belongs to and `link_of` its link index (for pair exclusion).
struct MultiBallStates {
  std::vector<BallState> balls;  // jacobian is 3 x total_dof
  std::vector<int> chain_of;
  std::vector<int> link_of;
};

MultiBallStates multi_ccb_states(const MultiChainModel& model, VecRef theta);

/// Task-space posture of the end effector.
///  - planar: (px, py, yaw), yaw = base_yaw + sum(theta) (unwrapped).
///  - spatial: (px, py, pz, rx, ry, rz), rotation as axis-angle with
///    magnitude <= pi (log of the rotation matrix via the quaternion
///    double cover).
struct Posture {
  Vec x;         // 3 (planar) or 6 (spatial)
  Mat jacobian;  // dim(x) x M
};

int posture_dim(const ChainModel& chain);
Posture ee_posture(const ChainModel& chain, VecRef theta);

/// Axis-angle (rotation log) with magnitude <= pi.
Vec3 rotation_log(const Mat3& R);
/// Maps world angular velocity to axis-angle rates: d(log R)/dt = Jl_inv * w.
Mat3 log_jacobian_inverse(const Vec3& r);

}  // namespace drafto
