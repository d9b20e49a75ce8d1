#include "drafto/kinematics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "drafto/errors.hpp"

namespace drafto {

int ChainModel::dof() const {
  return kind == Kind::Planar ? static_cast<int>(lengths.size())
                              : static_cast<int>(axes.size());
}

void ChainModel::validate() const {
  const int m = dof();
  if (m < 1) throw ConfigError("chain '" + name + "' has no joints");
  if (theta_min.size() != m || theta_max.size() != m) {
    throw ConfigError("chain '" + name + "': joint limits must have length " + std::to_string(m));
  }
  for (int i = 0; i < m; ++i) {
    if (!(theta_min(i) < theta_max(i))) {
      throw ConfigError("chain '" + name + "': theta_min < theta_max violated at joint " +
                        std::to_string(i));
    }
  }
  if (kind == Kind::Planar) {
    for (double l : lengths) {
      if (!(l > 0.0)) throw ConfigError("chain '" + name + "': link lengths must be positive");
    }
  } else {
    if (offsets.size() != axes.size()) {
      throw ConfigError("chain '" + name + "': need one offset per joint axis");
    }
    for (const Vec3& a : axes) {
      if (std::abs(a.norm() - 1.0) > 1e-9) {
        throw ConfigError("chain '" + name + "': joint axes must be unit vectors");
      }
    }
  }
  for (const CollisionBall& b : balls) {
    if (!(b.radius > 0.0)) throw ConfigError("chain '" + name + "': ball radii must be positive");
    if (b.link < 0 || b.link >= m) {
      throw ConfigError("chain '" + name + "': ball on nonexistent link " +
                        std::to_string(b.link));
    }
  }
}

ChainModel ChainModel::planar(std::vector<double> lengths, Vec theta_min, Vec theta_max) {
  ChainModel c;
  c.kind = Kind::Planar;
  c.lengths = std::move(lengths);
  c.theta_min = std::move(theta_min);
  c.theta_max = std::move(theta_max);
  c.ee_offset = Vec3::Zero();  // planar frames already sit at link tips
  c.validate();
  return c;
}

ChainModel ChainModel::spatial(std::vector<Vec3> axes, std::vector<Vec3> offsets, Vec theta_min,
                               Vec theta_max) {
  ChainModel c;
  c.kind = Kind::Spatial;
  c.axes = std::move(axes);
  c.offsets = std::move(offsets);
  c.theta_min = std::move(theta_min);
  c.theta_max = std::move(theta_max);
  c.validate();
  return c;
}

void ChainModel::add_default_balls(double radius) {
  if (!(radius > 0.0)) throw ConfigError("default ball radius must be positive");
  balls.clear();
  const int m = dof();
  for (int k = 0; k < m; ++k) {
    // Link k spans from frame k's origin towards frame k+1's origin,
    // expressed in frame k. The last link additionally carries the tool
    // point offset.
    Vec3 span;
    if (kind == Kind::Planar) {
      span = Vec3(lengths[k], 0, 0) + (k == m - 1 ? ee_offset : Vec3::Zero());
    } else {
      span = (k + 1 < m) ? offsets[k + 1] : ee_offset;
    }
    const double len = span.norm();
    if (len <= 0.0) continue;  // zero-length tool span: nothing to cover
    const int count = std::max(1, static_cast<int>(std::ceil(len / (2.0 * radius))));
    for (int i = 0; i < count; ++i) {
      CollisionBall b;
      b.link = k;
      const double s = (i + 0.5) / count;
      b.offset = s * span;
      b.radius = radius;
      balls.push_back(b);
    }
  }
}

int MultiChainModel::total_dof() const {
  int m = 0;
  for (const ChainModel& c : chains) m += c.dof();
  return m;
}

int MultiChainModel::dof_offset(int chain) const {
  int off = 0;
  for (int i = 0; i < chain; ++i) off += chains[i].dof();
  return off;
}

Vec MultiChainModel::stacked_theta_min() const {
  Vec out(total_dof());
  int off = 0;
  for (const ChainModel& c : chains) {
    out.segment(off, c.dof()) = c.theta_min;
    off += c.dof();
  }
  return out;
}

Vec MultiChainModel::stacked_theta_max() const {
  Vec out(total_dof());
  int off = 0;
  for (const ChainModel& c : chains) {
    out.segment(off, c.dof()) = c.theta_max;
    off += c.dof();
  }
  return out;
}

void MultiChainModel::validate() const {
  if (chains.empty() || chains.size() > 2) {
    throw ConfigError("a world holds one or two chains");
  }
  for (const ChainModel& c : chains) c.validate();
  if (cross_collision && chains.size() < 2) {
    throw ConfigError("cross-collision needs two chains");
  }
}

MultiChainModel MultiChainModel::single(ChainModel chain) {
  MultiChainModel m;
  m.chains.push_back(std::move(chain));
  return m;
}

std::vector<Iso3> forward_kinematics(const ChainModel& chain, VecRef theta) {
  const int m = chain.dof();
  if (theta.size() != m) {
    throw ConfigError("forward_kinematics: expected " + std::to_string(m) + " joint values, got " +
                      std::to_string(theta.size()));
  }
  std::vector<Iso3> frames;
  frames.reserve(m + 1);
  if (chain.kind == ChainModel::Kind::Planar) {
    Iso3 T = Iso3::Identity();
    T.translation() = Vec3(chain.base_x, chain.base_y, 0.0);
    T.linear() = Eigen::AngleAxisd(chain.base_yaw, Vec3::UnitZ()).toRotationMatrix();
    for (int k = 0; k < m; ++k) {
      T = T * Eigen::AngleAxisd(theta(k), Vec3::UnitZ());
      frames.push_back(T);  // frame k: at joint k, rotated by joints 0..k
      T.translation() += T.linear() * Vec3(chain.lengths[k], 0, 0);
    }
    Iso3 ee = frames.back();
    ee.translation() += ee.linear() * (Vec3(chain.lengths[m - 1], 0, 0) + chain.ee_offset);
    frames.push_back(ee);
  } else {
    Iso3 T = chain.base;
    for (int k = 0; k < m; ++k) {
      T.translation() += T.linear() * chain.offsets[k];
      T = T * Eigen::AngleAxisd(theta(k), chain.axes[k]);
      frames.push_back(T);
    }
    Iso3 ee = frames.back();
    ee.translation() += ee.linear() * chain.ee_offset;
    frames.push_back(ee);
  }
  return frames;
}

namespace {

/// World rotation axis of joint j given the frame list.
Vec3 joint_world_axis(const ChainModel& chain, const std::vector<Iso3>& frames, int j) {
  if (chain.kind == ChainModel::Kind::Planar) return Vec3::UnitZ();
  // frames[j] carries the post-rotation orientation; the axis itself is
  // unchanged by its own rotation, so either side works.
  return frames[j].linear() * chain.axes[j];
}

/// d(point)/d(theta): column j = axis_j x (point - origin_j) for joints at
/// or before `link`, zero after.
Mat point_jacobian(const ChainModel& chain, const std::vector<Iso3>& frames, const Vec3& point,
                   int link) {
  const int m = chain.dof();
  Mat J = Mat::Zero(3, m);
  for (int j = 0; j <= link && j < m; ++j) {
    const Vec3 axis = joint_world_axis(chain, frames, j);
    J.col(j) = axis.cross(point - frames[j].translation());
  }
  return J;
}

}  // namespace

std::vector<BallState> ccb_states(const ChainModel& chain, VecRef theta) {
  const std::vector<Iso3> frames = forward_kinematics(chain, theta);
  std::vector<BallState> out;
  out.reserve(chain.balls.size());
  for (const CollisionBall& b : chain.balls) {
    BallState s;
    // Ball offsets are expressed in the link's own joint frame, so the
    // ball rides rigidly with joints 0..link.
    const Iso3& F = frames[b.link];
    s.center = F.translation() + F.linear() * b.offset;
    s.radius = b.radius;
    s.check = b.check;
    s.jacobian = point_jacobian(chain, frames, s.center, b.link);
    out.push_back(std::move(s));
  }
  return out;
}

MultiBallStates multi_ccb_states(const MultiChainModel& model, VecRef theta) {
  const int total = model.total_dof();
  if (theta.size() != total) {
    throw ConfigError("multi_ccb_states: stacked joint vector length mismatch");
  }
  MultiBallStates out;
  for (std::size_t ci = 0; ci < model.chains.size(); ++ci) {
    const ChainModel& chain = model.chains[ci];
    const int off = model.dof_offset(static_cast<int>(ci));
    std::vector<BallState> balls = ccb_states(chain, theta.segment(off, chain.dof()));
    for (std::size_t bi = 0; bi < balls.size(); ++bi) {
      BallState s = std::move(balls[bi]);
      Mat J = Mat::Zero(3, total);
      J.middleCols(off, chain.dof()) = s.jacobian;
      s.jacobian = std::move(J);
      out.balls.push_back(std::move(s));
      out.chain_of.push_back(static_cast<int>(ci));
      out.link_of.push_back(chain.balls[bi].link);
    }
  }
  return out;
}

int posture_dim(const ChainModel& chain) {
  return chain.kind == ChainModel::Kind::Planar ? 3 : 6;
}

Vec3 rotation_log(const Mat3& R) {
  // Quaternion double cover picks the branch with angle in [0, pi].
  Eigen::Quaterniond q(R);
  const double vn = q.vec().norm();
  const double angle = 2.0 * std::atan2(vn, std::abs(q.w()));
  if (vn < 1e-16) return Vec3::Zero();
  Vec3 axis = q.vec() / vn;
  if (q.w() < 0.0) axis = -axis;
  return angle * axis;
}

Mat3 log_jacobian_inverse(const Vec3& r) {
  const double th = r.norm();
  Mat3 rx;
  rx << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
  double c;  // coefficient of [r]x^2
  if (th < 1e-4) {
    // Series: 1/12 + th^2/720 + ...
    c = 1.0 / 12.0 + th * th / 720.0;
  } else {
    c = 1.0 / (th * th) - (1.0 + std::cos(th)) / (2.0 * th * std::sin(th));
  }
  return Mat3::Identity() - 0.5 * rx + c * rx * rx;
}

Posture ee_posture(const ChainModel& chain, VecRef theta) {
  const std::vector<Iso3> frames = forward_kinematics(chain, theta);
  const Iso3& ee = frames.back();
  const int m = chain.dof();
  Posture p;
  if (chain.kind == ChainModel::Kind::Planar) {
    p.x = Vec(3);
    p.x(0) = ee.translation().x();
    p.x(1) = ee.translation().y();
    p.x(2) = chain.base_yaw + theta.sum();  // unwrapped yaw
    p.jacobian = Mat::Zero(3, m);
    p.jacobian.topRows(2) = point_jacobian(chain, frames, ee.translation(), m - 1).topRows(2);
    p.jacobian.row(2).setOnes();
  } else {
    const Vec3 r = rotation_log(ee.linear());
    p.x = Vec(6);
    p.x.head(3) = ee.translation();
    p.x.tail(3) = r;
    Mat Jp = point_jacobian(chain, frames, ee.translation(), m - 1);
    Mat Jw = Mat::Zero(3, m);  // world angular velocity per joint rate
    for (int j = 0; j < m; ++j) Jw.col(j) = joint_world_axis(chain, frames, j);
    p.jacobian = Mat::Zero(6, m);
    p.jacobian.topRows(3) = Jp;
    p.jacobian.bottomRows(3) = log_jacobian_inverse(r) * Jw;
  }
  return p;
}

}  // namespace drafto
