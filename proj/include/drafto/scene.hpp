#pragma once

#include <variant>
#include <vector>

#include "drafto/basis.hpp"
#include "drafto/kinematics.hpp"
#include "drafto/types.hpp"

namespace drafto {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

struct AxisAlignedBox {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

using Obstacle = std::variant<Sphere, AxisAlignedBox>;

/// Static obstacle world plus the collision-cost margin.
struct Scene {
  std::vector<Obstacle> obstacles;
  double margin = 0.05;  // safety margin added around every ball

  void validate() const;
};

/// Distance from a point to an obstacle's surface (negative inside).
double surface_distance(const Obstacle& obstacle, const Vec3& point);
/// Direction of steepest distance increase at `point` (zero at interior
/// kinks, e.g. a box center).
Vec3 surface_distance_gradient(const Obstacle& obstacle, const Vec3& point);

/// min over obstacles of (surface distance - radius); +inf with no
/// obstacles. Negative means the ball penetrates something.
double signed_distance(const Scene& scene, const Vec3& center, double radius);

/// Collision cost of one configuration: sum over balls of
/// hinge(margin - d) with hinge(u) = max(0, u), plus pairwise ball terms
/// for self-collision (links >= 2 apart on the same chain) and
/// cross-collision (balls on different chains) when the model enables them.
double obstacle_cost(const Scene& scene, const MultiChainModel& model, VecRef theta);

/// Same value along with its gradient in theta (subgradient 0 at hinge
/// kinks; obstacle ties resolved to the first obstacle index).
struct CostWithGradient {
  double value = 0.0;
  Vec gradient;
};

CostWithGradient obstacle_cost_gradient(const Scene& scene, const MultiChainModel& model,
                                        VecRef theta);

/// One checkpoint of the discretized collision objective: the scalar
/// residual r_k = f_o(xi(t_k)) and its gradient in the coefficient vector.
struct ObstacleResidual {
  double r = 0.0;
  Vec g;  // length M(N+1)
};

std::vector<ObstacleResidual> obstacle_residuals(const Scene& scene, const MultiChainModel& model,
                                                 const Trajectory& traj,
                                                 const std::vector<double>& checkpoints);

/// Raw (margin-free) collision test of one configuration: true iff every
/// check-ball clears every obstacle and every enabled ball pair is
/// disjoint.
bool config_collision_free(const Scene& scene, const MultiChainModel& model, VecRef theta);

/// Dense trajectory validation: true iff at `samples` uniform times every
/// check-ball keeps a raw (margin-free) signed distance >= 0, every
/// enabled ball pair stays disjoint, and the joints stay within limits
/// (up to `limit_slack`, matching the terminal feasibility tolerance).
bool dense_success_check(const Trajectory& traj, const Scene& scene, const MultiChainModel& model,
                         int samples = 2000, double limit_slack = 1e-6);

}  // namespace drafto
