#include "drafto/scene.hpp"

#include <cmath>
#include <limits>

#include "drafto/errors.hpp"

namespace drafto {

void Scene::validate() const {
  if (margin < 0.0) throw ConfigError("scene margin must be >= 0");
  for (const Obstacle& o : obstacles) {
    if (const Sphere* s = std::get_if<Sphere>(&o)) {
      if (!(s->radius > 0.0)) throw ConfigError("sphere obstacle radius must be positive");
    } else {
      const AxisAlignedBox& b = std::get<AxisAlignedBox>(o);
      for (int i = 0; i < 3; ++i) {
        if (!(b.lo(i) < b.hi(i))) throw ConfigError("box obstacle needs min < max per axis");
      }
    }
  }
}

double surface_distance(const Obstacle& obstacle, const Vec3& point) {
  if (const Sphere* s = std::get_if<Sphere>(&obstacle)) {
    return (point - s->center).norm() - s->radius;
  }
  const AxisAlignedBox& b = std::get<AxisAlignedBox>(obstacle);
  // Per-axis distance to the slab: positive outside, negative inside.
  Vec3 d;
  for (int i = 0; i < 3; ++i) d(i) = std::max(b.lo(i) - point(i), point(i) - b.hi(i));
  const double inside = d.maxCoeff();
  if (inside <= 0.0) return inside;  // interior: closest face
  return d.cwiseMax(0.0).norm();
}

Vec3 surface_distance_gradient(const Obstacle& obstacle, const Vec3& point) {
  if (const Sphere* s = std::get_if<Sphere>(&obstacle)) {
    const Vec3 delta = point - s->center;
    const double n = delta.norm();
    if (n < 1e-16) return Vec3::Zero();  // kink at the center
    return delta / n;
  }
  const AxisAlignedBox& b = std::get<AxisAlignedBox>(obstacle);
  Vec3 d;
  for (int i = 0; i < 3; ++i) d(i) = std::max(b.lo(i) - point(i), point(i) - b.hi(i));
  const double inside = d.maxCoeff();
  Vec3 grad = Vec3::Zero();
  if (inside <= 0.0) {
    // Interior: distance follows the nearest face only.
    int imax = 0;
    d.maxCoeff(&imax);
    grad(imax) = (point(imax) - b.hi(imax) >= b.lo(imax) - point(imax)) ? 1.0 : -1.0;
    return grad;
  }
  const Vec3 dpos = d.cwiseMax(0.0);
  const double n = dpos.norm();
  if (n < 1e-16) return Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (dpos(i) > 0.0) grad(i) = (point(i) > b.hi(i) ? 1.0 : -1.0) * dpos(i) / n;
  }
  return grad;
}

double signed_distance(const Scene& scene, const Vec3& center, double radius) {
  double best = std::numeric_limits<double>::infinity();
  for (const Obstacle& o : scene.obstacles) {
    best = std::min(best, surface_distance(o, center) - radius);
  }
  return best;
}

namespace {

/// Signed distance together with the index of the minimizing obstacle
/// (ties to the first index; -1 with no obstacles).
std::pair<double, int> signed_distance_argmin(const Scene& scene, const Vec3& center,
                                              double radius) {
  double best = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const double d = surface_distance(scene.obstacles[i], center) - radius;
    if (d < best) {
      best = d;
      arg = static_cast<int>(i);
    }
  }
  return {best, arg};
}

/// Collision pairs to test beyond the static obstacles: same-chain pairs
/// with link gap >= 2 (self) and all cross-chain pairs (cross).
bool pair_enabled(const MultiChainModel& model, const MultiBallStates& s, std::size_t i,
                  std::size_t j) {
  if (!s.balls[i].check || !s.balls[j].check) return false;
  if (s.chain_of[i] == s.chain_of[j]) {
    return model.self_collision && std::abs(s.link_of[i] - s.link_of[j]) >= 2;
  }
  return model.cross_collision;
}

}  // namespace

double obstacle_cost(const Scene& scene, const MultiChainModel& model, VecRef theta) {
  const MultiBallStates s = multi_ccb_states(model, theta);
  double cost = 0.0;
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    if (!s.balls[i].check) continue;
    const double d = signed_distance(scene, s.balls[i].center, s.balls[i].radius);
    if (std::isfinite(d)) cost += std::max(0.0, scene.margin - d);
  }
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    for (std::size_t j = i + 1; j < s.balls.size(); ++j) {
      if (!pair_enabled(model, s, i, j)) continue;
      const double d =
          (s.balls[i].center - s.balls[j].center).norm() - s.balls[i].radius - s.balls[j].radius;
      cost += std::max(0.0, scene.margin - d);
    }
  }
  return cost;
}

CostWithGradient obstacle_cost_gradient(const Scene& scene, const MultiChainModel& model,
                                        VecRef theta) {
  const MultiBallStates s = multi_ccb_states(model, theta);
  CostWithGradient out;
  out.gradient = Vec::Zero(theta.size());
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    if (!s.balls[i].check) continue;
    const auto [d, arg] = signed_distance_argmin(scene, s.balls[i].center, s.balls[i].radius);
    if (arg < 0) continue;
    const double h = scene.margin - d;
    if (h <= 0.0) continue;  // inactive hinge (subgradient 0 at the kink)
    out.value += h;
    // d(hinge)/d(center) = -d(d)/d(center) = -grad of the argmin obstacle.
    const Vec3 gd = surface_distance_gradient(scene.obstacles[arg], s.balls[i].center);
    out.gradient.noalias() -= s.balls[i].jacobian.transpose() * gd;
  }
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    for (std::size_t j = i + 1; j < s.balls.size(); ++j) {
      if (!pair_enabled(model, s, i, j)) continue;
      const Vec3 delta = s.balls[i].center - s.balls[j].center;
      const double n = delta.norm();
      const double d = n - s.balls[i].radius - s.balls[j].radius;
      const double h = scene.margin - d;
      if (h <= 0.0) continue;
      out.value += h;
      if (n < 1e-16) continue;  // coincident centers: kink, subgradient 0
      const Vec3 dir = delta / n;
      out.gradient.noalias() -= (s.balls[i].jacobian - s.balls[j].jacobian).transpose() * dir;
    }
  }
  return out;
}

bool config_collision_free(const Scene& scene, const MultiChainModel& model, VecRef theta) {
  const MultiBallStates s = multi_ccb_states(model, theta);
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    if (!s.balls[i].check) continue;
    if (signed_distance(scene, s.balls[i].center, s.balls[i].radius) < 0.0) return false;
  }
  for (std::size_t i = 0; i < s.balls.size(); ++i) {
    for (std::size_t j = i + 1; j < s.balls.size(); ++j) {
      if (!pair_enabled(model, s, i, j)) continue;
      const double d = (s.balls[i].center - s.balls[j].center).norm() - s.balls[i].radius -
                       s.balls[j].radius;
      if (d < 0.0) return false;
    }
  }
  return true;
}

bool dense_success_check(const Trajectory& traj, const Scene& scene, const MultiChainModel& model,
                         int samples, double limit_slack) {
  if (samples < 2) throw ConfigError("dense check needs at least 2 samples");
  const double T = traj.basis->horizon();
  const Vec theta_min = model.stacked_theta_min();
  const Vec theta_max = model.stacked_theta_max();
  for (int k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / (samples - 1) * T;
    const Vec theta = traj.value(t);
    for (int i = 0; i < theta.size(); ++i) {
      if (theta(i) < theta_min(i) - limit_slack || theta(i) > theta_max(i) + limit_slack) {
        return false;
      }
    }
    if (!config_collision_free(scene, model, theta)) return false;
  }
  return true;
}

std::vector<ObstacleResidual> obstacle_residuals(const Scene& scene, const MultiChainModel& model,
                                                 const Trajectory& traj,
                                                 const std::vector<double>& checkpoints) {
  std::vector<ObstacleResidual> out;
  out.reserve(checkpoints.size());
  for (double t : checkpoints) {
    const Vec theta = traj.value(t);
    const CostWithGradient c = obstacle_cost_gradient(scene, model, theta);
    ObstacleResidual r;
    r.r = c.value;
    // Chain rule through xi(t) = Phi(t) psi + lift(t).
    const Mat phi = basis_stack(*traj.basis, traj.dofs, t);
    r.g = phi.transpose() * c.gradient;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace drafto
