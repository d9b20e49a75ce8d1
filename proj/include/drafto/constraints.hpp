#pragma once

#include <vector>

#include "drafto/basis.hpp"
#include "drafto/kinematics.hpp"
#include "drafto/types.hpp"

namespace drafto {

/// Uniform time grid t_k = (k-1)/(K-1) * T, k = 1..K.
std::vector<double> checkpoints(int K, double T);

/// End-effector posture box; entries may be +-inf for unconstrained
/// coordinates.
struct TaskSpec {
  Vec x_min, x_max;
  int k_task = 8;           // checkpoints retained per iteration
  int candidate_pool = 32;  // uniform candidate times scanned (4 * k_task)

  bool empty() const { return x_min.size() == 0; }
  void validate() const;
};

/// Componentwise distance to the task box: h = x - clamp(x, x_min, x_max).
/// `active` marks coordinates outside the box (the rows of the posture
/// Jacobian that survive into the constraint linearization).
struct TaskResidual {
  Vec h;
  std::vector<bool> active;
};

TaskResidual task_residual(const TaskSpec& spec, VecRef x);

/// Boundary-condition rows Phi(0), Phi(T) with right-hand sides
/// theta0 - lift(0) and thetag - lift(T).
struct BoundaryRows {
  Mat rows;  // 2M x M(N+1)
  Vec rhs;   // 2M
};

BoundaryRows boundary_rows(const BasisSet& basis, const BoundaryLift& lift, VecRef theta0,
                           VecRef thetag);

/// The candidate times with the largest task-residual norms, ties broken
/// towards earlier times; returned sorted by time.
std::vector<double> select_task_checkpoints(const Trajectory& traj, const TaskSpec& spec,
                                            const ChainModel& chain,
                                            const std::vector<double>& candidates, int keep);

/// Linearized equality constraints for a step Delta-psi: boundary rows
/// (rhs 0 — iterates already satisfy the endpoints) stacked with task rows
/// J_task * Phi(t_k), rhs -h(t_k). N spans the null space (orthonormal
/// columns) and dpsi0 is the minimum-norm particular solution.
struct EqualitySystem {
  Mat A;
  Vec b;
  Mat N;      // M(N+1) x (dim - rank)
  Vec dpsi0;  // minimum-norm solution of A x = b
  int rank = 0;
  bool least_squares = false;  // b inconsistent; dpsi0 is the LS solution
  std::vector<double> task_times;
};

EqualitySystem build_equality_system(const Trajectory& traj, VecRef theta0, VecRef thetag,
                                     const TaskSpec& task, const ChainModel& chain);

/// Null space and min-norm solution of an explicit system (the pieces of
/// build_equality_system, reusable for custom stacks). Stores A and b in
/// `out` so the result is a complete, self-consistent system.
void null_space_and_particular(const Mat& A, const Vec& b, EqualitySystem& out);

/// Joint-limit inequalities on the step: b_lo <= A_ieq * dpsi <= b_up with
/// A_ieq the stacked basis rows at the checkpoint grid, bounds shifted by
/// the current trajectory values so dpsi = 0 sits strictly inside iff the
/// iterate is strictly feasible.
struct InequalitySystem {
  Mat A;     // (K*M) x M(N+1)
  Vec b_lo;  // K*M
  Vec b_up;
  std::vector<double> times;

  int one_sided_rows() const { return 2 * static_cast<int>(b_lo.size()); }
  /// Row k of the one-sided stack [A; -A].
  Vec one_sided_row(int k) const;
  /// One-sided violation v = [A; -A] dpsi - [b_up; -b_lo].
  Vec violation(VecRef dpsi) const;
};

InequalitySystem build_inequality_system(const Trajectory& traj, VecRef theta_min, VecRef theta_max,
                                         int K);

std::vector<int> active_set(const Vec& violation);

/// Worst joint-limit violation of the current iterate over the system's
/// checkpoint grid (0 when feasible).
double v_inf(const InequalitySystem& ieq);

/// Largest componentwise task-box miss over the candidate checkpoint pool
/// (the checkpoints any selection round would retain first).
double final_task_residual(const Trajectory& traj, const TaskSpec& spec, const ChainModel& chain);

}  // namespace drafto
