#include "drafto/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "drafto/errors.hpp"

namespace drafto {

std::vector<double> checkpoints(int K, double T) {
  if (K < 2) throw ConfigError("checkpoint count must be >= 2");
  std::vector<double> t(K);
  for (int k = 0; k < K; ++k) t[k] = static_cast<double>(k) / (K - 1) * T;
  return t;
}

void TaskSpec::validate() const {
  if (x_min.size() != x_max.size()) throw ConfigError("task box bounds must match in length");
  for (int i = 0; i < x_min.size(); ++i) {
    if (!(x_min(i) <= x_max(i))) throw ConfigError("task box needs x_min <= x_max");
  }
  if (k_task < 1) throw ConfigError("task checkpoint count must be >= 1");
  if (candidate_pool < k_task) throw ConfigError("task candidate pool smaller than kept count");
}

TaskResidual task_residual(const TaskSpec& spec, VecRef x) {
  TaskResidual out;
  out.h = Vec::Zero(x.size());
  out.active.assign(static_cast<std::size_t>(x.size()), false);
  for (int i = 0; i < x.size(); ++i) {
    const double clamped = std::min(std::max(x(i), spec.x_min(i)), spec.x_max(i));
    out.h(i) = x(i) - clamped;
    out.active[static_cast<std::size_t>(i)] = out.h(i) != 0.0;
  }
  return out;
}

BoundaryRows boundary_rows(const BasisSet& basis, const BoundaryLift& lift, VecRef theta0,
                           VecRef thetag) {
  const int m = static_cast<int>(theta0.size());
  BoundaryRows out;
  out.rows = Mat::Zero(2 * m, m * basis.size());
  out.rows.topRows(m) = basis_stack(basis, m, 0.0);
  out.rows.bottomRows(m) = basis_stack(basis, m, basis.horizon());
  out.rhs = Vec(2 * m);
  out.rhs.head(m) = theta0 - lift.value(0.0);
  out.rhs.tail(m) = thetag - lift.value(basis.horizon());
  return out;
}

std::vector<double> select_task_checkpoints(const Trajectory& traj, const TaskSpec& spec,
                                            const ChainModel& chain,
                                            const std::vector<double>& candidates, int keep) {
  if (static_cast<int>(candidates.size()) < keep) {
    throw ConfigError("task candidate pool smaller than the number of checkpoints to keep");
  }
  std::vector<std::pair<double, double>> scored;  // (norm, time)
  scored.reserve(candidates.size());
  for (double t : candidates) {
    // The task always binds the first chain; its joints lead the stack.
    const Posture p = ee_posture(chain, traj.value(t).head(chain.dof()));
    scored.emplace_back(task_residual(spec, p.x).h.norm(), t);
  }
  std::vector<int> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scored[a].first != scored[b].first) return scored[a].first > scored[b].first;
    return scored[a].second < scored[b].second;  // ties: earlier time wins
  });
  std::vector<double> out;
  out.reserve(keep);
  for (int i = 0; i < keep; ++i) out.push_back(scored[idx[i]].second);
  std::sort(out.begin(), out.end());
  return out;
}

void null_space_and_particular(const Mat& A, const Vec& b, EqualitySystem& out) {
  if (&A != &out.A) out.A = A;
  if (&b != &out.b) out.b = b;
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  const double tol = (sv.size() > 0 ? sv(0) : 0.0) * 1e-10;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  out.rank = rank;
  out.N = svd.matrixV().rightCols(A.cols() - rank);

  // Minimum-norm (pseudo-inverse) solution.
  Vec y = svd.matrixU().leftCols(sv.size()).transpose() * b;
  for (int i = 0; i < sv.size(); ++i) y(i) = (i < rank) ? y(i) / sv(i) : 0.0;
  out.dpsi0 = svd.matrixV().leftCols(sv.size()) * y;
  out.least_squares = (A * out.dpsi0 - b).lpNorm<Eigen::Infinity>() > 1e-8;
}

EqualitySystem build_equality_system(const Trajectory& traj, VecRef theta0, VecRef thetag,
                                     const TaskSpec& task, const ChainModel& chain) {
  const BasisSet& basis = *traj.basis;
  const int dim = traj.coeff_count();
  const BoundaryRows bnd = boundary_rows(basis, traj.lift, theta0, thetag);

  // Boundary rhs is the actual residual, not an assumed zero: iterates are
  // kept on the endpoints by the null-space steps, but tolerance-level drift
  // (e.g. from the repair stage's operator-splitting solves) must be pulled
  // back rather than frozen in.
  const Vec bnd_res = bnd.rhs - bnd.rows * traj.psi;

  EqualitySystem out;
  if (task.empty()) {
    out.A = bnd.rows;
    out.b = bnd_res;
  } else {
    const int px = posture_dim(chain);
    if (task.x_min.size() != px) {
      throw ConfigError("task box dimension does not match the posture dimension");
    }
    const std::vector<double> pool = checkpoints(task.candidate_pool, basis.horizon());
    out.task_times = select_task_checkpoints(traj, task, chain, pool, task.k_task);

    const int rows = static_cast<int>(bnd.rows.rows()) +
                     px * static_cast<int>(out.task_times.size());
    out.A = Mat::Zero(rows, dim);
    out.b = Vec::Zero(rows);
    out.A.topRows(bnd.rows.rows()) = bnd.rows;
    out.b.head(bnd.rows.rows()) = bnd_res;
    int r = static_cast<int>(bnd.rows.rows());
    for (double t : out.task_times) {
      const Vec theta = traj.value(t);
      const Posture p = ee_posture(chain, theta.head(chain.dof()));
      const TaskResidual h = task_residual(task, p.x);
      // Zero the rows of in-box coordinates and pad to the stacked joint
      // count (the task chain's joints lead the stack).
      Mat Jh = Mat::Zero(px, traj.dofs);
      for (int i = 0; i < px; ++i) {
        if (h.active[static_cast<std::size_t>(i)]) {
          Jh.row(i).head(chain.dof()) = p.jacobian.row(i);
        }
      }
      out.A.middleRows(r, px) = Jh * basis_stack(basis, traj.dofs, t);
      out.b.segment(r, px) = -h.h;
      r += px;
    }
  }
  null_space_and_particular(out.A, out.b, out);
  return out;
}

InequalitySystem build_inequality_system(const Trajectory& traj, VecRef theta_min, VecRef theta_max,
                                         int K) {
  const BasisSet& basis = *traj.basis;
  const int m = traj.dofs;
  InequalitySystem out;
  out.times = checkpoints(K, basis.horizon());
  out.A = stack_basis_rows(basis, m, out.times);
  const Vec current = out.A * traj.psi + stack_lift(traj.lift, out.times);
  out.b_lo = Vec(K * m);
  out.b_up = Vec(K * m);
  for (int k = 0; k < K; ++k) {
    out.b_lo.segment(k * m, m) = theta_min - current.segment(k * m, m);
    out.b_up.segment(k * m, m) = theta_max - current.segment(k * m, m);
  }
  return out;
}

Vec InequalitySystem::one_sided_row(int k) const {
  const int n = static_cast<int>(b_lo.size());
  if (k < n) return A.row(k);
  return -A.row(k - n);
}

Vec InequalitySystem::violation(VecRef dpsi) const {
  const Vec Ad = A * dpsi;
  const int n = static_cast<int>(b_lo.size());
  Vec v(2 * n);
  v.head(n) = Ad - b_up;
  v.tail(n) = b_lo - Ad;
  return v;
}

std::vector<int> active_set(const Vec& violation) {
  std::vector<int> idx;
  for (int k = 0; k < violation.size(); ++k) {
    if (violation(k) > 0.0) idx.push_back(k);
  }
  return idx;
}

double v_inf(const InequalitySystem& ieq) {
  const Vec v = ieq.violation(Vec::Zero(ieq.A.cols()));
  return std::max(0.0, v.maxCoeff());
}

double final_task_residual(const Trajectory& traj, const TaskSpec& spec, const ChainModel& chain) {
  if (spec.empty()) return 0.0;
  double worst = 0.0;
  for (double t : checkpoints(spec.candidate_pool, traj.basis->horizon())) {
    const Posture p = ee_posture(chain, traj.value(t).head(chain.dof()));
    worst = std::max(worst, task_residual(spec, p.x).h.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace drafto
