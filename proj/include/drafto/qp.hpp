#pragma once

#include <optional>

#include "drafto/basis.hpp"
#include "drafto/constraints.hpp"
#include "drafto/types.hpp"

namespace drafto {

/// Convex QP, factor-2 convention:
///   minimize x' H x + 2 g' x
///   s.t.     A_eq x = b_eq,  b_lo <= A_ieq x <= b_up.
/// Either constraint block may be empty (0 rows).
struct QpProblem {
  Mat H;
  Vec g;
  Mat A_eq;
  Vec b_eq;
  Mat A_ieq;
  Vec b_lo, b_up;

  int dim() const { return static_cast<int>(g.size()); }
  void validate() const;
};

enum class QpStatus { Optimal, MaxIter, Infeasible };

struct QpSolution {
  Vec x;
  Vec y;  // multipliers for [A_eq; A_ieq] rows (warm-startable)
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

/// Optional warm start carried across related solves.
struct QpWarmStart {
  Vec x;
  Vec y;
};

/// Operator-splitting (ADMM) solver with over-relaxation, per-row penalty
/// weights (equality rows weighted up), periodic penalty rescaling, and an
/// active-set polish step on convergence.
QpSolution solve_qp(const QpProblem& p, double tol = 1e-8, int max_iter = 4000,
                    const std::optional<QpWarmStart>& warm = std::nullopt);

/// Smoothest trajectory coefficients meeting the endpoint conditions:
///   argmin psi' Q psi  s.t.  Phi(0) psi = theta0 - lift(0),
///                            Phi(T) psi = thetag - lift(T).
/// Throws TaskInfeasibleError when an endpoint violates the joint limits.
Vec init_trajectory(const BasisSet& basis, const BoundaryLift& lift, VecRef theta0, VecRef thetag,
                    VecRef theta_min, VecRef theta_max, const Mat& Q);

/// One feasibility-repair QP on the step dpsi around the current iterate:
///   minimize dpsi' H dpsi + 2 g' dpsi + lambda_reg ||dpsi||^2
///   s.t.     eq.A dpsi = eq.b,  ieq.b_lo <= ieq.A dpsi <= ieq.b_up.
QpSolution repair_step(const Mat& H, const Vec& g, const EqualitySystem& eq,
                       const InequalitySystem& ieq, double lambda_reg, double tol = 1e-8,
                       int max_iter = 4000);

}  // namespace drafto
