#include "drafto/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Cholesky>

#include "drafto/errors.hpp"
#include "drafto/log.hpp"

namespace drafto {

void SolverConfig::validate() const {
  if (!(lambda_min > 0.0 && lambda_min <= lambda0 && lambda0 <= lambda_max)) {
    throw ConfigError("damping bounds must satisfy 0 < lambda_min <= lambda0 <= lambda_max");
  }
  if (!(c1 > 0.0 && c1 < 1.0)) throw ConfigError("c1 must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack factor must lie in (0, 1)");
  if (window < 1) throw ConfigError("acceptance window must be >= 1");
  if (!(sigma_jnt > 0.0)) throw ConfigError("sigma_jnt must be positive");
  if (!(rho_smooth > 0.0)) throw ConfigError("rho_smooth must be positive");
  if (k_check < 2 || k_limit < 2) throw ConfigError("checkpoint counts must be >= 2");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (max_repair < 0) throw ConfigError("max_repair must be >= 0");
  if (!(beta_ema > 0.0 && beta_ema < 1.0)) throw ConfigError("beta_ema must lie in (0, 1)");
}

Trajectory PlanProblem::make_trajectory(Vec psi) const {
  Trajectory t;
  t.basis = basis;
  t.lift = (lift_mode == BoundaryLift::Mode::Constant)
               ? BoundaryLift::constant(theta0)
               : BoundaryLift::linear(theta0, thetag, basis->horizon());
  t.dofs = model.total_dof();
  t.psi = std::move(psi);
  return t;
}

void PlanProblem::validate() const {
  if (!basis) throw ConfigError("problem has no basis");
  model.validate();
  scene.validate();
  const int m = model.total_dof();
  if (theta0.size() != m || thetag.size() != m) {
    throw ConfigError("endpoint joint vectors must have length " + std::to_string(m));
  }
  if (!task.empty()) {
    task.validate();
    if (task.x_min.size() != posture_dim(model.chains.front())) {
      throw ConfigError("task box dimension does not match the posture dimension");
    }
  }
}

Planner planner_from_string(const std::string& name) {
  if (name == "drafto") return Planner::Drafto;
  if (name == "drafto_gn") return Planner::DraftoGn;
  if (name == "facto") return Planner::Facto;
  throw ConfigError("unknown planner: " + name + " (expected drafto, drafto_gn, facto)");
}

std::string to_string(Planner p) {
  switch (p) {
    case Planner::Drafto: return "drafto";
    case Planner::DraftoGn: return "drafto_gn";
    case Planner::Facto: return "facto";
  }
  return "?";
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::PartialFeasible: return "PartialFeasible";
    case SolveStatus::TaskInfeasible: return "TaskInfeasible";
  }
  return "?";
}

UemaState::UemaState(int dim, double beta)
    : beta_(beta),
      s_g_(Vec::Zero(dim)),
      s_H_(Mat::Zero(dim, dim)),
      g_corr_(Vec::Zero(dim)),
      H_corr_(Mat::Zero(dim, dim)) {}

void UemaState::update(const Vec& g_hat, const Mat& H_hat) {
  ++i_;
  s_g_ = beta_ * s_g_ + (1.0 - beta_) * g_hat;
  s_H_ = beta_ * s_H_ + (1.0 - beta_) * H_hat;
  const double corr = 1.0 - std::pow(beta_, i_);
  g_corr_ = s_g_ / corr;
  H_corr_ = s_H_ / corr;
}

void penalty_terms(const InequalitySystem& ieq, const Vec& violation,
                   const std::vector<int>& active, double sigma_jnt, Vec& g_jnt, Mat& H_jnt) {
  const int dim = static_cast<int>(ieq.A.cols());
  g_jnt = Vec::Zero(dim);
  H_jnt = Mat::Zero(dim, dim);
  const double s = 1.0 / (sigma_jnt * sigma_jnt);
  for (int k : active) {
    const Vec a = ieq.one_sided_row(k);
    g_jnt.noalias() += s * violation(k) * a;
    H_jnt.noalias() += s * a * a.transpose();
  }
}

ReducedStep reduced_step(const Mat& H, const Vec& g, const EqualitySystem& eq, double lambda) {
  ReducedStep out;
  const int nz = static_cast<int>(eq.N.cols());
  out.lambda_used = lambda;
  if (nz == 0) {
    // Fully determined by the equalities: nothing to optimize.
    out.z = Vec(0);
    out.dpsi = eq.dpsi0;
    out.mred = 0.0;
    return out;
  }
  const Mat H_red = eq.N.transpose() * H * eq.N;
  const Vec g_red = eq.N.transpose() * (H * eq.dpsi0 + g);

  Eigen::LLT<Mat> llt;
  double lam = lambda;
  for (int attempt = 0;; ++attempt) {
    Mat A = H_red;
    A.diagonal().array() += lam;
    llt.compute(A);
    if (llt.info() == Eigen::Success) break;
    if (attempt > 60) throw ConfigError("reduced step: model Hessian cannot be factored");
    lam = std::max(lam * 10.0, 1e-12);
  }
  out.lambda_used = lam;

  // Model reduction evaluated exactly as the printed two-solve display;
  // numerically equal to -(z'H_red z + 2 g_red'z) for symmetric H_red.
  const Vec y = llt.solve(g_red);
  const Vec w = llt.solve(H_red * y);
  out.z = -y;
  out.mred = g_red.dot(2.0 * y - w);
  out.dpsi = eq.dpsi0 + eq.N * out.z;
  return out;
}

double lambda_update(double lambda, double ratio, const SolverConfig& cfg) {
  if (ratio >= cfg.eta_hi) return std::max(cfg.lambda_min, lambda / cfg.lambda_down);
  if (ratio <= cfg.eta_lo) return std::min(cfg.lambda_max, lambda * cfg.lambda_up);
  return lambda;
}

double working_objective(const PlanProblem& problem, const SolverConfig& cfg, const Mat& Q,
                         const Trajectory& traj, bool with_penalty) {
  double J = cfg.rho_smooth * traj.psi.dot(Q * traj.psi);
  const std::vector<double> cps = checkpoints(cfg.k_check, traj.basis->horizon());
  for (double t : cps) {
    const double r = obstacle_cost(problem.scene, problem.model, traj.value(t));
    J += r * r;
  }
  if (with_penalty) {
    const InequalitySystem ieq = build_inequality_system(traj, problem.model.stacked_theta_min(),
                                                         problem.model.stacked_theta_max(),
                                                         cfg.k_check);
    const Vec v = ieq.violation(Vec::Zero(traj.coeff_count()));
    const double s = 1.0 / (cfg.sigma_jnt * cfg.sigma_jnt);
    for (int k = 0; k < v.size(); ++k) {
      const double h = std::max(0.0, v(k));
      J += s * h * h;
    }
  }
  return J;
}

namespace {

using Clock = std::chrono::steady_clock;

// End-effector box residual the repair stage drives to zero. Kept internal:
// it is a property of the repair's Newton contraction, not a user knob.
constexpr double kTaskTol = 1e-4;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// J of a candidate psi + dpsi against the systems built at psi. The
/// inequality rows are affine in the step, so the penalty can reuse the
/// current system; collision residuals are re-evaluated on the candidate.
double candidate_objective(const PlanProblem& P, const SolverConfig& cfg, const Mat& Q,
                           const Trajectory& traj, const std::vector<double>& cps,
                           const InequalitySystem& ieq, const Vec& dpsi, bool with_penalty) {
  const Vec psi_c = traj.psi + dpsi;
  double J = cfg.rho_smooth * psi_c.dot(Q * psi_c);
  Trajectory cand = traj;
  cand.psi = psi_c;
  for (double t : cps) {
    const double r = obstacle_cost(P.scene, P.model, cand.value(t));
    J += r * r;
  }
  if (with_penalty) {
    const Vec v = ieq.violation(dpsi);
    const double s = 1.0 / (cfg.sigma_jnt * cfg.sigma_jnt);
    for (int k = 0; k < v.size(); ++k) {
      const double h = std::max(0.0, v(k));
      J += s * h * h;
    }
  }
  return J;
}

SolveResult run_solve(const PlanProblem& P, const SolverConfig& cfg, Planner mode) {
  P.validate();
  cfg.validate();
  SolveResult res;
  const auto t_init = Clock::now();

  const int Mtot = P.model.total_dof();
  const Vec theta_min = P.model.stacked_theta_min();
  const Vec theta_max = P.model.stacked_theta_max();
  const SmoothnessMatrix sm = smoothness_matrix(*P.basis, Mtot);
  const Mat& Q = sm.Q;
  const int dim = static_cast<int>(Q.rows());
  const bool with_penalty = (mode != Planner::Facto);

  Trajectory traj;
  try {
    const BoundaryLift lift = P.make_trajectory(Vec::Zero(dim)).lift;
    if (!config_collision_free(P.scene, P.model, P.theta0)) {
      throw TaskInfeasibleError("start configuration is in collision");
    }
    if (!config_collision_free(P.scene, P.model, P.thetag)) {
      throw TaskInfeasibleError("goal configuration is in collision");
    }
    const Vec psi0 = init_trajectory(*P.basis, lift, P.theta0, P.thetag, theta_min, theta_max, Q);
    traj = P.make_trajectory(psi0);
  } catch (const TaskInfeasibleError& e) {
    res.status = SolveStatus::TaskInfeasible;
    res.error = e.what();
    res.init_seconds = seconds_since(t_init);
    return res;
  }
  res.init_seconds = seconds_since(t_init);

  const auto t_loop = Clock::now();
  const std::vector<double> cps = checkpoints(cfg.k_check, P.basis->horizon());
  const ChainModel& task_chain = P.model.chains.front();
  TaskSpec task = P.task;
  if (!task.empty()) {
    task.k_task = cfg.k_task;
    task.candidate_pool = std::max(task.candidate_pool, 4 * cfg.k_task);
  }

  // Without task rows the equality system never changes: the boundary null
  // space is constant and dpsi0 = 0.
  EqualitySystem eq = build_equality_system(traj, P.theta0, P.thetag, task, task_chain);

  UemaState uema(dim, cfg.beta_ema);
  double lambda = cfg.lambda0;
  int phase = 1;
  std::deque<double> window;
  double J_cur = working_objective(P, cfg, Q, traj, with_penalty);
  res.initial_objective = J_cur;
  window.push_back(J_cur);

  // Model state frozen for the repair stage.
  Mat H_last;
  Vec g_last, psi_last;

  std::optional<QpWarmStart> facto_warm;
  const int phase_switch_iter = std::max(1, cfg.max_iterations / 2);
  bool converged = false;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const auto t_iter = Clock::now();

    // Residuals and flattened model at the current iterate.
    const std::vector<ObstacleResidual> rs = obstacle_residuals(P.scene, P.model, traj, cps);
    const InequalitySystem ieq = build_inequality_system(traj, theta_min, theta_max, cfg.k_check);
    const Vec v = ieq.violation(Vec::Zero(dim));
    const std::vector<int> act = active_set(v);

    double sum_r = 0.0, sum_r2 = 0.0;
    Vec g_hat = Vec::Zero(dim);
    Mat H_hat = Mat::Zero(dim, dim);
    for (const ObstacleResidual& r : rs) {
      sum_r += r.r;
      sum_r2 += r.r * r.r;
      g_hat.noalias() += r.r * r.g;
      H_hat.noalias() += r.g * r.g.transpose();
    }
    uema.update(g_hat, H_hat);

    double penalty = 0.0;
    if (with_penalty) {
      const double s = 1.0 / (cfg.sigma_jnt * cfg.sigma_jnt);
      for (int k : act) penalty += s * v(k) * v(k);
    }
    J_cur = cfg.rho_smooth * traj.psi.dot(Q * traj.psi) + sum_r2 + penalty;

    Vec g = cfg.rho_smooth * (Q * traj.psi) + uema.gradient();
    Mat H = cfg.rho_smooth * Q + uema.hessian();
    if (with_penalty && !act.empty()) {
      Vec g_jnt;
      Mat H_jnt;
      penalty_terms(ieq, v, act, cfg.sigma_jnt, g_jnt, H_jnt);
      g += g_jnt;
      H += H_jnt;
    }
    H_last = H;
    g_last = g;
    psi_last = traj.psi;

    if (!task.empty()) {
      eq = build_equality_system(traj, P.theta0, P.thetag, task, task_chain);
    }

    // Phase switch: once near feasibility (or past the iteration budget's
    // midpoint) move to the guarded non-monotone tail. Never switches back.
    const double max_violation = std::max(0.0, v.maxCoeff());
    if (phase == 1 && mode != Planner::DraftoGn &&
        ((sum_r <= cfg.phase_tol_obs && max_violation <= cfg.phase_tol_jnt) ||
         iter >= phase_switch_iter)) {
      phase = 2;
    }

    // Step computation.
    Vec dpsi;
    double mred = 0.0;
    double lambda_used = lambda;
    bool step_ok = true;
    if (mode == Planner::Facto) {
      const InequalitySystem ieq_lmt =
          build_inequality_system(traj, theta_min, theta_max, cfg.k_limit);
      QpProblem qp;
      qp.H = H;
      qp.H.diagonal().array() += lambda;
      qp.g = g;
      qp.A_eq = eq.A;
      qp.b_eq = eq.b;
      qp.A_ieq = ieq_lmt.A;
      qp.b_lo = ieq_lmt.b_lo;
      qp.b_up = ieq_lmt.b_up;
      if (facto_warm && facto_warm->y.size() != qp.A_eq.rows() + qp.A_ieq.rows()) {
        facto_warm.reset();  // task-row count changed; stale duals no longer line up
      }
      const QpSolution sol = solve_qp(qp, cfg.qp_tol, cfg.qp_max_iter, facto_warm);
      if (sol.status == QpStatus::Infeasible) {
        step_ok = false;
        dpsi = Vec::Zero(dim);
      } else {
        dpsi = sol.x;
        facto_warm = QpWarmStart{Vec::Zero(dim), sol.y};
        mred = -(dpsi.dot(H * dpsi) + 2.0 * g.dot(dpsi));
      }
    } else {
      const ReducedStep st = reduced_step(H, g, eq, lambda);
      dpsi = st.dpsi;
      mred = st.mred;
      lambda_used = st.lambda_used;
    }

    // Candidate evaluation and acceptance.
    const double J1 =
        step_ok ? candidate_objective(P, cfg, Q, traj, cps, ieq, dpsi, with_penalty) : J_cur;
    const double ared = J_cur - J1;
    const bool nondescent = step_ok && dpsi.dot(g) >= 0.0;

    bool accepted = false;
    double alpha_acc = 0.0;
    double J_new = J_cur;
    if (step_ok) {
      if (phase == 1) {
        accepted = true;
        alpha_acc = 1.0;
        J_new = J1;
      } else {
        const double J_bar = *std::max_element(window.begin(), window.end());
        double alpha = 1.0;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
          const double Jc =
              (bt == 0) ? J1
                        : candidate_objective(P, cfg, Q, traj, cps, ieq, alpha * dpsi, with_penalty);
          // Non-monotone Armijo against the window max. The slope term only
          // ever tightens the bound: correction steps can point uphill, and
          // those must still stay at or below the window ceiling.
          if (Jc <= J_bar + cfg.c1 * alpha * std::min(0.0, dpsi.dot(g))) {
            accepted = true;
            alpha_acc = alpha;
            J_new = Jc;
            break;
          }
          alpha *= cfg.backtrack;
        }
      }
    }

    const double ratio = (mred > 0.0) ? ared / mred : -std::numeric_limits<double>::infinity();
    lambda = accepted ? lambda_update(lambda_used, ratio, cfg)
                      : std::min(cfg.lambda_max, lambda_used * cfg.lambda_up);

    if (accepted) {
      traj.psi += alpha_acc * dpsi;
      window.push_back(J_new);
      while (static_cast<int>(window.size()) > cfg.window) window.pop_front();
    }

    IterRecord rec;
    rec.iter = iter;
    rec.J = J_new;
    rec.mred = mred;
    rec.ared = ared;
    rec.lambda = lambda_used;
    rec.alpha = alpha_acc;
    rec.phase = phase;
    rec.accepted = accepted;
    rec.active_set_size = static_cast<int>(act.size());
    rec.wall_us = static_cast<long>(seconds_since(t_iter) * 1e6);
    rec.nondescent = nondescent;
    res.trace.push_back(rec);

    if (accepted) {
      const double step_inf = (alpha_acc * dpsi).lpNorm<Eigen::Infinity>();
      const double w_max = *std::max_element(window.begin(), window.end());
      const double w_min = *std::min_element(window.begin(), window.end());
      const double rel = (w_max - w_min) / std::max(1.0, std::abs(w_max));
      if (step_inf <= cfg.step_tol && rel <= cfg.rel_j_tol) {
        converged = true;
        break;
      }
    }
  }
  res.iterations = static_cast<int>(res.trace.size());
  res.status = converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  res.loop_seconds = seconds_since(t_loop);

  // Terminal feasibility: measure limit violation and end-effector box
  // residual on the dense grid and repair whichever is out of tolerance.
  const auto t_repair = Clock::now();
  InequalitySystem dense = build_inequality_system(traj, theta_min, theta_max, cfg.k_limit);
  double vinf = v_inf(dense);
  double task_defect = task.empty() ? 0.0 : final_task_residual(traj, task, task_chain);
  const auto defect = [&cfg](double v, double h) {
    return std::max(v - cfg.eps_jnt, 0.0) + std::max(h - kTaskTol, 0.0);
  };
  if (mode != Planner::Facto && cfg.max_repair > 0 && defect(vinf, task_defect) > 0.0) {
    // The local model is frozen at the last linearization point; only its
    // gradient is re-centered as the iterate moves. The box rows are
    // re-linearized every round, so each round is a Newton step on the
    // residual while the damped model keeps the correction small.
    Vec best_psi = traj.psi;
    double best_defect = defect(vinf, task_defect);
    double best_vinf = vinf;
    const double lreg =
        cfg.lambda_reg > 0.0 ? cfg.lambda_reg : 10.0 * H_last.trace() / static_cast<double>(dim);
    // The correction QPs are solved to tolerance; endpoints must hold to
    // machine precision, so each round ends with an exact minimum-norm
    // projection onto the boundary rows.
    const BoundaryRows bnd = boundary_rows(*P.basis, traj.lift, P.theta0, P.thetag);
    const Eigen::LLT<Mat> bnd_gram((bnd.rows * bnd.rows.transpose()).eval());
    const auto project_boundary = [&](Vec& psi) {
      psi += bnd.rows.transpose() * bnd_gram.solve(bnd.rhs - bnd.rows * psi);
    };
    for (int ri = 1; ri <= cfg.max_repair; ++ri) {
      res.repair_iterations = ri;
      if (!task.empty()) {
        eq = build_equality_system(traj, P.theta0, P.thetag, task, task_chain);
      }
      dense = build_inequality_system(traj, theta_min, theta_max, cfg.k_limit);
      // Only rows near (or past) a limit can activate under the damped
      // correction; the rest are screened out to keep the QP small. The full
      // grid is re-measured after every round, so a row that drifts into the
      // band is picked up by the next round.
      constexpr double kScreenBand = 0.1;
      std::vector<int> keep;
      for (int i = 0; i < dense.A.rows(); ++i) {
        if (std::min(-dense.b_lo(i), dense.b_up(i)) <= kScreenBand) keep.push_back(i);
      }
      InequalitySystem near;
      near.A = Mat(static_cast<int>(keep.size()), dim);
      near.b_lo = Vec(static_cast<int>(keep.size()));
      near.b_up = Vec(static_cast<int>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j) {
        near.A.row(static_cast<int>(j)) = dense.A.row(keep[j]);
        near.b_lo(static_cast<int>(j)) = dense.b_lo(keep[j]);
        near.b_up(static_cast<int>(j)) = dense.b_up(keep[j]);
      }
      const Vec g_rc = g_last + H_last * (traj.psi - psi_last);
      const QpSolution sol =
          repair_step(H_last, g_rc, eq, near, lreg, cfg.qp_tol, cfg.qp_max_iter);
      if (sol.status == QpStatus::Infeasible) {
        log_debug("repair round " + std::to_string(ri) + ": correction QP infeasible");
        break;
      }
      traj.psi += sol.x;
      project_boundary(traj.psi);
      dense = build_inequality_system(traj, theta_min, theta_max, cfg.k_limit);
      vinf = v_inf(dense);
      task_defect = task.empty() ? 0.0 : final_task_residual(traj, task, task_chain);
      log_debug("repair round " + std::to_string(ri) + ": step " +
                std::to_string(sol.x.lpNorm<Eigen::Infinity>()) + " v_inf " +
                std::to_string(vinf) + " box residual " + std::to_string(task_defect));
      if (defect(vinf, task_defect) < best_defect) {
        best_defect = defect(vinf, task_defect);
        best_psi = traj.psi;
        best_vinf = vinf;
      }
      if (defect(vinf, task_defect) == 0.0) break;
    }
    if (defect(vinf, task_defect) > best_defect) {
      // Budget exhausted: fall back to the least-defective iterate seen.
      traj.psi = best_psi;
      vinf = best_vinf;
    }
    if (vinf > cfg.eps_jnt) res.status = SolveStatus::PartialFeasible;
  }
  res.repair_seconds = seconds_since(t_repair);
  res.final_v_inf = vinf;
  res.psi = traj.psi;
  res.dense_success = dense_success_check(traj, P.scene, P.model);
  return res;
}

}  // namespace

SolveResult drafto_solve(const PlanProblem& problem, const SolverConfig& cfg) {
  return run_solve(problem, cfg, Planner::Drafto);
}

SolveResult facto_baseline_solve(const PlanProblem& problem, const SolverConfig& cfg) {
  return run_solve(problem, cfg, Planner::Facto);
}

SolveResult gn_ablation_solve(const PlanProblem& problem, const SolverConfig& cfg) {
  return run_solve(problem, cfg, Planner::DraftoGn);
}

SolveResult solve_with(Planner planner, const PlanProblem& problem, const SolverConfig& cfg) {
  return run_solve(problem, cfg, planner);
}

}  // namespace drafto
