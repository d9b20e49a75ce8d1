#pragma once

#include <memory>
#include <string>
#include <vector>

#include "drafto/basis.hpp"
#include "drafto/constraints.hpp"
#include "drafto/kinematics.hpp"
#include "drafto/qp.hpp"
#include "drafto/scene.hpp"
#include "drafto/types.hpp"

namespace drafto {

struct SolverConfig {
  double rho_smooth = 0.1;   // smoothness weight in the working objective
  double sigma_jnt = 0.05;   // joint-limit penalty scale (cost ~ (v/sigma)^2)

  double lambda0 = 1e-3;     // initial damping
  double lambda_min = 1e-8;
  double lambda_max = 1e4;
  double eta_lo = 0.25;      // reduction-ratio thresholds
  double eta_hi = 0.75;
  double lambda_up = 4.0;    // damping escalation factor
  double lambda_down = 2.0;  // damping relaxation factor

  int window = 5;            // non-monotone acceptance window W
  double c1 = 1e-4;          // Armijo constant
  double backtrack = 0.5;    // step shrink factor
  int max_backtracks = 8;

  int k_check = 32;          // collision/penalty checkpoint count
  int k_limit = 128;         // dense feasibility checkpoint count
  int k_task = 8;            // task checkpoints kept per iteration
  double eps_jnt = 1e-6;     // terminal joint-limit feasibility tolerance

  int max_iterations = 200;  // N_max
  double beta_ema = 0.9;     // gradient/Hessian averaging decay

  double phase_tol_obs = 1e-3;  // phase I -> II: collision residual sum
  double phase_tol_jnt = 1e-3;  // phase I -> II: worst checkpoint violation

  double step_tol = 1e-6;    // termination: accepted step infinity norm
  double rel_j_tol = 1e-6;   // termination: relative J change over the window

  int max_repair = 10;       // terminal feasibility-repair budget
  double lambda_reg = 0.0;   // repair regulator; 0 = auto (10 tr(H)/dim)

  double qp_tol = 1e-8;
  int qp_max_iter = 4000;

  void validate() const;
};

/// A planning instance: where to go, in what world, under which task box.
struct PlanProblem {
  std::shared_ptr<const BasisSet> basis;
  BoundaryLift::Mode lift_mode = BoundaryLift::Mode::Constant;
  Vec theta0, thetag;
  Scene scene;
  MultiChainModel model;
  TaskSpec task;  // empty() = no end-effector box

  Trajectory make_trajectory(Vec psi) const;
  void validate() const;
};

enum class Planner { Drafto, DraftoGn, Facto };

Planner planner_from_string(const std::string& name);
std::string to_string(Planner p);

enum class SolveStatus { Converged, MaxIter, PartialFeasible, TaskInfeasible };

std::string to_string(SolveStatus s);

/// One outer iteration of the solve, as written to trace.csv.
struct IterRecord {
  int iter = 0;
  double J = 0.0;      // working objective after the acceptance decision
  double mred = 0.0;   // model reduction predicted for the unit step
  double ared = 0.0;   // actual reduction at alpha = 1
  double lambda = 0.0; // damping used for this step
  double alpha = 0.0;  // accepted step length (0 when rejected)
  int phase = 1;
  bool accepted = false;
  int active_set_size = 0;
  long wall_us = 0;
  bool nondescent = false;  // candidate had dpsi' g >= 0
};

struct SolveResult {
  Vec psi;
  SolveStatus status = SolveStatus::MaxIter;
  std::vector<IterRecord> trace;
  double initial_objective = 0.0;  // J at the initialization point

  double init_seconds = 0.0;
  double loop_seconds = 0.0;
  double repair_seconds = 0.0;
  double total_seconds() const { return init_seconds + loop_seconds + repair_seconds; }

  double final_v_inf = 0.0;   // dense-grid joint-limit violation at psi
  int repair_iterations = 0;
  int iterations = 0;         // outer loop iterations run
  bool dense_success = false; // dense collision/limit validation of psi

  std::string error;  // populated for TaskInfeasible
};

/// Bias-corrected exponential moving average over the collision gradient
/// and its outer-product Hessian. Step 1 reproduces the input exactly.
class UemaState {
 public:
  UemaState(int dim, double beta);

  /// Push raw accumulators; returns the bias-corrected averages.
  void update(const Vec& g_hat, const Mat& H_hat);
  const Vec& gradient() const { return g_corr_; }
  const Mat& hessian() const { return H_corr_; }
  int step() const { return i_; }

 private:
  double beta_;
  int i_ = 0;
  Vec s_g_;
  Mat s_H_;
  Vec g_corr_;
  Mat H_corr_;
};

/// Joint-limit hinge penalty terms over the active rows:
///   g_jnt = sigma^-2 sum v_k a_k,  H_jnt = sigma^-2 sum a_k a_k'.
void penalty_terms(const InequalitySystem& ieq, const Vec& violation,
                   const std::vector<int>& active, double sigma_jnt, Vec& g_jnt, Mat& H_jnt);

/// Damped step in the null-space coordinates: solves
/// (N'HN + lambda I) z = -N'(H dpsi0 + g), recovers dpsi = dpsi0 + N z and
/// the predicted model reduction.
struct ReducedStep {
  Vec z;
  Vec dpsi;
  double mred = 0.0;
  double lambda_used = 0.0;  // after any escalation needed to factor
};

ReducedStep reduced_step(const Mat& H, const Vec& g, const EqualitySystem& eq, double lambda);

/// Trust-ratio damping schedule.
double lambda_update(double lambda, double ratio, const SolverConfig& cfg);

/// Working objective J = rho psi'Q psi + sum r_k^2 + sigma^-2 sum hinge(v)^2
/// evaluated from scratch (used by tests as a composition oracle).
double working_objective(const PlanProblem& problem, const SolverConfig& cfg, const Mat& Q,
                         const Trajectory& traj, bool with_penalty);

SolveResult drafto_solve(const PlanProblem& problem, const SolverConfig& cfg = {});
SolveResult facto_baseline_solve(const PlanProblem& problem, const SolverConfig& cfg = {});
SolveResult gn_ablation_solve(const PlanProblem& problem, const SolverConfig& cfg = {});

SolveResult solve_with(Planner planner, const PlanProblem& problem, const SolverConfig& cfg = {});

}  // namespace drafto
