// Acceptance harness: exercises the end-to-end contracts of the planner on
// the built-in desk-scale worlds and prints one pass/fail line per
// criterion. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "drafto/bench.hpp"
#include "drafto/io.hpp"
#include "drafto/solver.hpp"
#include "oracles.hpp"

using namespace drafto;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool ok = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const char* label, const Outcome& o) {
  std::printf("[%s] criterion %d: %s — %s\n", o.ok ? "PASS" : "FAIL", id, label,
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.ok) ++g_failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences.

Outcome criterion_gradients() {
  const double t0 = now_s();
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  ChainModel planar = ChainModel::planar({0.9, 0.8, 0.6}, Vec::Constant(3, -2.9),
                                         Vec::Constant(3, 2.9));
  planar.add_default_balls(0.1);
  ChainModel spatial = ChainModel::spatial(
      {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY()},
      {Vec3(0, 0, 0.3), Vec3(0, 0, 0.2), Vec3(0.4, 0, 0), Vec3(0.3, 0, 0), Vec3(0.2, 0, 0)},
      Vec::Constant(5, -2.8), Vec::Constant(5, 2.8));
  spatial.ee_offset = Vec3(0.1, 0, 0);
  spatial.add_default_balls(0.07);

  const auto basis = std::make_shared<BasisSet>(BasisFamily::DerivOrthogonal, 6, 1.0);
  int cases = 0;
  double worst = 0.0;

  // (a) Obstacle-term gradient d(sum r_k^2)/dpsi = sum 2 r_k g_k, filtered
  // away from hinge kinks by an activation-distance margin.
  for (const ChainModel& chain : {planar, spatial}) {
    const MultiChainModel model = MultiChainModel::single(chain);
    Scene scene;
    scene.margin = 0.25;
    if (chain.kind == ChainModel::Kind::Planar) {
      scene.obstacles.push_back(Sphere{Vec3(1.2, 0.5, 0), 0.4});
      scene.obstacles.push_back(AxisAlignedBox{Vec3(-0.4, -1.6, -1), Vec3(0.7, -0.6, 1)});
    } else {
      scene.obstacles.push_back(Sphere{Vec3(0.6, 0.2, 0.6), 0.35});
      scene.obstacles.push_back(AxisAlignedBox{Vec3(-0.2, -0.9, 0.0), Vec3(0.5, -0.3, 0.9)});
    }
    const std::vector<double> times = checkpoints(5, 1.0);
    int taken = 0;
    while (taken < 22) {
      Trajectory traj;
      traj.basis = basis;
      traj.dofs = chain.dof();
      traj.lift = BoundaryLift::constant(Vec::Zero(chain.dof()));
      traj.psi = Vec(traj.coeff_count());
      for (int i = 0; i < traj.psi.size(); ++i) traj.psi(i) = 1.2 * u(rng);

      // Kink filter: every ball clearly on one side of the hinge boundary.
      bool near_kink = false;
      double total = 0.0;
      for (double t : times) {
        const auto states = multi_ccb_states(model, traj.value(t));
        for (const BallState& b : states.balls) {
          const double d = signed_distance(scene, b.center, b.radius);
          if (std::abs(scene.margin - d) < 1e-3) near_kink = true;
          total += std::max(0.0, scene.margin - d);
        }
      }
      if (near_kink || total < 1e-2) continue;

      const auto residuals = obstacle_residuals(scene, model, traj, times);
      Vec analytic = Vec::Zero(traj.psi.size());
      for (const auto& r : residuals) analytic += 2.0 * r.r * r.g;
      auto f = [&](const Vec& psi) {
        Trajectory t2 = traj;
        t2.psi = psi;
        double s = 0.0;
        for (const auto& r : obstacle_residuals(scene, model, t2, times)) s += r.r * r.r;
        return s;
      };
      const Vec fd = oracles::fd_gradient(f, traj.psi);
      worst = std::max(worst, oracles::rel_err(analytic, fd));
      ++taken;
      ++cases;
    }
  }

  // (b) Joint-limit penalty gradient (half-gradient convention: the model
  // carries g with dJ = 2 g).
  {
    const int dofs = 2;
    int taken = 0;
    while (taken < 28) {
      Trajectory traj;
      traj.basis = basis;
      traj.dofs = dofs;
      traj.lift = BoundaryLift::constant(Vec::Zero(dofs));
      traj.psi = Vec(traj.coeff_count());
      for (int i = 0; i < traj.psi.size(); ++i) traj.psi(i) = 1.6 * u(rng);
      const Vec lo = Vec::Constant(dofs, -0.9), up = Vec::Constant(dofs, 0.9);
      const InequalitySystem ieq = build_inequality_system(traj, lo, up, 12);
      const Vec v = ieq.violation(Vec::Zero(traj.psi.size()));
      bool near_kink = false;
      for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) < 1e-3) near_kink = true;
      }
      const std::vector<int> act = active_set(v);
      if (near_kink || act.empty()) continue;

      const double sigma = 0.05;
      Vec g_jnt;
      Mat H_jnt;
      penalty_terms(ieq, v, act, sigma, g_jnt, H_jnt);
      auto f = [&](const Vec& dpsi) {
        const Vec vv = ieq.violation(dpsi);
        double s = 0.0;
        for (int i = 0; i < vv.size(); ++i) s += std::pow(std::max(0.0, vv(i)), 2);
        return s / (sigma * sigma);
      };
      const Vec fd = oracles::fd_gradient(f, Vec::Zero(traj.psi.size()));
      worst = std::max(worst, oracles::rel_err(Vec(2.0 * g_jnt), fd));
      ++taken;
      ++cases;
    }
  }

  // (c) Task Jacobians: posture sensitivity and the active-row residual
  // linearization, filtered away from the box faces.
  {
    TaskSpec spec;
    spec.x_min = Vec(3);
    spec.x_min << -kInf, -0.6, -0.8;
    spec.x_max = Vec(3);
    spec.x_max << 1.4, 0.6, 0.8;
    for (const ChainModel& chain : {planar, spatial}) {
      int taken = 0;
      while (taken < 26) {
        Vec theta(chain.dof());
        for (int i = 0; i < theta.size(); ++i) theta(i) = 1.3 * u(rng);
        const Posture p = ee_posture(chain, theta);
        if (chain.kind == ChainModel::Kind::Spatial && p.x.tail(3).norm() > 2.6) continue;
        auto posture = [&](const Vec& th) -> Vec { return ee_posture(chain, th).x; };
        const Mat fd = oracles::fd_jacobian(posture, theta);
        worst = std::max(worst, oracles::rel_err(p.jacobian, fd));
        ++taken;
        ++cases;

        if (chain.kind != ChainModel::Kind::Planar) continue;
        // Residual rows: h(theta) pins the active coordinates only.
        const TaskResidual h = task_residual(spec, p.x);
        bool near_face = false;
        for (int i = 0; i < 3; ++i) {
          if (std::abs(p.x(i) - spec.x_min(i)) < 1e-3) near_face = true;
          if (std::abs(p.x(i) - spec.x_max(i)) < 1e-3) near_face = true;
        }
        if (near_face || h.h.norm() < 1e-3) continue;
        auto resid = [&](const Vec& th) -> Vec {
          return task_residual(spec, ee_posture(chain, th).x).h;
        };
        const Mat fd_h = oracles::fd_jacobian(resid, theta);
        Mat analytic = Mat::Zero(3, chain.dof());
        for (int i = 0; i < 3; ++i) {
          if (h.active[i]) analytic.row(i) = p.jacobian.row(i);
        }
        worst = std::max(worst, oracles::rel_err(analytic, fd_h));
        ++cases;
      }
    }
  }

  const double dt = now_s() - t0;
  Outcome o;
  o.ok = cases >= 100 && worst <= 1e-4 && dt < 30.0;
  o.detail = fmt("%d cases, max rel err %.2e, %.1f s", cases, worst, dt);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: QP solver vs exhaustive active-set enumeration.

Outcome criterion_qp_oracle() {
  const double t0 = now_s();
  std::mt19937 rng(404);
  std::uniform_int_distribution<int> pick_n(2, 8), pick_eq(0, 2), pick_ieq(0, 4);
  double worst = 0.0;
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = pick_n(rng);
    const int n_eq = std::min(pick_eq(rng), n - 1);
    const QpProblem p = oracles::random_qp(rng, n, n_eq, pick_ieq(rng));
    const QpSolution s = solve_qp(p);
    if (s.status != QpStatus::Optimal) {
      return {false, fmt("trial %d: solver returned non-optimal status", trial)};
    }
    const Vec want = oracles::enumerate_qp(p);
    if (want.size() == 0) {
      return {false, fmt("trial %d: oracle found no feasible candidate", trial)};
    }
    worst = std::max(worst, (s.x - want).lpNorm<Eigen::Infinity>());
    ++solved;
  }
  const double dt = now_s() - t0;
  Outcome o;
  o.ok = solved == 200 && worst <= 1e-6 && dt < 60.0;
  o.detail = fmt("%d QPs, max abs diff %.2e, %.1f s", solved, worst, dt);
  return o;
}

// ---------------------------------------------------------------------------
// Corpus: every plain world x 20 tasks x all three planners, single thread.

struct CorpusRun {
  std::string world;
  int task_id = 0;
  Planner planner = Planner::Drafto;
  SolveResult res;
  bool success = false;
  double final_residual = 0.0;
  PlanProblem problem;  // kept for re-validation of drafto runs
};

std::vector<CorpusRun> run_corpus(const std::vector<std::string>& worlds, int tasks_per_world,
                                  const std::vector<Planner>& planners, std::uint64_t seed) {
  std::vector<CorpusRun> runs;
  const SolverConfig cfg;
  for (const std::string& name : worlds) {
    const World w = make_suite(name);
    const auto basis = std::make_shared<BasisSet>(BasisFamily::DerivOrthogonal, 8, 1.0);
    const auto tasks = generate_tasks(w, tasks_per_world, seed);
    for (const BenchTask& task : tasks) {
      for (Planner planner : planners) {
        CorpusRun run;
        run.world = name;
        run.task_id = task.id;
        run.planner = planner;
        run.problem.basis = basis;
        run.problem.theta0 = task.theta0;
        run.problem.thetag = task.thetag;
        run.problem.scene = w.scene;
        run.problem.model = w.model;
        run.problem.task = w.task;
        run.res = solve_with(planner, run.problem, cfg);
        if (!w.task.empty() && run.res.status != SolveStatus::TaskInfeasible) {
          const Trajectory traj = run.problem.make_trajectory(run.res.psi);
          run.final_residual = final_task_residual(traj, w.task, w.model.chains[0]);
        }
        run.success = run.res.status != SolveStatus::TaskInfeasible && run.res.dense_success &&
                      (w.task.empty() || run.final_residual <= 1e-4);
        runs.push_back(std::move(run));
      }
    }
  }
  return runs;
}

// Criterion 3: terminal feasibility of every drafto run on the plain suite.
Outcome criterion_feasibility(const std::vector<CorpusRun>& corpus) {
  int checked = 0, bad_v = 0, bad_endpoint = 0, repair_runs = 0, quick_repairs = 0;
  double worst_v = 0.0, worst_ep = 0.0;
  for (const CorpusRun& run : corpus) {
    if (run.planner != Planner::Drafto) continue;
    if (run.res.status == SolveStatus::TaskInfeasible) continue;
    ++checked;
    worst_v = std::max(worst_v, run.res.final_v_inf);
    if (run.res.final_v_inf > 1e-6) ++bad_v;
    const Trajectory traj = run.problem.make_trajectory(run.res.psi);
    const double T = run.problem.basis->horizon();
    const double ep = std::max(
        (traj.value(0.0) - run.problem.theta0).lpNorm<Eigen::Infinity>(),
        (traj.value(T) - run.problem.thetag).lpNorm<Eigen::Infinity>());
    worst_ep = std::max(worst_ep, ep);
    if (ep > 1e-8) ++bad_endpoint;
    if (run.res.repair_iterations > 0) {
      ++repair_runs;
      if (run.res.repair_iterations <= 3) ++quick_repairs;
    }
  }
  const double quick_pct = repair_runs == 0 ? 100.0 : 100.0 * quick_repairs / repair_runs;
  Outcome o;
  o.ok = checked > 0 && bad_v == 0 && bad_endpoint == 0 && quick_pct >= 95.0;
  o.detail = fmt("%d runs, worst v_inf %.2e, worst endpoint %.2e, repair<=3 in %.0f%% of %d",
                 checked, worst_v, worst_ep, quick_pct, repair_runs);
  return o;
}

// Criterion 4: all planners land on the closed-form init optimum when the
// problem is convex (no obstacles, no task box).
Outcome criterion_convex() {
  std::mt19937 rng(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 6; ++trial) {
    PlanProblem p;
    p.basis = std::make_shared<BasisSet>(BasisFamily::DerivOrthogonal, 8, 1.0);
    ChainModel chain = ChainModel::planar({1.0, 0.8, 0.6}, Vec::Constant(3, -2.5),
                                          Vec::Constant(3, 2.5));
    chain.add_default_balls(0.1);
    p.model = MultiChainModel::single(std::move(chain));
    p.theta0 = Vec(3);
    p.thetag = Vec(3);
    for (int i = 0; i < 3; ++i) {
      p.theta0(i) = 1.5 * u(rng);
      p.thetag(i) = 1.5 * u(rng);
    }
    const Mat Q = smoothness_matrix(*p.basis, 3).Q;
    const Vec want =
        init_trajectory(*p.basis, BoundaryLift::constant(p.theta0), p.theta0, p.thetag,
                        p.model.stacked_theta_min(), p.model.stacked_theta_max(), Q);
    for (Planner planner : {Planner::Drafto, Planner::DraftoGn, Planner::Facto}) {
      const SolveResult res = solve_with(planner, p, {});
      if (res.status != SolveStatus::Converged) {
        return {false, fmt("trial %d: %s did not converge", trial, to_string(planner).c_str())};
      }
      worst = std::max(worst, (res.psi - want).lpNorm<Eigen::Infinity>());
      ++cases;
    }
  }
  Outcome o;
  o.ok = worst <= 1e-6;
  o.detail = fmt("%d solves, max deviation from init optimum %.2e", cases, worst);
  return o;
}

struct PlannerStats {
  double time_sum = 0.0, time_max = 0.0;
  int n = 0, wins = 0;
};

PlannerStats stats_for(const std::vector<CorpusRun>& corpus, Planner planner) {
  PlannerStats s;
  for (const CorpusRun& run : corpus) {
    if (run.planner != planner) continue;
    ++s.n;
    s.time_sum += run.res.total_seconds();
    s.time_max = std::max(s.time_max, run.res.total_seconds());
    if (run.success) ++s.wins;
  }
  return s;
}

// Criterion 5: decoupled steps buy a mean-time advantage over the full-QP
// baseline without giving up success rate.
Outcome criterion_speedup(const std::vector<CorpusRun>& corpus, double corpus_seconds) {
  const PlannerStats d = stats_for(corpus, Planner::Drafto);
  const PlannerStats f = stats_for(corpus, Planner::Facto);
  const double mean_d = d.time_sum / d.n, mean_f = f.time_sum / f.n;
  const double rate_d = 100.0 * d.wins / d.n, rate_f = 100.0 * f.wins / f.n;
  Outcome o;
  o.ok = d.n == 100 && mean_d <= 0.7 * mean_f && std::abs(rate_d - rate_f) <= 5.0 &&
         corpus_seconds < 600.0;
  o.detail = fmt("mean %.3fs vs %.3fs (x%.2f), success %.0f%% vs %.0f%%, corpus %.0f s",
                 mean_d, mean_f, mean_d / mean_f, rate_d, rate_f, corpus_seconds);
  return o;
}

// Criterion 6: the two-phase tail caps the worst-case time relative to the
// always-accept ablation.
Outcome criterion_tail(const std::vector<CorpusRun>& corpus) {
  const PlannerStats d = stats_for(corpus, Planner::Drafto);
  const PlannerStats g = stats_for(corpus, Planner::DraftoGn);
  const double rate_d = 100.0 * d.wins / d.n, rate_g = 100.0 * g.wins / g.n;
  Outcome o;
  o.ok = d.time_max <= g.time_max && rate_d >= rate_g - 2.0;
  o.detail = fmt("max %.3fs vs %.3fs, success %.0f%% vs %.0f%%", d.time_max, g.time_max, rate_d,
                 rate_g);
  return o;
}

// Criterion 7: the non-monotone acceptance bound holds over every recorded
// Phase-II step of every drafto trace.
Outcome criterion_trace_audit(const std::vector<CorpusRun>& plain,
                              const std::vector<CorpusRun>& constr) {
  const SolverConfig cfg;
  long audited = 0, violations = 0;
  auto audit = [&](const std::vector<CorpusRun>& runs) {
    for (const CorpusRun& run : runs) {
      if (run.planner != Planner::Drafto) continue;
      std::vector<double> accepted = {run.res.initial_objective};
      for (const IterRecord& r : run.res.trace) {
        if (!r.accepted) continue;
        if (r.phase == 2) {
          double window_max = -kInf;
          const int n = static_cast<int>(accepted.size());
          for (int i = std::max(0, n - cfg.window); i < n; ++i) {
            window_max = std::max(window_max, accepted[i]);
          }
          ++audited;
          if (r.J > window_max + 1e-12) ++violations;
        }
        accepted.push_back(r.J);
      }
    }
  };
  audit(plain);
  audit(constr);
  Outcome o;
  o.ok = audited > 0 && violations == 0;
  o.detail = fmt("%ld phase-II acceptances audited, %ld violations", audited, violations);
  return o;
}

// Criterion 8: constrained variants stay on task.
Outcome criterion_constrained(const std::vector<CorpusRun>& constr) {
  int n = 0, wins = 0, converged = 0, bad_converged = 0;
  double worst = 0.0;
  for (const CorpusRun& run : constr) {
    if (run.planner != Planner::Drafto) continue;
    ++n;
    if (run.success) wins++;
    if (run.res.status == SolveStatus::Converged && run.res.dense_success) {
      ++converged;
      worst = std::max(worst, run.final_residual);
      if (run.final_residual > 1e-4) ++bad_converged;
    }
  }
  const double rate = 100.0 * wins / n;
  Outcome o;
  o.ok = n == 100 && bad_converged == 0 && rate >= 70.0;
  o.detail = fmt("%d tasks, success %.0f%%, %d candidate runs, worst kept residual %.2e", n,
                 rate, converged, worst);
  return o;
}

// Criterion 9: metric correctness — closed-form roughness and refinement
// stability of the dense validity check.
Outcome criterion_metrics(const std::vector<CorpusRun>& corpus) {
  // theta(t) = a t^2 + b t through the quadratic polynomial basis.
  const auto basis = std::make_shared<BasisSet>(BasisFamily::ShiftedLegendre, 2, 1.0);
  double worst = 0.0;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = u(rng), b = u(rng);
    Trajectory traj;
    traj.basis = basis;
    traj.dofs = 1;
    traj.lift = BoundaryLift::constant(Vec::Zero(1));
    traj.psi = Vec(3);
    traj.psi << a / 3.0 + b / 2.0, (a + b) / 2.0, a / 6.0;
    for (int K : {3, 32, 128}) {
      const double want = (K - 2.0) / (K - 1.0) * 2.0 * std::abs(a);
      worst = std::max(worst, std::abs(roughness(traj, K) - want));
    }
  }

  int flips = 0, checked = 0;
  for (const CorpusRun& run : corpus) {
    if (run.planner != Planner::Drafto) continue;
    if (run.res.status == SolveStatus::TaskInfeasible) continue;
    const Trajectory traj = run.problem.make_trajectory(run.res.psi);
    const bool coarse = dense_success_check(traj, run.problem.scene, run.problem.model, 2000);
    const bool fine = dense_success_check(traj, run.problem.scene, run.problem.model, 20000);
    ++checked;
    if (coarse != fine) ++flips;
  }
  Outcome o;
  o.ok = worst <= 1e-10 && checked > 0 && flips == 0;
  o.detail = fmt("roughness err %.2e; %d trajectories refined 10x, %d verdict flips", worst,
                 checked, flips);
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance: planner contracts on the desk-scale suite\n");

  report(1, "analytic gradients match central finite differences", criterion_gradients());
  report(2, "QP solutions match exhaustive active-set enumeration", criterion_qp_oracle());

  const std::vector<std::string> plain = {"gate2d", "shelf2d", "sphere_field_3d", "narrow_3d",
                                          "dual_table_3d"};
  const std::vector<Planner> all = {Planner::Drafto, Planner::DraftoGn, Planner::Facto};
  const double t0 = now_s();
  const std::vector<CorpusRun> corpus = run_corpus(plain, 20, all, 2026);
  const double corpus_seconds = now_s() - t0;

  report(3, "terminal feasibility: dense limits and endpoints", criterion_feasibility(corpus));
  report(4, "convex problems recover the initialization optimum", criterion_convex());
  report(5, "mean solve time beats the full-QP baseline", criterion_speedup(corpus,
                                                                            corpus_seconds));
  report(6, "two-phase tail caps the worst-case time", criterion_tail(corpus));

  const std::vector<std::string> constr = {"gate2d_constr", "shelf2d_constr",
                                           "sphere_field_3d_constr", "narrow_3d_constr",
                                           "dual_table_3d_constr"};
  const std::vector<CorpusRun> constr_corpus =
      run_corpus(constr, 20, {Planner::Drafto}, 2027);

  report(7, "non-monotone window bound holds on every accepted step",
         criterion_trace_audit(corpus, constr_corpus));
  report(8, "constrained variants meet the task residual bound",
         criterion_constrained(constr_corpus));
  report(9, "metrics: closed-form roughness, refinement-stable validity",
         criterion_metrics(corpus));

  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
