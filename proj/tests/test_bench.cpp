#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "drafto/bench.hpp"
#include "drafto/errors.hpp"

using namespace drafto;

namespace {

std::shared_ptr<const BasisSet> small_basis() {
  return std::make_shared<BasisSet>(BasisFamily::DerivOrthogonal, 6, 1.0);
}

/// Quadratic 1-DoF trajectory theta(t) = a t^2 + b t via the polynomial
/// basis (P_0, P_1, P_2 span all quadratics exactly). On [0, 1] the shifted
/// polynomials are P_0 = 1, P_1 = 2t - 1, P_2 = 6t^2 - 6t + 1, so
///   a t^2 + b t = (a/3 + b/2) P_0 + ((a + b)/2) P_1 + (a/6) P_2.
Trajectory quadratic_traj(double a, double b) {
  const auto basis = std::make_shared<BasisSet>(BasisFamily::ShiftedLegendre, 2, 1.0);
  Trajectory traj;
  traj.basis = basis;
  traj.dofs = 1;
  traj.lift = BoundaryLift::constant(Vec::Zero(1));
  traj.psi = Vec(3);
  traj.psi << a / 3.0 + b / 2.0, (a + b) / 2.0, a / 6.0;
  return traj;
}

}  // namespace

TEST_CASE("splitmix64 produces the published reference stream") {
  // Standard test vector: seed 0x0 advances to these first three outputs.
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFull);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ull);
  CHECK(rng.next() == 0x06C45D188009454Full);
  // uniform() stays in [0, 1).
  SplitMix64 u(12345);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  const double lo = -2.0, hi = 3.0;
  SplitMix64 r(7);
  for (int i = 0; i < 100; ++i) {
    const double x = r.uniform(lo, hi);
    CHECK(x >= lo);
    CHECK(x < hi);
  }
}

TEST_CASE("roughness: frozen 3-sample value and analytic quadratics") {
  // K=3 with samples [0, 1, 0]: R = (1/2) * |0 - 2 + 0| / 0.5^2 = 4.
  // theta(t) = 4t(1-t) hits exactly those samples.
  const Trajectory bump = quadratic_traj(-4.0, 4.0);
  CHECK(bump.value(0.0)(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bump.value(0.5)(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bump.value(1.0)(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(roughness(bump, 3) == doctest::Approx(4.0).epsilon(1e-12));

  // General quadratic: the second difference is constant 2a dt^2, so
  // R = (K-2)/(K-1) * 2|a| for any K (T=1, normalized dt).
  for (int K : {3, 16, 128}) {
    const double a = -2.3, b = 1.7;
    const Trajectory q = quadratic_traj(a, b);
    const double want = (K - 2.0) / (K - 1.0) * 2.0 * std::abs(a);
    CHECK(roughness(q, K) == doctest::Approx(want).epsilon(1e-10));
  }

  // Constant and linear trajectories are perfectly smooth.
  CHECK(roughness(quadratic_traj(0.0, 0.0), 64) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(roughness(quadratic_traj(0.0, 1.0), 64) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK_THROWS_AS(roughness(quadratic_traj(1.0, 0.0), 2), ConfigError);
}

TEST_CASE("roughness is translation-invariant and absolutely homogeneous") {
  const auto basis = small_basis();
  Trajectory traj;
  traj.basis = basis;
  traj.dofs = 2;
  traj.lift = BoundaryLift::constant(Vec::Zero(2));
  traj.psi = Vec(14);
  traj.psi << 0.4, -0.2, 0.3, 0.1, 0.0, -0.05, 0.02, -0.6, 0.25, 0.0, 0.15, -0.1, 0.0, 0.03;

  const double base = roughness(traj, 64);
  REQUIRE(base > 0.0);

  Trajectory shifted = traj;
  shifted.lift = BoundaryLift::constant(Vec::Constant(2, 0.8));
  CHECK(roughness(shifted, 64) == doctest::Approx(base).epsilon(1e-10));

  Trajectory scaled = traj;
  scaled.psi *= -2.5;
  CHECK(roughness(scaled, 64) == doctest::Approx(2.5 * base).epsilon(1e-10));
}

TEST_CASE("built-in suites validate and enumerate") {
  const std::vector<std::string> names = suite_names();
  CHECK(names.size() == 10);  // 5 bases, each with a _constr variant
  for (const std::string& name : names) {
    const World w = make_suite(name);
    CHECK_NOTHROW(w.validate());
    CHECK(w.name == name);
    const bool constrained = name.find("_constr") != std::string::npos;
    CHECK(w.task.empty() == !constrained);
  }
  CHECK_THROWS_AS(make_suite("no_such_world"), ConfigError);
}

TEST_CASE("task generation is deterministic and respects its contracts") {
  const World w = make_suite("gate2d");
  const auto tasks = generate_tasks(w, 12, 99);
  const auto again = generate_tasks(w, 12, 99);
  REQUIRE(tasks.size() == 12);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CHECK((tasks[i].theta0 - again[i].theta0).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((tasks[i].thetag - again[i].thetag).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(tasks[i].id == static_cast<int>(i));
  }
  // Per-task streams: a longer list extends, never reshuffles, the prefix.
  const auto more = generate_tasks(w, 20, 99);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CHECK((tasks[i].theta0 - more[i].theta0).lpNorm<Eigen::Infinity>() == 0.0);
  }

  const Vec lo = w.model.stacked_theta_min(), hi = w.model.stacked_theta_max();
  for (const BenchTask& t : tasks) {
    for (const Vec* v : {&t.theta0, &t.thetag}) {
      CHECK((v->array() >= lo.array()).all());
      CHECK((v->array() <= hi.array()).all());
      CHECK(config_collision_free(w.scene, w.model, *v));
    }
  }

  // Constrained worlds additionally demand in-box endpoint postures.
  const World wc = make_suite("gate2d_constr");
  for (const BenchTask& t : generate_tasks(wc, 8, 5)) {
    for (const Vec* v : {&t.theta0, &t.thetag}) {
      const Posture post = ee_posture(wc.model.chains[0], v->head(wc.model.chains[0].dof()));
      CHECK(task_residual(wc.task, post.x).h.norm() == 0.0);
    }
  }
}

TEST_CASE("benchmark records are complete, sorted, and worker-invariant") {
  const World w = make_suite("gate2d");
  const auto tasks = generate_tasks(w, 4, 3);
  const std::vector<Planner> planners = {Planner::Drafto, Planner::Facto};
  SolverConfig cfg;
  cfg.max_iterations = 60;

  const auto serial = run_benchmark(w, small_basis(), tasks, planners, cfg, 1);
  REQUIRE(serial.size() == 8);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].task_id == static_cast<int>(i / 2));
    CHECK(serial[i].planner == planners[i % 2]);
    CHECK(serial[i].time_s > 0.0);
  }

  const auto parallel = run_benchmark(w, small_basis(), tasks, planners, cfg, 3);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(parallel[i].task_id == serial[i].task_id);
    CHECK(parallel[i].planner == serial[i].planner);
    CHECK(parallel[i].success == serial[i].success);
    CHECK(parallel[i].roughness == serial[i].roughness);
    CHECK(parallel[i].iters == serial[i].iters);
  }
}

TEST_CASE("summary rows recompute from the records") {
  const World w = make_suite("shelf2d");
  const auto tasks = generate_tasks(w, 3, 17);
  const std::vector<Planner> planners = {Planner::Drafto, Planner::DraftoGn, Planner::Facto};
  SolverConfig cfg;
  cfg.max_iterations = 60;
  const auto records = run_benchmark(w, small_basis(), tasks, planners, cfg, 2);
  const auto rows = summarize(records);
  REQUIRE(rows.size() == 3);

  for (const SummaryRow& row : rows) {
    int n = 0, wins = 0;
    double t_sum = 0.0, t_max = 0.0, r_sum = 0.0, r_max = 0.0;
    for (const BenchRecord& r : records) {
      if (r.planner != row.planner) continue;
      ++n;
      t_sum += r.time_s;
      t_max = std::max(t_max, r.time_s);
      if (r.success) {
        ++wins;
        r_sum += r.roughness;
        r_max = std::max(r_max, r.roughness);
      }
    }
    REQUIRE(n == row.tasks);
    CHECK(row.success_pct == doctest::Approx(100.0 * wins / n).epsilon(1e-12));
    CHECK(row.time_avg == doctest::Approx(t_sum / n).epsilon(1e-12));
    CHECK(row.time_max == doctest::Approx(t_max).epsilon(1e-12));
    if (wins > 0) {
      CHECK(row.rough_avg == doctest::Approx(r_sum / wins).epsilon(1e-12));
      CHECK(row.rough_max == doctest::Approx(r_max).epsilon(1e-12));
    }
  }
}
