#include "drafto/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "drafto/errors.hpp"

namespace drafto {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void World::validate() const {
  model.validate();
  scene.validate();
  if (!task.empty()) {
    task.validate();
    if (task.x_min.size() != posture_dim(model.chains.front())) {
      throw ConfigError("world '" + name + "': task box dimension mismatch");
    }
  }
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

namespace {

Vec limits_vec(int m, double v) { return Vec::Constant(m, v); }

ChainModel planar_chain(std::vector<double> lengths, double limit, double ball_radius) {
  const int m = static_cast<int>(lengths.size());
  ChainModel c = ChainModel::planar(std::move(lengths), limits_vec(m, -limit), limits_vec(m, limit));
  c.add_default_balls(ball_radius);
  return c;
}

/// Desk-scale 6R arm: vertical shoulder column, three in-line arm segments,
/// wrist roll. Reach about 1.2 m from the shoulder.
ChainModel spatial_arm(const Vec3& base_pos, double base_yaw) {
  std::vector<Vec3> axes = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY(),
                            Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX()};
  std::vector<Vec3> offsets = {Vec3(0, 0, 0.30), Vec3(0, 0, 0.20), Vec3(0.40, 0, 0),
                               Vec3(0.35, 0, 0), Vec3(0.25, 0, 0), Vec3(0.10, 0, 0)};
  Vec tmin(6), tmax(6);
  tmin << -2.8, -2.2, -2.2, -2.8, -2.2, -2.8;
  tmax = -tmin;
  ChainModel c = ChainModel::spatial(std::move(axes), std::move(offsets), tmin, tmax);
  c.ee_offset = Vec3(0.12, 0, 0);
  c.base = Iso3::Identity();
  c.base.translation() = base_pos;
  c.base.linear() = Eigen::AngleAxisd(base_yaw, Vec3::UnitZ()).toRotationMatrix();
  c.add_default_balls(0.07);
  return c;
}

Vec box6(double pz_lo, double pz_hi, bool upper) {
  Vec v(6);
  if (upper) {
    v << kInf, kInf, pz_hi, kInf, kInf, kInf;
  } else {
    v << -kInf, -kInf, pz_lo, -kInf, -kInf, -kInf;
  }
  return v;
}

World base_suite(const std::string& name) {
  World w;
  w.name = name;
  if (name == "gate2d") {
    ChainModel c = planar_chain({1.0, 0.8, 0.6}, 2.9, 0.12);
    c.name = "arm2d3";
    w.model = MultiChainModel::single(std::move(c));
    w.scene.margin = 0.12;
    // Rim-placed posts: sweeps clip them tangentially, so the residual
    // gradients keep a usable sideways component.
    w.scene.obstacles.push_back(Sphere{Vec3(1.90, 0.80, 0), 0.15});
    w.scene.obstacles.push_back(Sphere{Vec3(0.80, 1.90, 0), 0.15});
  } else if (name == "shelf2d") {
    ChainModel c = planar_chain({0.8, 0.7, 0.6, 0.5}, 2.9, 0.10);
    c.name = "arm2d4";
    w.model = MultiChainModel::single(std::move(c));
    w.scene.margin = 0.14;
    // Thick slab: crossings span several collision checkpoints, so each side
    // sees a consistent push-out direction (thin slabs fall between
    // checkpoints and stall the optimizer at the mid-plane). The wide margin
    // keeps the cost equilibrium clear of the raw surface.
    w.scene.obstacles.push_back(AxisAlignedBox{Vec3(1.30, 0.85, -0.4), Vec3(2.10, 1.15, 0.4)});
  } else if (name == "sphere_field_3d") {
    ChainModel c = spatial_arm(Vec3::Zero(), 0.0);
    c.name = "arm6";
    w.model = MultiChainModel::single(std::move(c));
    w.scene.margin = 0.12;
    w.scene.obstacles.push_back(Sphere{Vec3(0.50, 0.30, 0.50), 0.18});
    w.scene.obstacles.push_back(Sphere{Vec3(-0.40, 0.45, 0.60), 0.15});
    w.scene.obstacles.push_back(Sphere{Vec3(0.15, -0.50, 0.70), 0.17});
    w.scene.obstacles.push_back(Sphere{Vec3(0.45, -0.25, 0.35), 0.15});
    w.scene.obstacles.push_back(Sphere{Vec3(-0.30, -0.40, 0.45), 0.16});
    w.scene.obstacles.push_back(Sphere{Vec3(0.05, 0.50, 0.35), 0.14});
  } else if (name == "narrow_3d") {
    ChainModel c = spatial_arm(Vec3::Zero(), 0.0);
    c.name = "arm6";
    w.model = MultiChainModel::single(std::move(c));
    w.scene.margin = 0.10;
    // Two walls leaving a y-slot the forearm must thread.
    w.scene.obstacles.push_back(AxisAlignedBox{Vec3(0.35, 0.30, 0.10), Vec3(1.20, 1.00, 1.20)});
    w.scene.obstacles.push_back(AxisAlignedBox{Vec3(0.35, -1.00, 0.10), Vec3(1.20, -0.30, 1.20)});
  } else if (name == "dual_table_3d") {
    ChainModel a = spatial_arm(Vec3(-0.55, 0, 0), 0.0);
    a.name = "left";
    ChainModel b = spatial_arm(Vec3(0.55, 0, 0), std::numbers::pi);
    b.name = "right";
    w.model.chains = {std::move(a), std::move(b)};
    w.model.self_collision = true;
    w.model.cross_collision = true;
    // Tight margin: with two interleaved arms plus cross/self pairs, larger
    // margins choke endpoint sampling and swamp the full-QP baseline with
    // active rows.
    w.scene.margin = 0.05;
    w.scene.obstacles.push_back(AxisAlignedBox{Vec3(-0.8, -0.5, -0.25), Vec3(0.8, 0.5, -0.12)});
  } else {
    std::string known;
    for (const std::string& s : suite_names()) known += (known.empty() ? "" : ", ") + s;
    throw ConfigError("unknown suite '" + name + "'; available: " + known);
  }
  return w;
}

}  // namespace

World make_suite(const std::string& name) {
  const std::string suffix = "_constr";
  const bool constrained =
      name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix;
  const std::string base = constrained ? name.substr(0, name.size() - suffix.size()) : name;
  World w = base_suite(base);
  w.name = name;
  if (constrained) {
    if (base == "gate2d") {
      // Binds when the arm stretches toward the workspace rim (reach 2.4).
      w.task.x_min = Vec(3);
      w.task.x_max = Vec(3);
      w.task.x_min << -2.05, -2.05, -kInf;
      w.task.x_max << 2.05, 2.05, kInf;
    } else if (base == "shelf2d") {
      // Binds near full extension (reach 2.6).
      w.task.x_min = Vec(3);
      w.task.x_max = Vec(3);
      w.task.x_min << -2.20, -2.20, -kInf;
      w.task.x_max << 2.20, 2.20, kInf;
    } else if (base == "sphere_field_3d") {
      w.task.x_min = box6(0.15, 1.2, false);
      w.task.x_max = box6(0.15, 1.2, true);
    } else if (base == "narrow_3d") {
      w.task.x_min = box6(0.12, 1.2, false);
      w.task.x_max = box6(0.12, 1.2, true);
    } else if (base == "dual_table_3d") {
      w.task.x_min = box6(0.05, 1.2, false);
      w.task.x_max = box6(0.05, 1.2, true);
    }
  }
  w.validate();
  return w;
}

std::vector<std::string> suite_names() {
  std::vector<std::string> base = {"gate2d", "shelf2d", "sphere_field_3d", "narrow_3d",
                                   "dual_table_3d"};
  std::vector<std::string> out;
  for (const std::string& b : base) {
    out.push_back(b);
    out.push_back(b + "_constr");
  }
  return out;
}

std::vector<BenchTask> generate_tasks(const World& world, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("task count must be >= 1");
  world.validate();
  const int m = world.model.total_dof();
  const Vec tmin = world.model.stacked_theta_min();
  const Vec tmax = world.model.stacked_theta_max();
  const Vec center = 0.5 * (tmin + tmax);
  const Vec half = 0.45 * (tmax - tmin);  // 90% interior box

  const ChainModel& chain0 = world.model.chains.front();
  auto endpoint_ok = [&](const Vec& theta) {
    if (obstacle_cost(world.scene, world.model, theta) != 0.0) return false;
    if (!world.task.empty()) {
      const Posture p = ee_posture(chain0, theta.head(chain0.dof()));
      if (task_residual(world.task, p.x).h.norm() != 0.0) return false;
    }
    return true;
  };

  // Feasibility prior on the pair: the straight joint-space sweep between
  // the endpoints may graze obstacles (that is the point of the benchmark)
  // but must not bury the arm — local detour planners are not escape
  // planners, and deeply penetrating seeds defeat every planner equally.
  constexpr double kPathCostCap = 0.4;
  constexpr int kPathSamples = 17;
  auto pair_ok = [&](const Vec& theta0, const Vec& thetag) {
    for (int s = 0; s < kPathSamples; ++s) {
      const double u = static_cast<double>(s) / (kPathSamples - 1);
      const Vec theta = theta0 + u * (thetag - theta0);
      if (obstacle_cost(world.scene, world.model, theta) > kPathCostCap) return false;
    }
    return true;
  };

  constexpr int kBudget = 20000;
  constexpr int kRestartEvery = 2000;  // re-draw theta0 if it pairs with nothing
  std::vector<BenchTask> tasks;
  tasks.reserve(n);
  for (int k = 0; k < n; ++k) {
    SplitMix64 rng(seed + static_cast<std::uint64_t>(k));
    BenchTask task;
    task.id = k;
    task.seed = seed + static_cast<std::uint64_t>(k);
    bool found0 = false, foundg = false;
    int since0 = 0;
    for (int attempt = 0; attempt < kBudget && !(found0 && foundg); ++attempt) {
      Vec theta(m);
      for (int i = 0; i < m; ++i) theta(i) = center(i) + (2.0 * rng.uniform() - 1.0) * half(i);
      if (found0 && ++since0 >= kRestartEvery) {
        found0 = false;
        since0 = 0;
      }
      if (!endpoint_ok(theta)) continue;
      if (!found0) {
        task.theta0 = theta;
        found0 = true;
        since0 = 0;
      } else if (pair_ok(task.theta0, theta)) {
        task.thetag = theta;
        foundg = true;
      }
    }
    if (!(found0 && foundg)) {
      throw ConfigError("endpoint generation budget exhausted for world '" + world.name + "'");
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

double roughness(const Trajectory& traj, int K) {
  if (K < 3) throw ConfigError("roughness needs at least 3 samples");
  const double T = traj.basis->horizon();
  const double dt = 1.0 / (K - 1);  // normalized time step
  std::vector<Vec> theta(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    theta[static_cast<std::size_t>(k)] = traj.value(static_cast<double>(k) * dt * T);
  }
  double sum = 0.0;
  for (int k = 1; k <= K - 2; ++k) {
    const Vec dd = theta[static_cast<std::size_t>(k - 1)] - 2.0 * theta[static_cast<std::size_t>(k)] +
                   theta[static_cast<std::size_t>(k + 1)];
    sum += dd.norm() / (dt * dt);
  }
  return sum / (K - 1);
}

std::vector<BenchRecord> run_benchmark(const World& world,
                                       std::shared_ptr<const BasisSet> basis,
                                       const std::vector<BenchTask>& tasks,
                                       const std::vector<Planner>& planners,
                                       const SolverConfig& cfg, int workers) {
  if (tasks.empty()) throw ConfigError("benchmark needs at least one task");
  if (planners.empty()) throw ConfigError("benchmark needs at least one planner");
  if (workers < 1) throw ConfigError("worker count must be >= 1");

  struct Unit {
    int task_idx;
    Planner planner;
  };
  std::vector<Unit> units;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (Planner p : planners) units.push_back({static_cast<int>(t), p});
  }

  std::vector<BenchRecord> records(units.size());
  std::atomic<std::size_t> next{0};

  auto run_unit = [&](std::size_t u) {
    const Unit& unit = units[u];
    const BenchTask& task = tasks[static_cast<std::size_t>(unit.task_idx)];
    BenchRecord rec;
    rec.task_id = task.id;
    rec.planner = unit.planner;
    try {
      PlanProblem problem;
      problem.basis = basis;
      problem.theta0 = task.theta0;
      problem.thetag = task.thetag;
      problem.scene = world.scene;
      problem.model = world.model;
      problem.task = world.task;
      const SolveResult res = solve_with(unit.planner, problem, cfg);
      rec.time_s = res.total_seconds();
      rec.iters = res.iterations;
      rec.v_inf = res.final_v_inf;
      rec.status = res.status;
      if (res.status != SolveStatus::TaskInfeasible && res.psi.size() > 0) {
        const Trajectory traj = problem.make_trajectory(res.psi);
        rec.roughness = roughness(traj);
        const bool task_ok =
            world.task.empty() ||
            final_task_residual(traj, world.task, world.model.chains.front()) <= 1e-4;
        rec.success = res.dense_success && task_ok;
      }
    } catch (const std::exception&) {
      // A crashed solve is a failed record, never a failed sweep.
      rec.success = false;
      rec.status = SolveStatus::TaskInfeasible;
    }
    records[u] = rec;
  };

  if (workers == 1) {
    for (std::size_t u = 0; u < units.size(); ++u) run_unit(u);
  } else {
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(units.size()));
    pool.reserve(static_cast<std::size_t>(count));
    for (int wi = 0; wi < count; ++wi) {
      pool.emplace_back([&]() {
        for (std::size_t u = next.fetch_add(1); u < units.size(); u = next.fetch_add(1)) {
          run_unit(u);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
    if (a.task_id != b.task_id) return a.task_id < b.task_id;
    return static_cast<int>(a.planner) < static_cast<int>(b.planner);
  });
  return records;
}

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records) {
  std::vector<SummaryRow> rows;
  for (Planner p : {Planner::Drafto, Planner::DraftoGn, Planner::Facto}) {
    SummaryRow row;
    row.planner = p;
    int successes = 0;
    for (const BenchRecord& r : records) {
      if (r.planner != p) continue;
      ++row.tasks;
      row.time_avg += r.time_s;
      row.time_max = std::max(row.time_max, r.time_s);
      if (r.success) {
        ++successes;
        row.rough_avg += r.roughness;
        row.rough_max = std::max(row.rough_max, r.roughness);
      }
    }
    if (row.tasks == 0) continue;
    row.success_pct = 100.0 * successes / row.tasks;
    row.time_avg /= row.tasks;
    row.rough_avg = successes > 0 ? row.rough_avg / successes : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace drafto
