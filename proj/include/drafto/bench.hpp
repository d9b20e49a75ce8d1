#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "drafto/solver.hpp"

namespace drafto {

/// A complete planning world: obstacles, chains, and the optional
/// end-effector task box, as stored in a scene file.
struct World {
  std::string name = "world";
  Scene scene;
  MultiChainModel model;
  TaskSpec task;

  void validate() const;
};

/// Built-in desk-scale benchmark worlds. The plain suites exercise
/// obstacle density and limit proximity; each has a `_constr` variant
/// adding an end-effector posture box.
World make_suite(const std::string& name);
std::vector<std::string> suite_names();

/// One endpoint pair drawn for a world.
struct BenchTask {
  int id = 0;
  Vec theta0, thetag;
  std::uint64_t seed = 0;
};

/// Deterministic counter-based stream (splitmix64); task k draws from its
/// own stream so lists are stable under n.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);

 private:
  std::uint64_t state_;
};

/// Rejection-samples collision-free (margin-clear), task-feasible endpoint
/// pairs uniformly from the 90%-interior joint box. Throws ConfigError when
/// a task exhausts its attempt budget, naming the world.
std::vector<BenchTask> generate_tasks(const World& world, int n, std::uint64_t seed);

struct BenchRecord {
  int task_id = 0;
  Planner planner = Planner::Drafto;
  bool success = false;
  double time_s = 0.0;
  double roughness = 0.0;
  int iters = 0;
  double v_inf = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
};

/// Normalized accumulation of discrete joint accelerations:
///   R = 1/(K-1) * sum_{k=1}^{K-2} ||theta_{k-1} - 2 theta_k + theta_{k+1}|| / dt^2
/// over uniform normalized times t_k = k/(K-1), dt = 1/(K-1).
double roughness(const Trajectory& traj, int K = 128);

/// Runs each planner on each task across `workers` threads; records are
/// returned sorted by (task id, planner). Solve errors become failed
/// records, never aborts.
std::vector<BenchRecord> run_benchmark(const World& world,
                                       std::shared_ptr<const BasisSet> basis,
                                       const std::vector<BenchTask>& tasks,
                                       const std::vector<Planner>& planners,
                                       const SolverConfig& cfg, int workers = 1);

/// Per-planner aggregate row: success rate, time avg/max, roughness
/// avg/max (roughness over successful runs only).
struct SummaryRow {
  Planner planner = Planner::Drafto;
  int tasks = 0;
  double success_pct = 0.0;
  double time_avg = 0.0, time_max = 0.0;
  double rough_avg = 0.0, rough_max = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records);

}  // namespace drafto
