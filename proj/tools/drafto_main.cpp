// Command-line front end: solve a single planning instance, run the
// benchmark suites, or emit a built-in scene as JSON.
//
// Exit codes: 0 solved (final trajectory feasible), 1 bad input or parse
// failure, 2 partially feasible result, 3 endpoints infeasible.
// Set DRAFTO_LOG=debug|info|warn|error|off to control stderr logging.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drafto/bench.hpp"
#include "drafto/errors.hpp"
#include "drafto/io.hpp"
#include "drafto/log.hpp"
#include "drafto/solver.hpp"

namespace {

std::vector<drafto::Planner> parse_planners(const std::string& csv) {
  std::vector<drafto::Planner> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(drafto::planner_from_string(item));
  }
  if (out.empty()) throw drafto::ConfigError("no planners given");
  return out;
}

int run_solve(const std::string& scene_path, const std::string& task_path,
              const std::string& config_path, const std::string& planner_override,
              const std::string& out_dir) {
  using namespace drafto;
  const World world = load_world(scene_path);
  const EndpointTask endpoints = load_task(task_path);
  RunSettings settings;
  if (!config_path.empty()) settings = load_settings(config_path);
  if (!planner_override.empty()) settings.planner = planner_from_string(planner_override);

  PlanProblem problem;
  problem.basis = settings.make_basis();
  problem.theta0 = endpoints.theta0;
  problem.thetag = endpoints.thetag;
  problem.scene = world.scene;
  problem.model = world.model;
  problem.task = world.task;
  problem.validate();

  const SolveResult res = solve_with(settings.planner, problem, settings.solver);

  std::filesystem::create_directories(out_dir);
  write_result_json(out_dir + "/result.json", res, settings.planner);
  write_trace_csv(out_dir + "/trace.csv", res.trace);
  if (res.status != SolveStatus::TaskInfeasible) {
    write_trajectory_csv(out_dir + "/trajectory.csv", problem.make_trajectory(res.psi));
  }

  std::printf("%s: %s in %d iterations, %.3fs, v_inf %.2e, dense %s\n",
              to_string(settings.planner).c_str(), to_string(res.status).c_str(), res.iterations,
              res.total_seconds(), res.final_v_inf, res.dense_success ? "ok" : "FAIL");
  std::printf("wrote %s/{result.json, trace.csv%s}\n", out_dir.c_str(),
              res.status != SolveStatus::TaskInfeasible ? ", trajectory.csv" : "");

  switch (res.status) {
    case SolveStatus::Converged:
      return 0;
    case SolveStatus::MaxIter: {
      // Out of iterations but possibly still feasible; grade the trajectory.
      bool feasible = res.dense_success;
      if (feasible && !problem.task.empty()) {
        const Trajectory traj = problem.make_trajectory(res.psi);
        feasible = final_task_residual(traj, problem.task, problem.model.chains[0]) <= 1e-4;
      }
      return feasible ? 0 : 2;
    }
    case SolveStatus::PartialFeasible:
      return 2;
    case SolveStatus::TaskInfeasible:
      return 3;
  }
  return 2;
}

int run_bench(const std::string& suite, const std::string& scene_path, int n, std::uint64_t seed,
              int workers, const std::string& planners_csv, const std::string& config_path,
              const std::string& out_dir) {
  using namespace drafto;
  if (suite.empty() == scene_path.empty()) {
    throw ConfigError("bench needs exactly one of --suite or --scene");
  }
  const World world = suite.empty() ? load_world(scene_path) : make_suite(suite);
  RunSettings settings;
  if (!config_path.empty()) settings = load_settings(config_path);
  const std::vector<Planner> planners = parse_planners(planners_csv);

  const std::vector<BenchTask> tasks = generate_tasks(world, n, seed);
  const std::vector<BenchRecord> records =
      run_benchmark(world, settings.make_basis(), tasks, planners, settings.solver, workers);

  std::filesystem::create_directories(out_dir);
  write_bench_csv(out_dir + "/bench.csv", records);
  const std::vector<SummaryRow> rows = summarize(records);
  write_summary_json(out_dir + "/summary.json", rows);
  write_time_svg(out_dir + "/times.svg", records);

  std::printf("world %s, %d tasks, seed %llu\n%s", world.name.c_str(), n,
              static_cast<unsigned long long>(seed), summary_table(rows).c_str());
  std::printf("wrote %s/{bench.csv, summary.json, times.svg}\n", out_dir.c_str());
  return 0;
}

int run_gen_scene(const std::string& suite, const std::string& out_path) {
  const drafto::World world = drafto::make_suite(suite);
  drafto::save_world(world, out_path);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "drafto: reduced-space trajectory optimization over basis coefficients.\n"
      "Set DRAFTO_LOG=debug|info|warn|error|off to control stderr logging."};
  app.require_subcommand(1);

  std::string scene_path, task_path, config_path, planner_override, out_dir = "out";
  std::string suite, planners_csv = "drafto,facto,drafto_gn", gen_out = "scene.json";
  int n = 20, workers = 1;
  std::uint64_t seed = 1;

  CLI::App* solve = app.add_subcommand("solve", "Plan one start/goal pair in a scene");
  solve->add_option("--scene", scene_path, "Scene JSON file")->required();
  solve->add_option("--task", task_path, "Endpoint JSON file {theta0, thetag}")->required();
  solve->add_option("--config", config_path, "Run settings JSON file");
  solve->add_option("--planner", planner_override, "drafto | drafto_gn | facto");
  solve->add_option("--out", out_dir, "Output directory (result.json, trace.csv, ...)");

  CLI::App* bench = app.add_subcommand("bench", "Run planners over generated tasks");
  bench->add_option("--suite", suite, "Built-in world name (see gen-scene --list)");
  bench->add_option("--scene", scene_path, "Scene JSON file instead of a built-in");
  bench->add_option("--n", n, "Number of tasks");
  bench->add_option("--seed", seed, "Task-generation seed");
  bench->add_option("--workers", workers, "Worker threads");
  bench->add_option("--planners", planners_csv, "Comma-separated planner list");
  bench->add_option("--config", config_path, "Run settings JSON file");
  bench->add_option("--out", out_dir, "Output directory (bench.csv, summary.json, ...)");

  bool list_suites = false;
  CLI::App* gen = app.add_subcommand("gen-scene", "Write a built-in world as JSON");
  gen->add_option("--suite", suite, "Built-in world name");
  gen->add_option("--out", gen_out, "Output scene file");
  gen->add_flag("--list", list_suites, "List built-in world names and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      return run_solve(scene_path, task_path, config_path, planner_override, out_dir);
    }
    if (bench->parsed()) {
      return run_bench(suite, scene_path, n, seed, workers, planners_csv, config_path, out_dir);
    }
    if (list_suites) {
      for (const std::string& name : drafto::suite_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (suite.empty()) throw drafto::ConfigError("gen-scene needs --suite or --list");
    return run_gen_scene(suite, gen_out);
  } catch (const drafto::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 1;
  } catch (const drafto::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
