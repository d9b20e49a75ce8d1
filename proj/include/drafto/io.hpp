#pragma once

#include <string>
#include <vector>

#include "drafto/bench.hpp"

namespace drafto {

/// Scene/world files (JSON). Parse failures throw ParseError with a
/// "<path>:<line>:<col>" prefix; semantic failures name the offending key.
World load_world(const std::string& path);
World world_from_json_text(const std::string& text, const std::string& origin);
std::string world_to_json_text(const World& w);
void save_world(const World& w, const std::string& path);

/// Endpoint task files: {"theta0": [...], "thetag": [...]}.
struct EndpointTask {
  Vec theta0, thetag;
};

EndpointTask load_task(const std::string& path);
void save_task(const EndpointTask& task, const std::string& path);

/// Run settings: basis choice, planner, and solver overrides. Every field
/// is optional in the file; missing fields keep their defaults.
struct RunSettings {
  SolverConfig solver;
  BasisFamily basis_family = BasisFamily::DerivOrthogonal;
  int basis_order = 8;
  double horizon = 1.0;
  Planner planner = Planner::Drafto;

  std::shared_ptr<const BasisSet> make_basis() const;
};

RunSettings load_settings(const std::string& path);
RunSettings settings_from_json_text(const std::string& text, const std::string& origin);

/// Solve artifacts.
void write_result_json(const std::string& path, const SolveResult& res, Planner planner);
void write_trace_csv(const std::string& path, const std::vector<IterRecord>& trace);
void write_trajectory_csv(const std::string& path, const Trajectory& traj, int samples = 201);

/// Benchmark artifacts.
void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_bench_csv(const std::string& path);
void write_summary_json(const std::string& path, const std::vector<SummaryRow>& rows);
std::string summary_table(const std::vector<SummaryRow>& rows);
/// Static strip plot of per-planner solve times.
void write_time_svg(const std::string& path, const std::vector<BenchRecord>& records);

}  // namespace drafto
