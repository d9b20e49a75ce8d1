#include "drafto/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "drafto/errors.hpp"

namespace drafto {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << text;
}

/// Line/column of a byte offset, for parse diagnostics.
std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                     e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& origin) {
  if (!j.contains(key)) {
    throw ParseError(origin + ": missing required key '" + std::string(key) + "'");
  }
  return j.at(key);
}

Vec vec_from_json(const json& j, const std::string& origin, const char* key) {
  if (!j.is_array()) throw ParseError(origin + ": '" + key + "' must be an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError(origin + ": '" + key + "' must be an array of numbers");
    }
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

/// Bound arrays use null for an unbounded entry.
Vec bound_from_json(const json& j, double unbounded, const std::string& origin, const char* key) {
  if (!j.is_array()) throw ParseError(origin + ": '" + key + "' must be an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null()) {
      v(static_cast<int>(i)) = unbounded;
    } else if (j[i].is_number()) {
      v(static_cast<int>(i)) = j[i].get<double>();
    } else {
      throw ParseError(origin + ": '" + key + "' entries must be numbers or null");
    }
  }
  return v;
}

json bound_to_json(const Vec& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      j.push_back(v(i));
    } else {
      j.push_back(nullptr);
    }
  }
  return j;
}

Vec3 vec3_from_json(const json& j, const std::string& origin, const char* key) {
  const Vec v = vec_from_json(j, origin, key);
  if (v.size() != 3) throw ParseError(origin + ": '" + key + "' must have 3 entries");
  return Vec3(v(0), v(1), v(2));
}

json vec_to_json(VecRef v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

ChainModel chain_from_json(const json& j, const std::string& origin) {
  ChainModel c;
  const std::string type = require(j, "type", origin).get<std::string>();
  c.name = j.value("name", std::string("chain"));
  c.theta_min = vec_from_json(require(j, "theta_min", origin), origin, "theta_min");
  c.theta_max = vec_from_json(require(j, "theta_max", origin), origin, "theta_max");
  if (type == "planar") {
    c.kind = ChainModel::Kind::Planar;
    const json& lengths = require(j, "lengths", origin);
    const Vec l = vec_from_json(lengths, origin, "lengths");
    c.lengths.assign(l.data(), l.data() + l.size());
    if (j.contains("base")) {
      const Vec b = vec_from_json(j.at("base"), origin, "base");
      if (b.size() != 3) throw ParseError(origin + ": planar 'base' must be [x, y, yaw]");
      c.base_x = b(0);
      c.base_y = b(1);
      c.base_yaw = b(2);
    }
  } else if (type == "spatial") {
    c.kind = ChainModel::Kind::Spatial;
    const json& axes = require(j, "axes", origin);
    const json& offsets = require(j, "offsets", origin);
    if (!axes.is_array() || !offsets.is_array() || axes.size() != offsets.size()) {
      throw ParseError(origin + ": 'axes' and 'offsets' must be arrays of equal length");
    }
    for (std::size_t i = 0; i < axes.size(); ++i) {
      c.axes.push_back(vec3_from_json(axes[i], origin, "axes"));
      c.offsets.push_back(vec3_from_json(offsets[i], origin, "offsets"));
    }
    c.base = Iso3::Identity();
    if (j.contains("base_position")) {
      c.base.translation() = vec3_from_json(j.at("base_position"), origin, "base_position");
    }
    if (j.contains("base_rpy")) {
      const Vec3 rpy = vec3_from_json(j.at("base_rpy"), origin, "base_rpy");
      c.base.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                         Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                         Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                            .toRotationMatrix();
    }
  } else {
    throw ParseError(origin + ": chain 'type' must be planar or spatial");
  }
  if (j.contains("ee_offset")) {
    c.ee_offset = vec3_from_json(j.at("ee_offset"), origin, "ee_offset");
  }
  if (j.contains("balls")) {
    for (const json& bj : j.at("balls")) {
      CollisionBall b;
      b.link = require(bj, "link", origin).get<int>();
      b.offset = vec3_from_json(require(bj, "offset", origin), origin, "offset");
      b.radius = require(bj, "radius", origin).get<double>();
      b.check = bj.value("check", true);
      c.balls.push_back(b);
    }
  } else if (j.contains("ball_radius")) {
    c.add_default_balls(j.at("ball_radius").get<double>());
  }
  c.validate();
  return c;
}

json chain_to_json(const ChainModel& c) {
  json j;
  j["name"] = c.name;
  j["theta_min"] = vec_to_json(c.theta_min);
  j["theta_max"] = vec_to_json(c.theta_max);
  if (c.kind == ChainModel::Kind::Planar) {
    j["type"] = "planar";
    j["lengths"] = c.lengths;
    j["base"] = json::array({c.base_x, c.base_y, c.base_yaw});
  } else {
    j["type"] = "spatial";
    json axes = json::array(), offsets = json::array();
    for (const Vec3& a : c.axes) axes.push_back(vec3_to_json(a));
    for (const Vec3& o : c.offsets) offsets.push_back(vec3_to_json(o));
    j["axes"] = axes;
    j["offsets"] = offsets;
    j["base_position"] = vec3_to_json(c.base.translation());
    const Vec3 rpy = c.base.linear().eulerAngles(2, 1, 0).reverse();
    j["base_rpy"] = vec3_to_json(rpy);
  }
  j["ee_offset"] = vec3_to_json(c.ee_offset);
  json balls = json::array();
  for (const CollisionBall& b : c.balls) {
    json bj;
    bj["link"] = b.link;
    bj["offset"] = vec3_to_json(b.offset);
    bj["radius"] = b.radius;
    bj["check"] = b.check;
    balls.push_back(bj);
  }
  j["balls"] = balls;
  return j;
}

}  // namespace

World world_from_json_text(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  World w;
  w.name = j.value("name", std::string("world"));
  w.scene.margin = j.value("margin", 0.05);
  if (j.contains("obstacles")) {
    for (const json& oj : j.at("obstacles")) {
      const std::string type = require(oj, "type", origin).get<std::string>();
      if (type == "sphere") {
        Sphere s;
        s.center = vec3_from_json(require(oj, "center", origin), origin, "center");
        s.radius = require(oj, "radius", origin).get<double>();
        w.scene.obstacles.push_back(s);
      } else if (type == "box") {
        AxisAlignedBox b;
        b.lo = vec3_from_json(require(oj, "min", origin), origin, "min");
        b.hi = vec3_from_json(require(oj, "max", origin), origin, "max");
        w.scene.obstacles.push_back(b);
      } else {
        throw ParseError(origin + ": obstacle 'type' must be sphere or box");
      }
    }
  }
  const json& chains = require(j, "chains", origin);
  if (!chains.is_array() || chains.empty()) {
    throw ParseError(origin + ": 'chains' must be a non-empty array");
  }
  for (const json& cj : chains) w.model.chains.push_back(chain_from_json(cj, origin));
  w.model.self_collision = j.value("self_collision", false);
  w.model.cross_collision = j.value("cross_collision", false);
  if (j.contains("task") && !j.at("task").is_null()) {
    const json& tj = j.at("task");
    w.task.x_min = bound_from_json(require(tj, "x_min", origin), -kInf, origin, "x_min");
    w.task.x_max = bound_from_json(require(tj, "x_max", origin), kInf, origin, "x_max");
    if (tj.contains("k_task")) w.task.k_task = tj.at("k_task").get<int>();
    if (tj.contains("candidate_pool")) w.task.candidate_pool = tj.at("candidate_pool").get<int>();
  }
  w.validate();
  return w;
}

World load_world(const std::string& path) {
  return world_from_json_text(read_file(path), path);
}

std::string world_to_json_text(const World& w) {
  json j;
  j["name"] = w.name;
  j["margin"] = w.scene.margin;
  json obstacles = json::array();
  for (const Obstacle& o : w.scene.obstacles) {
    json oj;
    if (const Sphere* s = std::get_if<Sphere>(&o)) {
      oj["type"] = "sphere";
      oj["center"] = vec3_to_json(s->center);
      oj["radius"] = s->radius;
    } else {
      const AxisAlignedBox& b = std::get<AxisAlignedBox>(o);
      oj["type"] = "box";
      oj["min"] = vec3_to_json(b.lo);
      oj["max"] = vec3_to_json(b.hi);
    }
    obstacles.push_back(oj);
  }
  j["obstacles"] = obstacles;
  json chains = json::array();
  for (const ChainModel& c : w.model.chains) chains.push_back(chain_to_json(c));
  j["chains"] = chains;
  j["self_collision"] = w.model.self_collision;
  j["cross_collision"] = w.model.cross_collision;
  if (!w.task.empty()) {
    json tj;
    tj["x_min"] = bound_to_json(w.task.x_min);
    tj["x_max"] = bound_to_json(w.task.x_max);
    tj["k_task"] = w.task.k_task;
    tj["candidate_pool"] = w.task.candidate_pool;
    j["task"] = tj;
  }
  return j.dump(2) + "\n";
}

void save_world(const World& w, const std::string& path) {
  write_file(path, world_to_json_text(w));
}

EndpointTask load_task(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  EndpointTask t;
  t.theta0 = vec_from_json(require(j, "theta0", path), path, "theta0");
  t.thetag = vec_from_json(require(j, "thetag", path), path, "thetag");
  if (t.theta0.size() != t.thetag.size()) {
    throw ParseError(path + ": 'theta0' and 'thetag' must have the same length");
  }
  return t;
}

void save_task(const EndpointTask& task, const std::string& path) {
  json j;
  j["theta0"] = vec_to_json(task.theta0);
  j["thetag"] = vec_to_json(task.thetag);
  write_file(path, j.dump(2) + "\n");
}

std::shared_ptr<const BasisSet> RunSettings::make_basis() const {
  return std::make_shared<BasisSet>(basis_family, basis_order, horizon);
}

RunSettings settings_from_json_text(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  RunSettings s;
  if (j.contains("planner")) s.planner = planner_from_string(j.at("planner").get<std::string>());
  if (j.contains("basis")) {
    const json& bj = j.at("basis");
    if (bj.contains("family")) {
      s.basis_family = basis_family_from_string(bj.at("family").get<std::string>());
    }
    if (bj.contains("order")) s.basis_order = bj.at("order").get<int>();
    if (bj.contains("horizon")) s.horizon = bj.at("horizon").get<double>();
  }
  if (j.contains("solver")) {
    const json& sj = j.at("solver");
    SolverConfig& c = s.solver;
    auto num = [&](const char* key, double& slot) {
      if (sj.contains(key)) slot = sj.at(key).get<double>();
    };
    auto integer = [&](const char* key, int& slot) {
      if (sj.contains(key)) slot = sj.at(key).get<int>();
    };
    num("rho_smooth", c.rho_smooth);
    num("sigma_jnt", c.sigma_jnt);
    num("lambda0", c.lambda0);
    num("lambda_min", c.lambda_min);
    num("lambda_max", c.lambda_max);
    num("eta_lo", c.eta_lo);
    num("eta_hi", c.eta_hi);
    num("lambda_up", c.lambda_up);
    num("lambda_down", c.lambda_down);
    integer("window", c.window);
    num("c1", c.c1);
    num("backtrack", c.backtrack);
    integer("max_backtracks", c.max_backtracks);
    integer("k_check", c.k_check);
    integer("k_limit", c.k_limit);
    integer("k_task", c.k_task);
    num("eps_jnt", c.eps_jnt);
    integer("max_iterations", c.max_iterations);
    num("beta_ema", c.beta_ema);
    num("phase_tol_obs", c.phase_tol_obs);
    num("phase_tol_jnt", c.phase_tol_jnt);
    num("step_tol", c.step_tol);
    num("rel_j_tol", c.rel_j_tol);
    integer("max_repair", c.max_repair);
    num("lambda_reg", c.lambda_reg);
    num("qp_tol", c.qp_tol);
    integer("qp_max_iter", c.qp_max_iter);
    c.validate();
  }
  return s;
}

RunSettings load_settings(const std::string& path) {
  return settings_from_json_text(read_file(path), path);
}

void write_result_json(const std::string& path, const SolveResult& res, Planner planner) {
  json j;
  j["planner"] = to_string(planner);
  j["status"] = to_string(res.status);
  j["psi"] = vec_to_json(res.psi);
  j["iterations"] = res.iterations;
  j["initial_objective"] = res.initial_objective;
  j["objective"] = res.trace.empty() ? res.initial_objective : res.trace.back().J;
  j["v_inf"] = res.final_v_inf;
  j["dense_success"] = res.dense_success;
  j["repair_iterations"] = res.repair_iterations;
  j["time"] = {{"init_s", res.init_seconds},
               {"loop_s", res.loop_seconds},
               {"repair_s", res.repair_seconds},
               {"total_s", res.total_seconds()}};
  if (!res.error.empty()) j["error"] = res.error;
  write_file(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::string& path, const std::vector<IterRecord>& trace) {
  std::ostringstream ss;
  ss << "iter,J,mred,ared,lambda,alpha,phase,accepted,active_set_size,wall_us,nondescent\n";
  char buf[256];
  for (const IterRecord& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%ld,%d\n", r.iter,
                  r.J, r.mred, r.ared, r.lambda, r.alpha, r.phase, r.accepted ? 1 : 0,
                  r.active_set_size, r.wall_us, r.nondescent ? 1 : 0);
    ss << buf;
  }
  write_file(path, ss.str());
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, int samples) {
  if (samples < 2) throw ConfigError("trajectory export needs at least 2 samples");
  std::ostringstream ss;
  ss << "t";
  for (int i = 0; i < traj.dofs; ++i) ss << ",q" << i;
  ss << "\n";
  const double T = traj.basis->horizon();
  char buf[64];
  for (int k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / (samples - 1) * T;
    const Vec q = traj.value(t);
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    ss << buf;
    for (int i = 0; i < q.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", q(i));
      ss << buf;
    }
    ss << "\n";
  }
  write_file(path, ss.str());
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
  std::ostringstream ss;
  ss << "task_id,planner,success,time_s,roughness,iters,v_inf,status\n";
  char buf[256];
  for (const BenchRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g,%d,%.17g,%s\n", r.task_id,
                  to_string(r.planner).c_str(), r.success ? 1 : 0, r.time_s, r.roughness, r.iters,
                  r.v_inf, to_string(r.status).c_str());
    ss << buf;
  }
  write_file(path, ss.str());
}

std::vector<BenchRecord> read_bench_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::vector<BenchRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 8) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 8 fields");
    }
    BenchRecord r;
    r.task_id = std::stoi(fields[0]);
    r.planner = planner_from_string(fields[1]);
    r.success = fields[2] == "1";
    r.time_s = std::stod(fields[3]);
    r.roughness = std::stod(fields[4]);
    r.iters = std::stoi(fields[5]);
    r.v_inf = std::stod(fields[6]);
    if (fields[7] == "Converged") r.status = SolveStatus::Converged;
    else if (fields[7] == "MaxIter") r.status = SolveStatus::MaxIter;
    else if (fields[7] == "PartialFeasible") r.status = SolveStatus::PartialFeasible;
    else if (fields[7] == "TaskInfeasible") r.status = SolveStatus::TaskInfeasible;
    else throw ParseError(path + ":" + std::to_string(lineno) + ": unknown status " + fields[7]);
    out.push_back(r);
  }
  return out;
}

void write_summary_json(const std::string& path, const std::vector<SummaryRow>& rows) {
  json j;
  json arr = json::array();
  for (const SummaryRow& r : rows) {
    json rj;
    rj["planner"] = to_string(r.planner);
    rj["tasks"] = r.tasks;
    rj["success_pct"] = r.success_pct;
    rj["time_avg"] = r.time_avg;
    rj["time_max"] = r.time_max;
    rj["rough_avg"] = r.rough_avg;
    rj["rough_max"] = r.rough_max;
    arr.push_back(rj);
  }
  j["planners"] = arr;
  write_file(path, j.dump(2) + "\n");
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream ss;
  char buf[256];
  ss << "planner     tasks  S%      T avg/max [s]        R avg/max [rad/s^2]\n";
  for (const SummaryRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-11s %-6d %-7.1f %9.4f / %-9.4f %9.3f / %-9.3f\n",
                  to_string(r.planner).c_str(), r.tasks, r.success_pct, r.time_avg, r.time_max,
                  r.rough_avg, r.rough_max);
    ss << buf;
  }
  return ss.str();
}

void write_time_svg(const std::string& path, const std::vector<BenchRecord>& records) {
  // One horizontal strip per planner; a dot per record at x ~ solve time.
  std::vector<Planner> planners;
  double t_max = 0.0;
  for (const BenchRecord& r : records) {
    if (std::find(planners.begin(), planners.end(), r.planner) == planners.end()) {
      planners.push_back(r.planner);
    }
    t_max = std::max(t_max, r.time_s);
  }
  if (t_max <= 0.0) t_max = 1.0;
  const int width = 640, row_h = 44, left = 110, right = 20, top = 30;
  const int height = top + row_h * static_cast<int>(planners.size()) + 30;
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  ss << "<text x=\"" << left << "\" y=\"18\" font-family=\"monospace\" font-size=\"13\">"
     << "solve time per task [s], max " << t_max << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  for (std::size_t pi = 0; pi < planners.size(); ++pi) {
    const int y = top + static_cast<int>(pi) * row_h + row_h / 2;
    ss << "<text x=\"8\" y=\"" << y + 4 << "\" font-family=\"monospace\" font-size=\"13\">"
       << to_string(planners[pi]) << "</text>\n";
    ss << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - right << "\" y2=\""
       << y << "\" stroke=\"#cccccc\"/>\n";
    for (const BenchRecord& r : records) {
      if (r.planner != planners[pi]) continue;
      const double x = left + (width - left - right) * (r.time_s / t_max);
      ss << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"" << colors[pi % 3]
         << "\" fill-opacity=\"0.45\"/>\n";
    }
  }
  ss << "</svg>\n";
  write_file(path, ss.str());
}

}  // namespace drafto
