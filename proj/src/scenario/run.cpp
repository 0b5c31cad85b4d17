#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tubeplan/scenario.hpp"

namespace tubeplan {

using nlohmann::json;

std::string to_string(Verdict v) { return v == Verdict::kClear ? "clear" : "collide"; }

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> state_names(VehicleKind kind) {
  if (kind == VehicleKind::kQuadrotor) return {"x1", "x2", "x3", "v1", "v2", "v3", "eta1", "eta2", "eta3"};
  return {"x", "y", "h", "V", "psi", "gamma", "T", "V_des", "psi_des", "eta_u", "eta_w0", "eta_w1", "eta_v0",
          "eta_v1"};
}

/// Writes `# key=value` metadata lines ahead of the CSV header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& hash, std::uint64_t seed)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# scenario_hash=" << hash << "\n# seed=" << seed << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

/// One JSON object per line; the first line carries the metadata.
class JsonlWriter {
 public:
  JsonlWriter(const std::filesystem::path& path, const std::string& hash, std::uint64_t seed,
              const std::string& kind)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    write({{"meta", {{"scenario_hash", hash}, {"seed", seed}, {"records", kind}}}});
  }
  void write(const json& j) { out_ << j.dump() << "\n"; }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_nominal(const std::filesystem::path& path, const Trajectory& tr, const std::string& hash,
                   std::uint64_t seed) {
  CsvWriter csv(path, hash, seed);
  std::vector<std::string> header{"t"};
  for (const std::string& n : state_names(tr.kind)) header.push_back(n);
  csv.row(header);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    std::vector<std::string> cells{num(tr.grid.time(k))};
    for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) cells.push_back(num(tr.states[k](i)));
    csv.row(cells);
  }
}

void write_tube(const std::filesystem::path& path, const Tube& tube, const std::string& hash,
                std::uint64_t seed) {
  JsonlWriter out(path, hash, seed, "tube");
  for (const ConfidenceEllipsoid& e : tube.ellipsoids) {
    json sigma = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) sigma.push_back(e.sigma(r, c));
    out.write({{"t", e.t}, {"center", {e.center.x(), e.center.y(), e.center.z()}}, {"sigma", sigma}, {"c2", e.c2}});
  }
}

void write_obstacles(const std::filesystem::path& path, const std::vector<CuboidObstacle>& obstacles,
                     const std::string& hash, std::uint64_t seed) {
  JsonlWriter out(path, hash, seed, "obstacles");
  for (const CuboidObstacle& o : obstacles) {
    json A = json::array();
    for (Eigen::Index r = 0; r < o.A().rows(); ++r) A.push_back({o.A()(r, 0), o.A()(r, 1), o.A()(r, 2)});
    json b = json::array();
    for (Eigen::Index r = 0; r < o.b().size(); ++r) b.push_back(o.b()(r));
    out.write({{"id", o.id()}, {"A", A}, {"b", b}, {"buffer", o.buffer()}});
  }
}

json clearance_json(const ClearanceReport& r) {
  return {{"obstacle_id", r.obstacle_id},
          {"min_cstar2", finite_or_null(r.min_cstar2)},
          {"argmin_t", finite_or_null(r.argmin_t)},
          {"worst_z", r.worst_z.allFinite() ? json{r.worst_z.x(), r.worst_z.y(), r.worst_z.z()} : json(nullptr)},
          {"c2", r.c2},
          {"verdict", r.collide ? "collide" : "clear"},
          {"samples_checked", r.samples_checked},
          {"qp_solves", r.qp_solves}};
}

Verdict verdict_of(const std::vector<ClearanceReport>& reports) {
  for (const ClearanceReport& r : reports) {
    if (r.collide) return Verdict::kCollide;
  }
  return Verdict::kClear;
}

void finish(const RunReport& report, const RunOptions& opt) {
  write_json(opt.out_dir / "report.json", report.to_json());
  json timings = {{"scenario_hash", report.scenario_hash}, {"seed", report.seed}, {"mode", report.mode}};
  for (const auto& [stage, ms] : report.timings_ms) timings["timings_ms"][stage] = ms;
  write_json(opt.out_dir / "timings.json", timings);
}

RunReport start_report(const std::string& mode, const Scenario& s) {
  RunReport r;
  r.mode = mode;
  r.scenario_hash = scenario_hash(s);
  r.seed = s.seed;
  r.config = scenario_to_json(s);
  return r;
}

}  // namespace

json RunReport::to_json() const {
  json j;
  j["mode"] = mode;
  j["scenario_hash"] = scenario_hash;
  j["seed"] = seed;
  j["verdict"] = tubeplan::to_string(verdict);
  json cl = json::array();
  for (const ClearanceReport& r : clearance) cl.push_back(clearance_json(r));
  j["clearance"] = cl;
  if (!deviations.empty() || mode == "mc-compare") {
    json dev = json::array();
    for (const ChannelDeviation& d : deviations)
      dev.push_back({{"channel", d.channel},
                     {"max_relative_deviation", finite_or_null(d.max_relative_deviation)},
                     {"at_time", finite_or_null(d.at_time)}});
    j["deviation"] = dev;
    j["degenerate"] = degenerate;
  }
  if (!extra.is_null()) j["results"] = extra;
  j["config"] = config;
  return j;
}

Scenario apply_overrides(const Scenario& s, const RunOptions& opt) {
  Scenario out = s;
  if (opt.seed) out.seed = *opt.seed;
  if (opt.beta) out.beta = *opt.beta;
  if (opt.stride) out.stride = *opt.stride;
  out.validate();
  return out;
}

ChannelDeviation max_relative_deviation(const std::vector<double>& t, const std::vector<double>& lc,
                                        const std::vector<double>& mc, double floor) {
  ChannelDeviation d;
  d.max_relative_deviation = std::numeric_limits<double>::quiet_NaN();
  d.at_time = std::numeric_limits<double>::quiet_NaN();
  double peak = 0.0;
  for (double v : lc) peak = std::max(peak, v);
  if (!(peak > 0.0)) return d;
  d.max_relative_deviation = 0.0;
  for (std::size_t k = 0; k < lc.size(); ++k) {
    if (lc[k] < floor * peak) continue;
    const double rel = std::abs(mc[k] - lc[k]) / lc[k];
    if (rel > d.max_relative_deviation) {
      d.max_relative_deviation = rel;
      d.at_time = t[k];
    }
  }
  return d;
}

RunReport run_validate(const Scenario& scenario, const RunOptions& opt) {
  const Scenario s = apply_overrides(scenario, opt);
  std::filesystem::create_directories(opt.out_dir);
  RunReport report = start_report("validate", s);

  const auto model = s.model();
  const DesiredTrajectory des = s.desired_trajectory();
  const TimeGrid grid = s.grid();

  auto t = Clock::now();
  const Trajectory nominal = integrate_nominal(*model, s.x0(*model, des), des, grid);
  report.timings_ms["nominal"] = ms_since(t);
  t = Clock::now();
  const LinearizationHistory lin = linearize(*model, nominal, des);
  report.timings_ms["linearize"] = ms_since(t);
  t = Clock::now();
  const CovarianceHistory cov = propagate_covariance(lin, s.P0(model->state_dim()));
  report.timings_ms["covariance"] = ms_since(t);
  t = Clock::now();
  const Tube tube = build_tube(nominal, cov, s.beta, model->position_rows());
  report.timings_ms["tube"] = ms_since(t);
  report.timings_ms["lc_total"] = report.timings_ms["nominal"] + report.timings_ms["linearize"] +
                                  report.timings_ms["covariance"] + report.timings_ms["tube"];

  const std::vector<CuboidObstacle> obstacles = s.build_obstacles();
  t = Clock::now();
  report.clearance = check_tube_collision(tube, obstacles, s.stride);
  report.timings_ms["collision"] = ms_since(t);
  report.verdict = verdict_of(report.clearance);
  report.extra = {{"c2", tube.empty() ? 0.0 : tube.ellipsoids.front().c2},
                  {"samples", tube.size()},
                  {"stride", s.stride}};

  write_nominal(opt.out_dir / "nominal.csv", nominal, report.scenario_hash, report.seed);
  write_tube(opt.out_dir / "tube.jsonl", tube, report.scenario_hash, report.seed);
  write_obstacles(opt.out_dir / "obstacles.jsonl", obstacles, report.scenario_hash, report.seed);
  finish(report, opt);
  return report;
}

RunReport run_plan(const Scenario& scenario, const RunOptions& opt) {
  const Scenario s = apply_overrides(scenario, opt);
  if (!s.planner) throw ScenarioError("planner: missing required field for plan mode");
  std::filesystem::create_directories(opt.out_dir);
  RunReport report = start_report("plan", s);

  const auto model = s.model();
  VehicleSetup vehicle{model, s.P0(model->state_dim()), s.beta, s.dt};
  std::vector<CuboidObstacle> obstacles = s.build_obstacles();
  const double b0 = initial_buffer(vehicle);
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!s.obstacles[i].buffer) obstacles[i].set_buffer(b0);
  }

  auto t = Clock::now();
  const DynamicPlanResult res =
      dynamic_informed_rrt_star(s.planner->start, s.planner->goal, obstacles, vehicle, s.planner->config, s.seed);
  report.timings_ms["plan_total"] = ms_since(t);
  report.clearance = res.clearance;
  report.verdict = verdict_of(res.clearance);

  const double c2 = res.evaluation.tube.empty() ? 0.0 : res.evaluation.tube.ellipsoids.front().c2;
  double min_ratio = kInf;
  for (const ClearanceReport& r : res.clearance) min_ratio = std::min(min_ratio, r.min_cstar2 / c2);
  json history = json::array();
  for (const OuterIterationRecord& h : res.history) {
    json d = json::array();
    for (const ObstacleDistance& od : h.distances)
      d.push_back({{"obstacle_id", od.obstacle_id}, {"clearance", od.clearance}, {"d", od.d}, {"t", od.t}});
    history.push_back({{"iteration", h.iteration},
                       {"c_best", finite_or_null(h.c_best)},
                       {"inner_iterations", h.inner_iterations},
                       {"regrow_iterations", h.regrow_iterations},
                       {"buffers", h.buffers},
                       {"distances", d}});
  }
  report.extra = {{"c2", c2},
                  {"min_cstar2_over_c2", finite_or_null(min_ratio)},
                  {"path_length", res.evaluation.reference.length},
                  {"duration", res.evaluation.reference.duration},
                  {"initial_buffer", b0},
                  {"tree_nodes", res.tree.size()},
                  {"history", history}};

  {
    CsvWriter csv(opt.out_dir / "path.csv", report.scenario_hash, report.seed);
    csv.row({"t", "x", "y", "z"});
    const PlannedReference& ref = res.evaluation.reference;
    for (std::size_t i = 0; i < ref.waypoints.size(); ++i)
      csv.row({num(ref.arrival[i]), num(ref.waypoints[i].x()), num(ref.waypoints[i].y()), num(ref.waypoints[i].z())});
  }
  {
    CsvWriter csv(opt.out_dir / "buffers.csv", report.scenario_hash, report.seed);
    std::vector<std::string> header{"iteration", "c_best"};
    for (const CuboidObstacle& o : obstacles) header.push_back("buffer_" + o.id());
    csv.row(header);
    for (const OuterIterationRecord& h : res.history) {
      std::vector<std::string> cells{std::to_string(h.iteration), num(h.c_best)};
      for (double b : h.buffers) cells.push_back(num(b));
      csv.row(cells);
    }
    std::vector<std::string> final_row{"final", num(res.tree.c_best())};
    for (const CuboidObstacle& o : res.buffered_obstacles) final_row.push_back(num(o.buffer()));
    csv.row(final_row);
  }
  if (s.planner->dump_tree) {
    JsonlWriter out(opt.out_dir / "tree.jsonl", report.scenario_hash, report.seed, "tree");
    for (std::size_t i = 0; i < res.tree.size(); ++i) {
      const PlanNode& n = res.tree.node(static_cast<int>(i));
      out.write({{"id", i}, {"x", n.coords.x()}, {"y", n.coords.y()}, {"parent", n.parent}, {"cost", n.cost}});
    }
  }
  write_nominal(opt.out_dir / "nominal.csv", res.evaluation.nominal, report.scenario_hash, report.seed);
  write_tube(opt.out_dir / "tube.jsonl", res.evaluation.tube, report.scenario_hash, report.seed);
  write_obstacles(opt.out_dir / "obstacles.jsonl", s.build_obstacles(), report.scenario_hash, report.seed);
  finish(report, opt);
  return report;
}

RunReport run_mc_compare(const Scenario& scenario, const RunOptions& opt) {
  const Scenario s = apply_overrides(scenario, opt);
  if (opt.runs < 100) throw InvalidInput("mc-compare: runs must be >= 100");
  if (s.initial_covariance_diagonal && !s.initial_covariance_diagonal->isZero(0.0))
    throw InvalidInput("mc-compare: the Monte Carlo ensemble starts from a fixed state; use a zero initial covariance");
  std::filesystem::create_directories(opt.out_dir);
  RunReport report = start_report("mc-compare", s);

  const auto model = s.model();
  const DesiredTrajectory des = s.desired_trajectory();
  const TimeGrid grid = s.grid();
  const VecX x0 = s.x0(*model, des);

  auto t = Clock::now();
  const Trajectory nominal = integrate_nominal(*model, x0, des, grid);
  const CovarianceHistory cov = propagate_covariance(linearize(*model, nominal, des), s.P0(model->state_dim()));
  report.timings_ms["lc_total"] = ms_since(t);
  t = Clock::now();
  const EnsembleResult ens = mc_ensemble(*model, x0, des, grid, opt.runs, s.seed, opt.threads);
  report.timings_ms["mc_total"] = ms_since(t);

  const auto rows = model->position_rows();
  const auto names = state_names(model->kind());
  std::vector<double> times(grid.count);
  for (std::size_t k = 0; k < grid.count; ++k) times[k] = grid.time(k);

  CsvWriter csv(opt.out_dir / "variance.csv", report.scenario_hash, report.seed);
  std::vector<std::string> header{"t"};
  for (int r : rows) header.push_back("lc_var_" + names[static_cast<std::size_t>(r)]);
  for (int r : rows) header.push_back("mc_var_" + names[static_cast<std::size_t>(r)]);
  csv.row(header);
  for (std::size_t k = 0; k < grid.count; ++k) {
    std::vector<std::string> cells{num(times[k])};
    for (int r : rows) cells.push_back(num(cov.P[k](r, r)));
    for (int r : rows) cells.push_back(num(ens.covariance.P[k](r, r)));
    csv.row(cells);
  }

  for (int r : rows) {
    std::vector<double> lc(grid.count), mc(grid.count);
    for (std::size_t k = 0; k < grid.count; ++k) {
      lc[k] = cov.P[k](r, r);
      mc[k] = ens.covariance.P[k](r, r);
    }
    ChannelDeviation d = max_relative_deviation(times, lc, mc);
    d.channel = names[static_cast<std::size_t>(r)];
    const bool mc_zero = std::all_of(mc.begin(), mc.end(), [](double v) { return v == 0.0; });
    if (!std::isfinite(d.max_relative_deviation) || mc_zero) {
      report.degenerate = true;
      d.max_relative_deviation = std::numeric_limits<double>::quiet_NaN();
      d.at_time = std::numeric_limits<double>::quiet_NaN();
    }
    report.deviations.push_back(d);
  }
  report.extra = {{"runs", opt.runs}, {"relative_floor", 1e-2}};
  finish(report, opt);
  return report;
}

}  // namespace tubeplan
