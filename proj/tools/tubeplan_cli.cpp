#include <iostream>

#include <CLI11.hpp>

#include "tubeplan/scenario.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::size_t> stride;
  std::size_t runs = 10000;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Override the scenario seed");
  cmd->add_option("--beta", f.beta, "Override the probability level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--stride", f.stride, "Collision-check stride")->check(CLI::PositiveNumber);
}

void print_summary(const tubeplan::RunReport& r) {
  std::cout << r.mode << ": verdict " << tubeplan::to_string(r.verdict) << " (scenario " << r.scenario_hash
            << ", seed " << r.seed << ")\n";
  for (const auto& c : r.clearance) {
    std::cout << "  " << c.obstacle_id << ": min c*^2 = ";
    if (std::isfinite(c.min_cstar2)) {
      std::cout << c.min_cstar2 << " at t = " << c.argmin_t << " s";
    } else {
      std::cout << "inf (prefiltered)";
    }
    std::cout << ", c^2 = " << c.c2 << (c.collide ? "  COLLIDE" : "") << "\n";
  }
  for (const auto& d : r.deviations) {
    std::cout << "  " << d.channel << ": max relative deviation " << d.max_relative_deviation << " at t = "
              << d.at_time << " s\n";
  }
  if (r.degenerate) std::cout << "  degenerate comparison (zero variance)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-tube validation and chance-constrained planning"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* validate = app.add_subcommand("validate", "Propagate covariance and check the tube against obstacles");
  CLI::App* plan = app.add_subcommand("plan", "Plan a path with obstacle buffers sized from the tube");
  CLI::App* mc = app.add_subcommand("mc-compare", "Compare linear covariance with a Monte Carlo ensemble");
  for (CLI::App* cmd : {validate, plan, mc}) add_common(cmd, f);
  mc->add_option("--runs", f.runs, "Monte Carlo runs")->capture_default_str()->check(CLI::Range(100, 100000000));
  mc->add_option("--threads", f.threads, "Worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const tubeplan::Scenario scenario = tubeplan::load_scenario(f.scenario);
    tubeplan::RunOptions opt;
    opt.out_dir = f.out;
    opt.seed = f.seed;
    opt.beta = f.beta;
    opt.stride = f.stride;
    opt.runs = f.runs;
    opt.threads = f.threads;

    tubeplan::RunReport report;
    if (*validate) {
      report = tubeplan::run_validate(scenario, opt);
    } else if (*plan) {
      report = tubeplan::run_plan(scenario, opt);
    } else {
      report = tubeplan::run_mc_compare(scenario, opt);
    }
    print_summary(report);
    return report.verdict == tubeplan::Verdict::kCollide ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
