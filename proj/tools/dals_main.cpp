#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "dals/experiments.hpp"
#include "dals/fusion.hpp"
#include "dals/report.hpp"
#include "dals/scenario.hpp"

namespace {

using namespace dals;

struct CommonOpts {
  std::string scenario_file;
  std::string scenario_name;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  int tau = 0;
  int lags = 0;
  double mu = -1.0;
  double nu = -1.0;
  std::string coupling;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scenario", o.scenario_file, "scenario file (key = value format)");
  cmd->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("--trials", o.trials, "Monte Carlo trial count");
  cmd->add_option("--tau", o.tau, "innovation window length");
  cmd->add_option("--lags", o.lags, "autocovariance lag count N");
  cmd->add_option("--mu", o.mu, "ridge regularization");
  cmd->add_option("--nu", o.nu, "convergence gap threshold");
  cmd->add_option("--coupling", o.coupling, "shared-q | block-diag");
  cmd->add_option("--out", o.out, "output path (default: stdout)");
  cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

harness::Scenario resolve_scenario(const CommonOpts& o, const std::string& fallback) {
  harness::Scenario s;
  if (!o.scenario_file.empty()) {
    s = harness::load_scenario_file(o.scenario_file);
  } else {
    s = harness::builtin_scenario(o.scenario_name.empty() ? fallback : o.scenario_name);
  }
  if (o.seed_set) s.seed = o.seed;
  if (o.trials > 0) s.trials = o.trials;
  if (o.tau > 0) s.tau = o.tau;
  if (o.lags > 0) s.lags = o.lags;
  if (o.mu >= 0.0) s.mu = o.mu;
  if (o.nu >= 0.0) s.nu = o.nu;
  if (!o.coupling.empty()) s.coupling = o.coupling;
  s.validate();
  return s;
}

void emit(const report::Table& t, const CommonOpts& o) {
  if (o.out.empty()) {
    report::write(t, std::cout, o.format);
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + o.out);
  report::write(t, f, o.format);
}

void emit_aux(const report::Table& t, const std::string& path, const std::string& format) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + path);
  report::write(t, f, format);
}

int cmd_simulate(const CommonOpts& o) {
  const auto s = resolve_scenario(o, "ssn");
  const auto sys = s.to_system();
  system::SimulateOptions opts;
  if (s.mobile) {
    opts.sensor_poses = s.initial_poses();
    opts.mobile = true;
    opts.Ts = s.Ts;
    opts.comm_range = s.comm_range;
  }
  const auto traj = system::simulate_truth(sys, s.horizon, s.seed, opts);

  report::Table t;
  t.columns = {"step"};
  for (Eigen::Index i = 0; i < sys.state_dim(); ++i) t.columns.push_back("x" + std::to_string(i));
  for (size_t a = 0; a < sys.agents.size(); ++a) {
    t.columns.push_back("present" + std::to_string(a));
    for (Eigen::Index i = 0; i < sys.agents[a].H.rows(); ++i)
      t.columns.push_back("z" + std::to_string(a) + "_" + std::to_string(i));
  }
  for (int k = 1; k <= traj.steps(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (Eigen::Index i = 0; i < sys.state_dim(); ++i)
      row.push_back(traj.states[static_cast<size_t>(k)](i));
    for (size_t a = 0; a < sys.agents.size(); ++a) {
      const auto& z = traj.measurement(static_cast<int>(a), k);
      row.push_back(z.has_value() ? 1.0 : 0.0);
      for (Eigen::Index i = 0; i < sys.agents[a].H.rows(); ++i)
        row.push_back(z.has_value() ? (*z)(i) : 0.0);
    }
    t.add_row(row);
  }
  emit(t, o);
  return 0;
}

report::Table iteration_table(const fusion::DalsResult& res) {
  report::Table t;
  t.columns = {"iteration", "gap", "fused_trace", "residual_norm", "recovered"};
  const Eigen::Index n = res.hypothesis.Q.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      t.columns.push_back("q_" + std::to_string(i) + std::to_string(j));
  for (const auto& it : res.trace) {
    std::vector<double> row{static_cast<double>(it.iteration), it.gap, it.fused_trace,
                            it.residual_norm, it.recovered ? 1.0 : 0.0};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(it.Q(i, j));
    t.add_row(row);
  }
  return t;
}

int cmd_als(const CommonOpts& o, int agent) {
  const auto s = resolve_scenario(o, "ssn");
  const auto sys = s.to_system();
  system::SimulateOptions opts;
  if (s.mobile) {
    opts.sensor_poses = s.initial_poses();
    opts.mobile = true;
    opts.Ts = s.Ts;
    opts.comm_range = s.comm_range;
  }
  const auto traj = system::simulate_truth(sys, s.horizon, s.seed, opts);
  const auto res = fusion::run_single_als(sys, traj, agent, s.initial_hypothesis({agent}),
                                          s.dals_params(), s.q_structure(), s.r_structure(agent));
  emit(iteration_table(res), o);
  if (!res.converged) {
    std::cerr << "warning: als: iteration cap reached, best iterate reported\n";
    return 3;
  }
  return 0;
}

int cmd_dals(const CommonOpts& o, int agent) {
  const auto s = resolve_scenario(o, "ssn");
  const int trials = s.trials > 0 ? s.trials : 1;
  const auto records = experiments::run_monte_carlo(s, trials, s.seed, agent);
  emit(experiments::monte_carlo_table(records), o);
  int failures = 0;
  for (const auto& r : records)
    if (!r.converged) ++failures;
  if (failures == trials) {
    std::cerr << "error: numerical: no trial converged within the iteration cap\n";
    return 3;
  }
  if (failures > 0)
    std::cerr << "warning: dals: " << failures << "/" << trials << " trials hit the iteration cap\n";
  return 0;
}

int cmd_experiment(const CommonOpts& o, const std::string& name, const std::string& aux_out) {
  if (name == "fig1") {
    const auto s = resolve_scenario(o, "fig1");
    emit(experiments::experiment_fig1(s).table(), o);
    return 0;
  }
  if (name == "ssn") {
    const auto s = resolve_scenario(o, "ssn");
    const auto res = experiments::experiment_ssn(s);
    emit(res.trace_table(), o);
    emit_aux(res.mse_table(), aux_out, o.format);
    return 0;
  }
  if (name == "msn") {
    const auto s = resolve_scenario(o, "msn");
    const auto res = experiments::experiment_msn(s);
    emit(res.series_table(), o);
    emit_aux(res.snapshot_table(), aux_out, o.format);
    return 0;
  }
  throw ConfigError("experiment --name must be fig1, ssn or msn");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed auto-covariance least squares simulator"};
  app.require_subcommand(1);

  CommonOpts sim_o, als_o, dals_o, exp_o;
  int als_agent = 0, dals_agent = 0;
  std::string exp_name, exp_aux;

  auto* sim = app.add_subcommand("simulate", "generate a ground-truth trajectory");
  add_common(sim, sim_o);
  sim->add_option("--name", sim_o.scenario_name, "builtin scenario: fig1|ssn|msn");

  auto* als_cmd = app.add_subcommand("als", "single-agent iterative ALS");
  add_common(als_cmd, als_o);
  als_cmd->add_option("--name", als_o.scenario_name, "builtin scenario: fig1|ssn|msn");
  als_cmd->add_option("--agent", als_agent, "agent index");

  auto* dals_cmd = app.add_subcommand("dals", "distributed ALS over the network");
  add_common(dals_cmd, dals_o);
  dals_cmd->add_option("--name", dals_o.scenario_name, "builtin scenario: fig1|ssn|msn");
  dals_cmd->add_option("--agent", dals_agent, "ego agent index");

  auto* exp = app.add_subcommand("experiment", "benchmark experiment reports");
  add_common(exp, exp_o);
  exp->add_option("--name", exp_name, "fig1 | ssn | msn")->required();
  exp->add_option("--aux-out", exp_aux, "secondary table output path (ssn MSE / msn snapshots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (als_cmd->parsed()) return cmd_als(als_o, als_agent);
    if (dals_cmd->parsed()) return cmd_dals(dals_o, dals_agent);
    if (exp->parsed()) return cmd_experiment(exp_o, exp_name, exp_aux);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
