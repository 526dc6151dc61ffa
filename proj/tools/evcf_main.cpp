#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evcf/estimators.hpp"
#include "evcf/events.hpp"
#include "evcf/graph.hpp"
#include "evcf/identify.hpp"
#include "evcf/numeric.hpp"
#include "evcf/scenario.hpp"
#include "evcf/simulate.hpp"
#include "evcf/study.hpp"
#include "evcf/weights.hpp"

namespace {

using namespace evcf;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// long-format dump of cumulative coefficients: t,coefficient,value,flag
void write_long_csv(std::ostream& out, const std::string& name, const StepFunction& f,
                    const std::vector<double>& flagged_times) {
  std::vector<double> times(f.jump_times().begin(), f.jump_times().end());
  times.insert(times.end(), flagged_times.begin(), flagged_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  out << "0," << name << ',' << format_double(f.initial_value()) << ",0\n";
  for (double t : times) {
    const bool flagged =
        std::find(flagged_times.begin(), flagged_times.end(), t) != flagged_times.end();
    out << format_double(t) << ',' << name << ',' << format_double(f.value(t)) << ','
        << (flagged ? 1 : 0) << '\n';
  }
}

int run_simulate(const std::string& scenario_file, const std::string& intervene_file,
                 std::size_t n, std::uint64_t seed, int threads, const std::string& out) {
  const ScenarioSpec s = read_scenario_file(scenario_file);
  SimOptions opt;
  opt.threads = threads;
  Cohort cohort;
  if (intervene_file.empty()) {
    cohort = simulate_cohort(s, n, seed, opt);
  } else {
    const InterventionSpec theta = read_intervention_file(intervene_file);
    cohort = simulate_counterfactual(s, theta, n, seed, opt);
  }
  write_cohort(cohort, out, baseline_sibling(out));
  std::cout << "wrote " << out << " and " << baseline_sibling(out) << " (" << n << " paths)\n";
  return 0;
}

int run_weights(const std::string& scenario_file, const std::string& intervene_file,
                const std::string& cohort_file, const std::string& out_file) {
  const ScenarioSpec s = read_scenario_file(scenario_file);
  const InterventionSpec theta = read_intervention_file(intervene_file);
  const Cohort cohort = read_cohort(cohort_file, baseline_sibling(cohort_file));
  auto out = open_out(out_file);
  bool header = false;
  for (const auto& path : cohort.paths) {
    const WeightTrajectory w = weight_trajectory(path, s, theta);
    if (!header) {
      out << "id,t,log_w_total";
      for (const auto& owner : w.factor_owners) out << ",log_w_" << owner;
      out << '\n';
      header = true;
    }
    std::vector<double> times{0.0};
    times.insert(times.end(), w.log_total.jump_times().begin(), w.log_total.jump_times().end());
    for (double t : times) {
      out << path.id << ',' << format_double(t) << ',' << format_double(w.log_total.value(t));
      for (const auto& f : w.log_factors) out << ',' << format_double(f.value(t));
      out << '\n';
    }
  }
  std::cout << "wrote " << out_file << '\n';
  return 0;
}

int run_check_positivity(const std::string& scenario_file, const std::string& intervene_file,
                         const std::string& cohort_file, std::size_t n, std::uint64_t seed,
                         int threads, const std::string& out_file) {
  const ScenarioSpec s = read_scenario_file(scenario_file);
  const InterventionSpec theta = read_intervention_file(intervene_file);
  Cohort cohort;
  if (cohort_file.empty()) {
    SimOptions opt;
    opt.threads = threads;
    cohort = simulate_cohort(s, n, seed, opt);
  } else {
    cohort = read_cohort(cohort_file, baseline_sibling(cohort_file));
  }
  const PositivityReport report = positivity_check(cohort, s, theta);
  const std::string text = print_positivity(report);
  if (out_file.empty())
    std::cout << text;
  else
    open_out(out_file) << text;
  return report.pass ? 0 : 1;
}

int run_check_graph(const std::string& scenario_file, const std::string& graph_file) {
  const ScenarioSpec s = read_scenario_file(scenario_file);
  const LocalIndependenceGraph g = read_graph_file(graph_file);
  const ValidationReport report = validate_dependencies(s, g);
  if (report.ok()) {
    std::cout << "ok: dependencies licensed by the graph\n";
    return 0;
  }
  for (const auto& v : report.violations) std::cout << v << '\n';
  return 1;
}

int run_estimate_aalen(const std::string& cohort_file, const std::string& outcome,
                       const std::string& covariate_list, const std::string& censor_list,
                       const std::string& out_file) {
  const Cohort cohort = read_cohort(cohort_file, baseline_sibling(cohort_file));
  std::vector<Covariate> covariates;
  for (const auto& text : split_list(covariate_list)) covariates.push_back(Covariate::parse(text));
  AalenOptions opt;
  opt.censoring = split_list(censor_list);
  const AalenFit fit = aalen_fit(cohort, outcome, covariates, opt);
  auto out = open_out(out_file);
  out << "t,coefficient,value,flag\n";
  for (std::size_t c = 0; c < fit.labels.size(); ++c)
    write_long_csv(out, fit.labels[c], fit.cumulative[c], fit.skipped_times);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << out_file << " (" << fit.events_used << " events)\n";
  return 0;
}

int run_estimate_gcde(const std::string& cohort_file, const std::string& intervene_file,
                      const std::string& out_file) {
  const Cohort cohort = read_cohort(cohort_file, baseline_sibling(cohort_file));
  const InterventionSpec theta = read_intervention_file(intervene_file);
  const GcdeFit fit = sequential_g_fit(cohort);
  const StepFunction hazard = counterfactual_hazard(fit, theta);
  std::vector<std::string> warnings = fit.warnings;
  const StepFunction surv = hazard_to_survival(hazard, &warnings);
  auto out = open_out(out_file);
  out << "t,coefficient,value,flag\n";
  write_long_csv(out, "direct_base", fit.direct_base, fit.skipped_times);
  write_long_csv(out, "direct_treat", fit.direct_treat, fit.skipped_times);
  write_long_csv(out, "mediator", fit.mediator, fit.stage1.skipped_times);
  write_long_csv(out, "cumulative_hazard", hazard, {});
  write_long_csv(out, "survival", surv, {});
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << out_file << '\n';
  return 0;
}

int run_gformula(const std::string& model_file, int a, const std::string& krule_file,
                 const std::string& h_text, const std::string& treat, const std::string& cov,
                 const std::string& out_file) {
  const JointModel model = read_joint_model_file(model_file);
  const DiscreteRule k_rule = read_discrete_rule_file(krule_file);
  const auto eq = h_text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == h_text.size())
    throw std::runtime_error("--h must look like B=1");
  const std::string outcome = h_text.substr(0, eq);
  const int value = std::stoi(h_text.substr(eq + 1));
  const ConditionalTable cov_tbl = fit_tables(model, cov, {treat});
  const ConditionalTable out_tbl = fit_tables(model, outcome, {treat, cov, k_rule.variable});
  const double result =
      gformula_direct_effect(cov_tbl, out_tbl, a, k_rule, {{value, 1.0}});
  std::cout << format_double(result) << '\n';
  if (!out_file.empty()) open_out(out_file) << format_double(result) << '\n';
  return 0;
}

int run_replicate(std::size_t n, std::uint64_t seed, int threads, const std::string& out_dir,
                  std::size_t oracle_paths, std::size_t grid_points) {
  StudyOptions opt;
  opt.n = n;
  opt.seed = seed;
  opt.threads = threads;
  opt.out_dir = out_dir;
  opt.oracle_paths = oracle_paths;
  opt.grid_points = grid_points;
  const StudyResult res = replicate_study(opt);
  for (const auto& row : res.rows)
    std::cout << (row.pass ? "PASS " : "FAIL ") << row.check << " | " << row.statistic << " = "
              << format_double(row.value) << " (threshold " << format_double(row.threshold)
              << ")\n";
  std::cout << (res.all_pass ? "all checks passed" : "some checks FAILED") << ", outputs in "
            << out_dir << '\n';
  return res.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-history simulation and counterfactual estimation"};
  app.require_subcommand(1);

  std::string scenario_file, intervene_file, graph_file, cohort_file, out_path;
  std::size_t n = 1000, oracle_paths = 100000, grid_points = 20;
  std::size_t pos_n = 10000, rep_n = 8000;
  std::string rep_out = "study-out";
  std::uint64_t seed = 1, rep_seed = 7;
  int threads = 1, a_value = 0;
  std::string outcome = "B", covariates = "1,A,L,Kminus", censor = "C";
  std::string model_file, krule_file, h_text = "B=1", treat = "A", cov = "L";

  auto* sim = app.add_subcommand("simulate", "draw a cohort from a scenario");
  sim->add_option("--scenario", scenario_file, "scenario config")->required();
  sim->add_option("--intervene", intervene_file, "intervention file (counterfactual regime)");
  sim->add_option("--n", n, "number of paths");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--out", out_path, "events CSV (baseline written alongside)")->required();

  auto* wts = app.add_subcommand("weights", "likelihood-ratio weight trajectories");
  wts->add_option("--scenario", scenario_file, "scenario config")->required();
  wts->add_option("--intervene", intervene_file, "intervention file")->required();
  wts->add_option("--cohort", cohort_file, "factual cohort CSV")->required();
  wts->add_option("--out", out_path, "output CSV")->required();

  auto* pos = app.add_subcommand("check-positivity", "screen a regime for zero probabilities");
  pos->add_option("--scenario", scenario_file, "scenario config")->required();
  pos->add_option("--intervene", intervene_file, "intervention file")->required();
  pos->add_option("--cohort", cohort_file, "cohort CSV (simulated when omitted)");
  pos->add_option("--n", pos_n, "paths to simulate when no cohort is given (default 10000)");
  pos->add_option("--seed", seed, "RNG seed");
  pos->add_option("--threads", threads, "worker threads");
  pos->add_option("--out", out_path, "report file (stdout when omitted)");

  auto* chk = app.add_subcommand("check-graph", "scenario dependencies vs a declared graph");
  chk->add_option("--scenario", scenario_file, "scenario config")->required();
  chk->add_option("--graph", graph_file, "graph file")->required();

  auto* aal = app.add_subcommand("estimate-aalen", "additive-hazard regression");
  aal->add_option("--cohort", cohort_file, "cohort CSV")->required();
  aal->add_option("--outcome", outcome, "outcome module");
  aal->add_option("--covariates", covariates, "comma list, e.g. 1,A,L,Kminus");
  aal->add_option("--censor", censor, "comma list of censoring modules (may be empty)");
  aal->add_option("--out", out_path, "output CSV")->required();

  auto* gcd = app.add_subcommand("estimate-gcde", "sequential direct-effect estimator");
  gcd->add_option("--cohort", cohort_file, "cohort CSV")->required();
  gcd->add_option("--intervene", intervene_file, "regime for the plug-in hazard")->required();
  gcd->add_option("--out", out_path, "output CSV")->required();

  auto* gfm = app.add_subcommand("gformula", "baseline controlled-direct-effect formula");
  gfm->set_help_flag("--help", "print help");  // frees -h for the functional flag
  gfm->add_option("--model", model_file, "joint model file")->required();
  gfm->add_option("--a", a_value, "enforced treatment value")->required();
  gfm->add_option("--krule", krule_file, "enforced-variable rule file")->required();
  gfm->add_option("--h", h_text, "outcome functional, e.g. B=1");
  gfm->add_option("--treat", treat, "treatment variable");
  gfm->add_option("--cov", cov, "covariate variable");
  gfm->add_option("--out", out_path, "also write the value to this file");

  auto* rep = app.add_subcommand("replicate-study", "run the bundled study end to end");
  rep->add_option("--n", rep_n, "cohort size (default 8000)");
  rep->add_option("--seed", rep_seed, "RNG seed (default 7)");
  rep->add_option("--threads", threads, "worker threads");
  rep->add_option("--out", rep_out, "output directory (default study-out)");
  rep->add_option("--oracle-paths", oracle_paths, "counterfactual oracle cohort size");
  rep->add_option("--grid", grid_points, "weight-diagnostic grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return run_simulate(scenario_file, intervene_file, n, seed, threads, out_path);
    if (wts->parsed()) return run_weights(scenario_file, intervene_file, cohort_file, out_path);
    if (pos->parsed())
      return run_check_positivity(scenario_file, intervene_file, cohort_file, pos_n, seed,
                                  threads, out_path);
    if (chk->parsed()) return run_check_graph(scenario_file, graph_file);
    if (aal->parsed())
      return run_estimate_aalen(cohort_file, outcome, covariates, censor, out_path);
    if (gcd->parsed()) return run_estimate_gcde(cohort_file, intervene_file, out_path);
    if (gfm->parsed())
      return run_gformula(model_file, a_value, krule_file, h_text, treat, cov, out_path);
    if (rep->parsed())
      return run_replicate(rep_n, rep_seed, threads, rep_out, oracle_paths, grid_points);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
