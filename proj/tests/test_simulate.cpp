#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "evcf/graph.hpp"
#include "evcf/numeric.hpp"
#include "evcf/scenario.hpp"
#include "evcf/simulate.hpp"
#include "evcf/study.hpp"

using namespace evcf;

namespace {
ScenarioSpec poisson_scenario(bool absorbing, double rate, double horizon) {
  return parse_scenario(std::string(R"({
    "horizon": )") + format_double(horizon) +
                        R"(, "baseline": [], "schedules": [],
    "modules": [{"name": "N", "deps": [], "absorbing": )" +
                        (absorbing ? "true" : "false") + R"(,
      "lambda_max": 2.0,
      "marks": [{"label": 1, "delta": 1, "lambda": ")" +
                        format_double(rate) + R"("}]}]})");
}
}  // namespace

TEST_CASE("constant-rate counts are Poisson") {
  const double rate = 0.7, horizon = 3.0;
  const ScenarioSpec s = poisson_scenario(false, rate, horizon);
  const std::size_t n = 20000;
  const Cohort c = simulate_cohort(s, n, 17);

  std::vector<double> counts, zeros;
  for (const auto& p : c.paths) {
    counts.push_back(double(p.events.size()));
    zeros.push_back(p.events.empty() ? 1.0 : 0.0);
    for (const auto& e : p.events) {
      CHECK(e.time > 0.0);
      CHECK(e.time <= horizon);
    }
  }
  const double mu = rate * horizon;
  const auto mc = mean_se(counts);
  CHECK(std::abs(mc.mean - mu) < 3.0 * mc.se);
  const auto mz = mean_se(zeros);
  CHECK(std::abs(mz.mean - std::exp(-mu)) < 3.0 * mz.se);
}

TEST_CASE("absorbing module survival and first-event law") {
  const double rate = 0.4, horizon = 2.0;
  const ScenarioSpec s = poisson_scenario(true, rate, horizon);
  const std::size_t n = 20000;
  const Cohort c = simulate_cohort(s, n, 5);

  std::vector<double> survive;
  std::vector<double> cdf_half;  // jumped by t = 0.5
  for (const auto& p : c.paths) {
    REQUIRE(p.events.size() <= 1);  // absorbing: at most one event
    survive.push_back(p.events.empty() ? 1.0 : 0.0);
    cdf_half.push_back(!p.events.empty() && p.events[0].time <= 0.5 ? 1.0 : 0.0);
  }
  const auto ms = mean_se(survive);
  CHECK(std::abs(ms.mean - std::exp(-rate * horizon)) < 3.0 * ms.se);
  const auto mh = mean_se(cdf_half);
  CHECK(std::abs(mh.mean - (1.0 - std::exp(-rate * 0.5))) < 3.0 * mh.se);
}

TEST_CASE("state-dependent intensity with clock redraw matches the closed form") {
  // E's hazard steps from 0.2 to 0.8 when D (rate 0.5, independent) jumps:
  // P(E silent by T) = e^{-0.2T} E[e^{-0.6 (T - min(tau_D, T))}]
  const ScenarioSpec s = parse_scenario(R"({
    "horizon": 2.0, "baseline": [], "schedules": [],
    "modules": [
      {"name": "D", "deps": [], "absorbing": true, "lambda_max": 0.6,
       "marks": [{"label": 1, "delta": 1, "lambda": "0.5"}]},
      {"name": "E", "deps": ["D"], "absorbing": true, "lambda_max": 0.9,
       "marks": [{"label": 1, "delta": 1, "lambda": "0.2 + 0.6*D"}]}
    ],
    "graph": {"edges": [["D", "E"]]}})");
  const double T = 2.0;
  const double mix = 0.5 * std::exp(-0.6 * T) * (std::exp(0.1 * T) - 1.0) / 0.1 +
                     std::exp(-0.5 * T);
  const double truth = std::exp(-0.2 * T) * mix;

  const std::size_t n = 40000;
  const Cohort c = simulate_cohort(s, n, 23);
  std::vector<double> silent;
  for (const auto& p : c.paths) {
    bool e_jumped = false;
    for (const auto& ev : p.events) e_jumped = e_jumped || ev.module == "E";
    silent.push_back(e_jumped ? 0.0 : 1.0);
  }
  const auto m = mean_se(silent);
  CHECK(std::abs(m.mean - truth) < 3.0 * m.se);
}

TEST_CASE("schedule modules jump only at decision times, with the stated probability") {
  const ScenarioSpec s = parse_scenario(R"({
    "horizon": 2.0, "baseline": [], "modules": [],
    "schedules": [{"module": "K", "deps": [], "times": [0.5, 1.5],
                   "p": "0.3", "mark": 1, "delta": 1}]})");
  const std::size_t n = 20000;
  const Cohort c = simulate_cohort(s, n, 29);

  std::vector<double> first, both;
  for (const auto& p : c.paths) {
    for (const auto& e : p.events) CHECK((e.time == 0.5 || e.time == 1.5));
    bool at_first = false;
    for (const auto& e : p.events) at_first = at_first || e.time == 0.5;
    first.push_back(at_first ? 1.0 : 0.0);
    both.push_back(p.events.size() == 2 ? 1.0 : 0.0);
  }
  const auto mf = mean_se(first);
  CHECK(std::abs(mf.mean - 0.3) < 3.0 * mf.se);
  const auto mb = mean_se(both);  // decisions are independent given no feedback
  CHECK(std::abs(mb.mean - 0.09) < 3.0 * mb.se);
}

TEST_CASE("runtime intensity bound violations surface as errors") {
  const ScenarioSpec s = parse_scenario(R"({
    "horizon": 1.0,
    "baseline": [{"name": "A", "t": 0.0, "alphabet": [0, 1], "parents": [],
                  "table": [{"given": [], "p": [0.5, 0.5]}]}],
    "schedules": [],
    "modules": [{"name": "B", "deps": ["A"], "absorbing": true, "lambda_max": 1.0,
                 "marks": [{"label": 1, "delta": 1, "lambda": "0.3 + 0.8*A"}]}],
    "graph": {"edges": [["A", "B"]]}})");
  CHECK_THROWS(simulate_cohort(s, 200, 3));
}

TEST_CASE("results do not depend on the thread count") {
  const ScenarioSpec s = bundled_scenario();
  const Cohort c1 = simulate_cohort(s, 2000, 31, {.threads = 1});
  const Cohort c3 = simulate_cohort(s, 2000, 31, {.threads = 3});
  const Cohort c8 = simulate_cohort(s, 2000, 31, {.threads = 8});
  CHECK(c1.paths == c3.paths);
  CHECK(c1.paths == c8.paths);

  const InterventionSpec theta = bundled_intervention(1);
  const Cohort k1 = simulate_counterfactual(s, theta, 1500, 37, {.threads = 1});
  const Cohort k5 = simulate_counterfactual(s, theta, 1500, 37, {.threads = 5});
  CHECK(k1.paths == k5.paths);

  const Cohort other = simulate_cohort(s, 2000, 32);
  CHECK(c1.paths != other.paths);
}

TEST_CASE("the empty intervention reproduces the factual draw for draw") {
  const ScenarioSpec s = bundled_scenario();
  const Cohort fact = simulate_cohort(s, 800, 41);
  const Cohort counter = simulate_counterfactual(s, InterventionSpec{}, 800, 41);
  CHECK(fact.paths == counter.paths);
  CHECK(counter.regime != fact.regime);  // provenance still recorded
}

TEST_CASE("simulated paths conform to the scenario") {
  const ScenarioSpec s = bundled_scenario();
  const Cohort fact = simulate_cohort(s, 500, 43);
  CHECK(fact.scenario_digest == s.digest());
  for (const auto& p : fact.paths) {
    const auto chk = validate_path(p, s);
    CHECK(chk.ok());
    CHECK(p.baseline.count("W"));  // full simulation carries the latent draw
  }
  const Cohort cf = simulate_counterfactual(s, bundled_intervention(0), 500, 43);
  for (const auto& p : cf.paths) {
    CHECK(validate_path(p, s).ok());
    CHECK(p.baseline.at("A") == 0);
    for (const auto& e : p.events)
      if (e.module == "K") CHECK(e.time == 0.5);  // decisions (1, 0, 0)
  }
}

TEST_CASE("mechanisms read only their declared dependencies") {
  const ScenarioSpec s = bundled_scenario();
  std::set<std::string> offending;
  SimOptions opt;
  opt.trace = [&](const std::string& module, const std::set<std::string>& reads) {
    std::set<std::string> allowed;
    if (const auto* m = s.find_module(module))
      allowed.insert(m->deps.begin(), m->deps.end());
    else if (const auto* sc = s.find_schedule(module))
      allowed.insert(sc->deps.begin(), sc->deps.end());
    allowed.insert(module);
    for (const auto& r : reads)
      if (!allowed.count(r)) offending.insert(module + " reads " + r);
  };
  simulate_cohort(s, 400, 47, opt);
  CHECK(offending.empty());
}

TEST_CASE("apply_action rewrites paths onto the enforced regime, idempotently") {
  const ScenarioSpec s = bundled_scenario();
  const InterventionSpec theta = bundled_intervention(0);
  const Cohort fact = simulate_cohort(s, 600, 53);

  for (const auto& p : fact.paths) {
    const Path q = apply_action(p, s, theta);
    CHECK(q.baseline.at("A") == 0);
    CHECK(q.baseline.at("L") == p.baseline.at("L"));  // non-intervened kept
    std::vector<double> k_times;
    for (const auto& e : q.events) {
      if (e.module == "K")
        k_times.push_back(e.time);
      else
        CHECK(e.delta == 1);  // B/C events carried over unchanged
    }
    CHECK(k_times == std::vector<double>{0.5});
    CHECK(apply_action(q, s, theta) == q);
    CHECK(validate_path(q, s).ok());
  }

  // already-consistent paths are fixed points
  const Cohort cf = simulate_counterfactual(s, theta, 300, 59);
  for (const auto& p : cf.paths) CHECK(apply_action(p, s, theta) == p);
}
