#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "evcf/scenario.hpp"
#include "evcf/simulate.hpp"
#include "evcf/study.hpp"

using namespace evcf;
namespace fs = std::filesystem;

namespace {
fs::path tmp_dir(const std::string& leaf) {
  const fs::path d = fs::path(EVCF_TEST_TMP) / leaf;
  fs::create_directories(d);
  return d;
}

std::map<std::string, std::string> slurp_all(const std::vector<std::string>& files) {
  std::map<std::string, std::string> by_name;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    REQUIRE(in.good());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    by_name[fs::path(f).filename().string()] = std::move(text);
  }
  return by_name;
}
}  // namespace

TEST_CASE("bundled assets load and cross-validate") {
  const ScenarioSpec s = bundled_scenario();
  CHECK(validate_dependencies(s, bundled_graph()).ok());
  CHECK(validate_intervention(s, bundled_intervention(0)).ok());
  CHECK(validate_intervention(s, bundled_intervention(1)).ok());
  CHECK(bundled_static_model().variables.size() == 5);
  CHECK(bundled_k_rule().variable == "K");
}

TEST_CASE("additive coefficients are extracted exactly") {
  const HazardCoefficients psi = additive_coefficients(bundled_scenario());
  CHECK(psi.psi0 == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(psi.psiA == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(psi.psiL == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(psi.psiK == doctest::Approx(0.15).epsilon(1e-12));

  // a product term breaks additivity and must be rejected
  const ScenarioSpec bad = parse_scenario(R"json({
    "horizon": 2.0,
    "baseline": [
      {"name": "A", "t": 0.0, "alphabet": [0, 1], "parents": [],
       "table": [{"given": [], "p": [0.5, 0.5]}]},
      {"name": "L", "t": 0.1, "alphabet": [0, 1], "parents": [],
       "table": [{"given": [], "p": [0.6, 0.4]}]}
    ],
    "modules": [
      {"name": "B", "deps": ["A", "L", "K", "C"], "absorbing": true, "lambda_max": 1.0,
       "marks": [{"label": 1, "delta": 1, "lambda": "atrisk(C)*(0.1 + 0.2*A*L + 0.1*K)"}]},
      {"name": "C", "deps": [], "absorbing": true, "lambda_max": 0.5,
       "marks": [{"label": 1, "delta": 1, "lambda": "0.08"}]}
    ],
    "schedules": [
      {"module": "K", "deps": [], "times": [0.5], "p": "0.3", "mark": 1, "delta": 1}
    ]})json");
  CHECK_THROWS(additive_coefficients(bad));
}

TEST_CASE("covariate prevalence by arm") {
  const ScenarioSpec s = bundled_scenario();
  CHECK(covariate_prevalence(s, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(covariate_prevalence(s, 1) == doctest::Approx(0.55).epsilon(1e-14));
}

TEST_CASE("grid functions interpolate linearly and clamp the ends") {
  const GridFunction g{{0.0, 1.0, 2.0}, {0.0, 10.0, 0.0}};
  CHECK(g(0.5) == doctest::Approx(5.0));
  CHECK(g(1.25) == doctest::Approx(7.5));
  CHECK(g(-1.0) == 0.0);
  CHECK(g(9.0) == 0.0);
}

TEST_CASE("enforced mediator trajectories") {
  const StepFunction k1 = enforced_mediator(bundled_intervention(0));
  CHECK(k1.value(0.25) == 0.0);
  CHECK(k1.value(0.5) == 1.0);
  CHECK(k1.value(2.0) == 1.0);
  CHECK(k1.jump_count() == 1);

  InterventionSpec none = bundled_intervention(0);
  none.schedules[0].decisions = {Expr::parse("0"), Expr::parse("0"), Expr::parse("0")};
  CHECK(enforced_mediator(none).jump_count() == 0);
}

TEST_CASE("closed-form direct-effect curves carry the frozen reference values") {
  const HazardCoefficients psi = additive_coefficients(bundled_scenario());
  const GammaOracle cf = gamma_closed_form(psi, 0.4, 0.55, 2.0, 0.01);
  CHECK(cf.rho0(0.0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(cf.rho1(0.0) == doctest::Approx(0.55).epsilon(1e-12));
  // H-weighting shrinks the covariate mean over time
  CHECK(cf.rho0(2.0) < 0.4);
  CHECK(cf.rho1(2.0) < 0.55);
  CHECK(cf.direct_base(2.0) == doctest::Approx(0.4112483747305926).epsilon(1e-12));
  CHECK(cf.direct_treat(2.0) == doctest::Approx(0.4326186025613288).epsilon(1e-12));
}

TEST_CASE("closed-form survival carries the frozen reference values") {
  const HazardCoefficients psi = additive_coefficients(bundled_scenario());
  const StepFunction k = enforced_mediator(bundled_intervention(0));
  CHECK(closed_form_survival(psi, 0.4, 0, k, 2.0) ==
        doctest::Approx(0.5292743430095194).epsilon(1e-12));
  CHECK(closed_form_survival(psi, 0.55, 1, k, 2.0) ==
        doctest::Approx(0.3433973741081368).epsilon(1e-12));
  // mediator off: pure exponential times the covariate mixture
  const double base = std::exp(-0.12 * 2.0) * (0.6 + 0.4 * std::exp(-0.25 * 2.0));
  CHECK(closed_form_survival(psi, 0.4, 0, StepFunction(0.0), 2.0) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("censoring abolition") {
  const ScenarioSpec s = bundled_scenario();
  const InterventionSpec plus = abolish_censoring(s, bundled_intervention(1));
  CHECK(validate_intervention(s, plus).ok());
  CHECK(plus.intervened() == std::set<std::string>{"A", "C", "K"});
  const Cohort c = simulate_counterfactual(s, plus, 400, 127);
  for (const auto& p : c.paths) {
    CHECK(p.baseline.at("A") == 1);
    for (const auto& e : p.events) CHECK(e.module != "C");
  }
}

TEST_CASE("simulation oracle approaches the closed form and caches bitwise") {
  const ScenarioSpec s = bundled_scenario();
  const fs::path cache = tmp_dir("oracle-cache");
  const HazardCoefficients psi = additive_coefficients(s);
  const GammaOracle cf = gamma_closed_form(psi, 0.4, 0.55, 2.0, 0.05);

  const GammaOracle sim = gamma_oracle(s, 200000, 515, 0.05, cache, 4);
  double worst_rho = 0.0, worst_gamma = 0.0;
  for (double t : sim.rho0.t) {
    worst_rho = std::max(worst_rho, std::abs(sim.rho0(t) - cf.rho0(t)));
    worst_rho = std::max(worst_rho, std::abs(sim.rho1(t) - cf.rho1(t)));
    worst_gamma = std::max(worst_gamma, std::abs(sim.direct_base(t) - cf.direct_base(t)));
    worst_gamma = std::max(worst_gamma, std::abs(sim.direct_treat(t) - cf.direct_treat(t)));
  }
  CHECK(worst_rho < 0.015);
  CHECK(worst_gamma < 0.01);

  // second call must hit the cache and reproduce the numbers exactly
  const GammaOracle again = gamma_oracle(s, 200000, 515, 0.05, cache, 1);
  CHECK(again.rho0.y == sim.rho0.y);
  CHECK(again.rho1.y == sim.rho1.y);
  CHECK(again.direct_base.y == sim.direct_base.y);
  CHECK(again.direct_treat.y == sim.direct_treat.y);
}

TEST_CASE("desk replication is deterministic across runs and thread counts") {
  StudyOptions a;
  a.n = 500;
  a.seed = 7;
  a.threads = 1;
  a.out_dir = tmp_dir("study-a");
  a.oracle_paths = 20000;

  StudyOptions b = a;
  b.out_dir = tmp_dir("study-b");

  StudyOptions c = a;
  c.threads = 4;
  c.out_dir = tmp_dir("study-c");

  const StudyResult ra = replicate_study(a);
  const StudyResult rb = replicate_study(b);
  const StudyResult rc = replicate_study(c);

  CHECK(ra.all_pass);
  REQUIRE(!ra.rows.empty());
  for (const auto& row : ra.rows) CHECK(row.pass);

  const auto fa = slurp_all(ra.files);
  const auto fb = slurp_all(rb.files);
  const auto fc = slurp_all(rc.files);
  REQUIRE(fa.size() == 10);  // cohort(2), coefficients, weights/positivity/hazard x2, summary
  CHECK(fa == fb);
  CHECK(fa == fc);
}
