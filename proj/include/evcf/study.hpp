#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evcf/estimators.hpp"
#include "evcf/identify.hpp"
#include "evcf/scenario.hpp"
#include "evcf/weights.hpp"

namespace evcf {

// Bundled dynamic-regime study assets (shipped next to the library).
std::filesystem::path asset_dir();
ScenarioSpec bundled_scenario();
InterventionSpec bundled_intervention(int arm);  // 0: reference, 1: treated
LocalIndependenceGraph bundled_graph();
JointModel bundled_static_model();
DiscreteRule bundled_k_rule();

// Constant coefficients of an additive outcome intensity
//   lambda = atrisk(censor) * (psi0 + psiA*treat + psiL*cov + psiK*mediator),
// extracted by evaluating the intensity on basis states; throws if the
// intensity is not of this form.
struct HazardCoefficients {
  double psi0 = 0.0, psiA = 0.0, psiL = 0.0, psiK = 0.0;
};
HazardCoefficients additive_coefficients(const ScenarioSpec& s, const StudySchema& schema = {});

// exact P(covariate = 1 | treat = arm) in the scenario's baseline law
double covariate_prevalence(const ScenarioSpec& s, int arm, const StudySchema& schema = {});

// tabulated function with linear interpolation between knots (ends clamped)
struct GridFunction {
  std::vector<double> t;
  std::vector<double> y;
  double operator()(double s) const;
};

// Limit of the sequential direct-effect estimator: per-arm H-weighted
// covariate means rho_a(s) and the cumulative pair they integrate to,
//   direct_base(t)  = psi0*t + int_0^t rho_0 dPsiL,
//   direct_treat(t) = psiA*t + int_0^t (rho_1 - rho_0) dPsiL.
struct GammaOracle {
  GridFunction rho0, rho1;
  GridFunction direct_base, direct_treat;
  HazardCoefficients psi;
};

// Brute-force oracle: simulate `paths` factual paths, estimate rho_a on a
// uniform grid (H built from the true mediator coefficient), integrate by
// trapezoid. The result is cached as CSV in cache_dir keyed by the scenario
// digest and sampling parameters; a cache hit skips the simulation and is
// bitwise identical to the miss path.
GammaOracle gamma_oracle(const ScenarioSpec& s, std::size_t paths, std::uint64_t seed,
                         double grid_dt, const std::filesystem::path& cache_dir,
                         int threads = 1, const StudySchema& schema = {});

// Closed form for a two-point covariate mixture with constant coefficients:
//   rho_a(s) = pi_a e^{-psiL s} / (1 - pi_a + pi_a e^{-psiL s}),
//   direct_base(t)  = psi0*t - log(1 - pi_0 + pi_0 e^{-psiL t}),
//   direct_treat(t) = psiA*t - log(m_1(t)) + log(m_0(t)).
// The bundled scenario satisfies it exactly; cross-checks the simulation.
GammaOracle gamma_closed_form(const HazardCoefficients& psi, double pi0, double pi1,
                              double horizon, double grid_dt);

// Counterfactual survival at the horizon for enforced arm and mediator
// trajectory, censoring removed:
//   exp(-(psi0 + arm*psiA)*T - psiK*int_0^T K(s) ds) * (1 - pi + pi e^{-psiL T})
double closed_form_survival(const HazardCoefficients& psi, double pi_arm, int arm,
                            const StepFunction& mediator, double horizon);

// enforced mediator trajectory of a regime that fixes every decision
StepFunction enforced_mediator(const InterventionSpec& theta, const StudySchema& schema = {});

// intervention extended so the censoring module never jumps
InterventionSpec abolish_censoring(const ScenarioSpec& s, const InterventionSpec& theta,
                                   const StudySchema& schema = {});

struct StudyOptions {
  std::size_t n = 8000;
  std::uint64_t seed = 7;
  int threads = 1;
  std::filesystem::path out_dir = "study-out";
  std::size_t oracle_paths = 100000;  // counterfactual-simulation cohort per regime
  std::size_t grid_points = 20;       // weight-diagnostic grid resolution
};

struct SummaryRow {
  std::string check;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

struct StudyResult {
  std::vector<std::string> files;
  std::vector<SummaryRow> rows;
  bool all_pass = true;
};

// Desk-scale replication of the bundled study: simulate the factual cohort,
// run weight diagnostics and positivity checks for both regimes, fit the
// sequential direct-effect estimator, convert to counterfactual hazards and
// survival, and compare against counterfactual-simulation oracles. Writes
// cohort/weights/coefficients/hazard/summary CSVs into out_dir; outputs are
// byte-identical for a fixed seed, independent of thread count.
StudyResult replicate_study(const StudyOptions& opt);

}  // namespace evcf
