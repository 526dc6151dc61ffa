#pragma once

#include <span>
#include <string>
#include <vector>

#include "evcf/events.hpp"
#include "evcf/scenario.hpp"
#include "evcf/step_function.hpp"

namespace evcf {

// Design column for additive-hazard regression. Text forms:
//   "1"       intercept
//   "A"       baseline variable value
//   "Kminus"  left-limit state of module K at the event time
struct Covariate {
  enum class Kind { intercept, baseline_value, state_left };
  Kind kind = Kind::intercept;
  std::string name;

  static Covariate parse(const std::string& text);
  std::string label() const;
};

struct AalenOptions {
  // modules whose nonzero left-limit state removes a path from the risk set
  std::vector<std::string> censoring;
  double condition_limit = 1e12;
};

struct AalenFit {
  std::vector<std::string> labels;
  std::vector<StepFunction> cumulative;  // one cumulative coefficient per column
  std::vector<double> skipped_times;     // singular-design event times, no increment
  std::vector<std::string> warnings;
  std::size_t events_used = 0;
};

// Aalen's additive hazard estimator: at every outcome event time s the
// cumulative coefficients gain (Z'Z)^-1 Z'dN over the current risk set
// (left-limit design rows; a path is at risk while the outcome module and
// every censoring module still sit at state 0). Singular designs (condition
// number above the limit) skip the increment and flag the time.
AalenFit aalen_fit(const Cohort& cohort, const std::string& outcome,
                   std::span<const Covariate> covariates, const AalenOptions& opt = {});

// Roles in the dynamic-regime study schema: binary baseline treatment and
// covariate, schedule-restricted mediator (unit jumps), absorbing outcome
// and censoring modules.
struct StudySchema {
  std::string treat = "A";
  std::string covariate = "L";
  std::string mediator = "K";
  std::string outcome = "B";
  std::string censor = "C";
};

struct GcdeFit {
  StepFunction direct_base;   // cumulative direct hazard, reference arm
  StepFunction direct_treat;  // additional cumulative direct hazard of treat=1
  StepFunction mediator;      // stage-1 cumulative mediator coefficient
  AalenFit stage1;
  std::vector<double> skipped_times;  // stage-3 singular times
  std::vector<std::string> warnings;
};

// Sequential estimator of the controlled direct effect:
//   stage 1  additive fit of the outcome on (1, treat, covariate,
//            mediator left state) -> cumulative mediator coefficient Psi
//   stage 2  per-path weights H_t = atrisk * exp(int_0^t K_{s-} dPsi_s),
//            which remove the mediator's contribution from the hazard
//   stage 3  H-weighted additive fit on (1, treat) accumulated as
//            dGamma = (Z'HZ)^-1 Z'H dN - (Z'HZ)^-1 Z'H K_{s-} dPsi_s
// Both stage-3 terms at a time s use left limits; the treatment arm must be
// binary 0/1 and both arms present (else "design degenerate").
GcdeFit sequential_g_fit(const Cohort& cohort, const StudySchema& schema = {});

// Plug-in counterfactual cumulative hazard for a regime that fixes the
// treatment to a constant and every mediator decision to a constant:
//   Lambda(t) = Gamma0(t) + a * GammaA(t) + int_0^t K_theta(s-) dPsi_s
// where K_theta is the enforced mediator trajectory (unit jumps).
StepFunction counterfactual_hazard(const GcdeFit& fit, const InterventionSpec& theta,
                                   const StudySchema& schema = {});

// Product integral S(t) = prod_{s<=t} (1 - dLambda(s)), clamped into [0, 1];
// negative increments and increments above 1 are reported, not fatal.
StepFunction hazard_to_survival(const StepFunction& cum_hazard,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace evcf
