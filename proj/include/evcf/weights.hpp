#pragma once

#include <span>
#include <string>
#include <vector>

#include "evcf/events.hpp"
#include "evcf/graph.hpp"
#include "evcf/numeric.hpp"
#include "evcf/scenario.hpp"
#include "evcf/step_function.hpp"

namespace evcf {

// Likelihood-ratio martingale W_t of a factual path under an intervention,
// decomposed into one log factor per intervened process:
//   baseline rule:   log 1{V0 = enforced} - log P(V0 = observed | parents)
//                    as the factor's value from time 0
//   schedule rule:   at each decision time, log 1{observed = enforced}
//                    - log P(observed decision | left-limit state)
//   intensity rule:  log(lambda*/lambda)(s-) at each observed jump, plus the
//                    drift -int (lambda* - lambda) ds accumulated knot to knot
// A -inf factor value encodes a path inconsistent with the enforced regime:
// the weight is exactly 0 from that time on. A zero *denominator* (factual
// probability 0 for something observed) throws instead.
struct WeightTrajectory {
  std::vector<std::string> factor_owners;  // sorted intervened processes
  std::vector<StepFunction> log_factors;   // aligned with factor_owners
  StepFunction log_total;                  // factors summed in owner order
  double final_weight = 1.0;

  double weight_at(double t) const;
};

// Knots where the drift integral of intensity factors is booked: decision
// times, the path's event times, the horizon, plus extra_knots. Values at
// knots are exact; between knots the trajectory is read as a step function.
// Interventions without intensity rules are exact at every t.
WeightTrajectory weight_trajectory(const Path& path, const ScenarioSpec& s,
                                   const InterventionSpec& theta,
                                   std::span<const double> extra_knots = {});

// What to average: a state, an event indicator, a running integral, or a
// conjunction of states at one time. Text forms, time after '@':
//   "B@1.5"          state of B at 1.5
//   "by:B@1.5"       1{B has jumped by 1.5}
//   "int:B@1.5"      int_0^1.5 B_s ds
//   "B=1,C=0@2"      1{B_2 = 1 and C_2 = 0}
struct PathFunctional {
  enum class Kind { state_at, event_by, time_integral, state_equals };
  Kind kind = Kind::state_at;
  double time = 0.0;
  std::string module;
  std::vector<std::pair<std::string, int>> equals;

  static PathFunctional parse(const std::string& text);
  double eval(const Path& path) const;
  std::string label() const;
};

enum class IpwNormalization { hajek, horvitz_thompson };

struct IpwEstimate {
  double estimate = 0.0;
  double se = 0.0;  // linearized (Hajek) or plain (HT) Monte Carlo SE
  double mean_weight = 0.0;
  double n_eff = 0.0;
  std::size_t n = 0;
  std::size_t zero_weights = 0;
};

// E_theta[functional] from a factual cohort, weighting each path by W at the
// functional's time. Hajek normalizes by the weight sum (default); HT keeps
// raw means. The cohort must be factual and simulated from `s`.
IpwEstimate ipw_expectation(const Cohort& cohort, const ScenarioSpec& s,
                            const InterventionSpec& theta, const PathFunctional& f,
                            IpwNormalization norm = IpwNormalization::hajek);

struct WeightDiagnostics {
  std::vector<double> grid;
  std::vector<MeanSe> mean_weight;  // E[W_t] per grid time; 1 in expectation
  double max_weight = 0.0;          // max final weight
  double n_eff = 0.0;               // effective sample size at the horizon
  std::size_t zero_count = 0;       // paths inconsistent with the regime
};

WeightDiagnostics weight_diagnostics(const Cohort& cohort, const ScenarioSpec& s,
                                     const InterventionSpec& theta,
                                     std::span<const double> grid);

// Positivity screening for the enforced regime. Empirical minima scan the
// cohort (decision probabilities evaluated on the theta-consistent history);
// analytic minima enumerate state combinations where the spaces are finite.
// A hard zero (enforced decision with factual probability 0) fails the check.
struct PositivityReport {
  struct Item {
    std::string process;
    std::string context;  // "empirical" or "analytic", plus detail
    double min_prob = 1.0;
    bool hard_zero = false;
  };
  std::vector<Item> items;
  std::size_t zero_weight_paths = 0;
  std::vector<std::string> notes;
  bool pass = true;
};

PositivityReport positivity_check(const Cohort& cohort, const ScenarioSpec& s,
                                  const InterventionSpec& theta);

// stable text rendering (one line per item/note, PASS/FAIL verdict first)
std::string print_positivity(const PositivityReport& report);

// Verifies the likelihood-ratio factorization is local: each factor is
// recomputed with reads restricted to cl(V) = {V} + parents(V) (masked reads
// return 0) and compared to the full-history factor on the weight scale.
// Scenarios whose declared dependencies respect the graph reproduce factors
// exactly; a mechanism secretly reading outside its closure shows up as a
// nonzero discrepancy.
struct FactorizationCheck {
  double max_discrepancy = 0.0;
  std::vector<std::string> notes;
  bool ok(double tol = 1e-10) const { return max_discrepancy <= tol; }
};

FactorizationCheck factorization_check(const Path& path, const ScenarioSpec& s,
                                       const InterventionSpec& theta,
                                       const LocalIndependenceGraph& g);

}  // namespace evcf
