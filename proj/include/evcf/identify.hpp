#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcf/events.hpp"
#include "evcf/scenario.hpp"

namespace evcf {

// Conditional distribution P(variable | parents) over finite alphabets.
// Parent combinations with no observations (empirical fits) or zero marginal
// mass (exact fits) are flagged; reading them throws a positivity error.
struct ConditionalTable {
  std::string variable;
  std::vector<std::string> parents;
  std::vector<int> alphabet;
  std::vector<TableRow> rows;
  std::vector<std::vector<int>> unsupported;  // flagged parent combinations

  bool supported(const std::vector<int>& given) const;
  const std::vector<double>& row(const std::vector<int>& given) const;
  double prob(int value, const std::vector<int>& given) const;
};

// Finite collection of baseline variables in timestamp order with their
// conditional tables; latent variables participate in the joint law but are
// dropped from observed marginals.
struct JointModel {
  std::vector<BaselineSpec> variables;

  const BaselineSpec* find(const std::string& name) const;
  std::vector<std::string> observed_names() const;
};

// File format: {"variables": [ ...same schema as scenario baseline... ]}
JointModel parse_joint_model(const std::string& text);
std::string print_joint_model(const JointModel& m);
JointModel read_joint_model_file(const std::string& path);
// baseline-only scenario -> joint model (throws if follow-up modules exist)
JointModel joint_from_scenario(const ScenarioSpec& s);

// Exact conditional by marginalizing the joint law.
ConditionalTable fit_tables(const JointModel& m, const std::string& variable,
                            const std::vector<std::string>& parents);
// Empirical conditional from cohort baseline values; alphabets are the
// observed value sets, zero-count parent combinations are flagged.
ConditionalTable fit_tables(const Cohort& cohort, const std::string& variable,
                            const std::vector<std::string>& parents);

// Replacement rule for one variable: a constant, or a value mapped from one
// earlier non-intervened variable.
struct DiscreteRule {
  std::string variable;
  std::optional<int> constant;
  std::string source;
  std::map<int, int> value_map;

  int enforced(const std::map<std::string, int>& assignment) const;
};

struct DiscreteIntervention {
  std::vector<DiscreteRule> rules;
  const DiscreteRule* find(const std::string& variable) const;
};

// {"variable":"K","constant":1} or {"variable":"K","source":"L","map":{"0":1,"1":0}}
DiscreteRule parse_discrete_rule(const std::string& text);
DiscreteRule read_discrete_rule_file(const std::string& path);

// Controlled-direct-effect g-formula from two fitted tables:
//   sum_l P(l | a) sum_b h(b) P(b | a, l, k_rule(l))
// `h` maps outcome values to weights. Accessing an unsupported cell throws
// with the cell named.
double gformula_direct_effect(const ConditionalTable& cov_given_treat,
                              const ConditionalTable& out_given_all, int a,
                              const DiscreteRule& k_rule, const std::map<int, double>& h);

// risk ratio of {outcome = 1} between enforced arms a1 and a0, same k_rule
double relative_direct_risk(const ConditionalTable& cov_given_treat,
                            const ConditionalTable& out_given_all, int a1, int a0,
                            const DiscreteRule& k_rule);

// Distribution over observed variables (keys in model order) obtained by
// replacing every intervened factor by its enforced indicator and summing
// the full joint. Verifies mass 1 within 1e-12 without renormalizing; the
// result is invariant to the enumeration `order` (any permutation of the
// variable names; default model order).
using JointDist = std::map<std::vector<int>, double>;
JointDist truncated_factorization_oracle(const JointModel& m,
                                         const DiscreteIntervention& theta,
                                         std::span<const std::string> order = {});

}  // namespace evcf
