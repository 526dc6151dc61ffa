#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evcf/events.hpp"
#include "evcf/expr.hpp"
#include "evcf/graph.hpp"

namespace evcf {

// Conditional table row: P(V = alphabet[j]) = p[j] given parent values
// `given` (aligned with the declared parent list).
struct TableRow {
  std::vector<int> given;
  std::vector<double> p;
};

// Baseline variable drawn once before follow-up, at its timestamp.
struct BaselineSpec {
  std::string name;
  double timestamp = 0.0;
  std::vector<int> alphabet;
  bool latent = false;
  std::vector<std::string> parents;  // earlier baseline variables
  std::vector<TableRow> table;

  const std::vector<double>& row(const std::vector<int>& given) const;
};

// One mark of an intensity-driven module.
struct MarkSpec {
  int label = 0;
  int delta = 1;
  Expr lambda;  // left-limit state expression, nonnegative, <= lambda_max
};

// Module whose jumps are governed by intensities, re-evaluated at event and
// decision times (piecewise constant in between). `absorbing` silences the
// module after its first event.
struct IntensitySpec {
  std::string name;
  std::vector<std::string> deps;
  bool absorbing = false;
  double lambda_max = 0.0;
  std::vector<MarkSpec> marks;

  double total_rate(const StateView& view) const;  // validated against lambda_max
};

// Module that can jump only at fixed decision times; at each time t_i the
// process jumps (mark/delta fixed) with probability p_i(left-limit state).
struct TreatmentSchedule {
  std::string name;
  std::vector<std::string> deps;
  std::vector<double> times;
  std::vector<Expr> jump_prob;  // size 1 (shared) or times.size()
  int mark = 0;
  int delta = 1;

  const Expr& prob_at(std::size_t i) const;
};

struct ScenarioSpec {
  double horizon = 0.0;
  std::vector<BaselineSpec> baseline;      // sorted by (timestamp, name)
  std::vector<IntensitySpec> modules;      // declaration order
  std::vector<TreatmentSchedule> schedules;
  LocalIndependenceGraph graph;

  const BaselineSpec* find_baseline(const std::string& name) const;
  const IntensitySpec* find_module(const std::string& name) const;
  const TreatmentSchedule* find_schedule(const std::string& name) const;
  bool has_name(const std::string& name) const;
  std::vector<std::string> baseline_names() const;
  std::vector<std::string> module_names() const;  // intensity + schedule modules
  std::vector<double> decision_times() const;     // sorted union of schedule times
  std::string digest() const;                     // content hash of canonical text
};

// JSON config. Parsing validates: unique names; complete, normalized tables
// (sum 1 within 1e-12, else error naming the table); parent timestamps
// strictly earlier; schedule times strictly increasing in (0, horizon];
// distinct schedule modules never share a decision time; expression reads
// inside declared dependency lists. Throws std::runtime_error on violation.
ScenarioSpec parse_scenario(const std::string& text);
std::string print_scenario(const ScenarioSpec& s);  // canonical: print∘parse idempotent
ScenarioSpec read_scenario_file(const std::string& path);

// Deterministic replacement rules for a subset of processes (the intervened
// set). Baseline rules substitute a value computed from strictly earlier
// non-intervened baselines; schedule rules fix every jump decision; intensity
// rules swap the intensity (lambda* = 0 abolishes the module).
struct InterventionSpec {
  struct BaselineRule {
    std::string variable;
    Expr value;
  };
  struct ScheduleRule {
    std::string module;
    std::vector<double> times;  // must equal the scenario's schedule times
    std::vector<Expr> decisions;
  };
  struct MarkRule {
    int label = 0;
    Expr lambda;
  };
  struct IntensityRule {
    std::string module;
    std::vector<MarkRule> marks;
  };

  std::vector<BaselineRule> baseline;
  std::vector<ScheduleRule> schedules;
  std::vector<IntensityRule> intensities;

  std::set<std::string> intervened() const;
  bool empty() const;
  std::string digest() const;

  const ScheduleRule* find_schedule(const std::string& module) const;
  const IntensityRule* find_intensity(const std::string& module) const;
  const BaselineRule* find_baseline(const std::string& variable) const;
};

InterventionSpec parse_intervention(const std::string& text);
std::string print_intervention(const InterventionSpec& s);
InterventionSpec read_intervention_file(const std::string& path);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// (a) every rule targets a process the scenario declares, at most one rule
// per process; (b) baseline replacements read only strictly earlier
// non-intervened baselines; (c) schedule decisions and replacement
// intensities read only non-intervened history (own state allowed for
// intensities); (d) rule kind matches how the scenario governs the module,
// and schedule rules pin every decision time exactly.
ValidationReport validate_intervention(const ScenarioSpec& s, const InterventionSpec& theta);

// Declared dependency lists and expression reads licensed by the graph:
// deps(V) inside parents_g(V), expression free vars inside deps (own state
// allowed), baseline parents inside parents_g(V).
ValidationReport validate_dependencies(const ScenarioSpec& s,
                                       const LocalIndependenceGraph& g);

// Path conformance to a scenario: structural checks plus known modules and
// marks, legal baseline values, events inside (0, horizon], schedule-module
// events only at schedule times, absorbing modules silent after absorption.
// Latent baseline variables may be absent (observed-data cohorts drop them).
PathCheck validate_path(const Path& path, const ScenarioSpec& s);

}  // namespace evcf
