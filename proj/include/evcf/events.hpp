#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evcf/step_function.hpp"

namespace evcf {

using TimePoint = double;

// One jump of a marked point process. `module` names the component process,
// `mark` the label within its mark alphabet, `delta` the state increment.
struct Event {
  TimePoint time = 0.0;
  std::string module;
  int mark = 0;
  int delta = 0;

  bool operator==(const Event&) const = default;
};

// One individual: baseline variable values drawn at time zero(-) plus a
// time-ordered event sequence over the follow-up window.
struct Path {
  std::string id;
  std::map<std::string, int> baseline;
  std::vector<Event> events;

  bool operator==(const Path&) const = default;
};

struct Cohort {
  std::vector<Path> paths;
  std::string scenario_digest;
  std::uint64_t seed = 0;
  std::string regime = "factual";  // or "counterfactual:<intervention digest>"
};

enum class Side { left, right };

// State of `name` at time t: baseline value if `name` is a baseline variable,
// otherwise the accumulated delta of its events up to t (left or right limit).
// Unknown names have state 0 (a module that never jumped).
int state_at(const Path& path, const std::string& name, TimePoint t,
             Side side = Side::right);

// N^V_t as a step function (unit jumps at the module's event times).
StepFunction counting_process(const Path& path, const std::string& module);

struct PathCheck {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Structural checks that do not need a scenario: nondecreasing event times,
// no two events (of any modules) at the same time, nonzero deltas.
PathCheck validate_path_structure(const Path& path);

// Cohort CSV round trip. Events file: "id,time,module,mark,delta" with times
// printed via %.17g; metadata (digest, seed, regime) in leading '#' comment
// lines. Baseline values live in a sibling file "id,variable,value".
void write_cohort(const Cohort& cohort, const std::string& events_csv,
                  const std::string& baseline_csv);
Cohort read_cohort(const std::string& events_csv, const std::string& baseline_csv);

// "foo.csv" -> "foo.baseline.csv"
std::string baseline_sibling(const std::string& events_csv);

}  // namespace evcf
