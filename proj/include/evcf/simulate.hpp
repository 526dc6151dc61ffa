#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>

#include "evcf/events.hpp"
#include "evcf/scenario.hpp"

namespace evcf {

struct SimOptions {
  int threads = 1;
  // Test hook: invoked after every intensity / decision-probability
  // evaluation with the names the expression actually read. Setting it
  // forces single-threaded execution.
  std::function<void(const std::string& module, const std::set<std::string>& reads)>
      trace;
};

// Exact competing-risks simulation: between decision times, each active
// module draws an exponential clock at its current (left-limit) rate; the
// minimum wins, clocks are redrawn after every state change. Schedule-
// restricted modules jump only at their decision times. Path i under seed s
// is a pure function of (s, i): results do not depend on thread count.
Cohort simulate_cohort(const ScenarioSpec& s, std::size_t n, std::uint64_t seed,
                       const SimOptions& opt = {});

// Same mechanism with the intervened processes replaced by their rules:
// enforced baseline values, deterministic schedule decisions, replacement
// intensities. validate_intervention(s, theta) must pass.
Cohort simulate_counterfactual(const ScenarioSpec& s, const InterventionSpec& theta,
                               std::size_t n, std::uint64_t seed,
                               const SimOptions& opt = {});

// The action as a deterministic map on realized paths: replaces intervened
// baseline values, rewrites schedule-module jumps per the decision rules
// (evaluated on non-intervened left-limit history), and deletes events of
// intensity-replaced modules (their lambda* must be identically zero).
// Idempotent: applying twice equals applying once.
Path apply_action(const Path& path, const ScenarioSpec& s, const InterventionSpec& theta);

}  // namespace evcf
