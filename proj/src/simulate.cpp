#include "evcf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

#include "evcf/numeric.hpp"
#include "evcf/rng.hpp"

namespace evcf {

namespace {

struct MapView final : StateView {
  const std::map<std::string, double>* m;
  explicit MapView(const std::map<std::string, double>* mm) : m(mm) {}
  double state(const std::string& name) const override {
    const auto it = m->find(name);
    if (it == m->end())
      throw std::logic_error("simulate: expression reads unknown process " + name);
    return it->second;
  }
};

// evaluate with optional read tracing
double eval_traced(const Expr& e, const StateView& view, const std::string& owner,
                   const SimOptions& opt) {
  if (!opt.trace) return e.eval(view);
  std::set<std::string> reads;
  TracingView tv(&view, &reads);
  const double v = e.eval(tv);
  opt.trace(owner, reads);
  return v;
}

int enforced_value(const InterventionSpec::BaselineRule& rule, const BaselineSpec& spec,
                   const StateView& view) {
  const double raw = rule.value.eval(view);
  const long v = std::lround(raw);
  if (std::abs(raw - static_cast<double>(v)) > 1e-9)
    throw std::runtime_error("intervention: enforced value for " + rule.variable +
                             " is not an integer");
  if (std::find(spec.alphabet.begin(), spec.alphabet.end(), static_cast<int>(v)) ==
      spec.alphabet.end())
    throw std::runtime_error("intervention: enforced value for " + rule.variable +
                             " is outside its alphabet");
  return static_cast<int>(v);
}

struct PathSim {
  const ScenarioSpec& s;
  const InterventionSpec* theta;
  const SimOptions& opt;
  Philox rng;
  Path out;
  std::map<std::string, double> state;
  std::map<std::string, int> jumps;

  PathSim(const ScenarioSpec& scen, const InterventionSpec* th, const SimOptions& o,
          std::uint64_t seed, std::uint64_t index)
      : s(scen), theta(th), opt(o), rng(seed, index) {
    out.id = std::to_string(index);
  }

  void draw_baseline() {
    for (const auto& b : s.baseline) {
      int value = 0;
      const auto* rule = theta ? theta->find_baseline(b.name) : nullptr;
      if (rule) {
        MapView view(&state);
        value = enforced_value(*rule, b, view);
      } else {
        std::vector<int> given;
        given.reserve(b.parents.size());
        for (const auto& pn : b.parents)
          given.push_back(out.baseline.at(pn));
        const auto& row = b.row(given);
        value = b.alphabet[rng.categorical(row.data(), row.size())];
      }
      out.baseline[b.name] = value;
      state[b.name] = value;
    }
  }

  // current rate of one mark, honoring replacement intensities
  double mark_rate(const IntensitySpec& m, std::size_t mark_idx, const StateView& view) {
    const auto* rule = theta ? theta->find_intensity(m.name) : nullptr;
    if (rule) {
      for (const auto& mr : rule->marks)
        if (mr.label == m.marks[mark_idx].label) {
          const double lam = eval_traced(mr.lambda, view, m.name, opt);
          if (!(lam >= 0.0))
            throw std::runtime_error("intervention: negative replacement intensity for " +
                                     m.name);
          return lam;
        }
      throw std::logic_error("intervention: mark not covered for " + m.name);
    }
    const double lam = eval_traced(m.marks[mark_idx].lambda, view, m.name, opt);
    if (!(lam >= 0.0))
      throw std::runtime_error("module " + m.name + ": negative intensity");
    return lam;
  }

  void run() {
    draw_baseline();
    for (const auto& m : s.modules) state.try_emplace(m.name, 0.0);
    for (const auto& sc : s.schedules) state.try_emplace(sc.name, 0.0);

    std::vector<double> boundaries = s.decision_times();
    boundaries.erase(std::remove_if(boundaries.begin(), boundaries.end(),
                                    [&](double t) { return t > s.horizon; }),
                     boundaries.end());
    if (boundaries.empty() || boundaries.back() != s.horizon)
      boundaries.push_back(s.horizon);

    MapView view(&state);
    double t = 0.0;
    for (double boundary : boundaries) {
      // intensity-driven events strictly inside (t, boundary)
      for (;;) {
        std::vector<double> rates(s.modules.size(), 0.0);
        double total_active = 0.0;
        for (std::size_t i = 0; i < s.modules.size(); ++i) {
          const auto& m = s.modules[i];
          if (m.absorbing && jumps[m.name] > 0) continue;
          double r = 0.0;
          for (std::size_t k = 0; k < m.marks.size(); ++k)
            r += mark_rate(m, k, view);
          if (!theta || !theta->find_intensity(m.name)) {
            if (r > m.lambda_max * (1.0 + 1e-12))
              throw std::runtime_error("module " + m.name + ": intensity " +
                                       format_double(r) + " exceeds declared bound " +
                                       format_double(m.lambda_max));
          }
          rates[i] = r;
          total_active += r;
        }
        if (total_active == 0.0) break;

        // competing exponentials; redraw on exact ties or zero waits
        double best = std::numeric_limits<double>::infinity();
        std::size_t winner = s.modules.size();
        bool tie = false;
        for (std::size_t i = 0; i < s.modules.size(); ++i) {
          if (rates[i] <= 0.0) continue;
          const double tau = rng.exponential(rates[i]);
          if (tau == best) tie = true;
          if (tau < best) {
            best = tau;
            winner = i;
          }
        }
        if (tie || best == 0.0) continue;
        if (t + best >= boundary) break;

        t += best;
        const auto& m = s.modules[winner];
        std::vector<double> probs(m.marks.size(), 0.0);
        double r = 0.0;
        for (std::size_t k = 0; k < m.marks.size(); ++k) {
          probs[k] = mark_rate(m, k, view);
          r += probs[k];
        }
        if (r <= 0.0) continue;  // state changed? cannot happen, defensive
        for (auto& p : probs) p /= r;
        const std::size_t k = m.marks.size() == 1
                                  ? 0
                                  : rng.categorical(probs.data(), probs.size());
        out.events.push_back({t, m.name, m.marks[k].label, m.marks[k].delta});
        state[m.name] += m.marks[k].delta;
        jumps[m.name] += 1;
      }

      t = boundary;
      // schedule decisions at the boundary, left-limit state
      for (const auto& sc : s.schedules) {
        const auto it = std::find(sc.times.begin(), sc.times.end(), boundary);
        if (it == sc.times.end()) continue;
        const std::size_t idx = static_cast<std::size_t>(it - sc.times.begin());
        bool jump = false;
        const auto* rule = theta ? theta->find_schedule(sc.name) : nullptr;
        if (rule) {
          jump = eval_traced(rule->decisions[idx], view, sc.name, opt) >= 0.5;
        } else {
          const double p = eval_traced(sc.prob_at(idx), view, sc.name, opt);
          if (!(p >= 0.0) || p > 1.0)
            throw std::runtime_error("schedule " + sc.name +
                                     ": jump probability outside [0, 1]");
          jump = rng.bernoulli(p);
        }
        if (jump) {
          out.events.push_back({boundary, sc.name, sc.mark, sc.delta});
          state[sc.name] += sc.delta;
          jumps[sc.name] += 1;
        }
      }
    }
  }
};

Cohort simulate_impl(const ScenarioSpec& s, const InterventionSpec* theta, std::size_t n,
                     std::uint64_t seed, const SimOptions& opt) {
  if (theta) {
    const auto rep = validate_intervention(s, *theta);
    if (!rep.ok())
      throw std::runtime_error("simulate_counterfactual: invalid intervention: " +
                               rep.violations.front());
  }
  Cohort out;
  out.paths.resize(n);
  out.scenario_digest = s.digest();
  out.seed = seed;
  out.regime = theta ? "counterfactual:" + theta->digest() : "factual";

  int threads = opt.threads > 0 ? opt.threads : 1;
  if (opt.trace) threads = 1;

  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      PathSim sim(s, theta, opt, seed, i);
      sim.run();
      out.paths[i] = std::move(sim.out);
    }
  };
  if (threads == 1 || n < 2) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::size_t lo = std::min(n, static_cast<std::size_t>(w) * chunk);
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace

Cohort simulate_cohort(const ScenarioSpec& s, std::size_t n, std::uint64_t seed,
                       const SimOptions& opt) {
  return simulate_impl(s, nullptr, n, seed, opt);
}

Cohort simulate_counterfactual(const ScenarioSpec& s, const InterventionSpec& theta,
                               std::size_t n, std::uint64_t seed, const SimOptions& opt) {
  return simulate_impl(s, &theta, n, seed, opt);
}

Path apply_action(const Path& path, const ScenarioSpec& s, const InterventionSpec& theta) {
  {
    const auto rep = validate_intervention(s, theta);
    if (!rep.ok())
      throw std::runtime_error("apply_action: invalid intervention: " +
                               rep.violations.front());
  }
  Path out = path;

  if (!theta.baseline.empty()) {
    // rules read strictly earlier non-intervened baselines: factual values
    struct BaselineView final : StateView {
      const Path* p;
      double state(const std::string& name) const override {
        const auto it = p->baseline.find(name);
        if (it == p->baseline.end())
          throw std::runtime_error("apply_action: rule reads missing baseline " + name);
        return it->second;
      }
    } view;
    view.p = &path;
    for (const auto& rule : theta.baseline) {
      const auto* spec = s.find_baseline(rule.variable);
      out.baseline[rule.variable] = enforced_value(rule, *spec, view);
    }
  }

  for (const auto& rule : theta.intensities) {
    if (!rule.marks.empty()) {
      for (const auto& mk : rule.marks)
        if (!mk.lambda.is_constant(0.0))
          throw std::runtime_error(
              "apply_action: replacement intensity for " + rule.module +
              " is not identically zero; the action is not a deterministic path map");
    }
    std::erase_if(out.events, [&](const Event& e) { return e.module == rule.module; });
  }

  for (const auto& rule : theta.schedules) {
    std::erase_if(out.events, [&](const Event& e) { return e.module == rule.module; });
    const auto* sc = s.find_schedule(rule.module);
    // decisions read non-intervened history only, identical in path and out
    struct LeftView final : StateView {
      const Path* p;
      double t;
      double state(const std::string& name) const override {
        return state_at(*p, name, t, Side::left);
      }
    } view;
    view.p = &path;
    for (std::size_t i = 0; i < rule.times.size(); ++i) {
      view.t = rule.times[i];
      if (rule.decisions[i].eval(view) >= 0.5)
        out.events.push_back({rule.times[i], rule.module, sc->mark, sc->delta});
    }
  }

  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  return out;
}

}  // namespace evcf
