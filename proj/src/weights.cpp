#include "evcf/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "evcf/simulate.hpp"

namespace evcf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct MapView final : StateView {
  const std::map<std::string, double>* m;
  explicit MapView(const std::map<std::string, double>* mm) : m(mm) {}
  double state(const std::string& name) const override {
    const auto it = m->find(name);
    if (it == m->end())
      throw std::logic_error("weights: expression reads unknown process " + name);
    return it->second;
  }
};

// masks reads outside `allowed` with 0 (history withheld)
struct RestrictedView final : StateView {
  const StateView* inner;
  const std::set<std::string>* allowed;
  double state(const std::string& name) const override {
    return allowed->count(name) ? inner->state(name) : 0.0;
  }
};

double eval_filtered(const Expr& e, const StateView& full,
                     const std::set<std::string>* allowed) {
  if (!allowed) return e.eval(full);
  RestrictedView rv;
  rv.inner = &full;
  rv.allowed = allowed;
  return e.eval(rv);
}

double factual_mark_rate(const IntensitySpec& m, const MarkSpec& mk, const StateView& view,
                         const std::set<std::string>* allowed) {
  const double lam = eval_filtered(mk.lambda, view, allowed);
  if (!(lam >= 0.0))
    throw std::runtime_error("weights: negative intensity for module " + m.name);
  return lam;
}

double replacement_mark_rate(const InterventionSpec::IntensityRule& rule, int label,
                             const StateView& view, const std::set<std::string>* allowed) {
  for (const auto& mr : rule.marks)
    if (mr.label == label) {
      const double lam = eval_filtered(mr.lambda, view, allowed);
      if (!(lam >= 0.0))
        throw std::runtime_error("weights: negative replacement intensity for " +
                                 rule.module);
      return lam;
    }
  throw std::logic_error("weights: replacement intensity missing mark");
}

// Factor computation shared by weight_trajectory and factorization_check.
// `restrict_to`, when set, maps factor owner -> allowed read set.
std::vector<std::pair<std::string, StepFunction>> compute_log_factors(
    const Path& path, const ScenarioSpec& s, const InterventionSpec& theta,
    std::span<const double> extra_knots,
    const std::map<std::string, std::set<std::string>>* restrict_to) {
  const auto allowed_for = [&](const std::string& owner) -> const std::set<std::string>* {
    if (!restrict_to) return nullptr;
    const auto it = restrict_to->find(owner);
    if (it == restrict_to->end())
      throw std::logic_error("weights: no closure provided for factor owner " + owner);
    return &it->second;
  };

  std::map<std::string, StepFunction> factors;

  // running left-limit state of every declared process
  std::map<std::string, double> state;
  for (const auto& b : s.baseline) {
    const auto it = path.baseline.find(b.name);
    if (it == path.baseline.end())
      throw std::runtime_error("weights: path is missing baseline value for " + b.name);
    state[b.name] = it->second;
  }
  for (const auto& m : s.modules) state[m.name] = 0.0;
  for (const auto& sc : s.schedules) state.try_emplace(sc.name, 0.0);
  MapView view(&state);

  // baseline factors: fixed from time 0
  for (const auto& rule : theta.baseline) {
    const auto* spec = s.find_baseline(rule.variable);
    if (!spec) throw std::runtime_error("weights: unknown baseline " + rule.variable);
    const auto* allowed = allowed_for(rule.variable);

    std::vector<int> given;
    given.reserve(spec->parents.size());
    for (const auto& pn : spec->parents) {
      double raw = allowed && !allowed->count(pn) ? 0.0 : state.at(pn);
      given.push_back(static_cast<int>(raw));
    }
    const auto& row = spec->row(given);
    const int observed = path.baseline.at(rule.variable);
    const auto pos = std::find(spec->alphabet.begin(), spec->alphabet.end(), observed);
    if (pos == spec->alphabet.end())
      throw std::runtime_error("weights: observed value of " + rule.variable +
                               " outside its alphabet");
    const double p_obs = row[pos - spec->alphabet.begin()];
    if (p_obs <= 0.0)
      throw std::runtime_error("weights: observed baseline " + rule.variable +
                               " has factual probability 0 (misspecified scenario)");

    const double raw_enf = eval_filtered(rule.value, view, allowed);
    const long enf = std::lround(raw_enf);
    const double log_num = observed == enf ? 0.0 : kNegInf;
    factors.emplace(rule.variable, StepFunction(log_num - std::log(p_obs)));
  }
  for (const auto& rule : theta.schedules) factors.emplace(rule.module, StepFunction(0.0));
  for (const auto& rule : theta.intensities) factors.emplace(rule.module, StepFunction(0.0));

  // knots: decision times, event times, horizon, extras
  std::vector<double> knots = s.decision_times();
  for (const auto& ev : path.events) knots.push_back(ev.time);
  knots.insert(knots.end(), extra_knots.begin(), extra_knots.end());
  knots.push_back(s.horizon);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  knots.erase(std::remove_if(knots.begin(), knots.end(),
                             [&](double t) { return t <= 0.0 || t > s.horizon; }),
              knots.end());

  std::size_t ev_idx = 0;
  double prev = 0.0;
  for (double knot : knots) {
    // drift of intensity factors over (prev, knot], state constant there
    for (const auto& rule : theta.intensities) {
      const auto* m = s.find_module(rule.module);
      const auto* allowed = allowed_for(rule.module);
      double lam = 0.0, lam_star = 0.0;
      const bool silenced = m->absorbing && state.at(m->name) != 0.0;
      if (!silenced) {
        for (const auto& mk : m->marks) {
          lam += factual_mark_rate(*m, mk, view, allowed);
          lam_star += replacement_mark_rate(rule, mk.label, view, allowed);
        }
      }
      factors.at(rule.module).add_jump(knot, -(lam_star - lam) * (knot - prev));
    }

    // events at the knot: collect first, factor with left-limit state
    const std::size_t ev_begin = ev_idx;
    while (ev_idx < path.events.size() && path.events[ev_idx].time == knot) ++ev_idx;

    for (std::size_t i = ev_begin; i < ev_idx; ++i) {
      const auto& ev = path.events[i];
      const auto* rule = theta.find_intensity(ev.module);
      if (!rule) continue;
      const auto* m = s.find_module(ev.module);
      const auto* allowed = allowed_for(ev.module);
      const MarkSpec* mk = nullptr;
      for (const auto& cand : m->marks)
        if (cand.label == ev.mark) mk = &cand;
      if (!mk)
        throw std::runtime_error("weights: event with unknown mark in module " +
                                 ev.module);
      const double lam = factual_mark_rate(*m, *mk, view, allowed);
      const double lam_star = replacement_mark_rate(*rule, ev.mark, view, allowed);
      if (lam <= 0.0)
        throw std::runtime_error("weights: observed jump of " + ev.module +
                                 " has factual intensity 0 (misspecified scenario)");
      factors.at(ev.module).add_jump(knot, lam_star <= 0.0 ? kNegInf
                                                           : std::log(lam_star / lam));
    }

    // schedule decisions at the knot, before applying the events
    for (const auto& rule : theta.schedules) {
      const auto* sc = s.find_schedule(rule.module);
      const auto it = std::find(sc->times.begin(), sc->times.end(), knot);
      if (it == sc->times.end()) continue;
      const std::size_t idx = static_cast<std::size_t>(it - sc->times.begin());
      const auto* allowed = allowed_for(rule.module);

      bool observed = false;
      for (std::size_t i = ev_begin; i < ev_idx; ++i)
        observed = observed || path.events[i].module == rule.module;

      const double p = eval_filtered(sc->prob_at(idx), view, allowed);
      if (!(p >= 0.0) || p > 1.0)
        throw std::runtime_error("weights: schedule " + rule.module +
                                 " probability outside [0, 1]");
      const double p_obs = observed ? p : 1.0 - p;
      if (p_obs <= 0.0)
        throw std::runtime_error("weights: observed decision of " + rule.module +
                                 " at t=" + format_double(knot) +
                                 " has factual probability 0 (misspecified scenario)");
      const bool enforced = eval_filtered(rule.decisions[idx], view, allowed) >= 0.5;
      const double log_num = observed == enforced ? 0.0 : kNegInf;
      factors.at(rule.module).add_jump(knot, log_num - std::log(p_obs));
    }

    // now apply the events
    for (std::size_t i = ev_begin; i < ev_idx; ++i)
      state.at(path.events[i].module) += path.events[i].delta;
    prev = knot;
  }

  std::vector<std::pair<std::string, StepFunction>> out(factors.begin(), factors.end());
  return out;  // std::map iteration = sorted by owner
}

}  // namespace

double WeightTrajectory::weight_at(double t) const { return std::exp(log_total.value(t)); }

WeightTrajectory weight_trajectory(const Path& path, const ScenarioSpec& s,
                                   const InterventionSpec& theta,
                                   std::span<const double> extra_knots) {
  auto factors = compute_log_factors(path, s, theta, extra_knots, nullptr);
  WeightTrajectory out;
  std::vector<StepFunction> fns;
  for (auto& [owner, fn] : factors) {
    out.factor_owners.push_back(owner);
    fns.push_back(fn);
  }
  out.log_factors = fns;
  out.log_total = StepFunction::sum(fns);
  const double lt = out.log_total.final_value();
  out.final_weight = std::isinf(lt) && lt < 0 ? 0.0 : std::exp(lt);
  return out;
}

PathFunctional PathFunctional::parse(const std::string& text) {
  const auto at = text.rfind('@');
  if (at == std::string::npos)
    throw std::runtime_error("functional '" + text + "': missing '@time'");
  PathFunctional f;
  f.time = std::stod(text.substr(at + 1));
  std::string lhs = text.substr(0, at);
  if (lhs.find('=') != std::string::npos) {
    f.kind = Kind::state_equals;
    std::size_t pos = 0;
    while (pos <= lhs.size()) {
      const auto comma = lhs.find(',', pos);
      const std::string part =
          comma == std::string::npos ? lhs.substr(pos) : lhs.substr(pos, comma - pos);
      const auto eq = part.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::runtime_error("functional '" + text + "': bad conjunction term '" +
                                 part + "'");
      f.equals.emplace_back(part.substr(0, eq), std::stoi(part.substr(eq + 1)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return f;
  }
  if (lhs.rfind("by:", 0) == 0) {
    f.kind = Kind::event_by;
    f.module = lhs.substr(3);
  } else if (lhs.rfind("int:", 0) == 0) {
    f.kind = Kind::time_integral;
    f.module = lhs.substr(4);
  } else {
    if (lhs.find(':') != std::string::npos)
      throw std::runtime_error("functional '" + text + "': unknown kind prefix (want by:/int:)");
    f.kind = Kind::state_at;
    f.module = lhs;
  }
  if (f.module.empty())
    throw std::runtime_error("functional '" + text + "': missing module name");
  return f;
}

double PathFunctional::eval(const Path& path) const {
  switch (kind) {
    case Kind::state_at:
      return state_at(path, module, time, Side::right);
    case Kind::event_by: {
      for (const auto& ev : path.events)
        if (ev.module == module && ev.time <= time) return 1.0;
      return 0.0;
    }
    case Kind::time_integral: {
      double integral = 0.0;
      double last = 0.0;
      double v = 0.0;
      const auto bit = path.baseline.find(module);
      if (bit != path.baseline.end()) return bit->second * time;
      for (const auto& ev : path.events) {
        if (ev.module != module) continue;
        if (ev.time > time) break;
        integral += v * (ev.time - last);
        v += ev.delta;
        last = ev.time;
      }
      return integral + v * (time - last);
    }
    case Kind::state_equals: {
      for (const auto& [mod, val] : equals)
        if (state_at(path, mod, time, Side::right) != val) return 0.0;
      return 1.0;
    }
  }
  throw std::logic_error("functional: bad kind");
}

std::string PathFunctional::label() const {
  std::string lhs;
  switch (kind) {
    case Kind::state_at:
      lhs = module;
      break;
    case Kind::event_by:
      lhs = "by:" + module;
      break;
    case Kind::time_integral:
      lhs = "int:" + module;
      break;
    case Kind::state_equals: {
      for (std::size_t i = 0; i < equals.size(); ++i) {
        if (i) lhs += ',';
        lhs += equals[i].first + "=" + std::to_string(equals[i].second);
      }
      break;
    }
  }
  return lhs + "@" + format_double(time);
}

namespace {

void require_factual_cohort(const Cohort& cohort, const ScenarioSpec& s,
                            const char* who) {
  if (!cohort.scenario_digest.empty() && cohort.scenario_digest != s.digest())
    throw std::runtime_error(std::string(who) +
                             ": cohort was not generated by this scenario (digest "
                             "mismatch)");
  if (!cohort.regime.empty() && cohort.regime != "factual")
    throw std::runtime_error(std::string(who) + ": cohort regime is '" + cohort.regime +
                             "', expected factual");
}

struct ComboView final : StateView {
  const std::map<std::string, double>* m;
  double state(const std::string& name) const override {
    const auto it = m->find(name);
    if (it == m->end())
      throw std::runtime_error("positivity: analytic check reads process " + name +
                               " outside the enumerated set");
    return it->second;
  }
};

// Enumerate state spaces that are provably finite: baseline alphabets,
// schedule modules (counting states k * delta, k <= #times), single-jump
// absorbing modules.
bool enumerable_space(const ScenarioSpec& s, const std::string& name,
                      std::vector<double>& out) {
  if (const auto* b = s.find_baseline(name)) {
    for (int v : b->alphabet) out.push_back(v);
    return true;
  }
  if (const auto* sc = s.find_schedule(name)) {
    for (std::size_t k = 0; k <= sc->times.size(); ++k)
      out.push_back(static_cast<double>(k) * sc->delta);
    return true;
  }
  if (const auto* m = s.find_module(name)) {
    if (!m->absorbing) return false;
    out.push_back(0.0);
    for (const auto& mk : m->marks) out.push_back(mk.delta);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return true;
  }
  return false;
}

// exact joint enumeration of baseline combinations with positive probability
void analytic_baseline_positivity(const ScenarioSpec& s, const InterventionSpec& theta,
                                  PositivityReport& rep) {
  if (theta.baseline.empty()) return;
  std::size_t combos = 1;
  for (const auto& b : s.baseline) {
    combos *= b.alphabet.size();
    if (combos > 1000000) {
      rep.notes.push_back("analytic baseline check skipped: state space too large");
      return;
    }
  }
  std::vector<PositivityReport::Item> items;
  for (const auto& rule : theta.baseline)
    items.push_back({rule.variable, "analytic: reachable baseline combinations", 1.0,
                     false});

  std::vector<std::size_t> idx(s.baseline.size(), 0);
  for (;;) {
    std::map<std::string, double> combo;
    double joint = 1.0;
    for (std::size_t i = 0; i < s.baseline.size(); ++i) {
      const auto& b = s.baseline[i];
      std::vector<int> given;
      for (const auto& pn : b.parents)
        given.push_back(static_cast<int>(combo.at(pn)));
      const double p = b.row(given)[idx[i]];
      joint *= p;
      combo[b.name] = b.alphabet[idx[i]];
    }
    if (joint > 0.0) {
      ComboView view;
      view.m = &combo;
      for (std::size_t r = 0; r < theta.baseline.size(); ++r) {
        const auto& rule = theta.baseline[r];
        const auto* spec = s.find_baseline(rule.variable);
        const int enf = static_cast<int>(std::lround(rule.value.eval(view)));
        std::vector<int> given;
        for (const auto& pn : spec->parents)
          given.push_back(static_cast<int>(combo.at(pn)));
        const auto& row = spec->row(given);
        const auto pos = std::find(spec->alphabet.begin(), spec->alphabet.end(), enf);
        const double p =
            pos == spec->alphabet.end() ? 0.0 : row[pos - spec->alphabet.begin()];
        items[r].min_prob = std::min(items[r].min_prob, p);
        if (p <= 0.0) items[r].hard_zero = true;
      }
    }
    // next combination
    std::size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (++idx[i] < s.baseline[i].alphabet.size()) break;
      idx[i] = 0;
    }
    if (i == idx.size()) break;
  }
  for (auto& item : items) {
    if (item.hard_zero) rep.pass = false;
    rep.items.push_back(std::move(item));
  }
}

// schedule decision minima over dependency-state combinations; reachability
// of module-state combinations is not verified, so zeros here are advisory
void analytic_schedule_positivity(const ScenarioSpec& s, const InterventionSpec& theta,
                                  PositivityReport& rep) {
  for (const auto& rule : theta.schedules) {
    const auto* sc = s.find_schedule(rule.module);
    std::set<std::string> reads;
    for (const auto& e : sc->jump_prob) reads.insert(e.free_vars().begin(), e.free_vars().end());
    for (const auto& d : rule.decisions) reads.insert(d.free_vars().begin(), d.free_vars().end());

    std::vector<std::string> names(reads.begin(), reads.end());
    std::vector<std::vector<double>> spaces;
    bool ok = true;
    std::size_t combos = 1;
    for (const auto& nm : names) {
      std::vector<double> space;
      if (!enumerable_space(s, nm, space)) {
        ok = false;
        break;
      }
      combos *= space.size();
      spaces.push_back(std::move(space));
    }
    if (!ok || combos > 1000000) {
      rep.notes.push_back("analytic decision check skipped for " + rule.module +
                          ": state space not enumerable");
      continue;
    }

    PositivityReport::Item item;
    item.process = rule.module;
    item.context = "analytic: dependency combinations (reachability not verified)";
    std::vector<std::size_t> idx(names.size(), 0);
    bool zero_somewhere = false;
    for (;;) {
      std::map<std::string, double> combo;
      for (std::size_t i = 0; i < names.size(); ++i) combo[names[i]] = spaces[i][idx[i]];
      ComboView view;
      view.m = &combo;
      for (std::size_t i = 0; i < sc->times.size(); ++i) {
        const double p = sc->prob_at(i).eval(view);
        const bool enf = rule.decisions[i].eval(view) >= 0.5;
        const double p_match = enf ? p : 1.0 - p;
        item.min_prob = std::min(item.min_prob, p_match);
        if (p_match <= 0.0) zero_somewhere = true;
      }
      std::size_t i = 0;
      for (; i < idx.size(); ++i) {
        if (++idx[i] < spaces[i].size()) break;
        idx[i] = 0;
      }
      if (i == idx.size()) break;
    }
    if (zero_somewhere)
      rep.notes.push_back("analytic decision minimum for " + rule.module +
                          " is 0 on some dependency combination (possibly unreachable)");
    rep.items.push_back(std::move(item));
  }
}

void analytic_positivity(const ScenarioSpec& s, const InterventionSpec& theta,
                         PositivityReport& rep) {
  analytic_baseline_positivity(s, theta, rep);
  analytic_schedule_positivity(s, theta, rep);
}

}  // namespace

IpwEstimate ipw_expectation(const Cohort& cohort, const ScenarioSpec& s,
                            const InterventionSpec& theta, const PathFunctional& f,
                            IpwNormalization norm) {
  require_factual_cohort(cohort, s, "ipw_expectation");
  const std::size_t n = cohort.paths.size();
  if (n == 0) throw std::runtime_error("ipw_expectation: empty cohort");

  std::vector<double> w(n), wh(n);
  IpwEstimate out;
  out.n = n;
  const double eval_time = std::min(f.time, s.horizon);
  const std::array<double, 1> knots = {eval_time};
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = weight_trajectory(cohort.paths[i], s, theta, knots);
    const double lw = traj.log_total.value(eval_time);
    w[i] = std::isinf(lw) && lw < 0 ? 0.0 : std::exp(lw);
    wh[i] = w[i] == 0.0 ? 0.0 : w[i] * f.eval(cohort.paths[i]);
    if (w[i] == 0.0) ++out.zero_weights;
  }

  const double sw = pairwise_sum(w);
  const double swh = pairwise_sum(wh);
  out.mean_weight = sw / static_cast<double>(n);
  out.n_eff = effective_sample_size(w);

  if (norm == IpwNormalization::horvitz_thompson) {
    const auto ms = mean_se(wh);
    out.estimate = ms.mean;
    out.se = ms.se;
  } else {
    if (sw <= 0.0) throw std::runtime_error("ipw_expectation: all weights are zero");
    out.estimate = swh / sw;
    std::vector<double> r2(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = wh[i] - out.estimate * w[i];
      r2[i] = r * r;
    }
    out.se = std::sqrt(pairwise_sum(r2)) / sw;
  }
  return out;
}

WeightDiagnostics weight_diagnostics(const Cohort& cohort, const ScenarioSpec& s,
                                     const InterventionSpec& theta,
                                     std::span<const double> grid) {
  require_factual_cohort(cohort, s, "weight_diagnostics");
  WeightDiagnostics out;
  out.grid.assign(grid.begin(), grid.end());
  const std::size_t n = cohort.paths.size();
  std::vector<std::vector<double>> at(grid.size(), std::vector<double>(n, 0.0));
  std::vector<double> finals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = weight_trajectory(cohort.paths[i], s, theta, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double lw = traj.log_total.value(grid[g]);
      at[g][i] = std::isinf(lw) && lw < 0 ? 0.0 : std::exp(lw);
    }
    finals[i] = traj.final_weight;
    if (finals[i] == 0.0) ++out.zero_count;
    out.max_weight = std::max(out.max_weight, finals[i]);
  }
  for (std::size_t g = 0; g < grid.size(); ++g) out.mean_weight.push_back(mean_se(at[g]));
  out.n_eff = effective_sample_size(finals);
  return out;
}

PositivityReport positivity_check(const Cohort& cohort, const ScenarioSpec& s,
                                  const InterventionSpec& theta) {
  require_factual_cohort(cohort, s, "positivity_check");
  PositivityReport rep;
  auto push = [&](PositivityReport::Item item) {
    if (item.hard_zero) rep.pass = false;
    rep.items.push_back(std::move(item));
  };

  // deterministic actions admit the theta-consistent history; fall back to
  // factual histories when a replacement intensity is not identically zero
  bool deterministic = true;
  for (const auto& rule : theta.intensities)
    for (const auto& mk : rule.marks) deterministic = deterministic && mk.lambda.is_constant(0.0);
  if (!deterministic)
    rep.notes.push_back(
        "non-deterministic replacement intensity: decision probabilities evaluated on "
        "factual histories");

  // ---- empirical minima over the cohort ----
  for (const auto& rule : theta.baseline) {
    const auto* spec = s.find_baseline(rule.variable);
    PositivityReport::Item item;
    item.process = rule.variable;
    item.context = "empirical: P(enforced value | parents)";
    for (const auto& path : cohort.paths) {
      struct BView final : StateView {
        const Path* p;
        double state(const std::string& name) const override {
          return p->baseline.at(name);
        }
      } view;
      view.p = &path;
      const int enf = static_cast<int>(std::lround(rule.value.eval(view)));
      std::vector<int> given;
      for (const auto& pn : spec->parents) given.push_back(path.baseline.at(pn));
      const auto& row = spec->row(given);
      const auto pos = std::find(spec->alphabet.begin(), spec->alphabet.end(), enf);
      const double p = pos == spec->alphabet.end()
                           ? 0.0
                           : row[pos - spec->alphabet.begin()];
      item.min_prob = std::min(item.min_prob, p);
      if (p <= 0.0) item.hard_zero = true;
    }
    push(item);
  }

  for (const auto& rule : theta.schedules) {
    const auto* sc = s.find_schedule(rule.module);
    PositivityReport::Item item;
    item.process = rule.module;
    item.context = "empirical: P(enforced decision | left-limit state)";
    for (const auto& path : cohort.paths) {
      const Path base = deterministic ? apply_action(path, s, theta) : path;
      for (std::size_t i = 0; i < sc->times.size(); ++i) {
        struct LView final : StateView {
          const Path* p;
          double t;
          double state(const std::string& name) const override {
            return state_at(*p, name, t, Side::left);
          }
        } view;
        view.p = &base;
        view.t = sc->times[i];
        const double p = sc->prob_at(i).eval(view);
        const bool enf = rule.decisions[i].eval(view) >= 0.5;
        const double p_match = enf ? p : 1.0 - p;
        item.min_prob = std::min(item.min_prob, p_match);
        if (p_match <= 0.0) item.hard_zero = true;
      }
    }
    push(item);
  }

  // dominance of replacement intensities at observed jumps
  for (const auto& rule : theta.intensities) {
    const auto* m = s.find_module(rule.module);
    PositivityReport::Item item;
    item.process = rule.module;
    item.context = "empirical: factual intensity at jumps enforced by lambda*";
    bool relevant = false;
    for (const auto& path : cohort.paths) {
      for (const auto& ev : path.events) {
        if (ev.module != rule.module) continue;
        struct LView final : StateView {
          const Path* p;
          double t;
          double state(const std::string& name) const override {
            return state_at(*p, name, t, Side::left);
          }
        } view;
        view.p = &path;
        view.t = ev.time;
        double lam_star = 0.0;
        for (const auto& mr : rule.marks)
          if (mr.label == ev.mark) lam_star = mr.lambda.eval(view);
        if (lam_star <= 0.0) continue;  // jump not enforced, weight handles it
        relevant = true;
        const MarkSpec* mk = nullptr;
        for (const auto& cand : m->marks)
          if (cand.label == ev.mark) mk = &cand;
        const double lam = mk->lambda.eval(view);
        item.min_prob = std::min(item.min_prob, lam);
        if (lam <= 0.0) item.hard_zero = true;
      }
    }
    if (!relevant) item.min_prob = 1.0;
    push(item);
  }

  // ---- analytic minima over enumerable state combinations ----
  analytic_positivity(s, theta, rep);

  // zero-weight paths under the regime
  for (const auto& path : cohort.paths) {
    const auto traj = weight_trajectory(path, s, theta);
    if (traj.final_weight == 0.0) ++rep.zero_weight_paths;
  }
  return rep;
}

std::string print_positivity(const PositivityReport& report) {
  std::string out = report.pass ? "positivity: PASS\n" : "positivity: FAIL\n";
  out += "zero-weight paths: " + std::to_string(report.zero_weight_paths) + "\n";
  for (const auto& item : report.items)
    out += "min P(" + item.process + ") = " + format_double(item.min_prob) + " [" +
           item.context + "]" + (item.hard_zero ? " HARD ZERO" : "") + "\n";
  for (const auto& note : report.notes) out += "note: " + note + "\n";
  return out;
}

FactorizationCheck factorization_check(const Path& path, const ScenarioSpec& s,
                                       const InterventionSpec& theta,
                                       const LocalIndependenceGraph& g) {
  FactorizationCheck out;
  const auto full = compute_log_factors(path, s, theta, {}, nullptr);

  std::map<std::string, std::set<std::string>> closures;
  for (const auto& [owner, fn] : full) {
    (void)fn;
    if (!g.has_node(owner))
      throw std::runtime_error("factorization_check: graph has no node " + owner);
    closures[owner] = closure(g, owner);
  }
  const auto restricted = compute_log_factors(path, s, theta, {}, &closures);

  for (std::size_t k = 0; k < full.size(); ++k) {
    const auto& [owner, f_full] = full[k];
    const auto& f_rest = restricted[k].second;
    std::vector<double> ts{0.0, s.horizon};
    for (double t : f_full.jump_times()) ts.push_back(t);
    for (double t : f_rest.jump_times()) ts.push_back(t);
    double d = 0.0;
    for (double t : ts) {
      const double a = f_full.value(t), b = f_rest.value(t);
      const double wa = std::isinf(a) && a < 0 ? 0.0 : std::exp(a);
      const double wb = std::isinf(b) && b < 0 ? 0.0 : std::exp(b);
      d = std::max(d, std::abs(wa - wb));
    }
    out.max_discrepancy = std::max(out.max_discrepancy, d);
    std::string cl_str;
    for (const auto& c : closures[owner]) cl_str += c + " ";
    out.notes.push_back("factor " + owner + ": closure {" + cl_str +
                        "}, discrepancy " + format_double(d));
  }
  return out;
}

}  // namespace evcf
