#include "evcf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "evcf/numeric.hpp"

namespace evcf {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("scenario: " + msg); }

const json& field(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ctx + ": missing field '" + key + "'");
  return *it;
}

bool valid_name(const std::string& s) {
  if (s.empty() || s == "atrisk") return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

Expr parse_expr_field(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx + ": expression must be a string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const std::exception& e) {
    fail(ctx + ": " + e.what());
  }
}

std::vector<BaselineSpec> parse_baseline_array(const json& arr) {
  std::vector<BaselineSpec> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) fail("'baseline' must be an array");
  for (const auto& jb : arr) {
    BaselineSpec b;
    b.name = field(jb, "name", "baseline entry").get<std::string>();
    const std::string ctx = "baseline " + b.name;
    if (!valid_name(b.name)) fail(ctx + ": invalid name");
    b.timestamp = field(jb, "t", ctx).get<double>();
    b.alphabet = field(jb, "alphabet", ctx).get<std::vector<int>>();
    if (b.alphabet.empty()) fail(ctx + ": empty alphabet");
    b.latent = jb.value("latent", false);
    b.parents = jb.value("parents", std::vector<std::string>{});
    for (const auto& jr : field(jb, "table", ctx)) {
      TableRow row;
      row.given = field(jr, "given", ctx + " table row").get<std::vector<int>>();
      row.p = field(jr, "p", ctx + " table row").get<std::vector<double>>();
      b.table.push_back(std::move(row));
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<IntensitySpec> parse_module_array(const json& arr) {
  std::vector<IntensitySpec> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) fail("'modules' must be an array");
  for (const auto& jm : arr) {
    IntensitySpec m;
    m.name = field(jm, "name", "module entry").get<std::string>();
    const std::string ctx = "module " + m.name;
    if (!valid_name(m.name)) fail(ctx + ": invalid name");
    m.deps = jm.value("deps", std::vector<std::string>{});
    m.absorbing = jm.value("absorbing", false);
    m.lambda_max = field(jm, "lambda_max", ctx).get<double>();
    if (!(m.lambda_max > 0.0)) fail(ctx + ": lambda_max must be positive");
    for (const auto& jk : field(jm, "marks", ctx)) {
      MarkSpec mk;
      mk.label = field(jk, "label", ctx).get<int>();
      mk.delta = field(jk, "delta", ctx).get<int>();
      if (mk.delta == 0) fail(ctx + ": mark delta must be nonzero");
      mk.lambda = parse_expr_field(field(jk, "lambda", ctx), ctx + " lambda");
      m.marks.push_back(std::move(mk));
    }
    if (m.marks.empty()) fail(ctx + ": needs at least one mark");
    std::set<int> labels;
    for (const auto& mk : m.marks)
      if (!labels.insert(mk.label).second) fail(ctx + ": duplicate mark label");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<TreatmentSchedule> parse_schedule_array(const json& arr) {
  std::vector<TreatmentSchedule> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) fail("'schedules' must be an array");
  for (const auto& js : arr) {
    TreatmentSchedule s;
    s.name = field(js, "module", "schedule entry").get<std::string>();
    const std::string ctx = "schedule " + s.name;
    if (!valid_name(s.name)) fail(ctx + ": invalid name");
    s.deps = js.value("deps", std::vector<std::string>{});
    s.times = field(js, "times", ctx).get<std::vector<double>>();
    if (s.times.empty()) fail(ctx + ": needs at least one decision time");
    const auto& jp = field(js, "p", ctx);
    if (jp.is_string()) {
      s.jump_prob.push_back(parse_expr_field(jp, ctx + " p"));
    } else if (jp.is_array()) {
      for (const auto& je : jp) s.jump_prob.push_back(parse_expr_field(je, ctx + " p"));
    } else {
      fail(ctx + ": 'p' must be a string or array of strings");
    }
    if (s.jump_prob.size() != 1 && s.jump_prob.size() != s.times.size())
      fail(ctx + ": 'p' must have one entry or one per decision time");
    s.mark = js.value("mark", 0);
    s.delta = js.value("delta", 1);
    if (s.delta == 0) fail(ctx + ": delta must be nonzero");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

const std::vector<double>& BaselineSpec::row(const std::vector<int>& given) const {
  for (const auto& r : table)
    if (r.given == given) return r.p;
  std::string vals;
  for (int v : given) vals += std::to_string(v) + ",";
  throw std::runtime_error("baseline table for " + name + ": no row for parents (" +
                           vals + ")");
}

double IntensitySpec::total_rate(const StateView& view) const {
  double total = 0.0;
  for (const auto& mk : marks) {
    const double lam = mk.lambda.eval(view);
    if (!(lam >= 0.0))
      throw std::runtime_error("module " + name + ": negative intensity for mark " +
                               std::to_string(mk.label));
    total += lam;
  }
  if (total > lambda_max * (1.0 + 1e-12))
    throw std::runtime_error("module " + name + ": intensity " + format_double(total) +
                             " exceeds declared bound " + format_double(lambda_max));
  return total;
}

const Expr& TreatmentSchedule::prob_at(std::size_t i) const {
  return jump_prob.size() == 1 ? jump_prob[0] : jump_prob.at(i);
}

const BaselineSpec* ScenarioSpec::find_baseline(const std::string& name) const {
  for (const auto& b : baseline)
    if (b.name == name) return &b;
  return nullptr;
}

const IntensitySpec* ScenarioSpec::find_module(const std::string& name) const {
  for (const auto& m : modules)
    if (m.name == name) return &m;
  return nullptr;
}

const TreatmentSchedule* ScenarioSpec::find_schedule(const std::string& name) const {
  for (const auto& s : schedules)
    if (s.name == name) return &s;
  return nullptr;
}

bool ScenarioSpec::has_name(const std::string& name) const {
  return find_baseline(name) || find_module(name) || find_schedule(name);
}

std::vector<std::string> ScenarioSpec::baseline_names() const {
  std::vector<std::string> out;
  for (const auto& b : baseline) out.push_back(b.name);
  return out;
}

std::vector<std::string> ScenarioSpec::module_names() const {
  std::vector<std::string> out;
  for (const auto& m : modules) out.push_back(m.name);
  for (const auto& s : schedules) out.push_back(s.name);
  return out;
}

std::vector<double> ScenarioSpec::decision_times() const {
  std::vector<double> out;
  for (const auto& s : schedules) out.insert(out.end(), s.times.begin(), s.times.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string ScenarioSpec::digest() const { return hex64(fnv1a64(print_scenario(*this))); }

ScenarioSpec parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  ScenarioSpec s;
  s.horizon = field(j, "horizon", "scenario").get<double>();
  if (!(s.horizon > 0.0)) fail("horizon must be positive");
  s.baseline = parse_baseline_array(j.value("baseline", json{}));
  s.modules = parse_module_array(j.value("modules", json{}));
  s.schedules = parse_schedule_array(j.value("schedules", json{}));

  if (s.baseline.empty() && s.modules.empty() && s.schedules.empty()) fail("no modules");

  std::sort(s.baseline.begin(), s.baseline.end(),
            [](const BaselineSpec& a, const BaselineSpec& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.name < b.name;
            });

  // name uniqueness across every process kind
  std::set<std::string> names;
  for (const auto& b : s.baseline)
    if (!names.insert(b.name).second) fail("duplicate name " + b.name);
  for (const auto& m : s.modules)
    if (!names.insert(m.name).second) fail("duplicate name " + m.name);
  for (const auto& sc : s.schedules)
    if (!names.insert(sc.name).second) fail("duplicate name " + sc.name);

  // baseline parent order, table completeness and normalization
  for (const auto& b : s.baseline) {
    std::size_t combos = 1;
    for (const auto& pn : b.parents) {
      const auto* pb = s.find_baseline(pn);
      if (!pb) fail("baseline " + b.name + ": parent " + pn + " is not a baseline variable");
      if (!(pb->timestamp < b.timestamp))
        fail("baseline " + b.name + ": parent " + pn + " is not strictly earlier");
      combos *= pb->alphabet.size();
    }
    if (b.table.size() != combos)
      fail("baseline table for " + b.name + ": expected " + std::to_string(combos) +
           " rows, found " + std::to_string(b.table.size()));
    std::set<std::vector<int>> seen;
    for (const auto& r : b.table) {
      if (r.given.size() != b.parents.size())
        fail("baseline table for " + b.name + ": row arity mismatch");
      for (std::size_t i = 0; i < r.given.size(); ++i) {
        const auto& alpha = s.find_baseline(b.parents[i])->alphabet;
        if (std::find(alpha.begin(), alpha.end(), r.given[i]) == alpha.end())
          fail("baseline table for " + b.name + ": illegal parent value " +
               std::to_string(r.given[i]));
      }
      if (!seen.insert(r.given).second)
        fail("baseline table for " + b.name + ": duplicate row");
      if (r.p.size() != b.alphabet.size())
        fail("baseline table for " + b.name + ": probability row arity mismatch");
      double sum = 0.0;
      for (double p : r.p) {
        if (p < 0.0) fail("baseline table for " + b.name + ": negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        fail("baseline table for " + b.name + " does not sum to 1 (sum=" +
             format_double(sum) + ")");
    }
  }

  // expression reads inside declared deps
  for (const auto& m : s.modules) {
    for (const auto& d : m.deps)
      if (!names.count(d)) fail("module " + m.name + ": unknown dependency " + d);
    for (const auto& mk : m.marks)
      for (const auto& v : mk.lambda.free_vars())
        if (v != m.name &&
            std::find(m.deps.begin(), m.deps.end(), v) == m.deps.end())
          fail("module " + m.name + ": intensity reads undeclared dependency " + v);
  }
  for (const auto& sc : s.schedules) {
    for (const auto& d : sc.deps)
      if (!names.count(d)) fail("schedule " + sc.name + ": unknown dependency " + d);
    for (const auto& e : sc.jump_prob)
      for (const auto& v : e.free_vars())
        if (std::find(sc.deps.begin(), sc.deps.end(), v) == sc.deps.end())
          fail("schedule " + sc.name + ": probability reads undeclared dependency " + v);
    for (std::size_t i = 0; i < sc.times.size(); ++i) {
      if (!(sc.times[i] > 0.0) || sc.times[i] > s.horizon)
        fail("schedule " + sc.name + ": decision time outside (0, horizon]");
      if (i > 0 && !(sc.times[i - 1] < sc.times[i]))
        fail("schedule " + sc.name + ": decision times must be strictly increasing");
    }
  }
  // distinct schedule modules never share a decision time (would create a
  // simultaneous cross-module jump)
  for (std::size_t i = 0; i < s.schedules.size(); ++i)
    for (std::size_t k = i + 1; k < s.schedules.size(); ++k)
      for (double t : s.schedules[i].times)
        for (double u : s.schedules[k].times)
          if (t == u)
            fail("schedules " + s.schedules[i].name + " and " + s.schedules[k].name +
                 " share decision time " + format_double(t));

  // graph: nodes for every declared process, then declared edges
  for (const auto& b : s.baseline) s.graph.add_node(b.name, b.timestamp);
  for (const auto& m : s.modules) s.graph.add_node(m.name);
  for (const auto& sc : s.schedules) s.graph.add_node(sc.name);
  if (j.contains("graph")) {
    const auto& jg = j["graph"];
    for (const auto& je : jg.value("edges", json::array())) {
      if (!je.is_array() || je.size() != 2) fail("graph edge must be a [from, to] pair");
      const std::string from = je[0].get<std::string>();
      const std::string to = je[1].get<std::string>();
      if (!names.count(from)) fail("graph edge from unknown process " + from);
      if (!names.count(to)) fail("graph edge to unknown process " + to);
      s.graph.add_edge(from, to);
    }
  }
  return s;
}

std::string print_scenario(const ScenarioSpec& s) {
  json j;
  j["horizon"] = s.horizon;
  j["baseline"] = json::array();
  for (const auto& b : s.baseline) {
    json jb;
    jb["name"] = b.name;
    jb["t"] = b.timestamp;
    jb["alphabet"] = b.alphabet;
    jb["latent"] = b.latent;
    jb["parents"] = b.parents;
    jb["table"] = json::array();
    for (const auto& r : b.table) {
      json jr;
      jr["given"] = r.given;
      jr["p"] = r.p;
      jb["table"].push_back(jr);
    }
    j["baseline"].push_back(jb);
  }
  j["modules"] = json::array();
  for (const auto& m : s.modules) {
    json jm;
    jm["name"] = m.name;
    jm["deps"] = m.deps;
    jm["absorbing"] = m.absorbing;
    jm["lambda_max"] = m.lambda_max;
    jm["marks"] = json::array();
    for (const auto& mk : m.marks) {
      json jk;
      jk["label"] = mk.label;
      jk["delta"] = mk.delta;
      jk["lambda"] = mk.lambda.text();
      jm["marks"].push_back(jk);
    }
    j["modules"].push_back(jm);
  }
  j["schedules"] = json::array();
  for (const auto& sc : s.schedules) {
    json js;
    js["module"] = sc.name;
    js["deps"] = sc.deps;
    js["times"] = sc.times;
    json jp = json::array();
    for (const auto& e : sc.jump_prob) jp.push_back(e.text());
    js["p"] = jp;
    js["mark"] = sc.mark;
    js["delta"] = sc.delta;
    j["schedules"].push_back(js);
  }
  json edges = json::array();
  for (const auto& [from, to] : s.graph.edges()) edges.push_back({from, to});
  j["graph"]["edges"] = edges;
  return j.dump(2) + "\n";
}

ScenarioSpec read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::set<std::string> InterventionSpec::intervened() const {
  std::set<std::string> out;
  for (const auto& r : baseline) out.insert(r.variable);
  for (const auto& r : schedules) out.insert(r.module);
  for (const auto& r : intensities) out.insert(r.module);
  return out;
}

bool InterventionSpec::empty() const {
  return baseline.empty() && schedules.empty() && intensities.empty();
}

const InterventionSpec::ScheduleRule* InterventionSpec::find_schedule(
    const std::string& module) const {
  for (const auto& r : schedules)
    if (r.module == module) return &r;
  return nullptr;
}

const InterventionSpec::IntensityRule* InterventionSpec::find_intensity(
    const std::string& module) const {
  for (const auto& r : intensities)
    if (r.module == module) return &r;
  return nullptr;
}

const InterventionSpec::BaselineRule* InterventionSpec::find_baseline(
    const std::string& variable) const {
  for (const auto& r : baseline)
    if (r.variable == variable) return &r;
  return nullptr;
}

std::string InterventionSpec::digest() const {
  return hex64(fnv1a64(print_intervention(*this)));
}

InterventionSpec parse_intervention(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("intervention: invalid JSON: ") + e.what());
  }
  InterventionSpec out;
  for (const auto& jb : j.value("baseline", json::array())) {
    InterventionSpec::BaselineRule r;
    r.variable = field(jb, "variable", "intervention baseline rule").get<std::string>();
    r.value = parse_expr_field(field(jb, "value", "intervention baseline rule"),
                               "intervention value for " + r.variable);
    out.baseline.push_back(std::move(r));
  }
  for (const auto& js : j.value("schedules", json::array())) {
    InterventionSpec::ScheduleRule r;
    r.module = field(js, "module", "intervention schedule rule").get<std::string>();
    r.times = field(js, "times", "intervention schedule rule").get<std::vector<double>>();
    for (const auto& jd : field(js, "decisions", "intervention schedule rule"))
      r.decisions.push_back(
          parse_expr_field(jd, "intervention decision for " + r.module));
    if (r.decisions.size() != r.times.size())
      throw std::runtime_error("intervention: schedule rule for " + r.module +
                               " needs one decision per time");
    out.schedules.push_back(std::move(r));
  }
  for (const auto& ji : j.value("intensities", json::array())) {
    InterventionSpec::IntensityRule r;
    r.module = field(ji, "module", "intervention intensity rule").get<std::string>();
    for (const auto& jm : field(ji, "marks", "intervention intensity rule")) {
      InterventionSpec::MarkRule mk;
      mk.label = field(jm, "label", "intervention mark rule").get<int>();
      mk.lambda = parse_expr_field(field(jm, "lambda", "intervention mark rule"),
                                   "replacement intensity for " + r.module);
      r.marks.push_back(std::move(mk));
    }
    out.intensities.push_back(std::move(r));
  }
  return out;
}

std::string print_intervention(const InterventionSpec& s) {
  json j;
  j["baseline"] = json::array();
  for (const auto& r : s.baseline)
    j["baseline"].push_back({{"variable", r.variable}, {"value", r.value.text()}});
  j["schedules"] = json::array();
  for (const auto& r : s.schedules) {
    json js;
    js["module"] = r.module;
    js["times"] = r.times;
    json jd = json::array();
    for (const auto& d : r.decisions) jd.push_back(d.text());
    js["decisions"] = jd;
    j["schedules"].push_back(js);
  }
  j["intensities"] = json::array();
  for (const auto& r : s.intensities) {
    json ji;
    ji["module"] = r.module;
    ji["marks"] = json::array();
    for (const auto& mk : r.marks)
      ji["marks"].push_back({{"label", mk.label}, {"lambda", mk.lambda.text()}});
    j["intensities"].push_back(ji);
  }
  return j.dump(2) + "\n";
}

InterventionSpec read_intervention_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("intervention: cannot read file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_intervention(ss.str());
}

ValidationReport validate_intervention(const ScenarioSpec& s, const InterventionSpec& th) {
  ValidationReport rep;
  auto add = [&](const std::string& v) { rep.violations.push_back(v); };

  std::set<std::string> seen;
  for (const auto& name : th.intervened()) seen.insert(name);
  {
    std::size_t total = th.baseline.size() + th.schedules.size() + th.intensities.size();
    if (total != seen.size()) add("more than one rule targets the same process");
  }
  const auto& intervened = seen;

  for (const auto& r : th.baseline) {
    const auto* b = s.find_baseline(r.variable);
    if (!b) {
      add("baseline rule targets " + r.variable + ", not a baseline variable");
      continue;
    }
    for (const auto& v : r.value.free_vars()) {
      const auto* pb = s.find_baseline(v);
      if (!pb)
        add("baseline rule for " + r.variable + " reads " + v +
            ", not a baseline variable");
      else if (!(pb->timestamp < b->timestamp))
        add("baseline rule for " + r.variable + " reads " + v +
            ", which is not strictly earlier");
      if (intervened.count(v))
        add("baseline rule for " + r.variable + " reads intervened process " + v);
    }
  }

  for (const auto& r : th.schedules) {
    const auto* sc = s.find_schedule(r.module);
    if (!sc) {
      if (s.find_module(r.module))
        add("schedule rule targets intensity-driven module " + r.module);
      else
        add("schedule rule targets unknown module " + r.module);
      continue;
    }
    if (r.times != sc->times)
      add("schedule rule for " + r.module +
          " does not pin the module's decision times exactly");
    for (const auto& d : r.decisions)
      for (const auto& v : d.free_vars()) {
        if (intervened.count(v))
          add("decision rule for " + r.module + " reads intervened process " + v);
        else if (!s.has_name(v))
          add("decision rule for " + r.module + " reads unknown process " + v);
      }
  }

  for (const auto& r : th.intensities) {
    const auto* m = s.find_module(r.module);
    if (!m) {
      if (s.find_schedule(r.module))
        add("intensity rule targets schedule-restricted module " + r.module);
      else
        add("intensity rule targets unknown module " + r.module);
      continue;
    }
    std::set<int> covered;
    for (const auto& mk : r.marks) {
      bool known = false;
      for (const auto& fm : m->marks) known = known || fm.label == mk.label;
      if (!known) add("intensity rule for " + r.module + " names unknown mark label");
      covered.insert(mk.label);
      for (const auto& v : mk.lambda.free_vars()) {
        if (v == r.module) continue;  // own predictable state is allowed
        if (intervened.count(v))
          add("replacement intensity for " + r.module + " reads intervened process " + v);
        else if (!s.has_name(v))
          add("replacement intensity for " + r.module + " reads unknown process " + v);
      }
    }
    if (covered.size() != m->marks.size())
      add("intensity rule for " + r.module + " must cover every mark");
  }
  return rep;
}

ValidationReport validate_dependencies(const ScenarioSpec& s,
                                       const LocalIndependenceGraph& g) {
  ValidationReport rep;
  auto add = [&](const std::string& v) { rep.violations.push_back(v); };

  auto check_deps = [&](const std::string& name, const std::vector<std::string>& deps) {
    if (!g.has_node(name)) {
      add("graph has no node for " + name);
      return;
    }
    const auto par = parents(g, name);
    for (const auto& d : deps)
      if (d != name && !par.count(d))
        add(name + " declares dependency " + d + " without a graph edge " + d + " -> " +
            name);
  };

  for (const auto& b : s.baseline) {
    check_deps(b.name, b.parents);
    if (g.has_node(b.name)) {
      const auto ts = g.timestamp(b.name);
      if (ts.has_value() && *ts != b.timestamp)
        add("graph timestamp for " + b.name + " disagrees with the scenario");
    }
  }
  for (const auto& m : s.modules) check_deps(m.name, m.deps);
  for (const auto& sc : s.schedules) check_deps(sc.name, sc.deps);
  return rep;
}

PathCheck validate_path(const Path& path, const ScenarioSpec& s) {
  PathCheck out = validate_path_structure(path);
  auto add = [&](const std::string& v) { out.violations.push_back(v); };

  for (const auto& b : s.baseline) {
    const auto it = path.baseline.find(b.name);
    if (it == path.baseline.end()) {
      if (!b.latent) add("missing baseline value for " + b.name);
      continue;
    }
    if (std::find(b.alphabet.begin(), b.alphabet.end(), it->second) == b.alphabet.end())
      add("baseline " + b.name + " has value outside its alphabet");
  }
  for (const auto& [var, val] : path.baseline) {
    (void)val;
    if (!s.find_baseline(var)) add("unknown baseline variable " + var);
  }

  std::map<std::string, int> jumps_seen;
  for (const auto& ev : path.events) {
    if (!(ev.time > 0.0) || ev.time > s.horizon) {
      add("event outside (0, horizon] in module " + ev.module);
      continue;
    }
    if (const auto* m = s.find_module(ev.module)) {
      const MarkSpec* mk = nullptr;
      for (const auto& cand : m->marks)
        if (cand.label == ev.mark) mk = &cand;
      if (!mk) {
        add("module " + ev.module + ": unknown mark label " + std::to_string(ev.mark));
      } else if (mk->delta != ev.delta) {
        add("module " + ev.module + ": delta disagrees with mark " +
            std::to_string(ev.mark));
      }
      if (m->absorbing && jumps_seen[ev.module] > 0)
        add("absorbing module " + ev.module + " jumps after absorption");
      jumps_seen[ev.module] += 1;
    } else if (const auto* sc = s.find_schedule(ev.module)) {
      if (std::find(sc->times.begin(), sc->times.end(), ev.time) == sc->times.end())
        add("schedule module " + ev.module + " jumps off-schedule at t=" +
            format_double(ev.time));
      if (ev.mark != sc->mark || ev.delta != sc->delta)
        add("schedule module " + ev.module + ": mark or delta mismatch");
    } else {
      add("event in unknown module " + ev.module);
    }
  }
  return out;
}

}  // namespace evcf
