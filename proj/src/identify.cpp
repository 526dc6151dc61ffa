#include "evcf/identify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "evcf/numeric.hpp"

namespace evcf {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("identify: " + msg); }

std::string cell_text(const std::string& variable, const std::vector<std::string>& parents,
                      const std::vector<int>& given) {
  std::string s = "P(" + variable;
  if (!parents.empty()) {
    s += " | ";
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (i) s += ", ";
      s += parents[i] + "=" + std::to_string(given[i]);
    }
  }
  return s + ")";
}

std::size_t alphabet_index(const std::vector<int>& alphabet, int value, const std::string& ctx) {
  const auto it = std::find(alphabet.begin(), alphabet.end(), value);
  if (it == alphabet.end())
    fail(ctx + ": value " + std::to_string(value) + " is outside the alphabet");
  return static_cast<std::size_t>(it - alphabet.begin());
}

// odometer over the product of the given alphabets; invokes fn(values)
template <typename Fn>
void enumerate_product(const std::vector<const std::vector<int>*>& alphabets, Fn&& fn) {
  std::vector<std::size_t> idx(alphabets.size(), 0);
  std::vector<int> values(alphabets.size());
  while (true) {
    for (std::size_t i = 0; i < alphabets.size(); ++i) values[i] = (*alphabets[i])[idx[i]];
    fn(values);
    std::size_t i = alphabets.size();
    while (i > 0) {
      --i;
      if (++idx[i] < alphabets[i]->size()) break;
      idx[i] = 0;
      if (i == 0) return;
    }
    if (alphabets.empty()) return;
  }
}

std::size_t checked_state_count(const std::vector<const std::vector<int>*>& alphabets) {
  std::size_t total = 1;
  for (const auto* a : alphabets) {
    total *= a->size();
    if (total > 1'000'000) fail("joint enumeration exceeds 1e6 assignments");
  }
  return total;
}

}  // namespace

bool ConditionalTable::supported(const std::vector<int>& given) const {
  if (std::find(unsupported.begin(), unsupported.end(), given) != unsupported.end())
    return false;
  for (const auto& r : rows)
    if (r.given == given) return true;
  return false;  // outside the enumerated cells: no support either
}

const std::vector<double>& ConditionalTable::row(const std::vector<int>& given) const {
  if (std::find(unsupported.begin(), unsupported.end(), given) != unsupported.end())
    fail("positivity: no support for cell " + cell_text(variable, parents, given));
  for (const auto& r : rows)
    if (r.given == given) return r.p;
  fail("table for " + variable + ": no row for " + cell_text(variable, parents, given));
}

double ConditionalTable::prob(int value, const std::vector<int>& given) const {
  return row(given)[alphabet_index(alphabet, value, "table for " + variable)];
}

const BaselineSpec* JointModel::find(const std::string& name) const {
  for (const auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

std::vector<std::string> JointModel::observed_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables)
    if (!v.latent) out.push_back(v.name);
  return out;
}

JointModel parse_joint_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("variables") || !j["variables"].is_array() || j["variables"].empty())
    fail("model needs a nonempty 'variables' array");
  // reuse the scenario baseline parser (same schema and validation)
  json wrapper;
  wrapper["horizon"] = 1.0;
  wrapper["baseline"] = j["variables"];
  ScenarioSpec s;
  try {
    s = parse_scenario(wrapper.dump());
  } catch (const std::exception& e) {
    std::string w = e.what();
    if (const std::string prefix = "scenario: "; w.rfind(prefix, 0) == 0) w = w.substr(prefix.size());
    fail(w);
  }
  JointModel m;
  m.variables = std::move(s.baseline);
  return m;
}

std::string print_joint_model(const JointModel& m) {
  json j;
  j["variables"] = json::array();
  for (const auto& v : m.variables) {
    json jv;
    jv["name"] = v.name;
    jv["t"] = v.timestamp;
    jv["alphabet"] = v.alphabet;
    jv["latent"] = v.latent;
    jv["parents"] = v.parents;
    jv["table"] = json::array();
    for (const auto& r : v.table) {
      json jr;
      jr["given"] = r.given;
      jr["p"] = r.p;
      jv["table"].push_back(jr);
    }
    j["variables"].push_back(jv);
  }
  return j.dump(2) + "\n";
}

JointModel read_joint_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_joint_model(ss.str());
}

JointModel joint_from_scenario(const ScenarioSpec& s) {
  if (!s.modules.empty() || !s.schedules.empty())
    fail("scenario has follow-up modules; a joint model needs baseline variables only");
  JointModel m;
  m.variables = s.baseline;
  return m;
}

namespace {

// full-assignment probability under the model, values indexed by position
double joint_prob(const JointModel& m, const std::map<std::string, std::size_t>& pos,
                  const std::vector<int>& values) {
  double p = 1.0;
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    std::vector<int> given;
    given.reserve(v.parents.size());
    for (const auto& pn : v.parents) given.push_back(values[pos.at(pn)]);
    p *= v.row(given)[alphabet_index(v.alphabet, values[i], "variable " + v.name)];
  }
  return p;
}

void check_fit_request(const std::string& variable, const std::vector<std::string>& parents) {
  std::set<std::string> seen{variable};
  for (const auto& pn : parents)
    if (!seen.insert(pn).second) fail("fit for " + variable + ": repeated name " + pn);
}

}  // namespace

ConditionalTable fit_tables(const JointModel& m, const std::string& variable,
                            const std::vector<std::string>& parents) {
  check_fit_request(variable, parents);
  const auto* var = m.find(variable);
  if (!var) fail("fit: unknown variable " + variable);
  // identification may only go through observed conditionals: a latent
  // variable can be marginalized over, never conditioned on or targeted
  if (var->latent) fail("fit: " + variable + " is latent and cannot be fitted");
  std::vector<const BaselineSpec*> par;
  for (const auto& pn : parents) {
    const auto* p = m.find(pn);
    if (!p) fail("fit: unknown variable " + pn);
    if (p->latent) fail("fit: parent " + pn + " is latent and cannot be conditioned on");
    par.push_back(p);
  }

  std::map<std::string, std::size_t> pos;
  std::vector<const std::vector<int>*> alphabets;
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    pos[m.variables[i].name] = i;
    alphabets.push_back(&m.variables[i].alphabet);
  }
  checked_state_count(alphabets);

  // joint mass of (parent combo, variable value) and of the parent combo alone
  std::map<std::vector<int>, std::vector<double>> numer;
  std::map<std::vector<int>, double> denom;
  enumerate_product(alphabets, [&](const std::vector<int>& values) {
    const double p = joint_prob(m, pos, values);
    std::vector<int> given;
    given.reserve(par.size());
    for (const auto* pb : par) given.push_back(values[pos.at(pb->name)]);
    auto [it, fresh] = numer.try_emplace(given, std::vector<double>(var->alphabet.size(), 0.0));
    it->second[alphabet_index(var->alphabet, values[pos.at(variable)], variable)] += p;
    denom[given] += p;
  });

  ConditionalTable tbl;
  tbl.variable = variable;
  tbl.parents = parents;
  tbl.alphabet = var->alphabet;
  std::vector<const std::vector<int>*> parent_alphabets;
  for (const auto* pb : par) parent_alphabets.push_back(&pb->alphabet);
  enumerate_product(parent_alphabets, [&](const std::vector<int>& given) {
    TableRow row;
    row.given = given;
    const double d = denom.at(given);
    if (d <= 0.0) {
      row.p.assign(var->alphabet.size(), 0.0);
      tbl.unsupported.push_back(given);
    } else {
      for (double n : numer.at(given)) row.p.push_back(n / d);
    }
    tbl.rows.push_back(std::move(row));
  });
  return tbl;
}

ConditionalTable fit_tables(const Cohort& cohort, const std::string& variable,
                            const std::vector<std::string>& parents) {
  check_fit_request(variable, parents);
  if (cohort.paths.empty()) fail("fit: empty cohort");

  std::vector<std::string> all{variable};
  all.insert(all.end(), parents.begin(), parents.end());
  std::map<std::string, std::set<int>> observed;
  for (const auto& path : cohort.paths)
    for (const auto& name : all) {
      const auto it = path.baseline.find(name);
      if (it == path.baseline.end()) fail("path " + path.id + " lacks baseline value " + name);
      observed[name].insert(it->second);
    }

  ConditionalTable tbl;
  tbl.variable = variable;
  tbl.parents = parents;
  tbl.alphabet.assign(observed[variable].begin(), observed[variable].end());

  std::map<std::vector<int>, std::vector<double>> counts;
  std::map<std::vector<int>, double> totals;
  for (const auto& path : cohort.paths) {
    std::vector<int> given;
    given.reserve(parents.size());
    for (const auto& pn : parents) given.push_back(path.baseline.at(pn));
    auto [it, fresh] = counts.try_emplace(given, std::vector<double>(tbl.alphabet.size(), 0.0));
    it->second[alphabet_index(tbl.alphabet, path.baseline.at(variable), variable)] += 1.0;
    totals[given] += 1.0;
  }

  std::vector<std::vector<int>> parent_values;
  std::vector<const std::vector<int>*> parent_alphabets;
  for (const auto& pn : parents) {
    parent_values.emplace_back(observed[pn].begin(), observed[pn].end());
  }
  for (const auto& vals : parent_values) parent_alphabets.push_back(&vals);
  enumerate_product(parent_alphabets, [&](const std::vector<int>& given) {
    TableRow row;
    row.given = given;
    const auto it = totals.find(given);
    if (it == totals.end()) {
      row.p.assign(tbl.alphabet.size(), 0.0);
      tbl.unsupported.push_back(given);
    } else {
      for (double c : counts.at(given)) row.p.push_back(c / it->second);
    }
    tbl.rows.push_back(std::move(row));
  });
  return tbl;
}

int DiscreteRule::enforced(const std::map<std::string, int>& assignment) const {
  if (constant) return *constant;
  const auto it = assignment.find(source);
  if (it == assignment.end()) fail("rule for " + variable + " reads unassigned " + source);
  const auto mapped = value_map.find(it->second);
  if (mapped == value_map.end())
    fail("rule for " + variable + " has no mapping for " + source + "=" +
         std::to_string(it->second));
  return mapped->second;
}

const DiscreteRule* DiscreteIntervention::find(const std::string& variable) const {
  for (const auto& r : rules)
    if (r.variable == variable) return &r;
  return nullptr;
}

DiscreteRule parse_discrete_rule(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  DiscreteRule r;
  if (!j.contains("variable") || !j["variable"].is_string()) fail("rule needs a 'variable'");
  r.variable = j["variable"].get<std::string>();
  const bool has_const = j.contains("constant");
  const bool has_map = j.contains("source") || j.contains("map");
  if (has_const == has_map)
    fail("rule for " + r.variable + " needs either 'constant' or 'source'+'map'");
  if (has_const) {
    r.constant = j["constant"].get<int>();
  } else {
    if (!j.contains("source") || !j.contains("map"))
      fail("rule for " + r.variable + " needs both 'source' and 'map'");
    r.source = j["source"].get<std::string>();
    for (const auto& [key, val] : j["map"].items()) {
      try {
        r.value_map[std::stoi(key)] = val.get<int>();
      } catch (const std::exception&) {
        fail("rule for " + r.variable + ": map key '" + key + "' is not an integer");
      }
    }
    if (r.value_map.empty()) fail("rule for " + r.variable + ": empty map");
  }
  return r;
}

DiscreteRule read_discrete_rule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_discrete_rule(ss.str());
}

double gformula_direct_effect(const ConditionalTable& cov_given_treat,
                              const ConditionalTable& out_given_all, int a,
                              const DiscreteRule& k_rule, const std::map<int, double>& h) {
  if (cov_given_treat.parents.size() != 1)
    fail("covariate table must condition on the treatment alone");
  const std::string& treat = cov_given_treat.parents[0];
  const std::string& cov = cov_given_treat.variable;

  const auto& out_parents = out_given_all.parents;
  if (out_parents.size() != 3)
    fail("outcome table must condition on treatment, covariate and the enforced variable");
  std::size_t pos_treat = 3, pos_cov = 3, pos_k = 3;
  for (std::size_t i = 0; i < 3; ++i) {
    if (out_parents[i] == treat) pos_treat = i;
    else if (out_parents[i] == cov) pos_cov = i;
    else if (out_parents[i] == k_rule.variable) pos_k = i;
  }
  if (pos_treat == 3 || pos_cov == 3 || pos_k == 3)
    fail("outcome table parents must be {" + treat + ", " + cov + ", " + k_rule.variable + "}");

  const auto& p_cov = cov_given_treat.row({a});  // throws on unsupported arm
  double total = 0.0;
  for (std::size_t j = 0; j < cov_given_treat.alphabet.size(); ++j) {
    const double pl = p_cov[j];
    if (pl == 0.0) continue;  // zero-mass branch: never constrains positivity
    const int l = cov_given_treat.alphabet[j];
    const int k = k_rule.enforced({{treat, a}, {cov, l}});
    std::vector<int> given(3);
    given[pos_treat] = a;
    given[pos_cov] = l;
    given[pos_k] = k;
    const auto& p_out = out_given_all.row(given);
    for (std::size_t jb = 0; jb < out_given_all.alphabet.size(); ++jb) {
      const auto hw = h.find(out_given_all.alphabet[jb]);
      if (hw != h.end()) total += pl * hw->second * p_out[jb];
    }
  }
  return total;
}

double relative_direct_risk(const ConditionalTable& cov_given_treat,
                            const ConditionalTable& out_given_all, int a1, int a0,
                            const DiscreteRule& k_rule) {
  const std::map<int, double> h{{1, 1.0}};
  const double r1 = gformula_direct_effect(cov_given_treat, out_given_all, a1, k_rule, h);
  const double r0 = gformula_direct_effect(cov_given_treat, out_given_all, a0, k_rule, h);
  if (!(r0 > 0.0)) fail("reference arm has zero risk; ratio undefined");
  return r1 / r0;
}

JointDist truncated_factorization_oracle(const JointModel& m, const DiscreteIntervention& theta,
                                         std::span<const std::string> order) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < m.variables.size(); ++i) pos[m.variables[i].name] = i;

  // rule sanity: known targets, one rule each, sources earlier and untouched,
  // enforced values inside the target alphabet
  std::set<std::string> ruled;
  for (const auto& r : theta.rules) {
    const auto* v = m.find(r.variable);
    if (!v) fail("rule targets unknown variable " + r.variable);
    if (!ruled.insert(r.variable).second) fail("two rules for " + r.variable);
    const auto in_alphabet = [&](int value) {
      return std::find(v->alphabet.begin(), v->alphabet.end(), value) != v->alphabet.end();
    };
    if (r.constant) {
      if (!in_alphabet(*r.constant))
        fail("rule for " + r.variable + " enforces a value outside its alphabet");
    } else {
      const auto* src = m.find(r.source);
      if (!src) fail("rule for " + r.variable + " reads unknown variable " + r.source);
      if (!(src->timestamp < v->timestamp))
        fail("rule for " + r.variable + " reads " + r.source + " which is not strictly earlier");
      for (const auto& [from, to] : r.value_map)
        if (!in_alphabet(to))
          fail("rule for " + r.variable + " enforces a value outside its alphabet");
    }
  }
  for (const auto& r : theta.rules)
    if (!r.constant && ruled.count(r.source))
      fail("rule for " + r.variable + " reads intervened variable " + r.source);

  // enumeration order: default model order, else a permutation of it
  std::vector<std::string> names;
  if (order.empty()) {
    for (const auto& v : m.variables) names.push_back(v.name);
  } else {
    names.assign(order.begin(), order.end());
    std::set<std::string> given(names.begin(), names.end());
    if (names.size() != m.variables.size() || given.size() != names.size())
      fail("order must be a permutation of the model variables");
    for (const auto& n : names)
      if (!pos.count(n)) fail("order names unknown variable " + n);
  }

  std::vector<std::size_t> order_pos;
  std::vector<const std::vector<int>*> alphabets;
  for (const auto& n : names) {
    order_pos.push_back(pos.at(n));
    alphabets.push_back(&m.variables[pos.at(n)].alphabet);
  }
  checked_state_count(alphabets);

  std::vector<std::size_t> observed_pos;
  for (std::size_t i = 0; i < m.variables.size(); ++i)
    if (!m.variables[i].latent) observed_pos.push_back(i);

  JointDist dist;
  double mass = 0.0;
  std::vector<int> values(m.variables.size());
  enumerate_product(alphabets, [&](const std::vector<int>& ordered) {
    for (std::size_t i = 0; i < ordered.size(); ++i) values[order_pos[i]] = ordered[i];
    std::map<std::string, int> assign;
    for (std::size_t i = 0; i < m.variables.size(); ++i) assign[m.variables[i].name] = values[i];
    double w = 1.0;
    for (std::size_t i = 0; i < m.variables.size() && w != 0.0; ++i) {
      const auto& v = m.variables[i];
      if (const auto* rule = theta.find(v.name)) {
        w *= values[i] == rule->enforced(assign) ? 1.0 : 0.0;
      } else {
        std::vector<int> given;
        given.reserve(v.parents.size());
        for (const auto& pn : v.parents) given.push_back(values[pos.at(pn)]);
        w *= v.row(given)[alphabet_index(v.alphabet, values[i], "variable " + v.name)];
      }
    }
    if (w == 0.0) return;
    mass += w;
    std::vector<int> key;
    key.reserve(observed_pos.size());
    for (std::size_t i : observed_pos) key.push_back(values[i]);
    dist[key] += w;
  });

  if (std::abs(mass - 1.0) > 1e-12)
    fail("truncated law has mass " + format_double(mass) +
         "; the intervention is incompatible with the model");
  return dist;
}

}  // namespace evcf
