#include "evcf/events.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evcf/numeric.hpp"

namespace evcf {

int state_at(const Path& path, const std::string& name, TimePoint t, Side side) {
  const auto bit = path.baseline.find(name);
  if (bit != path.baseline.end()) return bit->second;
  int s = 0;
  for (const auto& ev : path.events) {
    if (ev.module != name) continue;
    if (ev.time < t || (side == Side::right && ev.time == t)) s += ev.delta;
    if (ev.time > t) break;
  }
  return s;
}

StepFunction counting_process(const Path& path, const std::string& module) {
  StepFunction n(0.0);
  for (const auto& ev : path.events)
    if (ev.module == module) n.add_jump(ev.time, 1.0);
  return n;
}

PathCheck validate_path_structure(const Path& path) {
  PathCheck out;
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    const auto& ev = path.events[i];
    if (ev.delta == 0)
      out.violations.push_back("event with zero delta in module " + ev.module);
    if (i == 0) continue;
    const auto& prev = path.events[i - 1];
    if (ev.time < prev.time)
      out.violations.push_back("event times not nondecreasing at index " +
                               std::to_string(i));
    else if (ev.time == prev.time)
      out.violations.push_back("simultaneous events at t=" + format_double(ev.time) +
                               " (modules " + prev.module + ", " + ev.module + ")");
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw std::runtime_error("bad " + what + " value: '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("bad " + what + " value: '" + s + "'");
  return v;
}

}  // namespace

std::string baseline_sibling(const std::string& events_csv) {
  const auto pos = events_csv.rfind(".csv");
  if (pos != std::string::npos && pos == events_csv.size() - 4)
    return events_csv.substr(0, pos) + ".baseline.csv";
  return events_csv + ".baseline.csv";
}

void write_cohort(const Cohort& cohort, const std::string& events_csv,
                  const std::string& baseline_csv) {
  std::ofstream ev(events_csv);
  if (!ev) throw std::runtime_error("cannot write " + events_csv);
  ev << "# scenario_digest=" << cohort.scenario_digest << "\n";
  ev << "# seed=" << cohort.seed << "\n";
  ev << "# regime=" << cohort.regime << "\n";
  ev << "# n=" << cohort.paths.size() << "\n";
  ev << "id,time,module,mark,delta\n";
  for (const auto& p : cohort.paths)
    for (const auto& e : p.events)
      ev << p.id << ',' << format_double(e.time) << ',' << e.module << ',' << e.mark
         << ',' << e.delta << "\n";

  std::ofstream bl(baseline_csv);
  if (!bl) throw std::runtime_error("cannot write " + baseline_csv);
  bl << "id,variable,value\n";
  for (const auto& p : cohort.paths)
    for (const auto& [var, val] : p.baseline) bl << p.id << ',' << var << ',' << val << "\n";
}

Cohort read_cohort(const std::string& events_csv, const std::string& baseline_csv) {
  std::ifstream ev(events_csv);
  if (!ev) throw std::runtime_error("cannot read " + events_csv);
  Cohort out;
  std::size_t declared_n = 0;
  std::map<std::string, std::size_t> index;
  auto path_of = [&](const std::string& id) -> Path& {
    auto [it, inserted] = index.try_emplace(id, out.paths.size());
    if (inserted) {
      out.paths.emplace_back();
      out.paths.back().id = id;
    }
    return out.paths[it->second];
  };

  // Baseline rows first: they exist for every individual, so they fix the
  // cohort order even for paths without events.
  std::ifstream bl(baseline_csv);
  if (!bl) throw std::runtime_error("cannot read " + baseline_csv);
  std::string line;
  bool header_seen = false;
  while (std::getline(bl, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "id,variable,value")
        throw std::runtime_error("unexpected baseline header: '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw std::runtime_error("bad baseline row: '" + line + "'");
    path_of(f[0]).baseline[f[1]] = parse_int(f[2], "value");
  }

  header_seen = false;
  while (std::getline(ev, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        key.erase(key.find_last_not_of(' ') + 1);
        const std::string val = line.substr(eq + 1);
        if (key == "scenario_digest") out.scenario_digest = val;
        else if (key == "seed") out.seed = std::stoull(val);
        else if (key == "regime") out.regime = val;
        else if (key == "n") declared_n = std::stoull(val);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "id,time,module,mark,delta")
        throw std::runtime_error("unexpected events header: '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("bad events row: '" + line + "'");
    Event e;
    e.time = parse_double(f[1], "time");
    e.module = f[2];
    e.mark = parse_int(f[3], "mark");
    e.delta = parse_int(f[4], "delta");
    path_of(f[0]).events.push_back(e);
  }

  if (declared_n > 0 && out.paths.size() != declared_n)
    throw std::runtime_error(
        "cohort declares n=" + std::to_string(declared_n) + " but only " +
        std::to_string(out.paths.size()) +
        " individuals have rows; paths without baseline or events cannot be "
        "reconstructed from CSV");

  for (auto& p : out.paths) {
    std::stable_sort(p.events.begin(), p.events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    const auto check = validate_path_structure(p);
    if (!check.ok())
      throw std::runtime_error("path " + p.id + ": " + check.violations.front());
  }
  return out;
}

}  // namespace evcf
