#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "evcf/events.hpp"
#include "evcf/study.hpp"

namespace fs = std::filesystem;

namespace {
fs::path work_dir() {
  const fs::path d = fs::path(EVCF_TEST_TMP) / "cli";
  fs::create_directories(d);
  return d;
}

std::string asset(const std::string& name) {
  return (evcf::asset_dir() / name).string();
}

int run(const std::string& args) {
  const std::string cmd = std::string(EVCF_CLI_PATH) + " " + args + " >" +
                          (work_dir() / "stdout.txt").string() + " 2>" +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string captured(const char* which = "stdout.txt") {
  std::ifstream in(work_dir() / which);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_CASE("cli: simulate -> weights -> estimators round trip") {
  const std::string cohort = (work_dir() / "cohort.csv").string();
  CHECK(run("simulate --scenario " + asset("dynamic_scenario.json") +
            " --n 400 --seed 5 --out " + cohort) == 0);
  const evcf::Cohort c = evcf::read_cohort(cohort, evcf::baseline_sibling(cohort));
  CHECK(c.paths.size() == 400);

  const std::string wcsv = (work_dir() / "weights.csv").string();
  CHECK(run("weights --scenario " + asset("dynamic_scenario.json") + " --intervene " +
            asset("theta1.json") + " --cohort " + cohort + " --out " + wcsv) == 0);
  std::ifstream win(wcsv);
  std::string header;
  std::getline(win, header);
  CHECK(header == "id,t,log_w_total,log_w_A,log_w_K");

  const std::string acsv = (work_dir() / "aalen.csv").string();
  CHECK(run("estimate-aalen --cohort " + cohort +
            " --covariates 1,A,L,Kminus --censor C --out " + acsv) == 0);
  std::ifstream ain(acsv);
  std::getline(ain, header);
  CHECK(header == "t,coefficient,value,flag");

  const std::string gcsv = (work_dir() / "gcde.csv").string();
  CHECK(run("estimate-gcde --cohort " + cohort + " --intervene " + asset("theta1.json") +
            " --out " + gcsv) == 0);
  std::ifstream gin(gcsv);
  std::string body((std::istreambuf_iterator<char>(gin)), std::istreambuf_iterator<char>());
  CHECK(body.find("direct_treat") != std::string::npos);
  CHECK(body.find("survival") != std::string::npos);
}

TEST_CASE("cli: graph and positivity checks set exit codes") {
  CHECK(run("check-graph --scenario " + asset("dynamic_scenario.json") + " --graph " +
            asset("dynamic_graph.txt")) == 0);
  CHECK(captured().find("ok:") != std::string::npos);

  // a graph missing edges must be rejected with a nonzero exit
  const fs::path broken = work_dir() / "broken_graph.txt";
  std::ofstream(broken) << "node W t=0\nnode A t=0.1\nnode L t=0.2\nnode K\nnode B\n"
                           "node C\nW -> L\nA -> L\nA -> K\nA -> B\nA -> C\nL -> B\n"
                           "K -> B\nC -> B\n";  // L -> K withheld
  CHECK(run("check-graph --scenario " + asset("dynamic_scenario.json") + " --graph " +
            broken.string()) == 1);

  CHECK(run("check-positivity --scenario " + asset("dynamic_scenario.json") +
            " --intervene " + asset("theta2.json") + " --n 2000 --seed 3") == 0);
  CHECK(captured().find("positivity: PASS") != std::string::npos);
}

TEST_CASE("cli: gformula prints the identified value") {
  CHECK(run("gformula --model " + asset("static_model.json") + " --a 1 --krule " +
            asset("k_rule.json") + " --h B=1") == 0);
  CHECK(captured().substr(0, 5) == "0.475");
}

TEST_CASE("cli: usage errors exit 2, domain errors exit 1") {
  CHECK(run("simulate --scenario nope.json --out x.csv --bogus-flag 1") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("simulate --out x.csv") == 2);  // missing required --scenario

  // well-formed invocation, but the scenario file does not exist
  CHECK(run("simulate --scenario nope.json --n 10 --out " +
            (work_dir() / "x.csv").string()) == 1);
  CHECK(captured("stderr.txt").find("error:") != std::string::npos);

  // validation failure inside the file
  const fs::path bad = work_dir() / "bad_scenario.json";
  std::ofstream(bad) << R"({"horizon": -1, "baseline": [], "modules": [], "schedules": []})";
  CHECK(run("simulate --scenario " + bad.string() + " --n 10 --out " +
            (work_dir() / "y.csv").string()) == 1);

  CHECK(run("--help") == 0);
  CHECK(run("gformula --help") == 0);
}
