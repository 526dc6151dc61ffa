#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "evcf/rng.hpp"
#include "evcf/step_function.hpp"

using namespace evcf;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// reference evaluation by linear scan
double naive_value(double initial, const std::vector<double>& ts,
                   const std::vector<double>& sz, double t, bool left) {
  double v = initial;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (left ? ts[i] < t : ts[i] <= t) v += sz[i];
  return v;
}
}  // namespace

TEST_CASE("value, left limit, jump lookup") {
  StepFunction f(1.0, {0.5, 1.0, 2.0}, {0.25, -0.5, 2.0});
  CHECK(f.initial_value() == 1.0);
  CHECK(f.value(0.0) == 1.0);
  CHECK(f.value(0.5) == 1.25);
  CHECK(f.left_value(0.5) == 1.0);
  CHECK(f.left_value(0.7) == 1.25);
  CHECK(f.value(1.0) == 0.75);
  CHECK(f.value(1.9) == 0.75);
  CHECK(f.final_value() == 2.75);
  CHECK(f.jump_at(1.0) == -0.5);
  CHECK(f.jump_at(1.5) == 0.0);
}

TEST_CASE("binary search agrees with linear scan on random functions") {
  Philox rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> ts, sz;
    double t = 0.0;
    const int m = 1 + int(rng.next_u64() % 40);
    for (int i = 0; i < m; ++i) {
      t += rng.exponential(1.0);
      ts.push_back(t);
      sz.push_back(rng.uniform01() - 0.5);
    }
    StepFunction f(0.0, ts, sz);
    for (int q = 0; q < 100; ++q) {
      const double probe = rng.uniform01() * (t + 1.0);
      CHECK(f.value(probe) == doctest::Approx(naive_value(0, ts, sz, probe, false)));
      CHECK(f.left_value(probe) == doctest::Approx(naive_value(0, ts, sz, probe, true)));
    }
  }
}

TEST_CASE("add_jump merges at the last time and rejects earlier times") {
  StepFunction f(0.0);
  f.add_jump(1.0, 0.5);
  f.add_jump(2.0, 0.25);
  f.add_jump(2.0, 0.25);  // merge
  CHECK(f.jump_count() == 2);
  CHECK(f.jump_at(2.0) == 0.5);
  CHECK(f.final_value() == 1.0);
  CHECK_THROWS(f.add_jump(1.5, 1.0));
}

TEST_CASE("minus infinity jumps are absorbing on the value scale") {
  StepFunction logw(0.0, {0.5, 1.0}, {-kInf, 0.3});
  CHECK(logw.value(0.25) == 0.0);
  CHECK(logw.value(0.75) == -kInf);
  CHECK(logw.value(1.5) == -kInf);  // -inf + 0.3 stays -inf
  CHECK(std::exp(logw.value(1.5)) == 0.0);
}

TEST_CASE("scaled and sum") {
  StepFunction f(1.0, {1.0, 2.0}, {2.0, -1.0});
  const StepFunction g = f.scaled(-0.5);
  CHECK(g.initial_value() == -0.5);
  CHECK(g.value(1.5) == doctest::Approx(-1.5));

  StepFunction h(0.5, {0.5, 2.0}, {1.0, 1.0});
  const std::vector<StepFunction> fns = {f, h};
  const StepFunction s = StepFunction::sum(fns);
  for (double t : {0.0, 0.5, 0.9, 1.0, 1.7, 2.0, 3.0})
    CHECK(s.value(t) == doctest::Approx(f.value(t) + h.value(t)));
  CHECK(s.jump_count() == 3);  // {0.5, 1.0, 2.0}
}
