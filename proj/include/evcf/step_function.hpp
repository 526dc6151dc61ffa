#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evcf {

// Right-continuous piecewise-constant function on [0, inf) with finitely many
// jumps: value(t) = initial + sum of jump sizes at times <= t.
// Jump times are kept strictly increasing; adding a jump at the current last
// time merges sizes. Sizes may be any double including -inf (used for
// log-weights that hit a hard zero).
class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double initial) : initial_(initial) {}
  StepFunction(double initial, std::vector<double> times, std::vector<double> sizes);

  double initial_value() const { return initial_; }
  double value(double t) const;
  double left_value(double t) const;  // limit from below
  double final_value() const;
  double jump_at(double t) const;  // 0 if t is not a jump time

  std::span<const double> jump_times() const { return times_; }
  std::span<const double> jump_sizes() const { return sizes_; }
  std::size_t jump_count() const { return times_.size(); }

  // t must be >= the last jump time; equal times merge
  void add_jump(double t, double size);

  StepFunction scaled(double c) const;

  // pointwise sum; jump sets are merged
  static StepFunction sum(std::span<const StepFunction> fns);

 private:
  // index of first jump time > t (right limit) or >= t (left limit)
  std::size_t upper_index(double t, bool strict) const;

  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> sizes_;
  std::vector<double> cum_;  // cum_[i] = initial_ + sizes_[0..i]
};

}  // namespace evcf
