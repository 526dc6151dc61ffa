#include "evcf/step_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace evcf {

StepFunction::StepFunction(double initial, std::vector<double> times,
                           std::vector<double> sizes)
    : initial_(initial), times_(std::move(times)), sizes_(std::move(sizes)) {
  if (times_.size() != sizes_.size())
    throw std::invalid_argument("StepFunction: times/sizes length mismatch");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i - 1] < times_[i]))
      throw std::invalid_argument("StepFunction: jump times must be strictly increasing");
  cum_.resize(sizes_.size());
  double acc = initial_;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    acc += sizes_[i];
    cum_[i] = acc;
  }
}

std::size_t StepFunction::upper_index(double t, bool strict) const {
  // strict: first index with times_[i] >= t; else first index with times_[i] > t
  const auto it = strict ? std::lower_bound(times_.begin(), times_.end(), t)
                         : std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin());
}

double StepFunction::value(double t) const {
  const std::size_t i = upper_index(t, false);
  return i == 0 ? initial_ : cum_[i - 1];
}

double StepFunction::left_value(double t) const {
  const std::size_t i = upper_index(t, true);
  return i == 0 ? initial_ : cum_[i - 1];
}

double StepFunction::final_value() const {
  return cum_.empty() ? initial_ : cum_.back();
}

double StepFunction::jump_at(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it != times_.end() && *it == t) return sizes_[it - times_.begin()];
  return 0.0;
}

void StepFunction::add_jump(double t, double size) {
  if (!times_.empty() && t < times_.back())
    throw std::invalid_argument("StepFunction::add_jump: time before last jump");
  if (!times_.empty() && t == times_.back()) {
    sizes_.back() += size;
    cum_.back() += size;
    return;
  }
  times_.push_back(t);
  sizes_.push_back(size);
  cum_.push_back((cum_.size() ? cum_.back() : initial_) + size);
}

StepFunction StepFunction::scaled(double c) const {
  StepFunction out(initial_ * c);
  for (std::size_t i = 0; i < times_.size(); ++i) out.add_jump(times_[i], sizes_[i] * c);
  return out;
}

StepFunction StepFunction::sum(std::span<const StepFunction> fns) {
  double init = 0.0;
  std::vector<double> all_times;
  for (const auto& f : fns) {
    init += f.initial_value();
    all_times.insert(all_times.end(), f.times_.begin(), f.times_.end());
  }
  std::sort(all_times.begin(), all_times.end());
  all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());
  StepFunction out(init);
  for (double t : all_times) {
    double s = 0.0;
    for (const auto& f : fns) s += f.jump_at(t);
    out.add_jump(t, s);
  }
  return out;
}

}  // namespace evcf
