#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evcf {

// Pairwise (cascade) summation. Deterministic for a fixed element order and
// keeps rounding error O(log n) instead of O(n).
double pairwise_sum(std::span<const double> xs);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sd / sqrt(n)
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

// (sum w)^2 / sum w^2; equals n iff all weights are equal.
double effective_sample_size(std::span<const double> w);

// FNV-1a 64-bit, used for content digests of canonical config text.
std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

// printf %.17g: shortest text that round-trips an IEEE double exactly.
std::string format_double(double x);

}  // namespace evcf
