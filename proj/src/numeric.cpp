#include "evcf/numeric.hpp"

#include <cstdio>

namespace evcf {

namespace {

double pairwise_rec(const double* xs, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_rec(xs, half) + pairwise_rec(xs + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> xs) {
  return pairwise_rec(xs.data(), xs.size());
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  out.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

double effective_sample_size(std::span<const double> w) {
  if (w.empty()) return 0.0;
  std::vector<double> sq(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) sq[i] = w[i] * w[i];
  const double s1 = pairwise_sum(w);
  const double s2 = pairwise_sum(sq);
  if (s2 == 0.0) return 0.0;
  return s1 * s1 / s2;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

}  // namespace evcf
