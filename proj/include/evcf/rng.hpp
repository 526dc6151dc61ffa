#pragma once

#include <array>
#include <cstdint>

namespace evcf {

// Philox4x32-10 counter-based generator.
//
// Draw k of stream i under seed s is a pure function of (s, i, k), so
// per-individual substreams are reproducible regardless of thread count or
// scheduling order. Key = seed, counter = (block index, stream index).
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform01();               // in (0, 1], never 0
  double exponential(double rate);  // rate > 0
  bool bernoulli(double p);         // P(true) = p up to 2^-53
  // index into cumulative distribution given by probs (sums to ~1)
  std::size_t categorical(const double* probs, std::size_t k);

  // one keyed block, exposed for known-answer tests
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int avail_ = 0;
};

}  // namespace evcf
