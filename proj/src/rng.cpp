#include "evcf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace evcf {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> round_once(const std::array<std::uint32_t, 4>& x,
                                               std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k0,
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k1,
          static_cast<std::uint32_t>(p0)};
}

}  // namespace

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    ctr = round_once(ctr, k0, k1);
  }
  return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void Philox::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const auto out = block(ctr, key_);
  buf_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buf_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  avail_ = 2;
  ++block_;
}

std::uint64_t Philox::next_u64() {
  if (avail_ == 0) refill();
  return buf_[--avail_];
}

double Philox::uniform01() {
  // 53 random bits mapped to (0, 1]; excluding 0 keeps log() finite
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
}

double Philox::exponential(double rate) {
  return -std::log(uniform01()) / rate;
}

bool Philox::bernoulli(double p) { return uniform01() <= p; }

std::size_t Philox::categorical(const double* probs, std::size_t k) {
  if (k == 0) throw std::invalid_argument("categorical: empty distribution");
  const double u = uniform01();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    cum += probs[i];
    if (u <= cum) return i;
  }
  return k - 1;
}

}  // namespace evcf
