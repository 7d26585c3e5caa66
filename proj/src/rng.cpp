#include "ridge/rng.hpp"

#include <cmath>
#include <numbers>

namespace ridge {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Block single_round(Philox4x32::Block x, std::uint32_t k0,
                                      std::uint32_t k1) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, x[0], hi0, lo0);
  mulhilo(kMul1, x[2], hi1, lo1);
  return {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
}

}  // namespace

Philox4x32::Block Philox4x32::round10(Block ctr, std::uint32_t k0,
                                      std::uint32_t k1) {
  for (int r = 0; r < 9; ++r) {
    ctr = single_round(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return single_round(ctr, k0, k1);
}

RngStream::RngStream(SeedSpec seed)
    : key0_(static_cast<std::uint32_t>(seed.master_seed)),
      key1_(static_cast<std::uint32_t>(seed.master_seed >> 32)),
      stream_lo_(static_cast<std::uint32_t>(seed.stream_index)),
      stream_hi_(static_cast<std::uint32_t>(seed.stream_index >> 32)) {}

void RngStream::refill() {
  Philox4x32::Block ctr = {static_cast<std::uint32_t>(block_),
                           static_cast<std::uint32_t>(block_ >> 32),
                           stream_lo_, stream_hi_};
  buf_ = Philox4x32::round10(ctr, key0_, key1_);
  ++block_;
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t lo = next_u32();
  std::uint64_t hi = next_u32();
  return lo | (hi << 32);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

}  // namespace ridge
