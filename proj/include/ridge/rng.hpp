#pragma once

#include <array>
#include <cstdint>

namespace ridge {

// Identifies one logical random stream.  (master_seed, stream_index) fully
// determines every draw, independent of how work is split across workers.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
// Key = master_seed, counter = (block, stream_index).  Each block yields
// four 32-bit words.  No state is shared between streams, so trials can be
// distributed over workers without coordination and replayed exactly.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block round10(Block ctr, std::uint32_t k0, std::uint32_t k1);
};

class RngStream {
 public:
  explicit RngStream(SeedSpec seed);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // uniform on [0,1) with 53 random bits
  double uniform();
  // standard normal via Box-Muller (pairs, one cached)
  double normal();

 private:
  void refill();

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  Philox4x32::Block buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ridge
