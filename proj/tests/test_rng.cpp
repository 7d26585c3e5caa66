#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ridge/rng.hpp"

using ridge::Philox4x32;
using ridge::RngStream;
using ridge::SeedSpec;

TEST_CASE("Philox4x32-10 known-answer vectors", "[rng]") {
  // Reference vectors for the published 10-round constants.
  const Philox4x32::Block zeros =
      Philox4x32::round10({0u, 0u, 0u, 0u}, 0u, 0u);
  CHECK(zeros[0] == 0x6627e8d5u);
  CHECK(zeros[1] == 0xe169c58du);
  CHECK(zeros[2] == 0xbc57ac4cu);
  CHECK(zeros[3] == 0x9b00dbd8u);

  const Philox4x32::Block ones = Philox4x32::round10(
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, 0xffffffffu,
      0xffffffffu);
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);

  const Philox4x32::Block pi = Philox4x32::round10(
      {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, 0xa4093822u,
      0x299f31d0u);
  CHECK(pi[0] == 0xd16cfe09u);
  CHECK(pi[1] == 0x94fdccebu);
  CHECK(pi[2] == 0x5001e420u);
  CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("identical seed specs replay the exact sequence", "[rng]") {
  RngStream a({42, 7});
  RngStream b({42, 7});
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u32() == b.next_u32());
  for (int i = 0; i < 100; ++i) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("different stream indices give different sequences", "[rng]") {
  RngStream a({42, 0});
  RngStream b({42, 1});
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u32() == b.next_u32()) ++same;
  CHECK(same <= 1);
}

TEST_CASE("uniform draws live in [0,1) with the right mean", "[rng]") {
  RngStream s({2024, 0});
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("normal draws have unit variance and zero mean", "[rng]") {
  RngStream s({99, 3});
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("separate streams are uncorrelated", "[rng]") {
  RngStream a({5, 11});
  RngStream b({5, 12});
  const int n = 100000;
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform() - 0.5;
    const double y = b.uniform() - 0.5;
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double r = cov / std::sqrt((saa / n) * (sbb / n));
  CHECK(std::abs(r) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("u64 draws splice two u32 words little-endian", "[rng]") {
  RngStream a({77, 4});
  RngStream b({77, 4});
  const std::uint64_t lo = a.next_u32();
  const std::uint64_t hi = a.next_u32();
  CHECK(b.next_u64() == (lo | (hi << 32)));
}
