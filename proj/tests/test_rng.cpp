// Random number generator checks: reference outputs for the PCG32 core,
// moment tests for the derived distributions, and the substream packing
// contract that keeps experiment draws independent.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "abjam/rng.hpp"

using namespace abjam;

TEST_CASE("pcg32 reproduces the published reference sequence") {
  // First outputs of the minimal C implementation seeded with (42, 54).
  Pcg32 rng(42, 54);
  const std::uint32_t expect[] = {0xa15c02b7u, 0x7b47f409u, 0xba1d3330u,
                                  0x83d2f293u, 0xbfa4784bu, 0xcbed606eu};
  for (std::uint32_t want : expect) CHECK(rng.next_u32() == want);
}

TEST_CASE("same seed gives the same sequence, different stream diverges") {
  Pcg32 a(123, 9), b(123, 9), c(123, 10);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u32();
    all_equal = all_equal && (va == b.next_u32());
    any_diff = any_diff || (va != c.next_u32());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform values live in [0,1) and have the right moments") {
  Pcg32 rng(2024, 1);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));

  for (int i = 0; i < 10000; ++i) CHECK(rng.uniform_pos() > 0.0);
}

TEST_CASE("gaussian moments") {
  Pcg32 rng(7, 3);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0, sumcube = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
    sumcube += g * g * g;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sumcube / n) < 0.05);
}

TEST_CASE("circular complex gaussian has unit power split across parts") {
  Pcg32 rng(99, 4);
  const int n = 100000;
  double p_re = 0.0, p_im = 0.0;
  cdouble mean = 0.0, pseudo = 0.0;
  for (int i = 0; i < n; ++i) {
    const cdouble z = rng.cscg();
    p_re += z.real() * z.real();
    p_im += z.imag() * z.imag();
    mean += z;
    pseudo += z * z;  // vanishes for a circular distribution
  }
  CHECK(p_re / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(p_im / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(std::abs(mean) / n < 0.01);
  CHECK(std::abs(pseudo) / n < 0.01);
}

TEST_CASE("gaussian cache does not leak into complex draws") {
  // A cscg draw must consume a fresh Box-Muller pair, so interleaving a
  // scalar draw between two complex draws cannot change the complex values.
  Pcg32 a(5, 6), b(5, 6);
  const cdouble a1 = a.cscg();
  const cdouble b1 = b.cscg();
  CHECK(a1 == b1);
  (void)a.gaussian();
  (void)b.gaussian();
  CHECK(a.cscg() == b.cscg());
}

TEST_CASE("substream packing is unique and ordered as documented") {
  CHECK(substream(StreamPurpose::kEvalFrame, 0, 0) == 0u);
  CHECK(substream(StreamPurpose::kRealization, 0, 0) == (std::uint64_t{1} << 56));
  CHECK(substream(StreamPurpose::kEvalFrame, 1, 0) == (std::uint64_t{1} << 40));
  CHECK(substream(StreamPurpose::kEvalFrame, 0, 1) == 1u);
  CHECK(substream(StreamPurpose::kTrainFrame, 3, 17) ==
        ((std::uint64_t{2} << 56) | (std::uint64_t{3} << 40) | 17u));

  std::set<std::uint64_t> seen;
  for (int purpose = 0; purpose < 4; ++purpose)
    for (std::uint32_t point = 0; point < 8; ++point)
      for (std::uint32_t trial = 0; trial < 8; ++trial)
        seen.insert(substream(static_cast<StreamPurpose>(purpose), point, trial));
  CHECK(seen.size() == 4u * 8u * 8u);
}

TEST_CASE("distinct substreams give distinct draws") {
  Pcg32 a(1, substream(StreamPurpose::kEvalFrame, 0, 0));
  Pcg32 b(1, substream(StreamPurpose::kTrainFrame, 0, 0));
  int agreements = 0;
  for (int i = 0; i < 32; ++i)
    if (a.next_u32() == b.next_u32()) ++agreements;
  CHECK(agreements == 0);
}
