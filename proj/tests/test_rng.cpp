#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "ulmc/rng.hpp"

using ulmc::CounterRng;
using ulmc::Philox4x32;

// Reference vectors for Philox4x32-10 from the published test-vector set.
TEST_CASE("philox4x32-10 known-answer vectors") {
  {
    Philox4x32::Counter c{0u, 0u, 0u, 0u};
    Philox4x32::Key k{0u, 0u};
    auto out = Philox4x32::block(c, k);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    Philox4x32::Counter c{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
    Philox4x32::Key k{0xffffffffu, 0xffffffffu};
    auto out = Philox4x32::block(c, k);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    Philox4x32::Counter c{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u};
    Philox4x32::Key k{0xa4093822u, 0x299f31d0u};
    auto out = Philox4x32::block(c, k);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("uniforms live strictly inside (0,1)") {
  CHECK(ulmc::u64_to_unit_double(0) > 0.0);
  CHECK(ulmc::u64_to_unit_double(~std::uint64_t(0)) < 1.0);
  CounterRng rng(42, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(7, i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("streams are reproducible and distinct across chains/steps") {
  CounterRng a(123, 5), b(123, 5), c(123, 6);
  CHECK(a.normal(10, 3) == b.normal(10, 3));
  CHECK(a.normal(10, 3) != c.normal(10, 3));
  CHECK(a.normal(10, 3) != a.normal(11, 3));
  CHECK(a.normal(10, 3) != a.normal(10, 4));

  // Different seeds decorrelate entire blocks.
  CounterRng d(124, 5);
  auto blk_a = a.raw_block(10, 0);
  auto blk_d = d.raw_block(10, 0);
  CHECK(blk_a != blk_d);
}

TEST_CASE("normal moments at one million draws") {
  CounterRng rng(2024, 0);
  const int n = 1'000'000;
  double sum = 0.0, sumsq = 0.0, sumcube = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal(0, i);
    sum += z;
    sumsq += z * z;
    sumcube += z * z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double skew = sumcube / n;
  // 4-sigma bands: sd(mean)=1/sqrt(n), sd(var)~sqrt(2/n), sd(skew)~sqrt(15/n).
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(skew) < 4.0 * std::sqrt(15.0 / n));
}

TEST_CASE("fill_normal matches scalar access and casts to float") {
  CounterRng rng(9, 2);
  ulmc::Vec<double> v(5);
  rng.fill_normal(33, v);
  for (int i = 0; i < 5; ++i) CHECK(v[i] == rng.normal(33, i));

  ulmc::Vec<float> vf(5);
  rng.fill_normal(33, vf);
  for (int i = 0; i < 5; ++i) CHECK(vf[i] == doctest::Approx(v[i]).epsilon(1e-6));
}

TEST_CASE("pair correlations across step boundary are negligible") {
  CounterRng rng(77, 1);
  const int n = 200'000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += rng.normal(i, 0) * rng.normal(i + 1, 0);
  }
  CHECK(std::abs(acc / n) < 4.0 / std::sqrt(double(n)));
}
