#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "psum/error.hpp"
#include "psum/rng.hpp"
#include "psum/watermark.hpp"

using namespace psum;
using namespace psum::watermark;

namespace {

std::vector<double> random_stream(std::size_t n, std::uint64_t seed, double scale = 3.0) {
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 1);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::uint8_t> b(n);
  for (auto& v : b) v = coin(rng);
  return b;
}

std::vector<std::uint8_t> bits(const std::string& s) {
  std::vector<std::uint8_t> v;
  for (char ch : s) v.push_back(ch == '1');
  return v;
}

}  // namespace

TEST(Qim, HandValues) {
  EXPECT_DOUBLE_EQ(quantize(0.6, 0, 1.0), 0.75);   // lattice k - 0.25
  EXPECT_DOUBLE_EQ(quantize(0.25, 1, 1.0), 0.25);  // already on k + 0.25
  EXPECT_EQ(decode_coefficient(0.75, 1.0), 0);
  EXPECT_EQ(decode_coefficient(1.25, 1.0), 1);
  EXPECT_DOUBLE_EQ(dither(0, 2.0), -0.5);
  EXPECT_DOUBLE_EQ(dither(1, 2.0), 0.5);
}

TEST(Qim, DistortionBound) {
  const auto x = random_stream(5000, 1);
  for (double delta : {0.01, 0.25, 1.0, 7.0})
    for (std::uint8_t b : {0, 1})
      for (double a : x) EXPECT_LE(std::abs(quantize(a, b, delta) - a), delta / 2 + 1e-12);
}

TEST(Qim, LayoutLastBlockTakesRemainder) {
  const auto l = BlockLayout::for_stream(103, 10);
  EXPECT_EQ(l.block_size, 10u);
  EXPECT_EQ(l.size(0), 10u);
  EXPECT_EQ(l.size(9), 13u);
  EXPECT_EQ(l.end(9), 103u);
  EXPECT_THROW(BlockLayout::for_stream(5, 10), Error);
}

TEST(Qim, RoundTripRandom) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = random_stream(997, s);
    const auto layout = BlockLayout::for_stream(x.size(), 37);
    const auto f = random_bits(37, s);
    for (double delta : {0.05, 0.25, 2.0}) {
      QimParams p{delta, 0};
      EXPECT_EQ(qim_extract(qim_embed(x, f, layout, p), layout, p), f);
    }
  }
}

TEST(Qim, RepetitionLeavesOtherCoefficients) {
  const auto x = random_stream(100, 3);
  const auto layout = BlockLayout::for_stream(100, 10);
  const auto f = random_bits(10, 3);
  QimParams p{0.5, 3};
  const auto y = qim_embed(x, f, layout, p);
  for (std::size_t k = 0; k < 10; ++k)
    for (std::size_t i = layout.begin(k); i < layout.end(k); ++i) {
      if (i - layout.begin(k) < 3)
        EXPECT_EQ(decode_coefficient(y[i], 0.5), f[k]);
      else
        EXPECT_EQ(y[i], x[i]);
    }
  EXPECT_EQ(qim_extract(y, layout, p), f);
}

TEST(Qim, NoiseBelowQuarterStep) {
  const double delta = 0.4;
  Rng rng = make_rng(7, 2);
  std::uniform_real_distribution<double> u(-(delta / 4 - 1e-12), delta / 4 - 1e-12);
  const auto x = random_stream(2000, 7);
  const auto layout = BlockLayout::for_stream(x.size(), 50);
  const auto f = random_bits(50, 7);
  QimParams p{delta, 0};
  auto y = qim_embed(x, f, layout, p);
  for (auto& v : y) v += u(rng);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto k = std::min(i / layout.block_size, layout.block_count - 1);
    ASSERT_EQ(decode_coefficient(y[i], delta), f[k]);
  }
  EXPECT_EQ(qim_extract(y, layout, p), f);
}

TEST(Qim, MajorityToleratesMinorityFlips) {
  const double delta = 1.0;
  const auto layout = BlockLayout::for_stream(7 * 4, 4);  // 7 carriers per block
  std::vector<double> x(28, 0.0);
  const auto f = bits("1010");
  QimParams p{delta, 0};
  auto y = qim_embed(x, f, layout, p);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 3; ++i) y[layout.begin(k) + i] += delta / 2;  // flips 3 of 7
  EXPECT_EQ(qim_extract(y, layout, p), f);
  y[layout.begin(0) + 3] += delta / 2;  // 4 of 7 flipped in block 0
  EXPECT_EQ(qim_extract(y, layout, p)[0], 0);
}

TEST(Qim, TieGoesToZero) {
  const auto layout = BlockLayout::for_stream(2, 1);
  const std::vector<double> y{0.25, -0.25};  // one vote each
  EXPECT_EQ(qim_extract(y, layout, {1.0, 0})[0], 0);
}

TEST(Qim, Errors) {
  const auto x = random_stream(10, 1);
  const auto layout = BlockLayout::for_stream(10, 5);
  EXPECT_THROW(qim_embed(x, bits("101"), layout, {0.25, 0}), Error);
  EXPECT_THROW(qim_embed(x, bits("10101"), layout, {0.0, 0}), Error);
  EXPECT_THROW(qim_embed(x, bits("10101"), layout, {-1.0, 0}), Error);
}

TEST(Qim, GainNormalisationUndoesScaling) {
  const auto x = random_stream(4000, 9);
  const auto layout = BlockLayout::for_stream(x.size(), 40);
  const auto f = random_bits(40, 9);
  QimParams p{0.25, 0};
  const auto ref = qim_embed(x, std::vector<std::uint8_t>(40, 0), layout, p);
  auto y = qim_embed(x, f, layout, p);
  for (auto& v : y) v *= 1.1;
  EXPECT_NEAR(estimate_gain(y, ref), 1.1, 0.02);
  EXPECT_EQ(qim_extract(normalize_gain(y, ref), layout, p), f);
}

TEST(Metrics, Ber) {
  EXPECT_EQ(ber(bits("0101"), bits("0101")), 0.0);
  EXPECT_EQ(ber(bits("0101"), bits("1010")), 1.0);
  EXPECT_EQ(ber(bits("0000"), bits("0001")), 0.25);
  EXPECT_THROW(ber(bits("01"), bits("011")), Error);
  const auto a = random_bits(333, 1), b = random_bits(333, 2);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i];
  EXPECT_EQ(ber(a, b) + static_cast<double>(agree) / 333.0, 1.0);
}

TEST(Metrics, Nc) {
  EXPECT_DOUBLE_EQ(nc(bits("111"), bits("111")), 1.0);
  EXPECT_EQ(nc(bits("10"), bits("01")), 0.0);
  EXPECT_NEAR(nc(bits("1100"), bits("1000")), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(nc(bits("000"), bits("000")), 1.0);
  EXPECT_EQ(nc(bits("000"), bits("010")), 0.0);
  EXPECT_THROW(nc(bits("01"), bits("011")), Error);
}

TEST(Metrics, Psnr) {
  const std::vector<double> x(100, 10.0);
  std::vector<double> y = x;
  EXPECT_EQ(psnr(x, y, 255.0), kInfinitePsnr);
  for (auto& v : y) v += 1.0;
  EXPECT_NEAR(psnr(x, y, 255.0), 10 * std::log10(255.0 * 255.0), 1e-12);
  EXPECT_NEAR(psnr(x, y, 255.0), 48.13, 0.005);
  EXPECT_THROW(psnr(x, std::vector<double>(99, 0.0), 255.0), Error);
  EXPECT_NEAR(psnr_bound(1.0, 0.25) - psnr_bound(1.0, 0.5), 20 * std::log10(2.0), 1e-12);
}
