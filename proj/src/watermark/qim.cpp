#include <algorithm>
#include <cmath>

#include "psum/error.hpp"
#include "psum/watermark.hpp"

namespace psum::watermark {

BlockLayout BlockLayout::for_stream(std::size_t total, std::size_t block_count) {
  require(block_count >= 1, "BlockLayout: need at least one block");
  if (total < block_count) fail(Errc::invalid_argument, "BlockLayout: stream shorter than one coefficient per block");
  return {total, block_count, total / block_count};
}

void BlockLayout::validate() const {
  require(block_count >= 1 && block_size >= 1, "BlockLayout: empty layout");
  require(block_size * block_count <= total, "BlockLayout: blocks exceed stream");
}

void QimParams::validate() const { require(delta > 0.0 && std::isfinite(delta), "QIM: delta must be positive"); }

std::size_t QimParams::carriers(const BlockLayout& layout, std::size_t k) const {
  const std::size_t n = layout.size(k);
  return repetition == 0 ? n : std::min(repetition, n);
}

double dither(std::uint8_t bit, double delta) { return bit ? delta / 4.0 : -delta / 4.0; }

double quantize(double a, std::uint8_t bit, double delta) {
  const double d = dither(bit, delta);
  return delta * std::round((a - d) / delta) + d;
}

std::uint8_t decode_coefficient(double a, double delta) {
  const double e0 = std::abs(a - quantize(a, 0, delta));
  const double e1 = std::abs(a - quantize(a, 1, delta));
  return e1 < e0 ? 1 : 0;
}

std::vector<double> qim_embed(std::span<const double> coeffs, std::span<const std::uint8_t> bits,
                              const BlockLayout& layout, const QimParams& params) {
  params.validate();
  layout.validate();
  if (coeffs.size() != layout.total) fail(Errc::length_mismatch, "qim_embed: stream length differs from layout");
  if (bits.size() != layout.block_count) fail(Errc::length_mismatch, "qim_embed: bit count differs from block count");
  std::vector<double> out(coeffs.begin(), coeffs.end());
  for (std::size_t k = 0; k < layout.block_count; ++k) {
    const std::size_t b = layout.begin(k);
    const std::size_t n = params.carriers(layout, k);
    for (std::size_t i = b; i < b + n; ++i) out[i] = quantize(coeffs[i], bits[k], params.delta);
  }
  return out;
}

std::vector<std::uint8_t> qim_extract(std::span<const double> coeffs, const BlockLayout& layout,
                                      const QimParams& params) {
  params.validate();
  layout.validate();
  if (coeffs.size() != layout.total) fail(Errc::length_mismatch, "qim_extract: stream length differs from layout");
  std::vector<std::uint8_t> bits(layout.block_count);
  for (std::size_t k = 0; k < layout.block_count; ++k) {
    const std::size_t b = layout.begin(k);
    const std::size_t n = params.carriers(layout, k);
    std::size_t ones = 0;
    for (std::size_t i = b; i < b + n; ++i) ones += decode_coefficient(coeffs[i], params.delta);
    bits[k] = 2 * ones > n ? 1 : 0;
  }
  return bits;
}

namespace {
double median_abs(std::span<const double> v) {
  std::vector<double> a(v.size());
  std::transform(v.begin(), v.end(), a.begin(), [](double x) { return std::abs(x); });
  const auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  return *mid;
}
}  // namespace

double estimate_gain(std::span<const double> coeffs, std::span<const double> reference) {
  require(!coeffs.empty() && !reference.empty(), "estimate_gain: empty stream");
  const double ref = median_abs(reference);
  require(ref > 0.0, "estimate_gain: reference median is zero");
  return median_abs(coeffs) / ref;
}

std::vector<double> normalize_gain(std::span<const double> coeffs, std::span<const double> reference) {
  const double g = estimate_gain(coeffs, reference);
  require(g > 0.0, "normalize_gain: zero gain");
  std::vector<double> out(coeffs.begin(), coeffs.end());
  for (double& x : out) x /= g;
  return out;
}

}  // namespace psum::watermark
