#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace psum::watermark {

// Contiguous block mapping of a coefficient stream onto fingerprint bits:
// block k covers [k * block_size, (k + 1) * block_size), the last block
// also absorbs the leftover coefficients.
struct BlockLayout {
  std::size_t total = 0;
  std::size_t block_count = 0;
  std::size_t block_size = 0;

  // block_size = floor(total / block_count).
  static BlockLayout for_stream(std::size_t total, std::size_t block_count);

  std::size_t begin(std::size_t k) const { return k * block_size; }
  std::size_t end(std::size_t k) const { return k + 1 == block_count ? total : (k + 1) * block_size; }
  std::size_t size(std::size_t k) const { return end(k) - begin(k); }
  void validate() const;
  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

struct QimParams {
  double delta = 0.25;
  // Carrier coefficients per block; 0 means every coefficient of the block.
  std::size_t repetition = 0;

  void validate() const;
  std::size_t carriers(const BlockLayout& layout, std::size_t k) const;
};

// Dither offset of the lattice carrying `bit`: -delta/4 for 0, +delta/4 for 1.
double dither(std::uint8_t bit, double delta);
double quantize(double a, std::uint8_t bit, double delta);
// argmin over bits of the distance to the bit's lattice; ties -> 0.
std::uint8_t decode_coefficient(double a, double delta);

std::vector<double> qim_embed(std::span<const double> coeffs, std::span<const std::uint8_t> bits,
                              const BlockLayout& layout, const QimParams& params);
// Blind extraction with per-block majority vote over carriers (ties -> 0).
std::vector<std::uint8_t> qim_extract(std::span<const double> coeffs, const BlockLayout& layout,
                                      const QimParams& params);

// Gain estimate median(|coeffs|) / median(|reference|); the reference is
// one of the stored base-file variants.
double estimate_gain(std::span<const double> coeffs, std::span<const double> reference);
std::vector<double> normalize_gain(std::span<const double> coeffs, std::span<const double> reference);

double ber(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g);
// Normalised correlation; both all-zero -> 1, exactly one all-zero -> 0.
double nc(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();
double mse(std::span<const double> x, std::span<const double> y);
double psnr(std::span<const double> x, std::span<const double> y, double peak);
// 10 log10(peak^2 / (delta/2)^2): PSNR floor when every carrier moves by delta/2.
double psnr_bound(double peak, double delta);

}  // namespace psum::watermark
