#include <cmath>

#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/watermark.hpp"

namespace psum::harness {

std::vector<double> oracle_embed_approx(const transform::Content& content, std::span<const std::uint8_t> f,
                                        double delta, int levels) {
  require(delta > 0.0, "oracle: delta must be positive");
  require(!f.empty(), "oracle: empty fingerprint");
  transform::PartitionOptions opts;
  opts.levels = levels;
  opts.delta = delta;
  opts.code_length = f.size();
  auto a = transform::original_approx(content, opts);
  if (a.size() < f.size()) fail(Errc::invalid_argument, "oracle: fewer coefficients than bits");
  // Blocks of floor(total / m); the last block also takes the remainder.
  const std::size_t per = a.size() / f.size();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = f[k] ? delta / 4.0 : -delta / 4.0;
    const std::size_t end = k + 1 == f.size() ? a.size() : (k + 1) * per;
    for (std::size_t i = k * per; i < end; ++i) a[i] = delta * std::round((a[i] - d) / delta) + d;
  }
  return a;
}

transform::Content oracle_direct_embed(const transform::Content& content, std::span<const std::uint8_t> f,
                                       double delta, int levels) {
  transform::PartitionOptions opts;
  opts.levels = levels;
  opts.delta = delta;
  opts.code_length = f.size();
  const auto part = transform::make_base_file(content, opts);
  return transform::reconstruct(oracle_embed_approx(content, f, delta, levels), part.supplementary);
}

std::vector<std::uint8_t> extract_bits(const transform::Content& content, const transform::BaseFile& bf,
                                       bool normalize_gain) {
  auto approx = transform::extract_approx(content, bf.meta);
  if (normalize_gain) approx = watermark::normalize_gain(approx, bf.variant0);
  return watermark::qim_extract(approx, bf.layout, watermark::QimParams{bf.delta, 0});
}

namespace {

std::vector<double> flatten(const transform::Content& c) {
  std::vector<double> out;
  if (const auto* a = std::get_if<transform::AudioContent>(&c)) {
    for (const auto& ch : a->channels) out.insert(out.end(), ch.begin(), ch.end());
  } else {
    for (const auto& f : std::get<transform::FrameContent>(c).frames) {
      out.insert(out.end(), f.y.data.begin(), f.y.data.end());
      out.insert(out.end(), f.u.data.begin(), f.u.data.end());
      out.insert(out.end(), f.v.data.begin(), f.v.data.end());
    }
  }
  return out;
}

}  // namespace

double content_peak(const transform::Content& c) {
  return std::holds_alternative<transform::AudioContent>(c) ? 1.0 : 255.0;
}

double content_psnr(const transform::Content& a, const transform::Content& b) {
  if (a.index() != b.index()) fail(Errc::invalid_argument, "psnr: different content kinds");
  const auto x = flatten(a), y = flatten(b);
  return watermark::psnr(x, y, content_peak(a));
}

}  // namespace psum::harness
