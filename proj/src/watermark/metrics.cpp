#include <cmath>

#include "psum/error.hpp"
#include "psum/watermark.hpp"

namespace psum::watermark {

double ber(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g) {
  if (f.size() != g.size()) fail(Errc::length_mismatch, "ber: length mismatch");
  require(!f.empty(), "ber: empty vectors");
  std::size_t diff = 0;
  for (std::size_t j = 0; j < f.size(); ++j) diff += (f[j] != 0) ^ (g[j] != 0);
  return static_cast<double>(diff) / static_cast<double>(f.size());
}

double nc(std::span<const std::uint8_t> f, std::span<const std::uint8_t> g) {
  if (f.size() != g.size()) fail(Errc::length_mismatch, "nc: length mismatch");
  std::size_t dot = 0, nf = 0, ng = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const bool a = f[j] != 0, b = g[j] != 0;
    dot += a && b;
    nf += a;
    ng += b;
  }
  if (nf == 0 || ng == 0) return nf == ng ? 1.0 : 0.0;
  return static_cast<double>(dot) / (std::sqrt(static_cast<double>(nf)) * std::sqrt(static_cast<double>(ng)));
}

double mse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(Errc::length_mismatch, "mse: shape mismatch");
  require(!x.empty(), "mse: empty signals");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

double psnr(std::span<const double> x, std::span<const double> y, double peak) {
  require(peak > 0.0, "psnr: peak must be positive");
  const double e = mse(x, y);
  if (e == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / e);
}

double psnr_bound(double peak, double delta) {
  require(peak > 0.0 && delta > 0.0, "psnr_bound: peak and delta must be positive");
  const double h = delta / 2.0;
  return 10.0 * std::log10(peak * peak / (h * h));
}

}  // namespace psum::watermark
