#include <array>
#include <cmath>

#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

namespace {

const std::array<double, 2> kHaar = {0.70710678118654752440, 0.70710678118654752440};

// Daubechies 4-tap orthonormal lowpass.
const std::array<double, 4> kDb4 = [] {
  const double s3 = std::sqrt(3.0);
  const double n = 4.0 * std::sqrt(2.0);
  return std::array<double, 4>{(1 + s3) / n, (3 + s3) / n, (3 - s3) / n, (1 - s3) / n};
}();

// One periodised analysis step over x[0..n), n even. `stride` lets the same
// routine walk rows and columns of a matrix.
void analyze_step(const double* x, std::size_t n, std::size_t stride, std::span<const double> h, double* approx,
                  double* detail, std::size_t out_stride) {
  const std::size_t taps = h.size();
  for (std::size_t k = 0; k < n / 2; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      const double v = x[((2 * k + t) % n) * stride];
      const double g = (t % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - t];
      a += h[t] * v;
      d += g * v;
    }
    approx[k * out_stride] = a;
    detail[k * out_stride] = d;
  }
}

void synthesize_step(const double* approx, const double* detail, std::size_t half, std::size_t in_stride,
                     std::span<const double> h, double* x, std::size_t stride) {
  const std::size_t n = 2 * half;
  const std::size_t taps = h.size();
  for (std::size_t i = 0; i < n; ++i) x[i * stride] = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double a = approx[k * in_stride];
    const double d = detail[k * in_stride];
    for (std::size_t t = 0; t < taps; ++t) {
      const double g = (t % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - t];
      x[((2 * k + t) % n) * stride] += h[t] * a + g * d;
    }
  }
}

void check_levels(std::size_t n, int levels) {
  require(levels >= 1, "dwt: levels must be >= 1");
  require(levels < 31, "dwt: levels too large");
  if (n < (std::size_t{1} << levels)) fail(Errc::invalid_argument, "dwt: too many levels for signal length");
}

}  // namespace

std::span<const double> lowpass_filter(Wavelet w) {
  switch (w) {
    case Wavelet::haar:
      return kHaar;
    case Wavelet::db4:
      return kDb4;
  }
  fail(Errc::invalid_argument, "unknown wavelet");
}

std::string to_string(Wavelet w) { return w == Wavelet::haar ? "haar" : "db4"; }

Wavelet wavelet_from_string(const std::string& name) {
  if (name == "haar") return Wavelet::haar;
  if (name == "db4" || name == "d4") return Wavelet::db4;
  fail(Errc::invalid_argument, "unknown wavelet '" + name + "'");
}

std::size_t padded_size(std::size_t n, int levels) {
  const std::size_t q = std::size_t{1} << levels;
  return (n + q - 1) / q * q;
}

std::vector<double> pad_symmetric(std::span<const double> x, std::size_t target) {
  require(!x.empty() || target == 0, "pad_symmetric: empty signal");
  std::vector<double> out(x.begin(), x.end());
  out.reserve(target);
  const std::size_t n = x.size();
  for (std::size_t k = 0; out.size() < target; ++k) {
    // Reflection about the last sample boundary, folding back and forth.
    const std::size_t period = 2 * n;
    const std::size_t pos = (n + k) % period;
    out.push_back(pos < n ? x[pos] : x[period - 1 - pos]);
  }
  return out;
}

DwtPyramid dwt_forward(std::span<const double> signal, int levels, Wavelet w) {
  check_levels(signal.size(), levels);
  const auto h = lowpass_filter(w);
  DwtPyramid p;
  p.levels = levels;
  p.wavelet = w;
  p.original_length = signal.size();
  p.padded_length = padded_size(signal.size(), levels);
  std::vector<double> cur = pad_symmetric(signal, p.padded_length);
  for (int l = 0; l < levels; ++l) {
    const std::size_t half = cur.size() / 2;
    std::vector<double> a(half), d(half);
    analyze_step(cur.data(), cur.size(), 1, h, a.data(), d.data(), 1);
    p.details.push_back(std::move(d));
    cur = std::move(a);
  }
  p.approx = std::move(cur);
  return p;
}

std::vector<double> dwt_synthesize(const DwtPyramid& p) {
  require(p.levels >= 1 && static_cast<int>(p.details.size()) == p.levels, "dwt_inverse: inconsistent level count");
  const auto h = lowpass_filter(p.wavelet);
  std::vector<double> cur = p.approx;
  for (int l = p.levels - 1; l >= 0; --l) {
    const auto& d = p.details[static_cast<std::size_t>(l)];
    if (d.size() != cur.size()) fail(Errc::length_mismatch, "dwt_inverse: detail/approx shape mismatch");
    std::vector<double> next(2 * cur.size());
    synthesize_step(cur.data(), d.data(), cur.size(), 1, h, next.data(), 1);
    cur = std::move(next);
  }
  if (cur.size() != p.padded_length) fail(Errc::length_mismatch, "dwt_inverse: pyramid does not match padded length");
  return cur;
}

std::vector<double> dwt_inverse(const DwtPyramid& p) {
  auto x = dwt_synthesize(p);
  require(p.original_length <= x.size(), "dwt_inverse: original length exceeds padded length");
  x.resize(p.original_length);
  return x;
}

Matrix pad_symmetric(const Matrix& m, std::size_t rows, std::size_t cols) {
  require(m.rows > 0 && m.cols > 0, "pad_symmetric: empty matrix");
  require(rows >= m.rows && cols >= m.cols, "pad_symmetric: target smaller than input");
  Matrix wide(m.rows, cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = pad_symmetric(std::span<const double>(m.data).subspan(r * m.cols, m.cols), cols);
    std::copy(row.begin(), row.end(), wide.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  Matrix out(rows, cols);
  std::vector<double> col(m.rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < m.rows; ++r) col[r] = wide.at(r, c);
    auto ext = pad_symmetric(col, rows);
    for (std::size_t r = 0; r < rows; ++r) out.at(r, c) = ext[r];
  }
  return out;
}

Matrix crop(const Matrix& m, std::size_t rows, std::size_t cols) {
  require(rows <= m.rows && cols <= m.cols, "crop: target larger than input");
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = m.at(r, c);
  return out;
}

DwtPyramid2D dwt2_forward(const Matrix& image, int levels, Wavelet w) {
  check_levels(std::min(image.rows, image.cols), levels);
  const auto h = lowpass_filter(w);
  DwtPyramid2D p;
  p.levels = levels;
  p.wavelet = w;
  p.original_rows = image.rows;
  p.original_cols = image.cols;
  p.padded_rows = padded_size(image.rows, levels);
  p.padded_cols = padded_size(image.cols, levels);
  Matrix cur = pad_symmetric(image, p.padded_rows, p.padded_cols);
  for (int l = 0; l < levels; ++l) {
    const std::size_t R = cur.rows, C = cur.cols, hr = R / 2, hc = C / 2;
    // Rows: [L | H] halves.
    Matrix tmp(R, C);
    for (std::size_t r = 0; r < R; ++r)
      analyze_step(&cur.data[r * C], C, 1, h, &tmp.data[r * C], &tmp.data[r * C + hc], 1);
    // Columns.
    Matrix out(R, C);
    for (std::size_t c = 0; c < C; ++c) analyze_step(&tmp.data[c], R, C, h, &out.data[c], &out.data[hr * C + c], C);
    Matrix ll(hr, hc), lh(hr, hc), hl(hr, hc), hh(hr, hc);
    for (std::size_t r = 0; r < hr; ++r)
      for (std::size_t c = 0; c < hc; ++c) {
        ll.at(r, c) = out.at(r, c);
        hl.at(r, c) = out.at(r, c + hc);  // high along rows
        lh.at(r, c) = out.at(r + hr, c);  // high along columns
        hh.at(r, c) = out.at(r + hr, c + hc);
      }
    p.details.push_back({std::move(lh), std::move(hl), std::move(hh)});
    cur = std::move(ll);
  }
  p.approx = std::move(cur);
  return p;
}

Matrix dwt2_synthesize(const DwtPyramid2D& p) {
  require(p.levels >= 1 && static_cast<int>(p.details.size()) == p.levels, "dwt2_inverse: inconsistent level count");
  const auto h = lowpass_filter(p.wavelet);
  Matrix cur = p.approx;
  for (int l = p.levels - 1; l >= 0; --l) {
    const auto& [lh, hl, hh] = p.details[static_cast<std::size_t>(l)];
    const std::size_t hr = cur.rows, hc = cur.cols;
    for (const Matrix* m : {&lh, &hl, &hh})
      if (m->rows != hr || m->cols != hc) fail(Errc::length_mismatch, "dwt2_inverse: subband shape mismatch");
    const std::size_t R = 2 * hr, C = 2 * hc;
    Matrix packed(R, C);
    for (std::size_t r = 0; r < hr; ++r)
      for (std::size_t c = 0; c < hc; ++c) {
        packed.at(r, c) = cur.at(r, c);
        packed.at(r, c + hc) = hl.at(r, c);
        packed.at(r + hr, c) = lh.at(r, c);
        packed.at(r + hr, c + hc) = hh.at(r, c);
      }
    Matrix tmp(R, C);
    for (std::size_t c = 0; c < C; ++c)
      synthesize_step(&packed.data[c], &packed.data[hr * C + c], hr, C, h, &tmp.data[c], C);
    Matrix out(R, C);
    for (std::size_t r = 0; r < R; ++r)
      synthesize_step(&tmp.data[r * C], &tmp.data[r * C + hc], hc, 1, h, &out.data[r * C], 1);
    cur = std::move(out);
  }
  if (cur.rows != p.padded_rows || cur.cols != p.padded_cols)
    fail(Errc::length_mismatch, "dwt2_inverse: pyramid does not match padded shape");
  return cur;
}

Matrix dwt2_inverse(const DwtPyramid2D& p) { return crop(dwt2_synthesize(p), p.original_rows, p.original_cols); }

}  // namespace psum::transform
