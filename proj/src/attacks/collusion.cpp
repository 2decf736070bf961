#include <algorithm>

#include "psum/attacks.hpp"
#include "psum/error.hpp"

namespace psum::attacks {

std::string to_string(CollusionKind k) {
  switch (k) {
    case CollusionKind::average: return "average";
    case CollusionKind::min: return "min";
    case CollusionKind::max: return "max";
    case CollusionKind::median: return "median";
  }
  return "?";
}

CollusionKind collusion_kind_from_string(const std::string& s) {
  for (auto k : {CollusionKind::average, CollusionKind::min, CollusionKind::max, CollusionKind::median})
    if (to_string(k) == s) return k;
  fail(Errc::invalid_argument, "unknown collusion kind: " + s);
}

std::vector<double> collude_streams(std::span<const std::vector<double>> copies, CollusionKind kind) {
  require(copies.size() >= 2, "collude: need at least two copies");
  const std::size_t n = copies.front().size();
  for (const auto& c : copies)
    if (c.size() != n) fail(Errc::length_mismatch, "collude: copies differ in length");
  const std::size_t u = copies.size();
  std::vector<double> out(n), col(u);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < u; ++j) col[j] = copies[j][i];
    switch (kind) {
      case CollusionKind::average: {
        double s = 0.0;
        for (double x : col) s += x;
        out[i] = s / static_cast<double>(u);
        break;
      }
      case CollusionKind::min: out[i] = *std::min_element(col.begin(), col.end()); break;
      case CollusionKind::max: out[i] = *std::max_element(col.begin(), col.end()); break;
      case CollusionKind::median: {
        auto mid = col.begin() + static_cast<std::ptrdiff_t>((u - 1) / 2);
        std::nth_element(col.begin(), mid, col.end());
        out[i] = *mid;
        break;
      }
    }
  }
  return out;
}

namespace {

std::vector<double> collude_plane(std::span<const transform::Content> copies, CollusionKind kind, std::size_t f,
                                  transform::Matrix transform::Frame::*plane) {
  std::vector<std::vector<double>> flat;
  for (const auto& c : copies) flat.push_back((std::get<transform::FrameContent>(c).frames[f].*plane).data);
  return collude_streams(flat, kind);
}

}  // namespace

transform::Content collude_contents(std::span<const transform::Content> copies, CollusionKind kind) {
  require(copies.size() >= 2, "collude: need at least two copies");
  const auto idx = copies.front().index();
  for (const auto& c : copies)
    if (c.index() != idx) fail(Errc::invalid_argument, "collude: mixed content kinds");

  if (const auto* a0 = std::get_if<transform::AudioContent>(&copies.front())) {
    transform::AudioContent out;
    out.sample_rate = a0->sample_rate;
    for (std::size_t ch = 0; ch < a0->channels.size(); ++ch) {
      std::vector<std::vector<double>> streams;
      for (const auto& c : copies) {
        const auto& a = std::get<transform::AudioContent>(c);
        if (a.channels.size() != a0->channels.size() || a.sample_rate != a0->sample_rate)
          fail(Errc::length_mismatch, "collude: audio shape differs");
        streams.push_back(a.channels[ch]);
      }
      out.channels.push_back(collude_streams(streams, kind));
    }
    return out;
  }

  const auto& f0 = std::get<transform::FrameContent>(copies.front());
  for (const auto& c : copies) {
    const auto& f = std::get<transform::FrameContent>(c);
    if (f.frames.size() != f0.frames.size()) fail(Errc::length_mismatch, "collude: frame counts differ");
    for (std::size_t i = 0; i < f.frames.size(); ++i)
      if (f.frames[i].y.rows != f0.frames[i].y.rows || f.frames[i].y.cols != f0.frames[i].y.cols)
        fail(Errc::length_mismatch, "collude: frame sizes differ");
  }
  transform::FrameContent out = f0;
  for (std::size_t i = 0; i < f0.frames.size(); ++i) {
    out.frames[i].y.data = collude_plane(copies, kind, i, &transform::Frame::y);
    out.frames[i].u.data = collude_plane(copies, kind, i, &transform::Frame::u);
    out.frames[i].v.data = collude_plane(copies, kind, i, &transform::Frame::v);
  }
  return out;
}

}  // namespace psum::attacks
