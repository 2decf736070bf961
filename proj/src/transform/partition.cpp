#include <algorithm>

#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

namespace {

void check_options(const PartitionOptions& opts) {
  require(opts.levels >= 1, "partition: levels must be >= 1");
  require(opts.delta > 0.0, "partition: quantisation step must be positive");
  require(opts.code_length >= 1, "partition: code length must be >= 1");
}

// Approximation-only synthesis of one 1-D channel at padded length.
std::vector<double> synthesize_approx_1d(std::span<const double> approx, const PartitionMeta& meta) {
  DwtPyramid p;
  p.levels = meta.levels;
  p.wavelet = meta.wavelet;
  p.padded_length = meta.padded_length;
  p.original_length = meta.original_length;
  p.approx.assign(approx.begin(), approx.end());
  std::size_t n = meta.padded_length;
  for (int l = 0; l < meta.levels; ++l) {
    n /= 2;
    p.details.emplace_back(n, 0.0);
  }
  return dwt_synthesize(p);
}

Matrix synthesize_approx_2d(std::span<const double> approx, const PartitionMeta& meta) {
  DwtPyramid2D p;
  p.levels = meta.levels;
  p.wavelet = meta.wavelet;
  p.padded_rows = meta.padded_height;
  p.padded_cols = meta.padded_width;
  p.original_rows = meta.height;
  p.original_cols = meta.width;
  std::size_t r = meta.padded_height, c = meta.padded_width;
  for (int l = 0; l < meta.levels; ++l) {
    r /= 2;
    c /= 2;
    p.details.push_back({Matrix(r, c), Matrix(r, c), Matrix(r, c)});
  }
  p.approx = Matrix(r, c);
  std::copy(approx.begin(), approx.end(), p.approx.data.begin());
  return dwt2_synthesize(p);
}

Partition finish(std::vector<double> stream, const PartitionOptions& opts, PartitionMeta meta, SupplementaryFile sf) {
  if (stream.size() < opts.code_length)
    fail(Errc::invalid_argument, "partition: content shorter than one block per fingerprint bit");
  Partition out;
  auto& bf = out.base;
  bf.layout = watermark::BlockLayout::for_stream(stream.size(), opts.code_length);
  bf.delta = opts.delta;
  bf.meta = meta;
  const watermark::QimParams qim{opts.delta, 0};
  const std::vector<std::uint8_t> zeros(opts.code_length, 0), ones(opts.code_length, 1);
  bf.variant0 = watermark::qim_embed(stream, zeros, bf.layout, qim);
  bf.variant1 = watermark::qim_embed(stream, ones, bf.layout, qim);
  sf.meta = std::move(meta);
  out.supplementary = std::move(sf);
  return out;
}

}  // namespace

std::size_t PartitionMeta::padding() const {
  return kind == ContentKind::audio ? padded_length - original_length
                                    : ((padded_width - width) << 16) | (padded_height - height);
}

std::size_t PartitionMeta::approx_per_unit() const {
  if (kind == ContentKind::audio) return padded_length >> levels;
  return (padded_width >> levels) * (padded_height >> levels);
}

std::size_t PartitionMeta::units() const { return kind == ContentKind::audio ? channels : keyframes.size(); }

Partition make_base_file(const Content& content, const PartitionOptions& opts) {
  return std::visit([&](const auto& c) { return make_base_file(c, opts); }, content);
}

Partition make_base_file(const AudioContent& content, const PartitionOptions& opts) {
  content.validate();
  check_options(opts);
  PartitionMeta meta;
  meta.kind = ContentKind::audio;
  meta.levels = opts.levels;
  meta.wavelet = opts.wavelet;
  meta.sample_rate = content.sample_rate;
  meta.channels = content.channels.size();
  meta.original_length = content.frames();
  meta.padded_length = padded_size(content.frames(), opts.levels);

  std::vector<double> stream;
  SupplementaryFile sf;
  for (const auto& ch : content.channels) {
    auto p = dwt_forward(ch, opts.levels, opts.wavelet);
    stream.insert(stream.end(), p.approx.begin(), p.approx.end());
    std::fill(p.approx.begin(), p.approx.end(), 0.0);
    sf.audio.push_back(dwt_synthesize(p));
  }
  return finish(std::move(stream), opts, std::move(meta), std::move(sf));
}

Partition make_base_file(const FrameContent& content, const PartitionOptions& opts) {
  content.validate();
  check_options(opts);
  PartitionMeta meta;
  meta.kind = ContentKind::frames;
  meta.levels = opts.levels;
  meta.wavelet = opts.wavelet;
  meta.fps = content.fps;
  meta.frame_count = content.frames.size();
  meta.height = content.frames.front().y.rows;
  meta.width = content.frames.front().y.cols;
  meta.padded_height = padded_size(meta.height, opts.levels);
  meta.padded_width = padded_size(meta.width, opts.levels);
  meta.keyframes = select_keyframes(content, opts.keyframe_threshold);

  std::vector<double> stream;
  SupplementaryFile sf;
  sf.frames = content.frames;
  for (auto k : meta.keyframes) {
    auto p = dwt2_forward(content.frames[k].y, opts.levels, opts.wavelet);
    stream.insert(stream.end(), p.approx.data.begin(), p.approx.data.end());
    std::fill(p.approx.data.begin(), p.approx.data.end(), 0.0);
    sf.frames[k].y = dwt2_synthesize(p);
  }
  return finish(std::move(stream), opts, std::move(meta), std::move(sf));
}

std::vector<double> extract_approx(const Content& content, const PartitionMeta& meta) {
  std::vector<double> stream;
  stream.reserve(meta.approx_total());
  if (meta.kind == ContentKind::audio) {
    const auto* audio = std::get_if<AudioContent>(&content);
    if (!audio) fail(Errc::invalid_argument, "extract_approx: expected audio content");
    if (audio->channels.size() != meta.channels || audio->frames() != meta.original_length)
      fail(Errc::length_mismatch, "extract_approx: audio shape differs from base-file metadata");
    for (const auto& ch : audio->channels) {
      auto p = dwt_forward(ch, meta.levels, meta.wavelet);
      stream.insert(stream.end(), p.approx.begin(), p.approx.end());
    }
    return stream;
  }
  const auto* frames = std::get_if<FrameContent>(&content);
  if (!frames) fail(Errc::invalid_argument, "extract_approx: expected frame content");
  if (frames->frames.size() != meta.frame_count) fail(Errc::length_mismatch, "extract_approx: frame count differs");
  for (auto k : meta.keyframes) {
    const auto& y = frames->frames[k].y;
    if (y.rows != meta.height || y.cols != meta.width) fail(Errc::length_mismatch, "extract_approx: frame size differs");
    auto p = dwt2_forward(y, meta.levels, meta.wavelet);
    stream.insert(stream.end(), p.approx.data.begin(), p.approx.data.end());
  }
  return stream;
}

std::vector<double> original_approx(const Content& content, const PartitionOptions& opts) {
  PartitionMeta meta;
  if (const auto* a = std::get_if<AudioContent>(&content)) {
    meta.kind = ContentKind::audio;
    meta.channels = a->channels.size();
    meta.original_length = a->frames();
  } else {
    const auto& f = std::get<FrameContent>(content);
    meta.kind = ContentKind::frames;
    meta.frame_count = f.frames.size();
    meta.height = f.frames.front().y.rows;
    meta.width = f.frames.front().y.cols;
    meta.keyframes = select_keyframes(f, opts.keyframe_threshold);
  }
  meta.levels = opts.levels;
  meta.wavelet = opts.wavelet;
  return extract_approx(content, meta);
}

Content reconstruct(std::span<const double> approx, const SupplementaryFile& sf) {
  const auto& meta = sf.meta;
  if (approx.size() != meta.approx_total()) fail(Errc::length_mismatch, "reconstruct: approximation size differs from metadata");
  const std::size_t per = meta.approx_per_unit();
  if (meta.kind == ContentKind::audio) {
    if (sf.audio.size() != meta.channels) fail(Errc::length_mismatch, "reconstruct: SF channel count differs");
    AudioContent out;
    out.sample_rate = meta.sample_rate;
    for (std::size_t c = 0; c < meta.channels; ++c) {
      if (sf.audio[c].size() != meta.padded_length) fail(Errc::length_mismatch, "reconstruct: SF length differs");
      auto x = synthesize_approx_1d(approx.subspan(c * per, per), meta);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += sf.audio[c][i];
      x.resize(meta.original_length);
      out.channels.push_back(std::move(x));
    }
    return out;
  }
  if (sf.frames.size() != meta.frame_count) fail(Errc::length_mismatch, "reconstruct: SF frame count differs");
  FrameContent out;
  out.fps = meta.fps;
  out.frames = sf.frames;
  for (std::size_t u = 0; u < meta.keyframes.size(); ++u) {
    auto& frame = out.frames[meta.keyframes[u]];
    if (frame.y.rows != meta.padded_height || frame.y.cols != meta.padded_width)
      fail(Errc::length_mismatch, "reconstruct: SF key frame shape differs");
    auto y = synthesize_approx_2d(approx.subspan(u * per, per), meta);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += frame.y.data[i];
    frame.y = crop(y, meta.height, meta.width);
  }
  return out;
}

std::vector<double> select_variants(const BaseFile& bf, std::span<const std::uint8_t> bits) {
  if (bits.size() != bf.layout.block_count) fail(Errc::length_mismatch, "select_variants: bit count differs from block count");
  std::vector<double> out(bf.layout.total);
  for (std::size_t k = 0; k < bf.layout.block_count; ++k) {
    const auto& src = bits[k] ? bf.variant1 : bf.variant0;
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(bf.layout.begin(k)),
              src.begin() + static_cast<std::ptrdiff_t>(bf.layout.end(k)),
              out.begin() + static_cast<std::ptrdiff_t>(bf.layout.begin(k)));
  }
  return out;
}

}  // namespace psum::transform
