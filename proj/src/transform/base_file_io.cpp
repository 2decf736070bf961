#include <fstream>

#include "psum/detail/binio.hpp"
#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'U', 'M', 'B', 'F', '1', '\0'};
constexpr char kExtMagic[8] = {'P', 'S', 'U', 'M', 'B', 'F', 'X', '\0'};

void put_meta(detail::ByteWriter& w, const PartitionMeta& m) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.kind))
      .put<std::uint8_t>(static_cast<std::uint8_t>(m.levels))
      .put<std::uint8_t>(static_cast<std::uint8_t>(m.wavelet))
      .put<std::uint32_t>(m.sample_rate)
      .put<std::uint64_t>(m.channels)
      .put<std::uint64_t>(m.original_length)
      .put<std::uint64_t>(m.padded_length)
      .put<double>(m.fps)
      .put<std::uint64_t>(m.frame_count)
      .put<std::uint64_t>(m.width)
      .put<std::uint64_t>(m.height)
      .put<std::uint64_t>(m.padded_width)
      .put<std::uint64_t>(m.padded_height)
      .put<std::uint64_t>(m.keyframes.size());
  for (auto k : m.keyframes) w.put<std::uint64_t>(k);
}

PartitionMeta get_meta(detail::ByteReader& r) {
  PartitionMeta m;
  m.kind = static_cast<ContentKind>(r.get<std::uint8_t>());
  m.levels = r.get<std::uint8_t>();
  m.wavelet = static_cast<Wavelet>(r.get<std::uint8_t>());
  m.sample_rate = r.get<std::uint32_t>();
  m.channels = r.get<std::uint64_t>();
  m.original_length = r.get<std::uint64_t>();
  m.padded_length = r.get<std::uint64_t>();
  m.fps = r.get<double>();
  m.frame_count = r.get<std::uint64_t>();
  m.width = r.get<std::uint64_t>();
  m.height = r.get<std::uint64_t>();
  m.padded_width = r.get<std::uint64_t>();
  m.padded_height = r.get<std::uint64_t>();
  m.keyframes.resize(r.get<std::uint64_t>());
  for (auto& k : m.keyframes) k = r.get<std::uint64_t>();
  return m;
}

void put_matrix(detail::ByteWriter& w, const Matrix& m) {
  w.put<std::uint64_t>(m.rows).put<std::uint64_t>(m.cols);
  for (double v : m.data) w.put<double>(v);
}

Matrix get_matrix(detail::ByteReader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  Matrix m(rows, cols);
  for (double& v : m.data) v = r.get<double>();
  return m;
}

}  // namespace

void save_base_file(std::ostream& out, const BaseFile& bf) {
  using detail::put_le;
  const auto& m = bf.meta;
  detail::put_magic(out, kMagic);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.levels));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.wavelet));
  put_le<std::uint8_t>(out, m.kind == ContentKind::audio ? static_cast<std::uint8_t>(m.channels) : 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bf.layout.block_size));
  put_le<std::uint64_t>(out, bf.layout.total);
  put_le<double>(out, bf.delta);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.padding()));
  for (double v : bf.variant0) put_le<double>(out, v);
  for (double v : bf.variant1) put_le<double>(out, v);

  detail::ByteWriter ext;
  ext.put<std::uint64_t>(bf.layout.block_count);
  put_meta(ext, m);
  detail::put_magic(out, kExtMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ext.bytes().size()));
  out.write(reinterpret_cast<const char*>(ext.bytes().data()), static_cast<std::streamsize>(ext.bytes().size()));
  if (!out) fail(Errc::io, "base file: write failed");
}

void save_base_file(const std::filesystem::path& path, const BaseFile& bf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + path.string());
  save_base_file(out, bf);
}

BaseFile load_base_file(std::istream& in) {
  using detail::get_le;
  detail::expect_magic(in, kMagic, "base file");
  BaseFile bf;
  const auto levels = get_le<std::uint8_t>(in);
  const auto wavelet = get_le<std::uint8_t>(in);
  const auto channels = get_le<std::uint8_t>(in);
  const auto block_size = get_le<std::uint32_t>(in);
  const auto count = get_le<std::uint64_t>(in);
  bf.delta = get_le<double>(in);
  const auto padding = get_le<std::uint32_t>(in);
  if (block_size == 0 || count < block_size) fail(Errc::format, "base file: inconsistent block layout");
  bf.variant0.resize(count);
  bf.variant1.resize(count);
  for (double& v : bf.variant0) v = get_le<double>(in);
  for (double& v : bf.variant1) v = get_le<double>(in);

  char tag[8] = {};
  if (in.read(tag, 8) && std::memcmp(tag, kExtMagic, 8) == 0) {
    std::vector<std::uint8_t> ext(get_le<std::uint32_t>(in));
    if (!in.read(reinterpret_cast<char*>(ext.data()), static_cast<std::streamsize>(ext.size())))
      fail(Errc::format, "base file: truncated extension");
    detail::ByteReader r(ext);
    bf.layout = watermark::BlockLayout::for_stream(count, r.get<std::uint64_t>());
    bf.meta = get_meta(r);
  } else {
    // Bare container: layout and 1-D audio geometry follow from the header.
    bf.layout = watermark::BlockLayout::for_stream(count, count / block_size);
    bf.meta.kind = ContentKind::audio;
    bf.meta.levels = levels;
    bf.meta.wavelet = static_cast<Wavelet>(wavelet);
    bf.meta.channels = channels;
    if (channels == 0) fail(Errc::format, "base file: frame layout requires the extension block");
    bf.meta.padded_length = (count / channels) << levels;
    bf.meta.original_length = bf.meta.padded_length - padding;
  }
  if (bf.layout.block_size != block_size) fail(Errc::format, "base file: block size disagrees with block count");
  if (bf.meta.levels != levels || static_cast<std::uint8_t>(bf.meta.wavelet) != wavelet)
    fail(Errc::format, "base file: header and extension disagree");
  if (bf.meta.approx_total() != count) fail(Errc::format, "base file: coefficient count disagrees with geometry");
  return bf;
}

BaseFile load_base_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return load_base_file(in);
}

void save_supplementary_wav(const std::filesystem::path& path, const SupplementaryFile& sf) {
  require(sf.meta.kind == ContentKind::audio, "supplementary wav: not audio content");
  AudioContent a;
  a.sample_rate = sf.meta.sample_rate;
  a.channels = sf.audio;
  write_wav(path, a, SampleFormat::float32);
}

SupplementaryFile load_supplementary_wav(const std::filesystem::path& path, const PartitionMeta& meta) {
  require(meta.kind == ContentKind::audio, "supplementary wav: metadata is not audio");
  auto a = read_wav(path);
  if (a.channels.size() != meta.channels || a.frames() != meta.padded_length)
    fail(Errc::length_mismatch, "supplementary wav: shape differs from base-file metadata");
  SupplementaryFile sf;
  sf.meta = meta;
  sf.audio = std::move(a.channels);
  return sf;
}

std::vector<std::uint8_t> serialize(const SupplementaryFile& sf) {
  detail::ByteWriter w;
  put_meta(w, sf.meta);
  w.put<std::uint64_t>(sf.audio.size());
  for (const auto& ch : sf.audio) {
    w.put<std::uint64_t>(ch.size());
    for (double v : ch) w.put<double>(v);
  }
  w.put<std::uint64_t>(sf.frames.size());
  for (const auto& f : sf.frames) {
    put_matrix(w, f.y);
    put_matrix(w, f.u);
    put_matrix(w, f.v);
  }
  return w.take();
}

SupplementaryFile deserialize_supplementary(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  SupplementaryFile sf;
  sf.meta = get_meta(r);
  sf.audio.resize(r.get<std::uint64_t>());
  for (auto& ch : sf.audio) {
    ch.resize(r.get<std::uint64_t>());
    for (double& v : ch) v = r.get<double>();
  }
  sf.frames.resize(r.get<std::uint64_t>());
  for (auto& f : sf.frames) {
    f.y = get_matrix(r);
    f.u = get_matrix(r);
    f.v = get_matrix(r);
  }
  if (!r.done()) fail(Errc::format, "supplementary: trailing bytes");
  return sf;
}

}  // namespace psum::transform
