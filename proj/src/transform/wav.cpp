#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "psum/detail/binio.hpp"
#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool tag_is(const char* got, const char* want) { return std::memcmp(got, want, 4) == 0; }

}  // namespace

AudioContent read_wav(std::istream& in) {
  using detail::get_le;
  char tag[4];
  if (!in.read(tag, 4) || !tag_is(tag, "RIFF")) fail(Errc::format, "wav: missing RIFF header");
  get_le<std::uint32_t>(in);
  if (!in.read(tag, 4) || !tag_is(tag, "WAVE")) fail(Errc::format, "wav: missing WAVE tag");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const auto size = get_le<std::uint32_t>(in);
    if (tag_is(tag, "fmt ")) {
      if (size < 16) fail(Errc::format, "wav: short fmt chunk");
      format = get_le<std::uint16_t>(in);
      channels = get_le<std::uint16_t>(in);
      rate = get_le<std::uint32_t>(in);
      get_le<std::uint32_t>(in);  // byte rate
      get_le<std::uint16_t>(in);  // block align
      bits = get_le<std::uint16_t>(in);
      std::uint32_t consumed = 16;
      if (format == kFormatExtensible && size >= 40) {
        get_le<std::uint16_t>(in);  // cbSize
        get_le<std::uint16_t>(in);  // valid bits
        get_le<std::uint32_t>(in);  // channel mask
        format = get_le<std::uint16_t>(in);
        consumed = 26;
      }
      in.ignore(size - consumed + (size & 1));
      have_fmt = true;
    } else if (tag_is(tag, "data")) {
      if (!have_fmt) fail(Errc::format, "wav: data chunk before fmt chunk");
      if (channels == 0) fail(Errc::format, "wav: zero channels");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) fail(Errc::format, "wav: only 16-bit PCM and 32-bit float are supported");
      const std::size_t frame_bytes = channels * (bits / 8);
      const std::size_t frames = size / frame_bytes;
      AudioContent audio;
      audio.sample_rate = rate;
      audio.channels.assign(channels, std::vector<double>(frames));
      for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t c = 0; c < channels; ++c)
          audio.channels[c][i] = pcm16 ? get_le<std::int16_t>(in) / 32768.0 : static_cast<double>(get_le<float>(in));
      return audio;
    } else {
      in.ignore(size + (size & 1));
    }
  }
  fail(Errc::format, "wav: no data chunk");
}

AudioContent read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path.string());
  return read_wav(in);
}

void write_wav(std::ostream& out, const AudioContent& audio, SampleFormat fmt) {
  using detail::put_le;
  require(!audio.channels.empty(), "wav: no channels");
  const auto channels = static_cast<std::uint16_t>(audio.channels.size());
  const std::uint16_t bits = fmt == SampleFormat::pcm16 ? 16 : 32;
  const std::uint32_t block = channels * bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(audio.frames() * block);
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, fmt == SampleFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, audio.sample_rate);
  put_le<std::uint32_t>(out, audio.sample_rate * block);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < audio.frames(); ++i)
    for (const auto& ch : audio.channels) {
      if (fmt == SampleFormat::pcm16) {
        const double s = std::clamp(std::round(ch[i] * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(s));
      } else {
        put_le<float>(out, static_cast<float>(ch[i]));
      }
    }
  if (!out) fail(Errc::io, "wav: write failed");
}

void write_wav(const std::filesystem::path& path, const AudioContent& audio, SampleFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open " + path.string());
  write_wav(out, audio, fmt);
}

}  // namespace psum::transform
