#include "psum/error.hpp"
#include "psum/transform.hpp"

namespace psum::transform {

void AudioContent::validate() const {
  require(channels.size() == 1 || channels.size() == 2, "audio: expected 1 or 2 channels");
  require(sample_rate > 0, "audio: sample rate must be positive");
  for (const auto& ch : channels)
    if (ch.size() != channels.front().size()) fail(Errc::length_mismatch, "audio: channel lengths differ");
}

std::vector<double> AudioContent::interleaved() const {
  std::vector<double> out;
  out.reserve(frames() * channels.size());
  for (std::size_t i = 0; i < frames(); ++i)
    for (const auto& ch : channels) out.push_back(ch[i]);
  return out;
}

void FrameContent::validate() const {
  require(!frames.empty(), "frames: no frames");
  require(fps > 0.0, "frames: fps must be positive");
  const auto& f0 = frames.front().y;
  require(f0.rows > 0 && f0.cols > 0, "frames: empty frame");
  for (const auto& f : frames)
    for (const Matrix* m : {&f.y, &f.u, &f.v})
      if (m->rows != f0.rows || m->cols != f0.cols) fail(Errc::length_mismatch, "frames: plane sizes differ");
}

}  // namespace psum::transform
