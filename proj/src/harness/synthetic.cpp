#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/rng.hpp"

namespace psum::harness {

transform::AudioContent synthetic_audio(std::uint64_t seed, const SyntheticAudio& spec) {
  require(spec.seconds > 0.0 && spec.sample_rate > 0, "synthetic audio: positive duration and rate");
  require(spec.channels >= 1 && spec.channels <= 2, "synthetic audio: 1 or 2 channels");
  require(spec.max_freq > 20.0, "synthetic audio: max_freq too low");
  Rng rng = make_rng(seed, 0xA0D10);
  const auto n = static_cast<std::size_t>(std::llround(spec.seconds * spec.sample_rate));
  std::uniform_real_distribution<double> freq(20.0, spec.max_freq), phase(0.0, 2.0 * std::numbers::pi),
      amp(0.5, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise);

  transform::AudioContent a;
  a.sample_rate = spec.sample_rate;
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    std::vector<double> f(spec.tones), p(spec.tones), w(spec.tones);
    double wsum = 0.0;
    for (std::size_t k = 0; k < spec.tones; ++k) {
      f[k] = freq(rng);
      p[k] = phase(rng);
      w[k] = amp(rng);
      wsum += w[k];
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / spec.sample_rate;
      double v = 0.0;
      for (std::size_t k = 0; k < spec.tones; ++k) v += 0.7 * w[k] / wsum * std::sin(2.0 * std::numbers::pi * f[k] * t + p[k]);
      if (spec.noise > 0.0) v += noise(rng);
      x[i] = std::clamp(v, -1.0, 1.0);
    }
    a.channels.push_back(std::move(x));
  }
  return a;
}

transform::FrameContent synthetic_frames(std::uint64_t seed, const SyntheticFrames& spec) {
  require(spec.frames >= 2 && spec.width >= 8 && spec.height >= 8, "synthetic frames: at least 2 frames of 8x8");
  Rng rng = make_rng(seed, 0xF4A3E5);
  std::normal_distribution<double> noise(0.0, spec.noise);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Each scene: a smooth gradient with a few blobs that drift per frame.
  struct Scene {
    double gx, gy, base;
    std::vector<std::array<double, 5>> blobs;  // x, y, radius, level, drift
  };
  auto make_scene = [&]() {
    Scene s{u(rng) * 80.0 - 40.0, u(rng) * 80.0 - 40.0, 60.0 + u(rng) * 120.0, {}};
    for (int b = 0; b < 4; ++b)
      s.blobs.push_back({u(rng), u(rng), 0.08 + 0.15 * u(rng), u(rng) * 120.0 - 60.0, u(rng) * 0.02 - 0.01});
    return s;
  };
  const Scene scenes[2] = {make_scene(), make_scene()};
  const std::size_t cut = spec.frames / 2;

  transform::FrameContent out;
  out.fps = spec.fps;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const Scene& s = scenes[f < cut ? 0 : 1];
    const double t = static_cast<double>(f < cut ? f : f - cut);
    transform::Frame fr{transform::Matrix(spec.height, spec.width), transform::Matrix(spec.height, spec.width),
                        transform::Matrix(spec.height, spec.width)};
    for (std::size_t r = 0; r < spec.height; ++r)
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double x = static_cast<double>(c) / spec.width, y = static_cast<double>(r) / spec.height;
        double v = s.base + s.gx * (x - 0.5) + s.gy * (y - 0.5);
        for (const auto& b : s.blobs) {
          const double dx = x - b[0] - b[4] * t, dy = y - b[1];
          v += b[3] * std::exp(-(dx * dx + dy * dy) / (b[2] * b[2]));
        }
        fr.y.at(r, c) = std::clamp(v + noise(rng), 0.0, 255.0);
        fr.u.at(r, c) = std::clamp(128.0 + 0.2 * (v - 128.0), 0.0, 255.0);
        fr.v.at(r, c) = std::clamp(128.0 - 0.1 * (v - 128.0), 0.0, 255.0);
      }
    out.frames.push_back(std::move(fr));
  }
  return out;
}

}  // namespace psum::harness
