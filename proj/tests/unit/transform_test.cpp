#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/rng.hpp"
#include "psum/transform.hpp"

using namespace psum;
using namespace psum::transform;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  EXPECT_EQ(a.size(), b.size());
  double d = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double energy(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("psum_transform_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Dwt, HaarButterflyByHand) {
  const std::vector<double> x{1, 1, 1, 1};
  const auto p = dwt_forward(x, 1, Wavelet::haar);
  // a_k = (x_2k + x_2k+1)/sqrt2, d_k = (x_2k - x_2k+1)/sqrt2
  ASSERT_EQ(p.approx.size(), 2u);
  EXPECT_NEAR(p.approx[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(p.approx[1], std::sqrt(2.0), 1e-15);
  ASSERT_EQ(p.details.size(), 1u);
  EXPECT_NEAR(p.details[0][0], 0.0, 1e-15);
  EXPECT_NEAR(p.details[0][1], 0.0, 1e-15);

  DwtPyramid q = p;
  q.approx = {std::sqrt(2.0), std::sqrt(2.0)};
  q.details = {{0.0, 0.0}};
  const auto y = dwt_inverse(q);
  ASSERT_EQ(y.size(), 4u);
  for (double v : y) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Dwt, ConstantSignalHasNoDetail) {
  for (auto w : {Wavelet::haar, Wavelet::db4})
    for (int levels = 1; levels <= 5; ++levels) {
      const std::vector<double> x(200, 3.5);
      const auto p = dwt_forward(x, levels, w);
      for (const auto& d : p.details)
        for (double v : d) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(Dwt, PerfectReconstructionAndEnergy) {
  for (auto w : {Wavelet::haar, Wavelet::db4})
    for (std::size_t n : {1024u, 1000u, 77u}) {
      const auto x = random_signal(n, n);
      const auto p = dwt_forward(x, 4, w);
      EXPECT_LE(max_abs_diff(dwt_inverse(p), x), 1e-9);
      if (n == 1024) {
        double e = energy(p.approx);
        for (const auto& d : p.details) e += energy(d);
        EXPECT_NEAR(e / energy(x), 1.0, 1e-9);
      }
    }
}

TEST(Dwt, ZeroPyramidGivesZeroSignal) {
  auto p = dwt_forward(random_signal(64, 1), 3);
  std::fill(p.approx.begin(), p.approx.end(), 0.0);
  for (auto& d : p.details) std::fill(d.begin(), d.end(), 0.0);
  for (double v : dwt_inverse(p)) EXPECT_EQ(v, 0.0);
}

TEST(Dwt, ZeroedApproxReanalysesToZero) {
  auto p = dwt_forward(random_signal(512, 2), 4);
  std::fill(p.approx.begin(), p.approx.end(), 0.0);
  const auto y = dwt_synthesize(p);
  for (double v : dwt_forward(y, 4).approx) EXPECT_LE(std::abs(v), 1e-9);
}

TEST(Dwt, Errors) {
  const std::vector<double> x(8, 1.0);
  EXPECT_THROW(dwt_forward(x, 4), Error);
  EXPECT_THROW(dwt_forward(x, 0), Error);
  auto p = dwt_forward(x, 2);
  p.details[0].pop_back();
  EXPECT_THROW(dwt_inverse(p), Error);
}

TEST(Dwt2, RoundTrip) {
  Matrix m(37, 50);
  const auto v = random_signal(m.data.size(), 3);
  m.data = v;
  const auto p = dwt2_forward(m, 3);
  EXPECT_EQ(p.padded_rows % 8, 0u);
  EXPECT_EQ(p.padded_cols % 8, 0u);
  EXPECT_LE(max_abs_diff(dwt2_inverse(p).data, m.data), 1e-9);
}

TEST(Keyframes, Rules) {
  FrameContent fc;
  auto frame = [](double value) {
    Frame f;
    f.y = f.u = f.v = Matrix(8, 8, value);
    return f;
  };
  fc.frames = {frame(10)};
  EXPECT_EQ(select_keyframes(fc, 1.0), std::vector<std::size_t>{0});
  fc.frames.assign(6, frame(10));
  EXPECT_EQ(select_keyframes(fc, 1.0), std::vector<std::size_t>{0});
  fc.frames.clear();
  for (int i = 0; i < 10; ++i) fc.frames.push_back(frame(i < 5 ? 40 : 200));
  // differences: 0,0,0,0,160,0,0,0,0; mean 160/9; only frame 5 exceeds it
  EXPECT_EQ(select_keyframes(fc, 1.0), (std::vector<std::size_t>{0, 5}));
}

TEST(Partition, ApproxCountTwoSecondsMono) {
  AudioContent a;
  a.sample_rate = 44100;
  a.channels = {random_signal(88200, 4)};
  PartitionOptions o;
  o.code_length = 50;
  const auto part = make_base_file(a, o);
  // 88200 pads to 88208 (next multiple of 16) -> 5513 approximation coefficients
  EXPECT_EQ(part.base.meta.padded_length, 88208u);
  EXPECT_EQ(part.base.meta.approx_per_unit(), 5513u);
  EXPECT_EQ(part.base.variant0.size(), 5513u);
  EXPECT_EQ(part.base.layout.block_size, 5513u / 50);
}

TEST(Partition, VariantsAndSupplementary) {
  const Content c = harness::synthetic_audio(5, {});
  PartitionOptions o;
  o.code_length = 40;
  o.delta = 0.25;
  const auto part = make_base_file(c, o);
  const auto& bf = part.base;
  ASSERT_EQ(bf.variant0.size(), bf.variant1.size());
  for (std::size_t i = 0; i < bf.variant0.size(); ++i) EXPECT_LE(std::abs(bf.variant0[i] - bf.variant1[i]), o.delta);

  // SF alone carries no approximation energy.
  double band = 0, total = 0;
  for (const auto& ch : part.supplementary.audio) {
    const auto p = dwt_forward(ch, o.levels);
    for (double v : p.approx) EXPECT_LE(std::abs(v), 1e-9);
    band += energy(p.approx);
    total += energy(ch);
  }
  EXPECT_LE(band, 1e-9 * total);

  // original approximation + SF gives back the original
  const auto orig = original_approx(c, o);
  const auto back = std::get<AudioContent>(reconstruct(orig, part.supplementary));
  const auto& src = std::get<AudioContent>(c);
  for (std::size_t ch = 0; ch < src.channels.size(); ++ch)
    EXPECT_LE(max_abs_diff(back.channels[ch], src.channels[ch]), 1e-9);

  // zero approximation + SF gives the detail-only signal
  const std::vector<double> zero(orig.size(), 0.0);
  const auto detail = std::get<AudioContent>(reconstruct(zero, part.supplementary));
  for (std::size_t ch = 0; ch < detail.channels.size(); ++ch)
    for (std::size_t i = 0; i < detail.channels[ch].size(); ++i)
      EXPECT_NEAR(detail.channels[ch][i], part.supplementary.audio[ch][i], 1e-12);

  // blind extraction from variant0 / variant1 reconstructions
  const auto zeros = harness::extract_bits(reconstruct(bf.variant0, part.supplementary), bf);
  const auto ones = harness::extract_bits(reconstruct(bf.variant1, part.supplementary), bf);
  EXPECT_EQ(zeros, std::vector<std::uint8_t>(40, 0));
  EXPECT_EQ(ones, std::vector<std::uint8_t>(40, 1));
}

TEST(Partition, Linearity) {
  const Content c = harness::synthetic_audio(6, {0.25, 8000, 1});
  PartitionOptions o;
  o.code_length = 10;
  const auto part = make_base_file(c, o);
  const auto n = part.base.variant0.size();
  const auto a = random_signal(n, 7), b = random_signal(n, 8);
  std::vector<double> ab(n), zero(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) ab[i] = a[i] + b[i];
  const auto sum = std::get<AudioContent>(reconstruct(ab, part.supplementary));
  const auto ra = std::get<AudioContent>(reconstruct(a, part.supplementary));
  const auto rb = std::get<AudioContent>(reconstruct(b, part.supplementary));
  const auto r0 = std::get<AudioContent>(reconstruct(zero, part.supplementary));
  for (std::size_t i = 0; i < sum.channels[0].size(); ++i)
    EXPECT_NEAR(sum.channels[0][i], ra.channels[0][i] + rb.channels[0][i] - r0.channels[0][i], 1e-9);
}

TEST(Partition, Errors) {
  const Content c = harness::synthetic_audio(5, {0.1, 8000, 1});
  PartitionOptions o;
  o.code_length = 10;
  o.delta = 0.0;
  EXPECT_THROW(make_base_file(c, o), Error);
  o.delta = 0.25;
  o.code_length = 100000;  // more blocks than coefficients
  EXPECT_THROW(make_base_file(c, o), Error);
}

TEST(Partition, FramesRoundTrip) {
  harness::SyntheticFrames spec;
  spec.frames = 6;
  const auto fc = harness::synthetic_frames(9, spec);
  const Content c = fc;
  PartitionOptions o;
  o.code_length = 12;
  const auto part = make_base_file(c, o);
  EXPECT_EQ(part.base.meta.keyframes, select_keyframes(fc, o.keyframe_threshold));
  const auto back = std::get<FrameContent>(reconstruct(original_approx(c, o), part.supplementary));
  ASSERT_EQ(back.frames.size(), fc.frames.size());
  for (std::size_t k = 0; k < fc.frames.size(); ++k) {
    EXPECT_LE(max_abs_diff(back.frames[k].y.data, fc.frames[k].y.data), 1e-9);
    EXPECT_LE(max_abs_diff(back.frames[k].u.data, fc.frames[k].u.data), 1e-9);
  }
  std::vector<std::uint8_t> f(12);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = (i * 5) % 3 == 0;
  const auto marked = reconstruct(select_variants(part.base, f), part.supplementary);
  EXPECT_EQ(harness::extract_bits(marked, part.base), f);
}

TEST(WavIo, Pcm16AndFloat32) {
  AudioContent a;
  a.sample_rate = 22050;
  a.channels = {random_signal(500, 10), random_signal(500, 11)};
  for (auto& ch : a.channels)
    for (auto& v : ch) v = std::clamp(v / 4, -1.0, 1.0 - 1.0 / 32768);

  std::stringstream f32;
  write_wav(f32, a, SampleFormat::float32);
  const auto b = read_wav(f32);
  EXPECT_EQ(b.sample_rate, 22050u);
  ASSERT_EQ(b.channels.size(), 2u);
  for (int ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < 500; ++i) EXPECT_EQ(b.channels[ch][i], static_cast<float>(a.channels[ch][i]));

  std::stringstream p16;
  write_wav(p16, a, SampleFormat::pcm16);
  const auto c = read_wav(p16);
  for (int ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < 500; ++i) EXPECT_NEAR(c.channels[ch][i], a.channels[ch][i], 0.5 / 32768 + 1e-12);
  EXPECT_EQ(p16.str().size(), 44u + 500 * 2 * 2);
}

TEST(WavIo, Malformed) {
  std::stringstream junk("RIFF\x04\0\0\0WAVE");
  EXPECT_THROW(read_wav(junk), Error);
  EXPECT_THROW(read_wav(std::filesystem::path("/nonexistent/x.wav")), Error);
}

TEST(BaseFileIo, RoundTripAndHeader) {
  const Content c = harness::synthetic_audio(12, {0.2, 8000, 2});
  PartitionOptions o;
  o.code_length = 16;
  const auto part = make_base_file(c, o);
  std::stringstream ss;
  save_base_file(ss, part.base);
  const auto bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("PSUMBF1\0", 8));
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), static_cast<unsigned>(o.levels));
  EXPECT_EQ(static_cast<unsigned char>(bytes[10]), 2u);  // channels
  EXPECT_EQ(load_base_file(ss), part.base);

  std::string broken = bytes;
  broken[0] = 'X';
  std::stringstream bad(broken);
  EXPECT_THROW(load_base_file(bad), Error);
}

TEST(SupplementaryIo, WavZipAndBytes) {
  const auto dir = temp_dir("sf");
  {
    const Content c = harness::synthetic_audio(13, {0.2, 8000, 2});
    PartitionOptions o;
    o.code_length = 16;
    const auto part = make_base_file(c, o);
    save_supplementary_wav(dir / "sf.wav", part.supplementary);
    const auto back = load_supplementary_wav(dir / "sf.wav", part.base.meta);
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t i = 0; i < back.audio[ch].size(); ++i)
        EXPECT_EQ(back.audio[ch][i], static_cast<float>(part.supplementary.audio[ch][i]));
    EXPECT_EQ(deserialize_supplementary(serialize(part.supplementary)), part.supplementary);
  }
  {
    harness::SyntheticFrames spec;
    spec.frames = 4;
    const Content c = harness::synthetic_frames(14, spec);
    PartitionOptions o;
    o.code_length = 8;
    const auto part = make_base_file(c, o);
    save_supplementary_zip(dir / "sf.zip", part.supplementary);
    std::ifstream in(dir / "sf.zip", std::ios::binary);
    char sig[4];
    in.read(sig, 4);
    EXPECT_EQ(std::string(sig, 4), std::string("PK\x03\x04", 4));
    EXPECT_EQ(load_supplementary_zip(dir / "sf.zip", part.base.meta), part.supplementary);
    EXPECT_EQ(deserialize_supplementary(serialize(part.supplementary)), part.supplementary);
  }
  std::filesystem::remove_all(dir);
}

TEST(FrameIo, DirectoryRoundTrip) {
  const auto dir = temp_dir("frames");
  harness::SyntheticFrames spec;
  spec.frames = 3;
  spec.width = 20;
  spec.height = 12;
  const auto fc = harness::synthetic_frames(15, spec);
  write_frame_dir(dir, fc);
  EXPECT_TRUE(std::filesystem::exists(dir / "header.json"));
  EXPECT_EQ(read_frame_dir(dir), fc);
  std::filesystem::remove_all(dir);
}
