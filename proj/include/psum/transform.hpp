#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "psum/watermark.hpp"

namespace psum::transform {

enum class Wavelet : std::uint8_t { haar = 0, db4 = 1 };

std::span<const double> lowpass_filter(Wavelet w);
std::string to_string(Wavelet w);
Wavelet wavelet_from_string(const std::string& name);

// ---------------------------------------------------------------- 1-D

// Periodised orthonormal DWT over a signal symmetrically extended to the
// next multiple of 2^levels. details[0] is the finest level d_1.
struct DwtPyramid {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  int levels = 0;
  Wavelet wavelet = Wavelet::db4;
  std::size_t original_length = 0;
  std::size_t padded_length = 0;
};

std::size_t padded_size(std::size_t n, int levels);
// Half-sample symmetric extension of the tail up to `target` samples.
std::vector<double> pad_symmetric(std::span<const double> x, std::size_t target);

DwtPyramid dwt_forward(std::span<const double> signal, int levels, Wavelet w = Wavelet::db4);
// Synthesis without trimming (padded_length samples).
std::vector<double> dwt_synthesize(const DwtPyramid& p);
// Synthesis trimmed back to original_length.
std::vector<double> dwt_inverse(const DwtPyramid& p);

// ---------------------------------------------------------------- 2-D

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix pad_symmetric(const Matrix& m, std::size_t rows, std::size_t cols);
Matrix crop(const Matrix& m, std::size_t rows, std::size_t cols);

struct DwtPyramid2D {
  Matrix approx;
  std::vector<std::array<Matrix, 3>> details;  // per level: LH, HL, HH
  int levels = 0;
  Wavelet wavelet = Wavelet::db4;
  std::size_t original_rows = 0, original_cols = 0;
  std::size_t padded_rows = 0, padded_cols = 0;
};

DwtPyramid2D dwt2_forward(const Matrix& image, int levels, Wavelet w = Wavelet::db4);
Matrix dwt2_synthesize(const DwtPyramid2D& p);
Matrix dwt2_inverse(const DwtPyramid2D& p);

// ---------------------------------------------------------------- content

struct AudioContent {
  unsigned sample_rate = 44100;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
  void validate() const;
  std::vector<double> interleaved() const;
  friend bool operator==(const AudioContent&, const AudioContent&) = default;
};

struct Frame {
  Matrix y, u, v;  // luminance and chrominance planes, same size
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameContent {
  double fps = 25.0;
  std::vector<Frame> frames;

  void validate() const;
  friend bool operator==(const FrameContent&, const FrameContent&) = default;
};

using Content = std::variant<AudioContent, FrameContent>;

// Frame 0 plus every frame whose mean absolute luminance difference to its
// predecessor exceeds threshold_factor times the mean of those differences.
std::vector<std::size_t> select_keyframes(const FrameContent& content, double threshold_factor);

// ---------------------------------------------------------------- partition

enum class ContentKind : std::uint8_t { audio = 0, frames = 1 };

struct PartitionMeta {
  ContentKind kind = ContentKind::audio;
  int levels = 4;
  Wavelet wavelet = Wavelet::db4;
  // audio
  unsigned sample_rate = 0;
  std::size_t channels = 0;
  std::size_t original_length = 0;  // samples per channel
  std::size_t padded_length = 0;
  // frames
  double fps = 0.0;
  std::size_t frame_count = 0;
  std::size_t width = 0, height = 0;
  std::size_t padded_width = 0, padded_height = 0;
  std::vector<std::size_t> keyframes;

  std::size_t padding() const;
  // a_L coefficients contributed per channel (audio) or per key frame.
  std::size_t approx_per_unit() const;
  std::size_t units() const;
  std::size_t approx_total() const { return approx_per_unit() * units(); }
  friend bool operator==(const PartitionMeta&, const PartitionMeta&) = default;
};

struct BaseFile {
  std::vector<double> variant0;  // all-zeros embedded
  std::vector<double> variant1;  // all-ones embedded
  watermark::BlockLayout layout;
  double delta = 0.0;
  PartitionMeta meta;
  friend bool operator==(const BaseFile&, const BaseFile&) = default;
};

// Detail-only reconstruction. Audio channels and key-frame luminance are
// kept at padded size so that the approximation band stays exactly empty.
struct SupplementaryFile {
  PartitionMeta meta;
  std::vector<std::vector<double>> audio;
  std::vector<Frame> frames;
  friend bool operator==(const SupplementaryFile&, const SupplementaryFile&) = default;
};

struct PartitionOptions {
  int levels = 4;
  Wavelet wavelet = Wavelet::db4;
  double delta = 0.25;
  std::size_t code_length = 0;  // number of fingerprint bits (blocks)
  double keyframe_threshold = 3.0;
};

struct Partition {
  BaseFile base;
  SupplementaryFile supplementary;
};

Partition make_base_file(const Content& content, const PartitionOptions& opts);
Partition make_base_file(const AudioContent& content, const PartitionOptions& opts);
Partition make_base_file(const FrameContent& content, const PartitionOptions& opts);

// Level-L approximation stream of `content` laid out as in the base file.
std::vector<double> extract_approx(const Content& content, const PartitionMeta& meta);
// Level-L approximation of the original content (the unembedded base).
std::vector<double> original_approx(const Content& content, const PartitionOptions& opts);

// Synthesis of the approximation stream with the SF's details.
Content reconstruct(std::span<const double> approx, const SupplementaryFile& sf);

// Fingerprinted approximation from the two base-file variants.
std::vector<double> select_variants(const BaseFile& bf, std::span<const std::uint8_t> bits);

// ---------------------------------------------------------------- I/O

enum class SampleFormat { pcm16, float32 };

AudioContent read_wav(const std::filesystem::path& path);
AudioContent read_wav(std::istream& in);
void write_wav(const std::filesystem::path& path, const AudioContent& audio, SampleFormat fmt);
void write_wav(std::ostream& out, const AudioContent& audio, SampleFormat fmt);

// Base-file container "PSUMBF1\0" plus a trailing "PSUMBFX\0" extension
// carrying what the fixed header cannot (block count, rate, frame layout).
void save_base_file(const std::filesystem::path& path, const BaseFile& bf);
void save_base_file(std::ostream& out, const BaseFile& bf);
BaseFile load_base_file(const std::filesystem::path& path);
BaseFile load_base_file(std::istream& in);

// Audio SF: 32-bit float WAV of the padded detail-only signal.
void save_supplementary_wav(const std::filesystem::path& path, const SupplementaryFile& sf);
SupplementaryFile load_supplementary_wav(const std::filesystem::path& path, const PartitionMeta& meta);

// Frame directory: header.json + frame_NNNNNN.bin (planar Y, U, V as f64 LE).
FrameContent read_frame_dir(const std::filesystem::path& dir);
void write_frame_dir(const std::filesystem::path& dir, const FrameContent& content);
// Frame SF: deflate ZIP archive with the same layout.
void save_supplementary_zip(const std::filesystem::path& path, const SupplementaryFile& sf);
SupplementaryFile load_supplementary_zip(const std::filesystem::path& path, const PartitionMeta& meta);

// Byte serialisation used when the SF travels over the simulated network.
std::vector<std::uint8_t> serialize(const SupplementaryFile& sf);
SupplementaryFile deserialize_supplementary(const std::vector<std::uint8_t>& bytes);

}  // namespace psum::transform
