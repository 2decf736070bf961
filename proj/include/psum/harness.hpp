#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "psum/attacks.hpp"
#include "psum/codes.hpp"
#include "psum/transform.hpp"

namespace psum::harness {

// ------------------------------------------------------------ content

struct SyntheticAudio {
  double seconds = 1.0;
  unsigned sample_rate = 44100;
  std::size_t channels = 2;
  std::size_t tones = 4;       // sinusoids below max_freq
  double max_freq = 3000.0;
  double noise = 0.01;         // white noise standard deviation
};
transform::AudioContent synthetic_audio(std::uint64_t seed, const SyntheticAudio& spec = {});

struct SyntheticFrames {
  std::size_t frames = 8;  // split evenly between two scenes
  std::size_t width = 64, height = 48;
  double fps = 25.0;
  double noise = 1.0;
};
transform::FrameContent synthetic_frames(std::uint64_t seed, const SyntheticFrames& spec = {});

// Loads a WAV file or a frame directory.
transform::Content load_content(const std::filesystem::path& path);
void save_content(const std::filesystem::path& path, const transform::Content& content);

// ------------------------------------------------------------ oracle

// QIM of f straight into the level-L approximation, no base file, no protocol.
std::vector<double> oracle_embed_approx(const transform::Content& content, std::span<const std::uint8_t> f,
                                        double delta, int levels);
transform::Content oracle_direct_embed(const transform::Content& content, std::span<const std::uint8_t> f,
                                       double delta, int levels);

// Blind extraction with the base file's layout.
std::vector<std::uint8_t> extract_bits(const transform::Content& content, const transform::BaseFile& bf,
                                       bool normalize_gain = false);

// Signal-domain PSNR over every sample (audio peak 1, frames peak 255).
double content_psnr(const transform::Content& a, const transform::Content& b);
double content_peak(const transform::Content& c);

// ------------------------------------------------------------ scenario

struct BuyerEntry {
  std::string id;
  std::uint64_t start_tick = 0;
};

struct ContentSpec {
  std::optional<std::string> path;
  std::string synthetic = "audio";  // "audio" | "frames"
  SyntheticAudio audio;
  SyntheticFrames frames;
};

struct CollusionSpec {
  attacks::CollusionKind kind = attacks::CollusionKind::average;
  std::vector<std::size_t> members;  // buyer indices
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::uint32_t N = 8;
  std::uint16_t c = 3;
  double epsilon = 0.01;
  std::size_t n_proxies = 3;
  std::uint64_t tau_ticks = 100;
  std::size_t batch_size = 2;
  std::vector<BuyerEntry> buyers;
  ContentSpec content;
  double delta = 0.25;
  int levels = 4;
  std::vector<std::string> attacks;
  std::optional<CollusionSpec> collusion;
  double theta = 0.9;
  std::optional<std::string> bias_file;

  // Errc::config on schema problems (including a missing "seed").
  static ScenarioConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ScenarioConfig load(const std::filesystem::path& path);
};

struct MetricRow {
  std::string buyer;
  std::string attack;
  double ber = 0.0;
  double nc = 0.0;
  double psnr = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  nlohmann::json json;  // schema "psum-report/1"
  std::vector<MetricRow> metrics;
  std::vector<CheckResult> checks;
  std::string transcripts_jsonl;

  bool all_passed() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;                  // overrides the config
  std::optional<std::vector<std::string>> attacks;    // overrides the config
  bool verbose = false;
  bool deterministic = false;  // omit wall-clock fields
};

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});
void write_report(const ScenarioReport& report, const std::filesystem::path& out_dir);

// CSV with header "buyer,attack,ber,nc,psnr".
std::string metrics_csv(std::span<const MetricRow> rows);
// Rebuilds the metrics CSV from a run directory's report.json.
std::string report_csv(const std::filesystem::path& run_dir);

bool deterministic_from_env();

}  // namespace psum::harness
