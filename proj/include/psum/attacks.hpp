#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psum/codes.hpp"
#include "psum/crypto.hpp"
#include "psum/protocol.hpp"
#include "psum/transform.hpp"

namespace psum::attacks {

// ------------------------------------------------------------ collusion

enum class CollusionKind { average, min, max, median };
std::string to_string(CollusionKind k);
CollusionKind collusion_kind_from_string(const std::string& s);

// Element-wise aggregate; median of an even count is the lower median.
std::vector<double> collude_streams(std::span<const std::vector<double>> copies, CollusionKind kind);
transform::Content collude_contents(std::span<const transform::Content> copies, CollusionKind kind);

// ------------------------------------------------------------ signal

struct AttackSpec {
  enum class Kind { none, awgn, scale, requantize, resample, lowpass, highpass, echo };
  Kind kind = Kind::none;
  double snr_db = 30.0;
  double scale = 1.0;
  int bits = 16;
  double ratio = 0.5;          // resample: intermediate rate / original rate
  double cutoff = 0.45;        // fraction of Nyquist
  std::size_t taps = 101;      // odd FIR length
  double echo_delay = 0.05;    // seconds
  double echo_decay = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
  // "awgn:30", "scale:1.1", "requantize:16", "resample:0.5", "lowpass:0.45",
  // "highpass:0.05", "echo:0.05:0.3", "none".
  static AttackSpec parse(const std::string& text);
  std::string name() const;
};

std::vector<double> apply_signal_attack(std::span<const double> signal, double sample_rate, const AttackSpec& spec);
// Audio: every attack; frames: awgn, scale and requantize on the Y plane.
transform::Content apply_signal_attack(const transform::Content& content, const AttackSpec& spec);

// Windowed-sinc (Hamming) lowpass taps, unit DC gain.
std::vector<double> lowpass_taps(double cutoff, std::size_t taps);

// ------------------------------------------------------------ protocol

struct CoalitionReport {
  std::uint64_t guesses = 0;
  bool exhausted = false;          // every joint permutation was tried
  std::uint64_t key_matches = 0;   // guesses equal to the true (sigma_1..sigma_n)
  std::uint64_t codeword_matches = 0;  // guesses whose unpermuted bits are some row of the book
  std::uint64_t target_matches = 0;    // guesses reproducing f_i itself
  double success_rate = 0.0;           // key_matches / guesses
  std::uint64_t decrypt_attempts = 0;
  std::uint64_t decrypt_auth_failures = 0;
  bool recovered_with_keys = false;  // only when sigma_j was leaked
  std::vector<std::uint8_t> recovered;
};

// The proxies' joint view: ps_j and the encrypted fragments. `truth` is
// only used to score guesses. With `leaked`, the coalition also holds the
// merchant's sigma_j.
CoalitionReport proxy_coalition_attack(const protocol::CoalitionView& view, const codes::CodeBook& book,
                                       std::uint64_t budget, std::span<const crypto::PermutationKey> truth,
                                       std::uint64_t seed,
                                       std::optional<std::vector<crypto::PermutationKey>> leaked = std::nullopt);

struct ImpersonationOutcome {
  bool accepted = false;
  int abort_step = 0;
  std::string reason;
};

// Attacker replays a captured anonymous certificate (no r), or knows the
// victim's (real_id, r).
ImpersonationOutcome impersonation_attack(protocol::Simulation& sim, const crypto::Certificate& captured,
                                          std::optional<std::pair<std::string, crypto::Bytes>> insider_secret = {});

// Random r guesses against a known pseudonym; returns how many matched.
std::uint64_t pseudonym_guess_trials(const crypto::Pseudonym& target, const std::string& real_id,
                                     std::uint64_t trials, std::size_t r_bytes, std::uint64_t seed);

}  // namespace psum::attacks
