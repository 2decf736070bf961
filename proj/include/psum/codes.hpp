#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "psum/rng.hpp"

namespace psum::codes {

// Rate constant alpha_0 of the three-pirate code length bound
// eps_0 = N * exp(-alpha_0 * m).
inline constexpr long double kAlpha0 = 0.0725L;

struct CodeParams {
  std::uint32_t num_users = 1;        // N
  std::uint16_t coalition_bound = 3;  // c
  double error_prob = 0.01;           // epsilon
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const CodeParams&, const CodeParams&) = default;
};

// m = ceil(ln(N / eps) / alpha_0), evaluated in extended precision.
std::size_t code_length(std::uint64_t num_users, double error_prob);

// Distribution the per-column biases p_j are drawn from.
class BiasDistribution {
 public:
  struct Arcsine {
    double cutoff;
  };
  struct Discrete {
    std::vector<double> support;
    std::vector<double> weights;  // normalised on construction
  };

  // Classical Tardos density on [t, 1-t].
  static BiasDistribution arcsine(double cutoff);
  // Arcsine with the default cutoff t = 1/(300 c).
  static BiasDistribution tardos_default(unsigned coalition_bound);
  static BiasDistribution discrete(std::vector<double> support, std::vector<double> weights);
  // Text file: one "p weight" pair per line, '#' starts a comment.
  static BiasDistribution load(const std::filesystem::path& path);

  double sample(Rng& rng) const;
  // Smallest distance of any bias value from {0, 1}.
  double cutoff() const;
  bool is_discrete() const { return std::holds_alternative<Discrete>(repr_); }
  const std::variant<Arcsine, Discrete>& repr() const { return repr_; }

 private:
  explicit BiasDistribution(std::variant<Arcsine, Discrete> r) : repr_(std::move(r)) {}
  std::variant<Arcsine, Discrete> repr_;
};

class CodeBook {
 public:
  CodeBook(CodeParams params, std::vector<double> bias, std::vector<std::uint8_t> bits);

  const CodeParams& params() const { return params_; }
  std::size_t num_users() const { return params_.num_users; }
  std::size_t length() const { return bias_.size(); }
  std::span<const double> bias() const { return bias_; }
  std::span<const std::uint8_t> codeword(std::size_t user) const;
  std::uint8_t bit(std::size_t user, std::size_t pos) const { return bits_[user * length() + pos]; }

  // Binary container "PSUMCB1\0", little-endian, rows bit-packed.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static CodeBook load(std::istream& in);
  static CodeBook load(const std::filesystem::path& path);

  friend bool operator==(const CodeBook&, const CodeBook&) = default;

 private:
  CodeParams params_;
  std::vector<double> bias_;
  std::vector<std::uint8_t> bits_;  // N x m, row-major, values in {0,1}
};

// Biases are drawn column by column first, then the bits row-major, all
// from one generator seeded with params.seed.
CodeBook generate_code(const CodeParams& params);
CodeBook generate_code(const CodeParams& params, const BiasDistribution& bias);

enum class Mark : std::int8_t { zero = 0, one = 1, erased = -1 };
using PiratedCodeword = std::vector<Mark>;

PiratedCodeword to_pirated(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> to_bits(const PiratedCodeword& pc);  // erased -> 0

// Symmetric Tardos score of one position.
double position_score(double p, Mark pirate, std::uint8_t user_bit);
std::vector<double> score_all(const PiratedCodeword& pc, const CodeBook& book);

struct ThresholdPolicy {
  enum class Kind { calibrated, fixed };
  Kind kind = Kind::calibrated;
  double fixed_value = 0.0;
  // Target per-user innocent tail; 0 selects eps / N.
  double tail = 0.0;
  // Innocent samples; 0 selects max(1000, ceil(10 / tail)).
  std::size_t samples = 0;
  std::uint64_t seed = 0x5eedULL;

  static ThresholdPolicy fixed(double z) { return {Kind::fixed, z, 0.0, 0, 0}; }
};

double default_tail(const CodeParams& params);
std::size_t default_samples(double tail);

// Empirical (1 - tail)-quantile of innocent scores against this book's bias
// vector: fresh innocent codewords drawn from p, pirate bits drawn uniformly.
double calibrate_threshold(const CodeBook& book, double tail, std::size_t samples, std::uint64_t seed);
double resolve_threshold(const CodeBook& book, const ThresholdPolicy& policy);

struct TraceResult {
  std::vector<double> scores;
  std::vector<std::size_t> accused;  // 0-based user indices, ascending
  double threshold = 0.0;
};

TraceResult trace(const PiratedCodeword& pc, const CodeBook& book, const ThresholdPolicy& policy = {});

struct CollusionStrategy {
  enum class Kind { majority, minority, random_choice, all_ones_where_detectable, erase_detectable };
  Kind kind = Kind::majority;
  double delta = 0.0;  // erasure budget fraction for erase_detectable
};

// Codeword-level collusion under the (delta-)marking assumption.
PiratedCodeword collude_codewords(std::span<const std::span<const std::uint8_t>> rows,
                                  const CollusionStrategy& strategy, std::uint64_t seed = 0);
PiratedCodeword collude_codewords(const CodeBook& book, std::span<const std::size_t> users,
                                  const CollusionStrategy& strategy, std::uint64_t seed = 0);

}  // namespace psum::codes
