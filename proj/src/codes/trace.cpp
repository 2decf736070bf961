#include <algorithm>
#include <cmath>

#include "psum/codes.hpp"
#include "psum/error.hpp"

namespace psum::codes {

PiratedCodeword to_pirated(std::span<const std::uint8_t> bits) {
  PiratedCodeword pc(bits.size());
  for (std::size_t j = 0; j < bits.size(); ++j) pc[j] = bits[j] ? Mark::one : Mark::zero;
  return pc;
}

std::vector<std::uint8_t> to_bits(const PiratedCodeword& pc) {
  std::vector<std::uint8_t> out(pc.size());
  for (std::size_t j = 0; j < pc.size(); ++j) out[j] = pc[j] == Mark::one ? 1 : 0;
  return out;
}

double position_score(double p, Mark pirate, std::uint8_t user_bit) {
  switch (pirate) {
    case Mark::one:
      return user_bit ? std::sqrt((1.0 - p) / p) : -std::sqrt(p / (1.0 - p));
    case Mark::zero:
      return user_bit ? -std::sqrt((1.0 - p) / p) : std::sqrt(p / (1.0 - p));
    case Mark::erased:
      return 0.0;
  }
  return 0.0;
}

std::vector<double> score_all(const PiratedCodeword& pc, const CodeBook& book) {
  if (pc.size() != book.length()) fail(Errc::length_mismatch, "trace: pirated codeword length differs from code length");
  const std::size_t m = book.length();
  const auto p = book.bias();
  // Per-position scores for (user bit 0, user bit 1).
  std::vector<double> s0(m), s1(m);
  for (std::size_t j = 0; j < m; ++j) {
    s0[j] = position_score(p[j], pc[j], 0);
    s1[j] = position_score(p[j], pc[j], 1);
  }
  std::vector<double> scores(book.num_users(), 0.0);
  for (std::size_t i = 0; i < book.num_users(); ++i) {
    const auto row = book.codeword(i);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += row[j] ? s1[j] : s0[j];
    scores[i] = s;
  }
  return scores;
}

double default_tail(const CodeParams& params) { return params.error_prob / params.num_users; }

std::size_t default_samples(double tail) {
  return std::max<std::size_t>(1000, static_cast<std::size_t>(std::ceil(10.0 / tail)));
}

double calibrate_threshold(const CodeBook& book, double tail, std::size_t samples, std::uint64_t seed) {
  require(tail > 0.0 && tail < 1.0, "calibrate_threshold: tail must lie in (0,1)");
  require(samples >= 1, "calibrate_threshold: need at least one sample");
  const std::size_t m = book.length();
  const auto p = book.bias();
  std::vector<std::uint64_t> cut(m);
  std::vector<double> g1(m), g0(m);
  for (std::size_t j = 0; j < m; ++j) {
    cut[j] = static_cast<std::uint64_t>(std::ldexp(p[j], 63));
    g1[j] = std::sqrt((1.0 - p[j]) / p[j]);
    g0[j] = std::sqrt(p[j] / (1.0 - p[j]));
  }
  Rng rng(derive_seed(seed, book.params().seed));
  std::vector<double> innocent(samples);
  for (auto& score : innocent) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const std::uint64_t x = rng();
      const bool pirate_one = x & 1u;
      const bool user_one = (x >> 1) < cut[j];
      if (pirate_one) s += user_one ? g1[j] : -g0[j];
      else s += user_one ? -g1[j] : g0[j];
    }
    score = s;
  }
  auto k = static_cast<std::size_t>(std::ceil((1.0 - tail) * static_cast<double>(samples)));
  k = std::min(std::max<std::size_t>(k, 1), samples) - 1;
  std::nth_element(innocent.begin(), innocent.begin() + static_cast<std::ptrdiff_t>(k), innocent.end());
  return innocent[k];
}

double resolve_threshold(const CodeBook& book, const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::fixed) return policy.fixed_value;
  const double tail = policy.tail > 0.0 ? policy.tail : default_tail(book.params());
  const std::size_t samples = policy.samples > 0 ? policy.samples : default_samples(tail);
  return calibrate_threshold(book, tail, samples, policy.seed);
}

TraceResult trace(const PiratedCodeword& pc, const CodeBook& book, const ThresholdPolicy& policy) {
  TraceResult r;
  r.scores = score_all(pc, book);
  r.threshold = resolve_threshold(book, policy);
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    if (r.scores[i] >= r.threshold) r.accused.push_back(i);
  return r;
}

}  // namespace psum::codes
