#include <cmath>

#include "psum/codes.hpp"
#include "psum/error.hpp"

namespace psum::codes {

PiratedCodeword collude_codewords(std::span<const std::span<const std::uint8_t>> rows,
                                  const CollusionStrategy& strategy, std::uint64_t seed) {
  if (rows.empty()) fail(Errc::invalid_argument, "collude_codewords: no colluders");
  const std::size_t m = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != m) fail(Errc::length_mismatch, "collude_codewords: codewords differ in length");
  require(strategy.delta >= 0.0 && strategy.delta <= 1.0, "collude_codewords: delta must lie in [0,1]");

  Rng rng(seed);
  const std::size_t u = rows.size();
  const bool erasing = strategy.kind == CollusionStrategy::Kind::erase_detectable;
  std::size_t budget = erasing ? static_cast<std::size_t>(std::floor(strategy.delta * static_cast<double>(m))) : 0;

  PiratedCodeword pc(m, Mark::zero);
  std::vector<std::size_t> undetectable;
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t ones = 0;
    for (const auto& r : rows) ones += r[j];
    if (ones == 0 || ones == u) {
      pc[j] = ones ? Mark::one : Mark::zero;
      undetectable.push_back(j);
      continue;
    }
    const bool majority_one = 2 * ones > u;  // ties -> 0
    switch (strategy.kind) {
      case CollusionStrategy::Kind::majority:
        pc[j] = majority_one ? Mark::one : Mark::zero;
        break;
      case CollusionStrategy::Kind::minority:
        pc[j] = majority_one ? Mark::zero : Mark::one;
        break;
      case CollusionStrategy::Kind::random_choice:
        pc[j] = rows[rng() % u][j] ? Mark::one : Mark::zero;
        break;
      case CollusionStrategy::Kind::all_ones_where_detectable:
        pc[j] = Mark::one;
        break;
      case CollusionStrategy::Kind::erase_detectable:
        if (budget > 0) {
          pc[j] = Mark::erased;
          --budget;
        } else {
          pc[j] = majority_one ? Mark::one : Mark::zero;
        }
        break;
    }
  }
  // Leftover delta budget may be spent on undetectable positions.
  for (std::size_t k = 0; k < undetectable.size() && budget > 0; ++k, --budget) pc[undetectable[k]] = Mark::erased;
  return pc;
}

PiratedCodeword collude_codewords(const CodeBook& book, std::span<const std::size_t> users,
                                  const CollusionStrategy& strategy, std::uint64_t seed) {
  std::vector<std::span<const std::uint8_t>> rows;
  rows.reserve(users.size());
  for (auto i : users) rows.push_back(book.codeword(i));
  return collude_codewords(rows, strategy, seed);
}

}  // namespace psum::codes
