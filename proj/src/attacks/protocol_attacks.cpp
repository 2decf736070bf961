#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "psum/attacks.hpp"
#include "psum/error.hpp"
#include "psum/rng.hpp"

namespace psum::attacks {

namespace {

std::string row_key(std::span<const std::uint8_t> bits) { return {bits.begin(), bits.end()}; }

}  // namespace

CoalitionReport proxy_coalition_attack(const protocol::CoalitionView& view, const codes::CodeBook& book,
                                       std::uint64_t budget, std::span<const crypto::PermutationKey> truth,
                                       std::uint64_t seed, std::optional<std::vector<crypto::PermutationKey>> leaked) {
  const std::size_t n = view.lanes.size();
  require(n >= 1, "coalition: empty view");
  if (truth.size() != n) fail(Errc::length_mismatch, "coalition: one true key per lane required");
  for (std::size_t j = 0; j < n; ++j)
    crypto::check_length(view.lanes[j].ps.size(), truth[j]);

  CoalitionReport rep;

  std::vector<std::uint8_t> target;
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = crypto::unpermute(std::span<const std::uint8_t>(view.lanes[j].ps), truth[j]);
    target.insert(target.end(), s.begin(), s.end());
  }
  std::set<std::string> rows;
  for (std::size_t i = 0; i < book.num_users(); ++i) rows.insert(row_key(book.codeword(i)));

  // Odometer over (sigma_1, ..., sigma_n), each stepped by next_permutation.
  std::vector<std::vector<std::uint32_t>> guess(n);
  for (std::size_t j = 0; j < n; ++j) {
    guess[j].resize(view.lanes[j].ps.size());
    std::iota(guess[j].begin(), guess[j].end(), 0u);
  }
  std::vector<std::uint8_t> bits;
  while (rep.guesses < budget) {
    ++rep.guesses;
    bits.clear();
    bool all_true = true;
    for (std::size_t j = 0; j < n; ++j) {
      const auto& ps = view.lanes[j].ps;
      for (std::size_t i = 0; i < ps.size(); ++i) bits.push_back(ps[guess[j][i]]);
      if (!std::equal(guess[j].begin(), guess[j].end(), truth[j].map().begin(), truth[j].map().end()))
        all_true = false;
    }
    if (all_true) ++rep.key_matches;
    if (rows.count(row_key(bits))) ++rep.codeword_matches;
    if (bits == target) ++rep.target_matches;

    std::size_t j = 0;
    while (j < n && !std::next_permutation(guess[j].begin(), guess[j].end())) ++j;  // wrapped lanes reset to identity
    if (j == n) {
      rep.exhausted = true;
      break;
    }
  }
  rep.success_rate = rep.guesses == 0 ? 0.0 : static_cast<double>(rep.key_matches) / static_cast<double>(rep.guesses);

  // The fragments stay sealed under K_j: random keys must never authenticate.
  Rng rng = make_rng(seed, 0xC0A1);
  for (const auto& lane : view.lanes) {
    for (const auto& blk : lane.selected) {
      ++rep.decrypt_attempts;
      try {
        (void)crypto::sym_decrypt(blk.ciphertext, crypto::random_session_key(rng), blk.nonce);
      } catch (const Error& e) {
        if (e.code() == Errc::auth_failure) ++rep.decrypt_auth_failures;
      }
    }
  }

  if (leaked) {
    if (leaked->size() != n) fail(Errc::length_mismatch, "coalition: one leaked key per lane required");
    for (std::size_t j = 0; j < n; ++j) {
      const auto s = crypto::unpermute(std::span<const std::uint8_t>(view.lanes[j].ps), (*leaked)[j]);
      rep.recovered.insert(rep.recovered.end(), s.begin(), s.end());
    }
    rep.recovered_with_keys = rep.recovered == target;
  }
  return rep;
}

ImpersonationOutcome impersonation_attack(protocol::Simulation& sim, const crypto::Certificate& captured,
                                          std::optional<std::pair<std::string, crypto::Bytes>> insider_secret) {
  protocol::BuyerSpec spec;
  spec.real_id = "mallory";
  if (insider_secret)
    spec.insider_secret = std::move(insider_secret);
  else
    spec.replay_certificate = captured;
  spec.start_tick = sim.network().now();
  const std::size_t who = sim.add_buyer(spec);
  const auto address = sim.buyer_address(who);
  ImpersonationOutcome out;
  for (const auto& r : sim.run()) {
    if (r.address != address) continue;
    out.accepted = r.completed && !r.aborted;
    out.abort_step = r.abort_step;
    out.reason = r.abort_reason;
  }
  return out;
}

std::uint64_t pseudonym_guess_trials(const crypto::Pseudonym& target, const std::string& real_id,
                                     std::uint64_t trials, std::size_t r_bytes, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x9E55);
  crypto::Bytes r(r_bytes);
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    fill_bytes(rng, r);
    if (crypto::make_pseudonym(real_id, r) == target) ++hits;
  }
  return hits;
}

}  // namespace psum::attacks
