#include <algorithm>
#include <numeric>

#include "psum/crypto.hpp"
#include "psum/detail/binio.hpp"
#include "psum/error.hpp"

namespace psum::crypto {

PermutationKey::PermutationKey(std::vector<std::uint32_t> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (auto v : map_) {
    if (v >= map_.size() || seen[v]) fail(Errc::invalid_argument, "permutation key is not a bijection");
    seen[v] = true;
  }
}

PermutationKey PermutationKey::identity(std::size_t length) {
  std::vector<std::uint32_t> m(length);
  std::iota(m.begin(), m.end(), 0u);
  return PermutationKey(std::move(m));
}

PermutationKey PermutationKey::random(std::size_t length, Rng& rng) {
  std::vector<std::uint32_t> m(length);
  std::iota(m.begin(), m.end(), 0u);
  // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
  for (std::size_t i = length; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(m[i - 1], m[pick(rng)]);
  }
  return PermutationKey(std::move(m));
}

PermutationKey PermutationKey::inverse() const {
  std::vector<std::uint32_t> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = static_cast<std::uint32_t>(i);
  return PermutationKey(std::move(inv));
}

PermutationKey PermutationKey::after(const PermutationKey& first) const {
  check_length(first.size(), *this);
  std::vector<std::uint32_t> m(map_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = map_[first[i]];
  return PermutationKey(std::move(m));
}

Bytes PermutationKey::bytes() const {
  detail::ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(map_.size()));
  for (auto v : map_) w.put(v);
  return w.take();
}

PermutationKey PermutationKey::from_bytes(std::span<const std::uint8_t> b) {
  const Bytes copy(b.begin(), b.end());
  detail::ByteReader r(copy);
  const auto n = r.get<std::uint32_t>();
  if (static_cast<std::uint64_t>(n) * 4 + 4 != b.size()) fail(Errc::format, "permutation key: bad length");
  std::vector<std::uint32_t> m(n);
  for (auto& v : m) v = r.get<std::uint32_t>();
  return PermutationKey(std::move(m));
}

void check_length(std::size_t data, const PermutationKey& sigma) {
  if (data != sigma.size())
    fail(Errc::length_mismatch,
         "permutation of length " + std::to_string(sigma.size()) + " applied to " + std::to_string(data) + " items");
}

}  // namespace psum::crypto
