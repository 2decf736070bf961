#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "psum/rng.hpp"

namespace psum::crypto {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxSealPlaintext = 4096;
inline constexpr std::size_t kNonceBytes = 24;

using Digest = std::array<std::uint8_t, 32>;
Digest sha256(std::span<const std::uint8_t> data);
std::string to_hex(std::span<const std::uint8_t> data);

// Signing (Ed25519) and sealing (X25519) public halves.
struct PublicKey {
  std::array<std::uint8_t, 32> sign{};
  std::array<std::uint8_t, 32> box{};
  Bytes bytes() const;
  static PublicKey from_bytes(std::span<const std::uint8_t> b);
  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

// Holds the private halves; they never leave this object.
class KeyPair {
 public:
  static KeyPair generate(Rng& rng);
  KeyPair(const KeyPair&) = default;
  KeyPair& operator=(const KeyPair&) = default;
  ~KeyPair();

  const PublicKey& public_key() const { return pub_; }
  Bytes sign(std::span<const std::uint8_t> message) const;
  Bytes open(std::span<const std::uint8_t> ciphertext) const;

 private:
  KeyPair() = default;
  PublicKey pub_;
  std::array<std::uint8_t, 64> sign_secret_{};
  std::array<std::uint8_t, 32> box_secret_{};
};

bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature, const PublicKey& key);

// Public-key encryption of short strings (<= 4 KiB). Ephemeral key from rng.
Bytes seal(std::span<const std::uint8_t> plaintext, const PublicKey& recipient, Rng& rng);
inline Bytes open(std::span<const std::uint8_t> ciphertext, const KeyPair& keys) { return keys.open(ciphertext); }

// ------------------------------------------------------------ certificates

struct Certificate {
  std::string subject;
  PublicKey key;
  std::string issuer;
  std::uint64_t expiry = 0;
  Bytes signature;

  Bytes signed_bytes() const;
  Bytes bytes() const;
  static Certificate from_bytes(std::span<const std::uint8_t> b);
  friend bool operator==(const Certificate&, const Certificate&) = default;
};

class CertificateAuthority {
 public:
  CertificateAuthority(std::string name, Rng& rng);
  const std::string& name() const { return name_; }
  const PublicKey& public_key() const { return keys_.public_key(); }
  Certificate issue(const std::string& subject, const PublicKey& key, std::uint64_t expiry) const;

 private:
  std::string name_;
  KeyPair keys_;
};

bool verify_certificate(const Certificate& cert, const PublicKey& ca_key, std::uint64_t now = 0);

struct Identity {
  std::string real_id;
  KeyPair keys;
  Certificate certificate;
};

Identity make_identity(const std::string& real_id, const CertificateAuthority& ca, Rng& rng);

// ------------------------------------------------------------ pseudonyms

struct Pseudonym {
  Digest value{};
  std::string hex() const { return to_hex(value); }
  static Pseudonym from_hex(const std::string& hex);
  friend bool operator==(const Pseudonym&, const Pseudonym&) = default;
  friend auto operator<=>(const Pseudonym&, const Pseudonym&) = default;
};

// SHA-256(real_id || r); r must be non-empty.
Pseudonym make_pseudonym(const std::string& real_id, std::span<const std::uint8_t> r);

// Anonymous certificate: subject is the pseudonym's hex digest.
Certificate make_anonymous_certificate(const CertificateAuthority& ca_r, const PublicKey& anon_key,
                                       const Pseudonym& pseudonym, std::uint64_t expiry);

// ------------------------------------------------------------ permutations

class PermutationKey {
 public:
  PermutationKey() = default;
  explicit PermutationKey(std::vector<std::uint32_t> map);
  static PermutationKey identity(std::size_t length);
  static PermutationKey random(std::size_t length, Rng& rng);

  std::size_t size() const { return map_.size(); }
  std::uint32_t operator[](std::size_t i) const { return map_[i]; }
  const std::vector<std::uint32_t>& map() const { return map_; }
  PermutationKey inverse() const;
  // (this ∘ first): apply `first`, then this.
  PermutationKey after(const PermutationKey& first) const;

  Bytes bytes() const;
  static PermutationKey from_bytes(std::span<const std::uint8_t> b);
  friend bool operator==(const PermutationKey&, const PermutationKey&) = default;

 private:
  std::vector<std::uint32_t> map_;
};

void check_length(std::size_t data, const PermutationKey& sigma);

// Item i moves to position sigma(i).
template <typename T>
std::vector<T> permute(std::span<const T> data, const PermutationKey& sigma) {
  check_length(data.size(), sigma);
  std::vector<T> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[sigma[i]] = data[i];
  return out;
}

template <typename T>
std::vector<T> unpermute(std::span<const T> data, const PermutationKey& sigma) {
  check_length(data.size(), sigma);
  std::vector<T> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[sigma[i]];
  return out;
}

template <typename T>
std::vector<T> permute(const std::vector<T>& data, const PermutationKey& sigma) {
  return permute(std::span<const T>(data), sigma);
}
template <typename T>
std::vector<T> unpermute(const std::vector<T>& data, const PermutationKey& sigma) {
  return unpermute(std::span<const T>(data), sigma);
}

// ------------------------------------------------------------ symmetric

using SessionKey = std::array<std::uint8_t, 16>;
using Nonce = std::array<std::uint8_t, kNonceBytes>;

SessionKey random_session_key(Rng& rng);
Nonce random_nonce(Rng& rng);

// Authenticated encryption; the output is ciphertext || tag.
Bytes sym_encrypt(std::span<const std::uint8_t> plaintext, const SessionKey& key, const Nonce& nonce);
Bytes sym_decrypt(std::span<const std::uint8_t> ciphertext, const SessionKey& key, const Nonce& nonce);

// Per-transaction encryptor that refuses to reuse a nonce under its key.
class SymmetricChannel {
 public:
  explicit SymmetricChannel(const SessionKey& key) : key_(key) {}
  Bytes encrypt(std::span<const std::uint8_t> plaintext, const Nonce& nonce);
  Bytes decrypt(std::span<const std::uint8_t> ciphertext, const Nonce& nonce) const;

 private:
  SessionKey key_;
  std::set<Nonce> used_;
};

Bytes encode_doubles(std::span<const double> v);
std::vector<double> decode_doubles(std::span<const std::uint8_t> b);

}  // namespace psum::crypto
