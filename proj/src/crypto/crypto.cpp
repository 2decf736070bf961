#include "psum/crypto.hpp"

#include <sodium.h>

#include <cstring>

#include "psum/detail/binio.hpp"
#include "psum/error.hpp"

namespace psum::crypto {
namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) fail(Errc::invalid_argument, "libsodium initialisation failed");
}

constexpr char kSessionContext[] = "psum.session.v1";

std::array<std::uint8_t, crypto_aead_xchacha20poly1305_ietf_KEYBYTES> derive_aead_key(const SessionKey& key) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_aead_xchacha20poly1305_ietf_KEYBYTES> out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(kSessionContext),
                     sizeof(kSessionContext) - 1, key.data(), key.size());
  return out;
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  ensure_sodium();
  Digest d{};
  crypto_hash_sha256(d.data(), data.data(), data.size());
  return d;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(data.size() * 2);
  for (auto b : data) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

Bytes PublicKey::bytes() const {
  Bytes b(sign.begin(), sign.end());
  b.insert(b.end(), box.begin(), box.end());
  return b;
}

PublicKey PublicKey::from_bytes(std::span<const std::uint8_t> b) {
  if (b.size() != 64) fail(Errc::format, "public key must be 64 bytes");
  PublicKey k;
  std::memcpy(k.sign.data(), b.data(), 32);
  std::memcpy(k.box.data(), b.data() + 32, 32);
  return k;
}

KeyPair KeyPair::generate(Rng& rng) {
  ensure_sodium();
  KeyPair kp;
  std::array<std::uint8_t, 32> seed{};
  fill_bytes(rng, seed);
  crypto_sign_seed_keypair(kp.pub_.sign.data(), kp.sign_secret_.data(), seed.data());
  fill_bytes(rng, seed);
  crypto_box_seed_keypair(kp.pub_.box.data(), kp.box_secret_.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

KeyPair::~KeyPair() {
  sodium_memzero(sign_secret_.data(), sign_secret_.size());
  sodium_memzero(box_secret_.data(), box_secret_.size());
}

Bytes KeyPair::sign(std::span<const std::uint8_t> message) const {
  ensure_sodium();
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), sign_secret_.data());
  return sig;
}

Bytes KeyPair::open(std::span<const std::uint8_t> ciphertext) const {
  ensure_sodium();
  if (ciphertext.size() < crypto_box_SEALBYTES) fail(Errc::auth_failure, "sealed message too short");
  Bytes out(ciphertext.size() - crypto_box_SEALBYTES);
  if (crypto_box_seal_open(out.data(), ciphertext.data(), ciphertext.size(), pub_.box.data(),
                           box_secret_.data()) != 0)
    fail(Errc::auth_failure, "sealed message failed authentication");
  return out;
}

bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature, const PublicKey& key) {
  ensure_sodium();
  if (signature.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), key.sign.data()) == 0;
}

// Same wire format as crypto_box_seal, but the ephemeral key comes from the
// caller's rng so runs are reproducible.
Bytes seal(std::span<const std::uint8_t> plaintext, const PublicKey& recipient, Rng& rng) {
  ensure_sodium();
  if (plaintext.size() > kMaxSealPlaintext)
    fail(Errc::oversize, "seal: plaintext of " + std::to_string(plaintext.size()) + " bytes exceeds 4096");
  std::array<std::uint8_t, 32> seed{}, epk{}, esk{};
  fill_bytes(rng, seed);
  crypto_box_seed_keypair(epk.data(), esk.data(), seed.data());

  std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, nonce.size());
  crypto_generichash_update(&st, epk.data(), epk.size());
  crypto_generichash_update(&st, recipient.box.data(), recipient.box.size());
  crypto_generichash_final(&st, nonce.data(), nonce.size());

  Bytes out(crypto_box_SEALBYTES + plaintext.size());
  std::memcpy(out.data(), epk.data(), epk.size());
  if (crypto_box_easy(out.data() + epk.size(), plaintext.data(), plaintext.size(), nonce.data(),
                      recipient.box.data(), esk.data()) != 0)
    fail(Errc::invalid_argument, "seal: invalid recipient key");
  sodium_memzero(esk.data(), esk.size());
  sodium_memzero(seed.data(), seed.size());
  return out;
}

// ------------------------------------------------------------ certificates

Bytes Certificate::signed_bytes() const {
  detail::ByteWriter w;
  w.put_string("psum.cert.v1").put_string(subject).put_bytes(key.bytes()).put_string(issuer).put<std::uint64_t>(expiry);
  return w.take();
}

Bytes Certificate::bytes() const {
  detail::ByteWriter w;
  w.put_string(subject).put_bytes(key.bytes()).put_string(issuer).put<std::uint64_t>(expiry).put_bytes(signature);
  return w.take();
}

Certificate Certificate::from_bytes(std::span<const std::uint8_t> b) {
  const Bytes copy(b.begin(), b.end());
  detail::ByteReader r(copy);
  Certificate c;
  c.subject = r.get_string();
  c.key = PublicKey::from_bytes(r.get_bytes());
  c.issuer = r.get_string();
  c.expiry = r.get<std::uint64_t>();
  c.signature = r.get_bytes();
  if (!r.done()) fail(Errc::format, "certificate: trailing bytes");
  return c;
}

CertificateAuthority::CertificateAuthority(std::string name, Rng& rng)
    : name_(std::move(name)), keys_(KeyPair::generate(rng)) {}

Certificate CertificateAuthority::issue(const std::string& subject, const PublicKey& key, std::uint64_t expiry) const {
  Certificate c{subject, key, name_, expiry, {}};
  c.signature = keys_.sign(c.signed_bytes());
  return c;
}

bool verify_certificate(const Certificate& cert, const PublicKey& ca_key, std::uint64_t now) {
  if (cert.expiry != 0 && now > cert.expiry) return false;
  return verify(cert.signed_bytes(), cert.signature, ca_key);
}

Identity make_identity(const std::string& real_id, const CertificateAuthority& ca, Rng& rng) {
  require(!real_id.empty(), "identity: empty real id");
  auto keys = KeyPair::generate(rng);
  auto cert = ca.issue(real_id, keys.public_key(), 0);
  return Identity{real_id, std::move(keys), std::move(cert)};
}

Pseudonym make_pseudonym(const std::string& real_id, std::span<const std::uint8_t> r) {
  require(!r.empty(), "pseudonym: empty nonce");
  Bytes in(real_id.begin(), real_id.end());
  in.insert(in.end(), r.begin(), r.end());
  return Pseudonym{sha256(in)};
}

Pseudonym Pseudonym::from_hex(const std::string& hex) {
  Pseudonym p;
  if (hex.size() != p.value.size() * 2) fail(Errc::format, "pseudonym: expected 64 hex digits");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(Errc::format, "pseudonym: bad hex digit");
  };
  for (std::size_t i = 0; i < p.value.size(); ++i)
    p.value[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return p;
}

Certificate make_anonymous_certificate(const CertificateAuthority& ca_r, const PublicKey& anon_key,
                                       const Pseudonym& pseudonym, std::uint64_t expiry) {
  return ca_r.issue(pseudonym.hex(), anon_key, expiry);
}

// ------------------------------------------------------------ symmetric

SessionKey random_session_key(Rng& rng) {
  SessionKey k{};
  fill_bytes(rng, k);
  return k;
}

Nonce random_nonce(Rng& rng) {
  Nonce n{};
  fill_bytes(rng, n);
  return n;
}

Bytes sym_encrypt(std::span<const std::uint8_t> plaintext, const SessionKey& key, const Nonce& nonce) {
  auto k = derive_aead_key(key);
  Bytes out(plaintext.size() + crypto_aead_xchacha20poly1305_ietf_ABYTES);
  unsigned long long len = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(out.data(), &len, plaintext.data(), plaintext.size(), nullptr, 0,
                                             nullptr, nonce.data(), k.data());
  out.resize(len);
  sodium_memzero(k.data(), k.size());
  return out;
}

Bytes sym_decrypt(std::span<const std::uint8_t> ciphertext, const SessionKey& key, const Nonce& nonce) {
  if (ciphertext.size() < crypto_aead_xchacha20poly1305_ietf_ABYTES)
    fail(Errc::auth_failure, "ciphertext shorter than tag");
  auto k = derive_aead_key(key);
  Bytes out(ciphertext.size() - crypto_aead_xchacha20poly1305_ietf_ABYTES);
  unsigned long long len = 0;
  const int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(out.data(), &len, nullptr, ciphertext.data(),
                                                            ciphertext.size(), nullptr, 0, nonce.data(), k.data());
  sodium_memzero(k.data(), k.size());
  if (rc != 0) fail(Errc::auth_failure, "ciphertext failed authentication");
  out.resize(len);
  return out;
}

Bytes SymmetricChannel::encrypt(std::span<const std::uint8_t> plaintext, const Nonce& nonce) {
  if (!used_.insert(nonce).second) fail(Errc::nonce_reuse, "nonce reused under the same session key");
  return sym_encrypt(plaintext, key_, nonce);
}

Bytes SymmetricChannel::decrypt(std::span<const std::uint8_t> ciphertext, const Nonce& nonce) const {
  return sym_decrypt(ciphertext, key_, nonce);
}

Bytes encode_doubles(std::span<const double> v) {
  detail::ByteWriter w;
  for (double x : v) w.put(x);
  return w.take();
}

std::vector<double> decode_doubles(std::span<const std::uint8_t> b) {
  if (b.size() % 8 != 0) fail(Errc::format, "coefficient payload not a multiple of 8 bytes");
  const Bytes copy(b.begin(), b.end());
  detail::ByteReader r(copy);
  std::vector<double> out(b.size() / 8);
  for (auto& x : out) x = r.get<double>();
  return out;
}

}  // namespace psum::crypto
