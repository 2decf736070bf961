#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <string>

#include "psum/crypto.hpp"
#include "psum/error.hpp"

using namespace psum;
using namespace psum::crypto;

namespace {

Bytes as_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{};
}

}  // namespace

TEST(Hash, Sha256KnownVector) {
  // FIPS 180-2 "abc"
  EXPECT_EQ(to_hex(sha256(as_bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pseudonym, IsHashOfIdAndSecret) {
  const Bytes r{'c'};
  EXPECT_EQ(make_pseudonym("ab", r).hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_GE(sizeof(Pseudonym{}.value) * 8, 160u);
}

TEST(Pseudonym, DeterministicAndDistinct) {
  const Bytes r1{1, 2, 3}, r2{1, 2, 4};
  EXPECT_EQ(make_pseudonym("alice", r1), make_pseudonym("alice", r1));
  EXPECT_NE(make_pseudonym("alice", r1), make_pseudonym("alice", r2));
  EXPECT_THROW(make_pseudonym("alice", Bytes{}), Error);
  const auto p = make_pseudonym("alice", r1);
  EXPECT_EQ(Pseudonym::from_hex(p.hex()), p);
}

TEST(Pseudonym, NoIdSubstringLeaks) {
  Rng rng = make_rng(1, 0);
  std::uniform_int_distribution<int> len(4, 40), byte(0, 255);
  for (int t = 0; t < 1000; ++t) {
    std::string id(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& ch : id) ch = static_cast<char>(byte(rng));
    Bytes r(16);
    fill_bytes(rng, r);
    const auto v = make_pseudonym(id, r).value;
    const std::string digest(v.begin(), v.end());
    for (std::size_t i = 0; i + 4 <= id.size(); ++i) ASSERT_EQ(digest.find(id.substr(i, 4)), std::string::npos);
  }
}

TEST(Permutation, Basics) {
  const std::vector<char> abc{'a', 'b', 'c'};
  EXPECT_EQ(permute(abc, PermutationKey::identity(3)), abc);
  EXPECT_EQ(permute(abc, PermutationKey({2, 1, 0})), (std::vector<char>{'c', 'b', 'a'}));
  // item i lands at sigma(i)
  EXPECT_EQ(permute(abc, PermutationKey({1, 2, 0})), (std::vector<char>{'c', 'a', 'b'}));
  EXPECT_THROW(PermutationKey({0, 0, 1}), Error);
  EXPECT_THROW(PermutationKey({0, 3, 1}), Error);
  EXPECT_THROW(permute(abc, PermutationKey::identity(4)), Error);
}

TEST(Permutation, RoundTripAndComposition) {
  Rng rng = make_rng(2, 0);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  for (int t = 0; t < 10000; ++t) {
    const auto n = len(rng);
    std::vector<int> x(n);
    for (auto& v : x) v = static_cast<int>(rng() & 0xffff);
    const auto s1 = PermutationKey::random(n, rng), s2 = PermutationKey::random(n, rng);
    ASSERT_EQ(unpermute(permute(x, s1), s1), x);
    ASSERT_EQ(permute(x, s1.inverse()), unpermute(x, s1));
    ASSERT_EQ(permute(permute(x, s1), s2), permute(x, s2.after(s1)));
    ASSERT_EQ(PermutationKey::from_bytes(s1.bytes()), s1);
  }
}

TEST(Signature, Contract) {
  Rng rng = make_rng(3, 0);
  const auto a = KeyPair::generate(rng), b = KeyPair::generate(rng);
  const auto m = as_bytes("agreement");
  const auto sig = a.sign(m);
  EXPECT_TRUE(verify(m, sig, a.public_key()));
  EXPECT_FALSE(verify(as_bytes("agreemenT"), sig, a.public_key()));
  EXPECT_FALSE(verify(m, sig, b.public_key()));
  EXPECT_FALSE(verify(m, Bytes(3, 0), a.public_key()));
}

TEST(Seal, RoundTripAndWrongKey) {
  Rng rng = make_rng(4, 0);
  const auto a = KeyPair::generate(rng), b = KeyPair::generate(rng);
  for (int t = 0; t < 10000; ++t) {
    Bytes key(16);
    fill_bytes(rng, key);
    ASSERT_EQ(open(seal(key, a.public_key(), rng), a), key);
  }
  const auto ct = seal(as_bytes("session key 16b!"), a.public_key(), rng);
  EXPECT_EQ(code_of([&] { open(ct, b); }), Errc::auth_failure);
  auto bad = ct;
  bad[bad.size() / 2] ^= 1;
  EXPECT_EQ(code_of([&] { open(bad, a); }), Errc::auth_failure);
}

TEST(Seal, SizeCap) {
  Rng rng = make_rng(5, 0);
  const auto a = KeyPair::generate(rng);
  const auto small = PermutationKey::random(1000, rng).bytes();
  EXPECT_LE(small.size(), kMaxSealPlaintext);
  EXPECT_EQ(open(seal(small, a.public_key(), rng), a), small);
  const auto big = PermutationKey::random(2000, rng).bytes();
  EXPECT_EQ(code_of([&] { seal(big, a.public_key(), rng); }), Errc::oversize);
}

TEST(Symmetric, RoundTripTamperNonces) {
  Rng rng = make_rng(6, 0);
  const auto key = random_session_key(rng);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> block(1 + t % 17);
    for (auto& v : block) v = u(rng);
    const auto nonce = random_nonce(rng);
    const auto pt = encode_doubles(block);
    ASSERT_EQ(decode_doubles(sym_decrypt(sym_encrypt(pt, key, nonce), key, nonce)), block);
  }
  const auto pt = encode_doubles(std::vector<double>{0.1, 0.2, 0.3});
  const auto n1 = random_nonce(rng), n2 = random_nonce(rng);
  const auto c1 = sym_encrypt(pt, key, n1);
  EXPECT_NE(c1, sym_encrypt(pt, key, n2));
  for (std::size_t i = 0; i < c1.size(); ++i) {
    auto bad = c1;
    bad[i] ^= 0x80;
    ASSERT_EQ(code_of([&] { sym_decrypt(bad, key, n1); }), Errc::auth_failure);
  }
  auto other = key;
  other[0] ^= 1;
  EXPECT_EQ(code_of([&] { sym_decrypt(c1, other, n1); }), Errc::auth_failure);
}

TEST(Symmetric, ChannelRefusesNonceReuse) {
  Rng rng = make_rng(7, 0);
  SymmetricChannel ch(random_session_key(rng));
  const auto n = random_nonce(rng);
  const auto c = ch.encrypt(as_bytes("x"), n);
  EXPECT_EQ(ch.decrypt(c, n), as_bytes("x"));
  EXPECT_EQ(code_of([&] { ch.encrypt(as_bytes("y"), n); }), Errc::nonce_reuse);
}

TEST(Certificates, IssueVerifyAnonymous) {
  Rng rng = make_rng(8, 0);
  CertificateAuthority ca("ca_r", rng), rogue("rogue", rng);
  const auto id = make_identity("alice", ca, rng);
  EXPECT_TRUE(verify_certificate(id.certificate, ca.public_key()));
  EXPECT_FALSE(verify_certificate(id.certificate, rogue.public_key()));
  EXPECT_EQ(Certificate::from_bytes(id.certificate.bytes()), id.certificate);

  auto altered = id.certificate;
  altered.subject = "mallory";
  EXPECT_FALSE(verify_certificate(altered, ca.public_key()));

  const auto exp = ca.issue("bob", id.keys.public_key(), 100);
  EXPECT_TRUE(verify_certificate(exp, ca.public_key(), 50));
  EXPECT_FALSE(verify_certificate(exp, ca.public_key(), 101));

  const Bytes r{9, 9, 9};
  const auto p = make_pseudonym("alice", r);
  const auto anon_keys = KeyPair::generate(rng);
  const auto anon = make_anonymous_certificate(ca, anon_keys.public_key(), p, 0);
  EXPECT_TRUE(verify_certificate(anon, ca.public_key()));
  EXPECT_EQ(anon.subject, p.hex());
  const auto raw = anon.bytes();
  EXPECT_EQ(std::search(raw.begin(), raw.end(), std::begin("alice"), std::end("alice") - 1), raw.end());
}
