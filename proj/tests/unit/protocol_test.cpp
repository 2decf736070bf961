#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "json.hpp"

#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/protocol.hpp"
#include "psum/watermark.hpp"

using namespace psum;
using namespace psum::protocol;

namespace {

codes::CodeBook book_for(std::uint32_t n, std::uint64_t seed) {
  codes::CodeParams p;
  p.num_users = n;
  p.error_prob = 0.01;
  p.seed = seed;
  return codes::generate_code(p);
}

transform::Content small_audio(std::uint64_t seed) {
  harness::SyntheticAudio spec;
  spec.seconds = 0.25;
  spec.channels = 1;
  return harness::synthetic_audio(seed, spec);
}

struct Fixture {
  codes::CodeBook book;
  transform::Content content;
  std::unique_ptr<Simulation> sim;

  explicit Fixture(SystemConfig sc, std::uint32_t n = 8)
      : book(book_for(n, sc.seed)), content(small_audio(sc.seed)) {
    transform::PartitionOptions o;
    o.code_length = book.length();
    sim = std::make_unique<Simulation>(sc, book, transform::make_base_file(content, o));
  }
};

SystemConfig config(std::uint64_t seed) {
  SystemConfig sc;
  sc.seed = seed;
  return sc;
}

}  // namespace

TEST(Segments, Lengths) {
  EXPECT_EQ(segment_lengths(10, 3), (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(segment_lengths(9, 3), (std::vector<std::size_t>{3, 3, 3}));
  EXPECT_EQ(segment_lengths(5, 1), (std::vector<std::size_t>{5}));
  EXPECT_THROW(segment_lengths(2, 3), Error);
  EXPECT_THROW(segment_lengths(5, 0), Error);
  const std::vector<std::uint8_t> f{1, 0, 1, 1, 0, 0, 1, 0, 1, 1};
  const auto segs = segment_fingerprint(f, 3);
  std::vector<std::uint8_t> joined;
  for (const auto& s : segs) joined.insert(joined.end(), s.begin(), s.end());
  EXPECT_EQ(joined, f);
}

TEST(Segments, CeilingRuleCanLeaveNoRemainder) {
  // ceil(9/4) = 3: three full segments use all nine bits
  EXPECT_THROW(segment_lengths(9, 4), Error);
}

TEST(ProxySelect, Rule) {
  auto blk = [](std::uint8_t tag) { return EncryptedBlock{{}, Bytes{tag}}; };
  const std::vector<EncryptedBlock> v0{blk(0), blk(1), blk(2)}, v1{blk(10), blk(11), blk(12)};
  const std::vector<std::uint8_t> zeros{0, 0, 0}, mixed{1, 0, 1};
  EXPECT_EQ(proxy_select_fragments(zeros, v0, v1), v0);
  EXPECT_EQ(proxy_select_fragments(mixed, v0, v1), (std::vector<EncryptedBlock>{blk(10), blk(1), blk(12)}));
  EXPECT_THROW(proxy_select_fragments(std::vector<std::uint8_t>{1, 0}, v0, v1), Error);
}

TEST(Distribution, TwoBuyersMatchOracle) {
  Fixture fx(config(31));
  fx.sim->add_buyer({"alice"});
  fx.sim->add_buyer({"bob"});
  const auto res = fx.sim->run();
  ASSERT_EQ(res.size(), 2u);
  std::set<std::uint32_t> rows;
  for (const auto& r : res) {
    ASSERT_TRUE(r.completed) << r.abort_reason;
    ASSERT_TRUE(r.row && r.content && r.supplementary_verified);
    rows.insert(*r.row);
    const auto f = fx.book.codeword(*r.row);
    EXPECT_EQ(harness::extract_bits(*r.content, fx.sim->base_file()), std::vector<std::uint8_t>(f.begin(), f.end()));
    EXPECT_EQ(r.approx, harness::oracle_embed_approx(fx.content, f, 0.25, 4));
    EXPECT_FALSE(r.degraded_privacy);
  }
  EXPECT_EQ(rows.size(), 2u);
}

TEST(Distribution, SingleProxy) {
  auto sc = config(32);
  sc.n_proxies = 1;
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  const auto res = fx.sim->run();
  ASSERT_TRUE(res.at(0).completed) << res.at(0).abort_reason;
  const auto f = fx.book.codeword(*res[0].row);
  EXPECT_EQ(watermark::ber(f, harness::extract_bits(*res[0].content, fx.sim->base_file())), 0.0);
}

TEST(Distribution, LoneBuyerIsDegraded) {
  auto sc = config(33);
  sc.fetch_supplementary = false;
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  const auto res = fx.sim->run();
  ASSERT_TRUE(res.at(0).completed);
  EXPECT_TRUE(res[0].degraded_privacy);
  EXPECT_GE(fx.sim->network().now(), sc.tau_ticks);
}

TEST(Distribution, RogueCaAbortsAtStep4) {
  auto sc = config(34);
  sc.fetch_supplementary = false;
  Fixture fx(sc);
  BuyerSpec b{"eve"};
  b.rogue_ca = true;
  fx.sim->add_buyer(b);
  const auto res = fx.sim->run();
  ASSERT_EQ(res.size(), 1u);
  EXPECT_TRUE(res[0].aborted);
  EXPECT_EQ(res[0].abort_step, 4);
  std::uint64_t abort_seq = 0;
  for (const auto& m : fx.sim->network().log())
    if (m.kind == MessageKind::abort && m.from == "merchant") abort_seq = m.seq;
  ASSERT_GT(abort_seq, 0u);
  for (const auto& m : fx.sim->network().log())
    if (m.to == "monitor") EXPECT_LT(m.seq, abort_seq) << to_string(m.kind);
}

TEST(Distribution, ProxyTimeoutReassigns) {
  auto sc = config(35);
  sc.fetch_supplementary = false;
  sc.n_proxies = 3;
  sc.proxy_pool = 6;
  sc.faulty_proxies = {0, 1, 2};
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  fx.sim->add_buyer({"bob"});
  const auto res = fx.sim->run();
  for (const auto& r : res) {
    ASSERT_TRUE(r.completed) << r.abort_reason;
    const auto view = fx.sim->coalition_view(r.tid);
    for (const auto& lane : view.lanes)
      EXPECT_TRUE(lane.proxy != "proxy-0" && lane.proxy != "proxy-1" && lane.proxy != "proxy-2") << lane.proxy;
  }
}

TEST(Distribution, NoSpareProxyAborts) {
  auto sc = config(36);
  sc.fetch_supplementary = false;
  sc.n_proxies = 2;
  sc.proxy_pool = 3;
  sc.faulty_proxies = {0, 1};
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  const auto res = fx.sim->run();
  EXPECT_TRUE(res.at(0).aborted);
  EXPECT_EQ(res[0].abort_step, 15);
}

TEST(Distribution, Determinism) {
  auto sc = config(37);
  sc.fetch_supplementary = false;
  Fixture a(sc), b(sc);
  for (auto* fx : {&a, &b}) {
    fx->sim->add_buyer({"alice"});
    fx->sim->add_buyer({"bob"});
  }
  a.sim->run();
  b.sim->run();
  std::ostringstream ja, jb;
  write_jsonl(ja, a.sim->network());
  write_jsonl(jb, b.sim->network());
  EXPECT_EQ(ja.str(), jb.str());
}

TEST(Distribution, SequentialLanes) {
  auto sc = config(41);
  sc.fetch_supplementary = false;
  sc.n_proxies = 4;
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  const auto r = fx.sim->run().at(0);
  ASSERT_TRUE(r.completed);
  const auto view = fx.sim->coalition_view(r.tid);
  ASSERT_EQ(view.lanes.size(), 4u);
  std::uint64_t prev_last = 0;
  for (const auto& lane : view.lanes) {
    std::uint64_t first_fetch = UINT64_MAX, last_delivery = 0;
    for (const auto& m : fx.sim->network().log()) {
      if (m.from == lane.proxy && m.kind == MessageKind::fetch_request) first_fetch = std::min(first_fetch, m.seq);
      if (m.from == lane.proxy && m.kind == MessageKind::fragments) last_delivery = std::max(last_delivery, m.seq);
    }
    ASSERT_NE(first_fetch, UINT64_MAX) << lane.proxy;
    EXPECT_GT(first_fetch, prev_last) << lane.proxy;
    prev_last = last_delivery;
  }
}

TEST(Transcripts, LeakageTagsAndJsonl) {
  auto sc = config(38);
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  fx.sim->add_buyer({"bob"});
  fx.sim->run();
  const auto& net = fx.sim->network();
  EXPECT_FALSE(contains_class(net.transcript("merchant"), PayloadClass::fingerprint_bits));
  EXPECT_FALSE(contains_class(net.transcript("monitor"), PayloadClass::clear_coefficients));
  for (const auto& p : fx.sim->proxy_ids()) EXPECT_FALSE(contains_class(net.transcript(p), PayloadClass::clear_coefficients));

  std::ostringstream out;
  write_jsonl(out, net);
  std::istringstream in(out.str());
  std::size_t lines = 0;
  std::uint64_t last = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"seq", "from", "to", "kind", "payload_digest", "classes"}) ASSERT_TRUE(j.contains(k)) << k;
    EXPECT_GT(j["seq"].get<std::uint64_t>(), last);
    last = j["seq"].get<std::uint64_t>();
  }
  EXPECT_EQ(lines, net.log().size());
}

TEST(Tracing, CleanCopyAndOriginal) {
  auto sc = config(39);
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  fx.sim->add_buyer({"bob"});
  const auto res = fx.sim->run();
  for (const auto& r : res) {
    const auto out = fx.sim->trace_traitor(*r.content);
    ASSERT_EQ(out.accused.size(), 1u);
    EXPECT_EQ(out.accused[0], *r.pseudonym);
  }
  EXPECT_TRUE(fx.sim->trace_traitor(fx.content).accused.empty());
}

TEST(Arbitration, Verdicts) {
  auto sc = config(40);
  sc.fetch_supplementary = false;
  Fixture fx(sc);
  fx.sim->add_buyer({"alice"});
  fx.sim->add_buyer({"bob"});
  const auto res = fx.sim->run();
  const auto& r = res.at(0);
  const auto f = fx.book.codeword(*r.row);
  const auto guilty = fx.sim->arbitrate(fx.sim->make_claim(r.tid, {f.begin(), f.end()}));
  EXPECT_EQ(guilty.kind, Verdict::Kind::guilty);
  EXPECT_EQ(guilty.real_id, "alice");
  EXPECT_DOUBLE_EQ(guilty.nc, 1.0);

  std::vector<std::uint8_t> flipped(f.begin(), f.end());
  for (auto& b : flipped) b ^= 1;
  EXPECT_EQ(fx.sim->arbitrate(fx.sim->make_claim(r.tid, flipped)).kind, Verdict::Kind::innocent);

  auto forged = fx.sim->make_claim(r.tid, {f.begin(), f.end()});
  forged.agreement_signature[5] ^= 1;
  EXPECT_EQ(fx.sim->arbitrate(forged).kind, Verdict::Kind::rejected_evidence);

  // the buyer is never contacted during arbitration
  const auto addr = fx.sim->buyer_address(0);
  std::uint64_t claim_seq = UINT64_MAX;
  for (const auto& m : fx.sim->network().log())
    if (m.kind == MessageKind::claim) claim_seq = std::min(claim_seq, m.seq);
  for (const auto& m : fx.sim->network().log())
    if (m.seq > claim_seq) EXPECT_NE(m.to, addr);
}

TEST(SfRelay, DeliveryAndCiphertextOnly) {
  Bytes sf(5000);
  for (std::size_t i = 0; i < sf.size(); ++i) sf[i] = static_cast<std::uint8_t>(i * 7);
  SfTransferOptions o;
  o.seed = 1;
  const auto r = run_sf_distribution(sf, o);
  ASSERT_TRUE(r.delivered) << r.failure_reason;
  EXPECT_EQ(r.data, sf);
  EXPECT_EQ(r.requester_digest, r.provider_digest);
  ASSERT_EQ(r.relays.size(), 3u);
  for (const auto& id : r.relays)
    for (const auto& e : r.transcripts.at(id))
      for (auto c : e.classes) EXPECT_TRUE(c == PayloadClass::ciphertext || c == PayloadClass::control) << to_string(c);
}

TEST(SfRelay, EmptyPayload) {
  SfTransferOptions o;
  o.seed = 2;
  const auto r = run_sf_distribution({}, o);
  ASSERT_TRUE(r.delivered) << r.failure_reason;
  EXPECT_TRUE(r.data.empty());
  EXPECT_EQ(r.requester_digest, r.provider_digest);
}

TEST(SfRelay, TamperFailsAuthentication) {
  SfTransferOptions o;
  o.seed = 3;
  o.tamper_relay = 1;
  o.alternate_paths = 0;
  const auto r = run_sf_distribution(Bytes(100, 1), o);
  EXPECT_FALSE(r.delivered);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(*r.failure, Errc::auth_failure);
}

TEST(SfRelay, DropRetriesOnAlternatePath) {
  SfTransferOptions o;
  o.seed = 4;
  o.drop_relay = 0;
  const auto r = run_sf_distribution(Bytes(100, 2), o);
  ASSERT_TRUE(r.delivered) << r.failure_reason;
  EXPECT_GE(r.attempts, 2u);
  EXPECT_EQ(r.data, Bytes(100, 2));
}

TEST(SfRelay, RogueRequesterRejected) {
  SfTransferOptions o;
  o.seed = 5;
  o.requester_cert_from_rogue_ca = true;
  const auto r = run_sf_distribution(Bytes(10, 3), o);
  EXPECT_FALSE(r.delivered);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(*r.failure, Errc::auth_failure);
}

TEST(SfRelay, NeedsARelay) {
  SfTransferOptions o;
  o.relays = 0;
  EXPECT_THROW(run_sf_distribution(Bytes(1), o), Error);
}
