#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "psum/attacks.hpp"
#include "psum/error.hpp"
#include "psum/harness.hpp"

using namespace psum;
using namespace psum::attacks;

namespace {

transform::Content audio_of(std::vector<std::vector<double>> ch) {
  transform::AudioContent a;
  a.sample_rate = 8000;
  a.channels = std::move(ch);
  return a;
}

double power(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e / static_cast<double>(x.size());
}

}  // namespace

TEST(Collusion, StreamExamples) {
  using K = CollusionKind;
  const std::vector<std::vector<double>> two{{1.0}, {3.0}}, three{{1.0}, {3.0}, {2.0}};
  EXPECT_EQ(collude_streams(two, K::average), std::vector<double>{2.0});
  EXPECT_EQ(collude_streams(three, K::median), std::vector<double>{2.0});
  EXPECT_EQ(collude_streams(three, K::min), std::vector<double>{1.0});
  EXPECT_EQ(collude_streams(three, K::max), std::vector<double>{3.0});
  // even count: lower median
  const std::vector<std::vector<double>> four{{4.0}, {1.0}, {3.0}, {2.0}};
  EXPECT_EQ(collude_streams(four, K::median), std::vector<double>{2.0});
  EXPECT_THROW(collude_streams(std::vector<std::vector<double>>{{1.0}}, K::average), Error);
}

TEST(Collusion, IdempotentAndOrderFree) {
  const auto a = harness::synthetic_audio(1, {0.05, 8000, 2});
  const auto b = harness::synthetic_audio(2, {0.05, 8000, 2});
  const auto c = harness::synthetic_audio(3, {0.05, 8000, 2});
  for (auto k : {CollusionKind::average, CollusionKind::min, CollusionKind::max, CollusionKind::median}) {
    const std::vector<transform::Content> same{a, a, a}, abc{a, b, c}, cab{c, a, b};
    const auto out = std::get<transform::AudioContent>(collude_contents(same, k));
    const auto& src = a;
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t i = 0; i < src.channels[ch].size(); ++i)
        ASSERT_NEAR(out.channels[ch][i], src.channels[ch][i], 1e-15);
    const auto x = std::get<transform::AudioContent>(collude_contents(abc, k));
    const auto y = std::get<transform::AudioContent>(collude_contents(cab, k));
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t i = 0; i < x.channels[ch].size(); ++i) ASSERT_NEAR(x.channels[ch][i], y.channels[ch][i], 1e-15);
  }
}

TEST(Collusion, Errors) {
  const std::vector<transform::Content> mismatch{audio_of({{1.0, 2.0}}), audio_of({{1.0}})};
  EXPECT_THROW(collude_contents(mismatch, CollusionKind::average), Error);
  const std::vector<transform::Content> one{audio_of({{1.0}})};
  EXPECT_THROW(collude_contents(one, CollusionKind::average), Error);
  EXPECT_THROW(collusion_kind_from_string("mode"), Error);
  EXPECT_EQ(collusion_kind_from_string("median"), CollusionKind::median);
}

TEST(SignalAttack, Parse) {
  EXPECT_EQ(AttackSpec::parse("awgn:30").kind, AttackSpec::Kind::awgn);
  EXPECT_EQ(AttackSpec::parse("scale:1.1").scale, 1.1);
  EXPECT_EQ(AttackSpec::parse("requantize:16").bits, 16);
  const auto e = AttackSpec::parse("echo:0.05:0.3");
  EXPECT_EQ(e.echo_delay, 0.05);
  EXPECT_EQ(e.echo_decay, 0.3);
  EXPECT_EQ(AttackSpec::parse("awgn").snr_db, 30.0);  // bare name keeps the defaults
  for (const char* bad : {"scale:abc", "lowpass:1.5", "requantize:0", "frobnicate:1", "awgn:30:2"})
    EXPECT_THROW(AttackSpec::parse(bad), Error) << bad;
}

TEST(SignalAttack, ScaleOneIsIdentity) {
  const transform::Content x = harness::synthetic_audio(4, {0.1, 8000, 1});
  EXPECT_EQ(apply_signal_attack(x, AttackSpec::parse("scale:1")), x);
}

TEST(SignalAttack, RequantizeOnGridIsIdentity) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (static_cast<double>(i % 2000) - 1000.0) / 32768.0;
  const auto y = apply_signal_attack(x, 44100, AttackSpec::parse("requantize:16"));
  EXPECT_EQ(y, x);
}

TEST(SignalAttack, AwgnHitsTargetSnr) {
  const auto src = harness::synthetic_audio(5, {1.0, 44100, 1});
  auto spec = AttackSpec::parse("awgn:20");
  spec.seed = 9;
  const auto y = apply_signal_attack(src.channels[0], 44100, spec);
  std::vector<double> noise(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) noise[i] = y[i] - src.channels[0][i];
  EXPECT_NEAR(10 * std::log10(power(src.channels[0]) / power(noise)), 20.0, 0.1);
  EXPECT_EQ(apply_signal_attack(src.channels[0], 44100, spec), y);  // seeded
  spec.seed = 10;
  EXPECT_NE(apply_signal_attack(src.channels[0], 44100, spec), y);
}

TEST(SignalAttack, LowpassDcGainAndStopband) {
  const auto taps = lowpass_taps(0.3, 101);
  EXPECT_NEAR(std::accumulate(taps.begin(), taps.end(), 0.0), 1.0, 1e-12);
  const std::vector<double> dc(500, 0.5);
  const auto y = apply_signal_attack(dc, 8000, AttackSpec::parse("lowpass:0.3"));
  for (double v : y) EXPECT_NEAR(v, 0.5, 1e-9);
  std::vector<double> alt(500);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : -1.0;  // Nyquist tone
  const auto z = apply_signal_attack(alt, 8000, AttackSpec::parse("lowpass:0.3"));
  for (std::size_t i = 100; i < 400; ++i) EXPECT_LT(std::abs(z[i]), 1e-2);
  const auto h = apply_signal_attack(dc, 8000, AttackSpec::parse("highpass:0.3"));
  for (double v : h) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(SignalAttack, EchoAndResample) {
  std::vector<double> x(1000, 0.0);
  x[10] = 1.0;
  const auto y = apply_signal_attack(x, 1000, AttackSpec::parse("echo:0.05:0.3"));
  EXPECT_DOUBLE_EQ(y[10], 1.0);
  EXPECT_DOUBLE_EQ(y[60], 0.3);
  std::vector<double> ramp(1001);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 1000.0;
  const auto r = apply_signal_attack(ramp, 1000, AttackSpec::parse("resample:0.5"));
  ASSERT_EQ(r.size(), ramp.size());
  for (std::size_t i = 0; i < r.size() - 2; ++i) EXPECT_NEAR(r[i], ramp[i], 1e-9);
}

TEST(SignalAttack, FramesOnlyPixelAttacks) {
  harness::SyntheticFrames s;
  s.frames = 2;
  const transform::Content f = harness::synthetic_frames(1, s);
  EXPECT_NO_THROW(apply_signal_attack(f, AttackSpec::parse("awgn:30")));
  EXPECT_THROW(apply_signal_attack(f, AttackSpec::parse("echo:0.05:0.3")), Error);
}

TEST(SignalAttack, NoiseBelowQuarterStepKeepsBits) {
  const transform::Content c = harness::synthetic_audio(6, {0.5, 8000, 1});
  transform::PartitionOptions o;
  o.code_length = 20;
  o.delta = 0.25;
  const auto part = transform::make_base_file(c, o);
  std::vector<std::uint8_t> f(20);
  for (std::size_t i = 0; i < 20; ++i) f[i] = i % 3 == 1;
  auto approx = transform::select_variants(part.base, f);
  Rng rng = make_rng(6, 1);
  std::uniform_real_distribution<double> u(-o.delta / 4 + 1e-9, o.delta / 4 - 1e-9);
  for (auto& a : approx) a += u(rng);
  const auto marked = transform::reconstruct(approx, part.supplementary);
  EXPECT_EQ(harness::extract_bits(marked, part.base), f);
}

namespace {

struct CoalitionSetup {
  codes::CodeBook book;
  std::unique_ptr<protocol::Simulation> sim;
  protocol::PurchaseResult result;
};

CoalitionSetup coalition_setup(std::uint64_t seed) {
  codes::CodeParams p;
  p.num_users = 2;
  p.error_prob = 0.9;
  p.seed = seed;
  CoalitionSetup s{codes::generate_code(p), nullptr, {}};
  transform::PartitionOptions o;
  o.code_length = s.book.length();
  protocol::SystemConfig sc;
  sc.seed = seed;
  sc.fetch_supplementary = false;
  harness::SyntheticAudio a;
  a.seconds = 0.1;
  a.channels = 1;
  s.sim = std::make_unique<protocol::Simulation>(sc, s.book,
                                                 transform::make_base_file(harness::synthetic_audio(seed, a), o));
  s.sim->add_buyer({"alice"});
  s.result = s.sim->run().at(0);
  return s;
}

}  // namespace

TEST(ProxyCoalition, BudgetZeroAndLeakedKeys) {
  auto s = coalition_setup(11);
  ASSERT_TRUE(s.result.completed);
  const auto view = s.sim->coalition_view(s.result.tid);
  const auto truth = s.sim->merchant_permutation_keys(s.result.tid);
  const auto none = proxy_coalition_attack(view, s.book, 0, truth, 1);
  EXPECT_EQ(none.guesses, 0u);
  EXPECT_EQ(none.success_rate, 0.0);
  EXPECT_FALSE(none.exhausted);

  const auto leaked = proxy_coalition_attack(view, s.book, 0, truth, 1, truth);
  EXPECT_TRUE(leaked.recovered_with_keys);
  const auto f = s.book.codeword(*s.result.row);
  EXPECT_EQ(leaked.recovered, std::vector<std::uint8_t>(f.begin(), f.end()));
}

TEST(ProxyCoalition, PartialBudget) {
  auto s = coalition_setup(12);
  const auto view = s.sim->coalition_view(s.result.tid);
  const auto truth = s.sim->merchant_permutation_keys(s.result.tid);
  const auto r = proxy_coalition_attack(view, s.book, 100, truth, 2);
  EXPECT_EQ(r.guesses, 100u);
  EXPECT_FALSE(r.exhausted);
  EXPECT_EQ(r.decrypt_auth_failures, r.decrypt_attempts);
}

TEST(Impersonation, ReplayRejectedInsiderPasses) {
  codes::CodeParams p;
  p.num_users = 8;
  p.seed = 13;
  const auto book = codes::generate_code(p);
  transform::PartitionOptions o;
  o.code_length = book.length();
  protocol::SystemConfig sc;
  sc.seed = 13;
  sc.fetch_supplementary = false;
  harness::SyntheticAudio a;
  a.seconds = 0.25;
  a.channels = 1;
  protocol::Simulation sim(sc, book, transform::make_base_file(harness::synthetic_audio(13, a), o));
  sim.add_buyer({"alice"});
  sim.add_buyer({"bob"});
  const auto res = sim.run();
  const auto ledger = sim.merchant_ledger();
  ASSERT_FALSE(ledger.empty());
  const auto captured = ledger.front().certificate;

  const auto replay = impersonation_attack(sim, captured);
  EXPECT_FALSE(replay.accepted);
  EXPECT_TRUE(replay.abort_step == 3 || replay.abort_step == 4) << replay.abort_step << " " << replay.reason;

  const auto wrong = impersonation_attack(sim, captured, std::make_pair(std::string("alice"), crypto::Bytes{1, 2, 3}));
  EXPECT_FALSE(wrong.accepted);
  EXPECT_EQ(wrong.abort_step, 3);

  // holding the victim's (real_id, r) is the credential: the trust boundary
  const auto secret = sim.pseudonym_secret(ledger.front().pseudonym);
  ASSERT_TRUE(secret.has_value());
  const auto insider = impersonation_attack(sim, captured, secret);
  EXPECT_TRUE(insider.accepted) << insider.abort_step << " " << insider.reason;
}

TEST(Impersonation, RandomGuessesNeverMatch) {
  const crypto::Bytes r{7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7};
  const auto target = crypto::make_pseudonym("alice", r);
  EXPECT_EQ(pseudonym_guess_trials(target, "alice", 1'000'000, 20, 1), 0u);
}
