#include "entities.hpp"

#include <algorithm>
#include <cstdio>

#include "psum/error.hpp"
#include "psum/watermark.hpp"

namespace psum::protocol::detail {

namespace {

const std::vector<PayloadClass> kControl{PayloadClass::control};
const std::vector<PayloadClass> kCipher{PayloadClass::ciphertext};

std::string format_tid(std::uint64_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "T%06llu", static_cast<unsigned long long>(n));
  return buf;
}

crypto::SessionKey to_session_key(const Bytes& b) {
  if (b.size() != crypto::SessionKey{}.size()) fail(Errc::format, "session key must be 16 bytes");
  crypto::SessionKey k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

}  // namespace

// ------------------------------------------------------------ helpers

const crypto::PublicKey& Directory::key(const EntityId& who) const {
  auto it = keys.find(who);
  if (it == keys.end()) fail(Errc::protocol_abort, "directory: no public key for " + who);
  return it->second;
}

Bytes pack_bits(std::span<const std::uint8_t> bits) {
  Bytes out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

std::vector<std::uint8_t> unpack_bits(const Bytes& packed, std::size_t count) {
  if (packed.size() != (count + 7) / 8) fail(Errc::format, "packed bit string has the wrong size");
  std::vector<std::uint8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return out;
}

void put_blocks(ByteWriter& w, const std::vector<EncryptedBlock>& blocks) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.put_bytes(Bytes(b.nonce.begin(), b.nonce.end()));
    w.put_bytes(b.ciphertext);
  }
}

std::vector<EncryptedBlock> get_blocks(ByteReader& r) {
  std::vector<EncryptedBlock> out(r.get<std::uint32_t>());
  for (auto& b : out) {
    auto n = r.get_bytes();
    if (n.size() != b.nonce.size()) fail(Errc::format, "bad nonce length");
    std::copy(n.begin(), n.end(), b.nonce.begin());
    b.ciphertext = r.get_bytes();
  }
  return out;
}

Bytes abort_payload(int step, const std::string& reason, Errc code) {
  ByteWriter w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(step)).put<std::uint8_t>(static_cast<std::uint8_t>(code)).put_string(reason);
  return w.take();
}

AbortInfo parse_abort(const Bytes& payload) {
  ByteReader r(payload);
  AbortInfo a;
  a.step = r.get<std::uint8_t>();
  a.code = static_cast<Errc>(r.get<std::uint8_t>());
  a.reason = r.get_string();
  return a;
}

Bytes Agreement::bytes() const {
  ByteWriter w;
  w.put_string("psum.agr.v1").put_string(item).put_string(pseudonym_hex).put_bytes(nonce).put<std::uint64_t>(tick);
  return w.take();
}

Agreement Agreement::parse(const Bytes& b) {
  ByteReader r(b);
  if (r.get_string() != "psum.agr.v1") fail(Errc::format, "agreement: bad tag");
  Agreement a;
  a.item = r.get_string();
  a.pseudonym_hex = r.get_string();
  a.nonce = r.get_bytes();
  a.tick = r.get<std::uint64_t>();
  if (!r.done()) fail(Errc::format, "agreement: trailing bytes");
  return a;
}

bool verify_purchase_evidence(const crypto::Certificate& cert, const Bytes& agr, const Bytes& sig,
                              const crypto::PublicKey& ca_r) {
  if (!crypto::verify_certificate(cert, ca_r)) return false;
  if (!crypto::verify(agr, sig, cert.key)) return false;
  try {
    return Agreement::parse(agr).pseudonym_hex == cert.subject;
  } catch (const Error&) {
    return false;
  }
}

// ------------------------------------------------------------ CA_R

RegistrationCa::RegistrationCa(const Directory& dir, Rng rng)
    : Entity(dir.registration_ca), dir_(dir), rng_(std::move(rng)), ca_("CA_R", rng_) {}

crypto::Certificate RegistrationCa::issue(const std::string& real_id, const crypto::PublicKey& anon_key) {
  Bytes r(16);
  fill_bytes(rng_, r);
  const auto p = crypto::make_pseudonym(real_id, r);
  registry_[p.hex()] = Entry{real_id, std::move(r)};
  return crypto::make_anonymous_certificate(ca_, anon_key, p, 0);
}

crypto::Certificate RegistrationCa::enroll(const std::string& real_id, const crypto::PublicKey& anon_key) {
  return issue(real_id, anon_key);
}

std::optional<std::pair<std::string, Bytes>> RegistrationCa::secret_of(const std::string& pseudonym_hex) const {
  auto it = registry_.find(pseudonym_hex);
  if (it == registry_.end()) return std::nullopt;
  return std::make_pair(it->second.real_id, it->second.r);
}

void RegistrationCa::on_message(const Message& msg, Network& net) {
  if (msg.kind == MessageKind::register_request) {
    ByteReader r(msg.payload);
    bool ok = false;
    crypto::Certificate id_cert;
    crypto::PublicKey anon;
    try {
      id_cert = crypto::Certificate::from_bytes(r.get_bytes());
      const auto anon_bytes = r.get_bytes();
      anon = crypto::PublicKey::from_bytes(anon_bytes);
      const auto sig = r.get_bytes();
      ok = crypto::verify_certificate(id_cert, dir_.ca_ext) && crypto::verify(anon_bytes, sig, id_cert.key);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      net.send(id(), msg.from, MessageKind::abort, abort_payload(3, "registration evidence rejected", Errc::auth_failure),
               kControl);
      return;
    }
    const auto cert = issue(id_cert.subject, anon);
    net.send(id(), msg.from, MessageKind::anon_certificate, cert.bytes(),
             {PayloadClass::certificate, PayloadClass::pseudonym});
    return;
  }
  if (msg.kind == MessageKind::recertify_request) {
    // Knowledge of (real_id, r) is the credential for an existing pseudonym.
    ByteReader r(msg.payload);
    const auto hex = r.get_string();
    const auto real_id = r.get_string();
    const auto secret = r.get_bytes();
    const auto anon = crypto::PublicKey::from_bytes(r.get_bytes());
    auto it = registry_.find(hex);
    if (it == registry_.end() || it->second.real_id != real_id || it->second.r != secret ||
        crypto::make_pseudonym(real_id, secret).hex() != hex) {
      net.send(id(), msg.from, MessageKind::abort, abort_payload(3, "pseudonym secret does not match", Errc::auth_failure),
               kControl);
      return;
    }
    const auto cert = crypto::make_anonymous_certificate(ca_, anon, crypto::Pseudonym::from_hex(hex), 0);
    net.send(id(), msg.from, MessageKind::anon_certificate, cert.bytes(),
             {PayloadClass::certificate, PayloadClass::pseudonym});
    return;
  }
  if (msg.kind == MessageKind::identity_request) {
    if (msg.from != dir_.judge) return;  // only the judge may ask
    ByteReader r(msg.payload);
    const auto hex = r.get_string();
    auto it = registry_.find(hex);
    ByteWriter w;
    w.put<std::uint8_t>(it != registry_.end() ? 1 : 0).put_string(it != registry_.end() ? it->second.real_id : "");
    net.send(id(), msg.from, MessageKind::identity_response, w.take(), {PayloadClass::real_identity});
  }
}

// ------------------------------------------------------------ merchant

Merchant::Merchant(const Directory& dir, transform::Partition partition, std::string item, Rng rng)
    : Entity(dir.merchant),
      dir_(dir),
      partition_(std::move(partition)),
      item_(std::move(item)),
      rng_(std::move(rng)),
      keys_(crypto::KeyPair::generate(rng_)) {}

const std::vector<Merchant::Lane>& Merchant::lanes(const std::string& tid) const {
  auto it = lanes_.find(tid);
  if (it == lanes_.end()) fail(Errc::invalid_argument, "merchant: unknown transaction " + tid);
  return it->second;
}

std::vector<std::uint8_t> Merchant::extract(const transform::Content& pirated, bool normalize_gain) const {
  const auto& bf = partition_.base;
  auto approx = transform::extract_approx(pirated, bf.meta);
  if (normalize_gain) approx = watermark::normalize_gain(approx, bf.variant0);
  return watermark::qim_extract(approx, bf.layout, watermark::QimParams{bf.delta, 0});
}

void Merchant::publish_supplementary(Network& net, const EntityId& seeder) {
  ByteWriter w;
  w.put_string(item_).put_bytes(transform::serialize(partition_.supplementary));
  net.send(id(), seeder, MessageKind::sf_publish, w.take(), {PayloadClass::clear_coefficients});
}

void Merchant::on_message(const Message& msg, Network& net) {
  switch (msg.kind) {
    case MessageKind::purchase_request: on_purchase(msg, net); break;
    case MessageKind::key_forward: on_key_forward(msg, net); break;
    case MessageKind::fetch_request: on_fetch(msg, net); break;
    case MessageKind::accusation: {
      ByteReader r(msg.payload);
      accusation_.clear();
      const auto n = r.get<std::uint32_t>();
      for (std::uint32_t i = 0; i < n; ++i) accusation_.push_back(crypto::Pseudonym::from_hex(r.get_string()));
      break;
    }
    case MessageKind::verdict: {
      ByteReader r(msg.payload);
      Verdict v;
      v.kind = static_cast<Verdict::Kind>(r.get<std::uint8_t>());
      v.real_id = r.get_string();
      v.nc = r.get<double>();
      v.reason = r.get_string();
      verdict_ = v;
      break;
    }
    default: break;
  }
}

void Merchant::on_purchase(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  crypto::Certificate cert;
  Bytes agr, sig;
  bool ok = false;
  try {
    cert = crypto::Certificate::from_bytes(r.get_bytes());
    agr = r.get_bytes();
    sig = r.get_bytes();
    ok = verify_purchase_evidence(cert, agr, sig, dir_.ca_r) && Agreement::parse(agr).item == item_;
  } catch (const Error&) {
    ok = false;
  }
  if (!ok) {
    // Step 4: the transaction is terminated here; the monitor never hears of it.
    net.send(id(), msg.from, MessageKind::abort,
             abort_payload(4, "certificate or agreement failed verification", Errc::auth_failure), kControl);
    return;
  }
  TransactionRecord rec;
  rec.tid = format_tid(++next_tid_);
  rec.agreement = agr;
  rec.agreement_signature = sig;
  rec.pseudonym = crypto::Pseudonym::from_hex(cert.subject);
  rec.certificate = cert;
  rec.opened_tick = net.now();
  ledger_.push_back(rec);
  buyer_of_[rec.tid] = msg.from;

  ByteWriter ack;
  ack.put_string(rec.tid);
  net.send(id(), msg.from, MessageKind::purchase_ack, ack.take(), kControl);

  ByteWriter w;
  w.put_string(rec.tid).put_string(msg.from).put_bytes(cert.bytes()).put_bytes(agr).put_bytes(sig);
  net.send(id(), dir_.monitor, MessageKind::fingerprint_request, w.take(),
           {PayloadClass::certificate, PayloadClass::pseudonym, PayloadClass::agreement, PayloadClass::signature});
}

void Merchant::on_key_forward(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  const auto n = r.get<std::uint32_t>();
  const auto& bf = partition_.base;
  const auto lengths = segment_lengths(bf.layout.block_count, n);

  std::vector<Lane> lanes;
  try {
    std::size_t first = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
      const auto opened = keys_.open(r.get_bytes());
      ByteReader kr(opened);
      Lane lane;
      lane.sigma = crypto::PermutationKey::from_bytes(kr.get_bytes());
      lane.key = to_session_key(kr.get_bytes());
      if (lane.sigma.size() != lengths[j]) fail(Errc::length_mismatch, "permutation key length differs from segment");

      // Step 13: permute both variants block-wise, then encrypt each block.
      std::vector<std::vector<double>> b0, b1;
      for (std::size_t k = first; k < first + lengths[j]; ++k) {
        const auto lo = static_cast<std::ptrdiff_t>(bf.layout.begin(k)), hi = static_cast<std::ptrdiff_t>(bf.layout.end(k));
        b0.emplace_back(bf.variant0.begin() + lo, bf.variant0.begin() + hi);
        b1.emplace_back(bf.variant1.begin() + lo, bf.variant1.begin() + hi);
      }
      b0 = crypto::permute(b0, lane.sigma);
      b1 = crypto::permute(b1, lane.sigma);
      crypto::SymmetricChannel channel(lane.key);
      for (std::size_t k = 0; k < b0.size(); ++k) {
        for (int v = 0; v < 2; ++v) {
          EncryptedBlock e;
          e.nonce = crypto::random_nonce(rng_);
          e.ciphertext = channel.encrypt(crypto::encode_doubles(v == 0 ? b0[k] : b1[k]), e.nonce);
          (v == 0 ? lane.v0 : lane.v1).push_back(std::move(e));
        }
      }
      lanes.push_back(std::move(lane));
      first += lengths[j];
    }
  } catch (const Error& e) {
    // the monitor never gets variants_ready, so no lane starts
    auto b = buyer_of_.find(tid);
    if (b != buyer_of_.end())
      net.send(id(), b->second, MessageKind::abort, abort_payload(13, e.what(), e.code()), kControl);
    return;
  }
  lanes_[tid] = std::move(lanes);
  ByteWriter w;
  w.put_string(tid);
  net.send(id(), msg.from, MessageKind::variants_ready, w.take(), kControl);
}

void Merchant::on_fetch(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  const auto lane = r.get<std::uint32_t>();
  auto it = lanes_.find(tid);
  if (it == lanes_.end() || lane >= it->second.size()) {
    net.send(id(), msg.from, MessageKind::abort, abort_payload(16, "unknown transaction or lane"), kControl);
    return;
  }
  ByteWriter w;
  w.put_string(tid).put<std::uint32_t>(lane);
  put_blocks(w, it->second[lane].v0);
  put_blocks(w, it->second[lane].v1);
  net.send(id(), msg.from, MessageKind::encrypted_variants, w.take(), kCipher);
}

// ------------------------------------------------------------ monitor

Monitor::Monitor(const Directory& dir, const SystemConfig& cfg, codes::CodeBook book, std::vector<EntityId> pool,
                 std::vector<EntityId> relays, Rng rng)
    : Entity(dir.monitor),
      dir_(dir),
      cfg_(cfg),
      book_(std::move(book)),
      pool_(std::move(pool)),
      relays_(std::move(relays)),
      rng_(std::move(rng)),
      keys_(crypto::KeyPair::generate(rng_)) {}

std::vector<TransactionRecord> Monitor::ledger() const {
  std::vector<TransactionRecord> out;
  for (const auto& tid : order_) out.push_back(txns_.at(tid).record);
  return out;
}

const Monitor::Txn* Monitor::find(const std::string& tid) const {
  auto it = txns_.find(tid);
  return it == txns_.end() ? nullptr : &it->second;
}

double Monitor::threshold() {
  if (!threshold_) threshold_ = codes::resolve_threshold(book_, cfg_.trace_policy);
  return *threshold_;
}

void Monitor::set_timer(Network& net, std::uint64_t delay, Timer t) {
  const auto id = ++next_timer_;
  timers_.emplace(id, std::move(t));
  net.schedule(this->id(), delay, id);
}

void Monitor::on_message(const Message& msg, Network& net) {
  switch (msg.kind) {
    case MessageKind::fingerprint_request: on_fingerprint_request(msg, net); break;
    case MessageKind::key_delivery: on_key_delivery(msg, net); break;
    case MessageKind::variants_ready: {
      ByteReader r(msg.payload);
      auto it = txns_.find(r.get_string());
      if (it != txns_.end() && !it->second.aborted) start_lane(it->second, net);
      break;
    }
    case MessageKind::lane_complete: on_lane_complete(msg, net); break;
    case MessageKind::trace_request: on_trace(msg, net); break;
    case MessageKind::evidence_request: on_evidence_request(msg, net); break;
    default: break;
  }
}

void Monitor::on_fingerprint_request(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  Txn t;
  t.record.tid = r.get_string();
  t.buyer = r.get_string();
  bool ok = false;
  try {
    t.record.certificate = crypto::Certificate::from_bytes(r.get_bytes());
    t.record.agreement = r.get_bytes();
    t.record.agreement_signature = r.get_bytes();
    ok = verify_purchase_evidence(t.record.certificate, t.record.agreement, t.record.agreement_signature, dir_.ca_r);
  } catch (const Error&) {
    ok = false;
  }
  if (!ok || txns_.count(t.record.tid)) {
    const auto p = abort_payload(5, "monitor rejected the fingerprint request", Errc::auth_failure);
    net.send(id(), msg.from, MessageKind::abort, p, kControl);
    net.send(id(), t.buyer, MessageKind::abort, p, kControl);
    return;
  }
  const std::size_t k = requests_++;
  const std::uint32_t row = cfg_.row_order.empty() ? static_cast<std::uint32_t>(k)
                            : k < cfg_.row_order.size() ? cfg_.row_order[k]
                                                        : static_cast<std::uint32_t>(k);
  if (row >= book_.num_users()) {
    const auto p = abort_payload(5, "no unassigned codeword left");
    net.send(id(), msg.from, MessageKind::abort, p, kControl);
    net.send(id(), t.buyer, MessageKind::abort, p, kControl);
    return;
  }
  t.record.pseudonym = crypto::Pseudonym::from_hex(t.record.certificate.subject);
  t.record.row = row;
  t.record.opened_tick = net.now();
  const auto cw = book_.codeword(row);
  t.f.assign(cw.begin(), cw.end());
  t.lengths = segment_lengths(t.f.size(), cfg_.n_proxies);

  // Step 5: n distinct proxies, uniformly from the pool.
  std::vector<std::size_t> idx(pool_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < cfg_.n_proxies; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng_)]);
    t.proxies.push_back(pool_[idx[i]]);
  }
  if (cfg_.monitor_relay_paths) {
    std::uniform_int_distribution<std::size_t> pick(0, relays_.size() - 1);
    for (std::size_t i = 0; i < cfg_.n_proxies; ++i) t.relays.push_back(relays_[pick(rng_)]);
  }

  ByteWriter w;
  w.put_string(t.record.tid).put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.n_proxies));
  for (auto l : t.lengths) w.put<std::uint32_t>(static_cast<std::uint32_t>(l));
  net.send(id(), t.buyer, MessageKind::key_request, w.take(), kControl);

  order_.push_back(t.record.tid);
  txns_.emplace(t.record.tid, std::move(t));
}

void Monitor::on_key_delivery(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  auto it = txns_.find(tid);
  if (it == txns_.end() || it->second.buyer != msg.from) return;
  auto& t = it->second;
  const auto n = r.get<std::uint32_t>();
  try {
    if (n != t.lengths.size()) fail(Errc::length_mismatch, "key count differs from lane count");
    const auto segments = segment_fingerprint(t.f, n);
    for (std::uint32_t j = 0; j < n; ++j) {
      const auto sigma = crypto::PermutationKey::from_bytes(keys_.open(r.get_bytes()));
      t.ps.push_back(crypto::permute(segments[j], sigma));
    }
    for (std::uint32_t j = 0; j < n; ++j) t.sealed_for_merchant.push_back(r.get_bytes());
  } catch (const Error& e) {
    t.aborted = true;
    net.send(id(), t.buyer, MessageKind::abort, abort_payload(9, e.what(), e.code()), kControl);
    return;
  }
  // Step 11: hold the keys until the window fills or tau expires.
  pending_.push_back(tid);
  if (pending_.size() >= cfg_.batch_size) {
    release_window(false, net);
  } else if (pending_.size() == 1) {
    Timer tm{Timer::Type::window, window_, {}, 0, 0};
    set_timer(net, cfg_.tau_ticks, tm);
  }
}

void Monitor::release_window(bool degraded, Network& net) {
  for (const auto& tid : pending_) {
    auto& t = txns_.at(tid);
    t.record.degraded_privacy = degraded;
    ByteWriter w;
    w.put_string(tid).put<std::uint32_t>(static_cast<std::uint32_t>(t.sealed_for_merchant.size()));
    for (const auto& s : t.sealed_for_merchant) w.put_bytes(s);
    net.send(id(), dir_.merchant, MessageKind::key_forward, w.take(), kCipher);
  }
  pending_.clear();
  ++window_;
}

void Monitor::start_lane(Txn& t, Network& net) {
  const std::size_t j = t.current_lane;
  const auto& proxy = t.proxies[j];
  t.used.insert(proxy);
  ByteWriter w;
  w.put_string(t.record.tid).put<std::uint32_t>(static_cast<std::uint32_t>(j));
  w.put_bytes(Bytes(t.ps[j].begin(), t.ps[j].end()));
  w.put_string(dir_.merchant).put_string(t.buyer).put_string(t.relays.empty() ? "" : t.relays[j]);
  net.send(id(), proxy, MessageKind::segment_assignment, w.take(), {PayloadClass::fingerprint_bits});
  set_timer(net, cfg_.proxy_timeout, Timer{Timer::Type::lane, 0, t.record.tid, j, ++t.attempt});
}

void Monitor::on_lane_complete(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  const auto lane = r.get<std::uint32_t>();
  auto it = txns_.find(tid);
  if (it == txns_.end()) return;
  auto& t = it->second;
  if (t.complete || t.aborted || lane != t.current_lane || msg.from != t.proxies[lane]) return;
  // Steps 15-17 are sequential: the next proxy starts only now.
  if (++t.current_lane == t.proxies.size()) {
    t.complete = true;
    t.record.closed_tick = net.now();
  } else {
    start_lane(t, net);
  }
}

void Monitor::on_timer(std::uint64_t timer, Network& net) {
  auto node = timers_.extract(timer);
  if (node.empty()) return;
  const Timer tm = node.mapped();
  if (tm.type == Timer::Type::window) {
    if (tm.window == window_ && !pending_.empty()) release_window(true, net);
    return;
  }
  auto it = txns_.find(tm.tid);
  if (it == txns_.end()) return;
  auto& t = it->second;
  if (t.complete || t.aborted || t.current_lane != tm.lane || t.attempt != tm.attempt) return;
  // proxy timed out; hand the lane to a spare
  for (const auto& p : pool_) {
    if (t.used.count(p) || std::find(t.proxies.begin(), t.proxies.end(), p) != t.proxies.end()) continue;
    t.proxies[tm.lane] = p;
    start_lane(t, net);
    return;
  }
  t.aborted = true;
  net.send(id(), t.buyer, MessageKind::abort, abort_payload(15, "proxy timeout and no spare proxy"), kControl);
}

void Monitor::on_trace(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto m = r.get<std::uint32_t>();
  const auto pc = unpack_bits(r.get_bytes(), m);
  ByteWriter w;
  std::vector<std::string> accused;
  if (m == book_.length()) {
    const auto res = codes::trace(codes::to_pirated(pc), book_, codes::ThresholdPolicy::fixed(threshold()));
    for (auto row : res.accused)
      for (const auto& tid : order_) {
        const auto& t = txns_.at(tid);
        if (t.record.row && *t.record.row == row) accused.push_back(t.record.pseudonym.hex());
      }
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(accused.size()));
  for (const auto& a : accused) w.put_string(a);
  net.send(id(), msg.from, MessageKind::accusation, w.take(), {PayloadClass::pseudonym});
}

void Monitor::on_evidence_request(const Message& msg, Network& net) {
  if (msg.from != dir_.judge) return;
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  const auto hex = r.get_string();
  auto it = txns_.find(tid);
  ByteWriter w;
  w.put_string(tid);
  if (it == txns_.end() || it->second.record.pseudonym.hex() != hex) {
    w.put<std::uint8_t>(0).put<std::uint32_t>(0).put_bytes({});
  } else {
    const auto& f = it->second.f;
    w.put<std::uint8_t>(1).put<std::uint32_t>(static_cast<std::uint32_t>(f.size()));
    w.put_bytes(crypto::seal(pack_bits(f), dir_.key(dir_.judge), rng_));
  }
  net.send(id(), msg.from, MessageKind::evidence, w.take(), kCipher);
}

// ------------------------------------------------------------ proxy

Proxy::Proxy(EntityId id, bool faulty) : Entity(std::move(id)), faulty_(faulty) {}

void Proxy::on_message(const Message& msg, Network& net) {
  if (faulty_) return;
  if (msg.kind == MessageKind::segment_assignment) {
    ByteReader r(msg.payload);
    Job job;
    job.assigner = msg.from;
    job.tid = r.get_string();
    job.lane = r.get<std::uint32_t>();
    job.ps = r.get_bytes();
    const auto merchant = r.get_string();
    job.deliver_to = r.get_string();
    job.via = r.get_string();
    ByteWriter w;
    w.put_string(job.tid).put<std::uint32_t>(static_cast<std::uint32_t>(job.lane));
    jobs_.push_back(std::move(job));
    net.send(id(), merchant, MessageKind::fetch_request, w.take(), kControl);
    return;
  }
  if (msg.kind == MessageKind::encrypted_variants) {
    ByteReader r(msg.payload);
    const auto tid = r.get_string();
    const auto lane = r.get<std::uint32_t>();
    auto it = std::find_if(jobs_.begin(), jobs_.end(),
                           [&](const Job& j) { return !j.done && j.tid == tid && j.lane == lane; });
    if (it == jobs_.end()) return;
    it->v0 = get_blocks(r);
    it->v1 = get_blocks(r);
    // Step 17: pick per block, never decrypt.
    it->selected = proxy_select_fragments(it->ps, it->v0, it->v1);
    it->done = true;
    ByteWriter w;
    w.put_string(tid).put<std::uint32_t>(lane).put_string(it->deliver_to);
    put_blocks(w, it->selected);
    net.send(id(), it->via.empty() ? it->deliver_to : it->via, MessageKind::fragments, w.take(), kCipher);
    ByteWriter done;
    done.put_string(tid).put<std::uint32_t>(lane);
    net.send(id(), it->assigner, MessageKind::lane_complete, done.take(), kControl);
  }
}

// ------------------------------------------------------------ buyer

Buyer::Buyer(EntityId address, BuyerSpec spec, const Directory& dir, crypto::Identity identity, std::string item,
             bool fetch_supplementary, Rng rng)
    : Entity(std::move(address)),
      spec_(std::move(spec)),
      dir_(dir),
      identity_(std::move(identity)),
      item_(std::move(item)),
      fetch_sf_(fetch_supplementary),
      rng_(std::move(rng)) {}

void Buyer::on_timer(std::uint64_t timer, Network& net) {
  if (timer != kStartTimer) return;
  ++queued_;
  if (!busy_) begin(net);
}

void Buyer::begin(Network& net) {
  --queued_;
  busy_ = true;
  cur_ = PurchaseResult{};
  cur_.real_id = identity_.real_id;
  cur_.address = id();
  sigmas_.clear();
  keys_.clear();
  lanes_.clear();

  if (spec_.rogue_ca) {
    // Self-made CA that merely claims the CA_R name.
    crypto::CertificateAuthority rogue("CA_R", rng_);
    anon_keys_ = crypto::KeyPair::generate(rng_);
    Bytes r(16);
    fill_bytes(rng_, r);
    anon_cert_ = crypto::make_anonymous_certificate(rogue, anon_keys_->public_key(),
                                                    crypto::make_pseudonym(identity_.real_id, r), 0);
    send_purchase(net);
    return;
  }
  if (spec_.replay_certificate) {
    // captured certificate, own key: the CA signature no longer matches
    anon_keys_ = crypto::KeyPair::generate(rng_);
    anon_cert_ = *spec_.replay_certificate;
    anon_cert_->key = anon_keys_->public_key();
    send_purchase(net);
    return;
  }
  if (spec_.insider_secret) {
    anon_keys_ = crypto::KeyPair::generate(rng_);
    const auto& [victim, r] = *spec_.insider_secret;
    ByteWriter w;
    w.put_string(crypto::make_pseudonym(victim, r).hex()).put_string(victim).put_bytes(r);
    w.put_bytes(anon_keys_->public_key().bytes());
    net.send(id(), dir_.registration_ca, MessageKind::recertify_request, w.take(),
             {PayloadClass::real_identity, PayloadClass::key_material});
    return;
  }
  if (!anon_cert_ || spec_.rotate_pseudonym) {
    // Steps 1-2: fresh anonymous key pair, signed with the real key.
    anon_keys_ = crypto::KeyPair::generate(rng_);
    const auto anon = anon_keys_->public_key().bytes();
    ByteWriter w;
    w.put_bytes(identity_.certificate.bytes()).put_bytes(anon).put_bytes(identity_.keys.sign(anon));
    net.send(id(), dir_.registration_ca, MessageKind::register_request, w.take(),
             {PayloadClass::real_identity, PayloadClass::certificate, PayloadClass::signature});
    return;
  }
  send_purchase(net);
}

void Buyer::send_purchase(Network& net) {
  cur_.pseudonym = crypto::Pseudonym::from_hex(anon_cert_->subject);
  Agreement agr;
  agr.item = item_;
  agr.pseudonym_hex = anon_cert_->subject;
  agr.nonce.resize(16);
  fill_bytes(rng_, agr.nonce);
  agr.tick = net.now();
  const auto a = agr.bytes();
  ByteWriter w;
  w.put_bytes(anon_cert_->bytes()).put_bytes(a).put_bytes(anon_keys_->sign(a));
  net.send(id(), dir_.merchant, MessageKind::purchase_request, w.take(),
           {PayloadClass::certificate, PayloadClass::pseudonym, PayloadClass::agreement, PayloadClass::signature});
}

void Buyer::on_message(const Message& msg, Network& net) {
  if (!busy_) return;
  if (sf_ && sf_->state() == SfClient::State::waiting && sf_->handle(id(), msg, net)) {
    if (sf_->state() == SfClient::State::delivered) {
      finish_supplementary(net);
    } else if (sf_->state() == SfClient::State::failed) {
      cur_.supplementary_error = sf_->error();
      finish(net);
    }
    return;
  }
  switch (msg.kind) {
    case MessageKind::anon_certificate: {
      try {
        auto cert = crypto::Certificate::from_bytes(msg.payload);
        if (!(cert.key == anon_keys_->public_key()) || !crypto::verify_certificate(cert, dir_.ca_r))
          fail(Errc::auth_failure, "anonymous certificate does not verify");
        anon_cert_ = std::move(cert);
      } catch (const Error& e) {
        cur_.aborted = true;
        cur_.abort_step = 3;
        cur_.abort_reason = e.what();
        finish(net);
        return;
      }
      send_purchase(net);
      break;
    }
    case MessageKind::purchase_ack: {
      ByteReader r(msg.payload);
      cur_.tid = r.get_string();
      break;
    }
    case MessageKind::abort: {
      const auto a = parse_abort(msg.payload);
      cur_.aborted = true;
      cur_.abort_step = a.step;
      cur_.abort_reason = a.reason;
      finish(net);
      break;
    }
    case MessageKind::key_request: on_key_request(msg, net); break;
    case MessageKind::fragments: on_fragments(msg, net); break;
    default: break;
  }
}

void Buyer::on_key_request(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  if (tid != cur_.tid) return;
  const auto n = r.get<std::uint32_t>();
  std::vector<std::size_t> lengths(n);
  for (auto& l : lengths) l = r.get<std::uint32_t>();

  // Steps 7-8: n permutation keys and n session keys, sealed for MO and M.
  ByteWriter w;
  w.put_string(tid).put<std::uint32_t>(n);
  std::vector<Bytes> for_merchant;
  try {
    for (std::uint32_t j = 0; j < n; ++j) {
      sigmas_.push_back(crypto::PermutationKey::random(lengths[j], rng_));
      keys_.push_back(crypto::random_session_key(rng_));
      const auto sb = sigmas_.back().bytes();
      w.put_bytes(crypto::seal(sb, dir_.key(dir_.monitor), rng_));
      ByteWriter mk;
      mk.put_bytes(sb).put_bytes(Bytes(keys_.back().begin(), keys_.back().end()));
      for_merchant.push_back(crypto::seal(mk.bytes(), dir_.key(dir_.merchant), rng_));
    }
  } catch (const Error& e) {
    cur_.aborted = true;
    cur_.abort_step = 8;
    cur_.abort_reason = e.what();
    finish(net);
    return;
  }
  for (const auto& s : for_merchant) w.put_bytes(s);
  lanes_.assign(n, std::nullopt);
  net.send(id(), msg.from, MessageKind::key_delivery, w.take(), kCipher);
}

void Buyer::on_fragments(const Message& msg, Network& net) {
  ByteReader r(msg.payload);
  const auto tid = r.get_string();
  const auto lane = r.get<std::uint32_t>();
  (void)r.get_string();
  if (tid != cur_.tid || lane >= lanes_.size() || lanes_[lane]) return;
  const auto blocks = get_blocks(r);
  std::vector<std::vector<double>> clear;
  try {
    // Steps 18-19: decrypt with K_j, undo sigma_j.
    if (blocks.size() != sigmas_[lane].size()) fail(Errc::length_mismatch, "fragment count differs from segment");
    for (const auto& b : blocks) clear.push_back(crypto::decode_doubles(crypto::sym_decrypt(b.ciphertext, keys_[lane], b.nonce)));
    lanes_[lane] = crypto::unpermute(clear, sigmas_[lane]);
  } catch (const Error& e) {
    cur_.aborted = true;
    cur_.abort_step = 18;
    cur_.abort_reason = e.what();
    finish(net);
    return;
  }
  if (std::any_of(lanes_.begin(), lanes_.end(), [](const auto& l) { return !l.has_value(); })) return;

  for (const auto& l : lanes_)
    for (const auto& block : *l) cur_.approx.insert(cur_.approx.end(), block.begin(), block.end());
  cur_.completed = true;
  if (!fetch_sf_) {
    finish(net);
    return;
  }
  // Step 20: SF from the P2P network.
  if (sf_) sf_->reset(*anon_keys_, *anon_cert_);
  else sf_.emplace(dir_, *anon_keys_, *anon_cert_);
  sf_->start(id(), item_, net);
}

void Buyer::finish_supplementary(Network& net) {
  try {
    const auto sf = transform::deserialize_supplementary(sf_->data());
    cur_.content = transform::reconstruct(cur_.approx, sf);
    cur_.supplementary_verified = true;
  } catch (const Error& e) {
    cur_.supplementary_error = e.what();
  }
  finish(net);
}

void Buyer::finish(Network& net) {
  results_.push_back(std::move(cur_));
  cur_ = PurchaseResult{};
  busy_ = false;
  if (queued_ > 0) begin(net);
}

}  // namespace psum::protocol::detail
