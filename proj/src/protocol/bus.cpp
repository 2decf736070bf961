#include <ostream>

#include "json.hpp"
#include "psum/error.hpp"
#include "psum/protocol.hpp"

namespace psum::protocol {

std::string to_string(PayloadClass c) {
  switch (c) {
    case PayloadClass::control: return "control";
    case PayloadClass::real_identity: return "real_identity";
    case PayloadClass::pseudonym: return "pseudonym";
    case PayloadClass::certificate: return "certificate";
    case PayloadClass::signature: return "signature";
    case PayloadClass::agreement: return "agreement";
    case PayloadClass::key_material: return "key_material";
    case PayloadClass::ciphertext: return "ciphertext";
    case PayloadClass::fingerprint_bits: return "fingerprint_bits";
    case PayloadClass::pirate_codeword: return "pirate_codeword";
    case PayloadClass::clear_coefficients: return "clear_coefficients";
    case PayloadClass::verdict: return "verdict";
  }
  return "unknown";
}

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::register_request: return "register_request";
    case MessageKind::recertify_request: return "recertify_request";
    case MessageKind::anon_certificate: return "anon_certificate";
    case MessageKind::purchase_request: return "purchase_request";
    case MessageKind::purchase_ack: return "purchase_ack";
    case MessageKind::fingerprint_request: return "fingerprint_request";
    case MessageKind::key_request: return "key_request";
    case MessageKind::key_delivery: return "key_delivery";
    case MessageKind::key_forward: return "key_forward";
    case MessageKind::variants_ready: return "variants_ready";
    case MessageKind::segment_assignment: return "segment_assignment";
    case MessageKind::fetch_request: return "fetch_request";
    case MessageKind::encrypted_variants: return "encrypted_variants";
    case MessageKind::fragments: return "fragments";
    case MessageKind::lane_complete: return "lane_complete";
    case MessageKind::abort: return "abort";
    case MessageKind::sf_publish: return "sf_publish";
    case MessageKind::sf_announce: return "sf_announce";
    case MessageKind::sf_lookup: return "sf_lookup";
    case MessageKind::sf_providers: return "sf_providers";
    case MessageKind::sf_request: return "sf_request";
    case MessageKind::sf_offer: return "sf_offer";
    case MessageKind::sf_layer_key: return "sf_layer_key";
    case MessageKind::sf_packet: return "sf_packet";
    case MessageKind::sf_ack: return "sf_ack";
    case MessageKind::sf_nack: return "sf_nack";
    case MessageKind::trace_request: return "trace_request";
    case MessageKind::accusation: return "accusation";
    case MessageKind::claim: return "claim";
    case MessageKind::evidence_request: return "evidence_request";
    case MessageKind::evidence: return "evidence";
    case MessageKind::identity_request: return "identity_request";
    case MessageKind::identity_response: return "identity_response";
    case MessageKind::verdict: return "verdict";
  }
  return "unknown";
}

std::string to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::guilty: return "guilty";
    case Verdict::Kind::innocent: return "innocent";
    case Verdict::Kind::rejected_evidence: return "rejected-evidence";
  }
  return "unknown";
}

bool contains_class(const Transcript& t, PayloadClass c) {
  for (const auto& e : t)
    for (auto x : e.classes)
      if (x == c) return true;
  return false;
}

TranscriptShape shape_of(const Transcript& t) {
  TranscriptShape s;
  for (const auto& e : t) s.emplace(e.direction, e.kind, e.payload_size);
  return s;
}

void Network::attach(Entity& e) {
  if (!entities_.emplace(e.id(), &e).second) fail(Errc::invalid_argument, "network: duplicate entity " + e.id());
  transcripts_[e.id()];
}

void Network::send(const EntityId& from, const EntityId& to, MessageKind kind, Bytes payload,
                   std::vector<PayloadClass> classes) {
  if (!entities_.count(to)) fail(Errc::protocol_abort, "network: unknown recipient " + to);
  Message m;
  m.seq = ++seq_;
  m.tick = now_;
  m.from = from;
  m.to = to;
  m.kind = kind;
  m.payload = std::move(payload);
  m.classes = std::move(classes);

  TranscriptEntry e{m.seq, m.tick, Direction::sent, to, kind, crypto::to_hex(crypto::sha256(m.payload)),
                    m.payload.size(), m.classes};
  transcripts_[from].push_back(e);
  e.direction = Direction::received;
  e.peer = from;
  transcripts_[to].push_back(std::move(e));

  log_.push_back(std::move(m));
  queue_.push_back(log_.size() - 1);
}

void Network::schedule(const EntityId& who, std::uint64_t delay, std::uint64_t timer) {
  if (!entities_.count(who)) fail(Errc::protocol_abort, "network: unknown timer owner " + who);
  timers_.emplace(std::make_pair(now_ + delay, ++timer_order_), std::make_pair(who, timer));
}

void Network::run(std::size_t max_events) {
  for (std::size_t events = 0;; ++events) {
    if (events >= max_events) fail(Errc::protocol_abort, "network: event budget exhausted");
    if (!queue_.empty()) {
      const Message& m = log_[queue_.front()];
      queue_.pop_front();
      entities_.at(m.to)->on_message(m, *this);
      continue;
    }
    if (timers_.empty()) return;
    auto it = timers_.begin();
    now_ = std::max(now_, it->first.first);
    auto [who, timer] = it->second;
    timers_.erase(it);
    entities_.at(who)->on_timer(timer, *this);
  }
}

const Transcript& Network::transcript(const EntityId& who) const {
  auto it = transcripts_.find(who);
  if (it == transcripts_.end()) fail(Errc::invalid_argument, "network: no transcript for " + who);
  return it->second;
}

std::vector<EntityId> Network::entities() const {
  std::vector<EntityId> out;
  for (const auto& [id, _] : transcripts_) out.push_back(id);
  return out;
}

void write_jsonl(std::ostream& out, const Network& net) {
  for (const auto& m : net.log()) {
    nlohmann::json j;
    j["seq"] = m.seq;
    j["from"] = m.from;
    j["to"] = m.to;
    j["kind"] = to_string(m.kind);
    j["payload_digest"] = crypto::to_hex(crypto::sha256(m.payload));
    auto classes = nlohmann::json::array();
    for (auto c : m.classes) classes.push_back(to_string(c));
    j["classes"] = std::move(classes);
    out << j.dump() << '\n';
  }
}

}  // namespace psum::protocol
