#include <algorithm>

#include "entities.hpp"
#include "psum/error.hpp"

namespace psum::protocol::detail {

namespace {

const std::vector<PayloadClass> kControl{PayloadClass::control};
const std::vector<PayloadClass> kCipher{PayloadClass::ciphertext};

Bytes nonce_and(const crypto::Nonce& n, const Bytes& ct) {
  Bytes out(n.begin(), n.end());
  out.insert(out.end(), ct.begin(), ct.end());
  return out;
}

Bytes open_layer(const Bytes& data, const crypto::SessionKey& key) {
  if (data.size() < crypto::kNonceBytes) fail(Errc::auth_failure, "layer shorter than its nonce");
  crypto::Nonce n{};
  std::copy(data.begin(), data.begin() + crypto::kNonceBytes, n.begin());
  return crypto::sym_decrypt(std::span(data).subspan(crypto::kNonceBytes), key, n);
}

crypto::SessionKey session_key_from(const Bytes& b) {
  crypto::SessionKey k{};
  if (b.size() != k.size()) fail(Errc::format, "session key must be 16 bytes");
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

void put_paths(ByteWriter& w, const std::vector<std::vector<EntityId>>& paths) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(paths.size()));
  for (const auto& p : paths) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.size()));
    for (const auto& r : p) w.put_string(r);
  }
}

std::vector<std::vector<EntityId>> get_paths(ByteReader& r) {
  std::vector<std::vector<EntityId>> paths(r.get<std::uint32_t>());
  for (auto& p : paths) {
    p.resize(r.get<std::uint32_t>());
    for (auto& id : p) id = r.get_string();
  }
  return paths;
}

std::string digest_hex(const Bytes& b) { return crypto::to_hex(crypto::sha256(b)); }

}  // namespace

// ------------------------------------------------------------ client

SfClient::SfClient(const Directory& dir, const crypto::KeyPair& anon_keys, const crypto::Certificate& cert)
    : dir_(dir), keys_(&anon_keys), cert_(&cert) {}

void SfClient::reset(const crypto::KeyPair& anon_keys, const crypto::Certificate& cert) {
  keys_ = &anon_keys;
  cert_ = &cert;
  state_ = State::idle;
  provider_.clear();
  digest_.clear();
  key_.reset();
  data_.clear();
  error_.clear();
  failure_.reset();
}

void SfClient::fail_with(Errc code, const std::string& why) {
  state_ = State::failed;
  failure_ = code;
  error_ = why;
}

void SfClient::start(const EntityId& self, const std::string& item, Network& net) {
  state_ = State::waiting;
  ByteWriter w;
  w.put_string(item);
  net.send(self, dir_.superpeer, MessageKind::sf_lookup, w.take(), kControl);
}

void SfClient::request_directly(const EntityId& self, const EntityId& provider, const std::string& digest,
                                std::vector<std::vector<EntityId>> paths, Network& net) {
  state_ = State::waiting;
  provider_ = provider;
  digest_ = digest;
  ByteWriter w;
  w.put_bytes(cert_->bytes());
  put_paths(w, paths);
  net.send(self, provider_, MessageKind::sf_request, w.take(), {PayloadClass::certificate, PayloadClass::control});
}

bool SfClient::handle(const EntityId& self, const Message& msg, Network& net) {
  if (state_ != State::waiting) return false;
  switch (msg.kind) {
    case MessageKind::sf_providers: {
      if (msg.from != dir_.superpeer) return false;
      ByteReader r(msg.payload);
      const auto provider = r.get_string();
      const auto digest = r.get_string();
      auto paths = get_paths(r);
      if (provider.empty()) {
        fail_with(Errc::protocol_abort, "no provider lists the item");
        return true;
      }
      request_directly(self, provider, digest, std::move(paths), net);
      return true;
    }
    case MessageKind::sf_offer: {
      if (msg.from != provider_) return false;
      try {
        ByteReader r(msg.payload);
        const auto cert = crypto::Certificate::from_bytes(r.get_bytes());
        if (!crypto::verify_certificate(cert, dir_.ca_r)) fail(Errc::auth_failure, "provider certificate rejected");
        key_ = session_key_from(keys_->open(r.get_bytes()));
      } catch (const Error& e) {
        fail_with(e.code(), e.what());
      }
      return true;
    }
    case MessageKind::sf_packet: {
      ByteReader r(msg.payload);
      const auto attempt = r.get_string();
      const auto data = r.get_bytes();
      ByteWriter reply;
      reply.put_string(attempt);
      try {
        if (!key_) fail(Errc::protocol_abort, "packet before session key");
        data_ = open_layer(data, *key_);
        if (digest_hex(data_) != digest_) fail(Errc::auth_failure, "supplementary file digest mismatch");
      } catch (const Error& e) {
        fail_with(e.code(), std::string("requester: ") + e.what());
        reply.put_string(error_);
        net.send(self, provider_, MessageKind::sf_nack, reply.take(), kControl);
        return true;
      }
      state_ = State::delivered;
      net.send(self, provider_, MessageKind::sf_ack, reply.take(), kControl);
      return true;
    }
    case MessageKind::abort: {
      if (msg.from != provider_) return false;
      const auto a = parse_abort(msg.payload);
      fail_with(a.code, a.reason);
      return true;
    }
    default: return false;
  }
}

// ------------------------------------------------------------ super peer

SuperPeer::SuperPeer(const Directory& dir, std::vector<EntityId> relays, std::size_t path_length, Rng rng)
    : Entity(dir.superpeer), dir_(dir), relays_(std::move(relays)), path_length_(path_length), rng_(std::move(rng)) {}

void SuperPeer::on_message(const Message& msg, Network& net) {
  if (msg.kind == MessageKind::sf_announce) {
    ByteReader r(msg.payload);
    const auto item = r.get_string();
    index_[item] = Listing{msg.from, r.get_string()};
    return;
  }
  if (msg.kind != MessageKind::sf_lookup) return;
  ByteReader r(msg.payload);
  const auto item = r.get_string();
  ByteWriter w;
  auto it = index_.find(item);
  if (it == index_.end() || relays_.size() < path_length_ || path_length_ == 0) {
    w.put_string("").put_string("");
    put_paths(w, {});
    net.send(id(), msg.from, MessageKind::sf_providers, w.take(), kControl);
    return;
  }
  // Primary path plus one alternate, disjoint when the pool allows it.
  std::vector<EntityId> pool = relays_;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng_)]);
  }
  std::vector<std::vector<EntityId>> paths;
  paths.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(path_length_));
  if (pool.size() >= 2 * path_length_)
    paths.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(path_length_),
                       pool.begin() + static_cast<std::ptrdiff_t>(2 * path_length_));
  else
    paths.emplace_back(pool.end() - static_cast<std::ptrdiff_t>(path_length_), pool.end());
  w.put_string(it->second.provider).put_string(it->second.digest);
  put_paths(w, paths);
  net.send(id(), msg.from, MessageKind::sf_providers, w.take(), kControl);
}

// ------------------------------------------------------------ provider

SfProvider::SfProvider(EntityId id, const Directory& dir, std::uint64_t timeout, Rng rng)
    : Entity(std::move(id)), dir_(dir), timeout_(timeout), rng_(std::move(rng)) {}

void SfProvider::set_identity(crypto::KeyPair keys, crypto::Certificate cert) {
  keys_ = std::move(keys);
  cert_ = std::move(cert);
}

void SfProvider::set_data(std::string item, Bytes data) {
  item_ = std::move(item);
  data_ = std::move(data);
  digest_ = digest_hex(data_);
}

void SfProvider::on_message(const Message& msg, Network& net) {
  switch (msg.kind) {
    case MessageKind::sf_publish: {
      ByteReader r(msg.payload);
      auto item = r.get_string();
      set_data(std::move(item), r.get_bytes());
      ByteWriter w;
      w.put_string(item_).put_string(digest_);
      net.send(id(), dir_.superpeer, MessageKind::sf_announce, w.take(), kControl);
      break;
    }
    case MessageKind::sf_request: {
      ByteReader r(msg.payload);
      crypto::Certificate cert;
      bool ok = false;
      try {
        cert = crypto::Certificate::from_bytes(r.get_bytes());
        ok = crypto::verify_certificate(cert, dir_.ca_r);
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) {
        state_ = State::failed;
        failure_ = Errc::auth_failure;
        error_ = "requester certificate rejected";
        net.send(id(), msg.from, MessageKind::abort, abort_payload(20, error_, Errc::auth_failure), kControl);
        return;
      }
      Transfer t;
      t.requester = msg.from;
      t.key = crypto::random_session_key(rng_);
      t.paths = get_paths(r);
      const auto tid = ++next_transfer_;
      ByteWriter w;
      w.put_bytes(cert_->bytes()).put_bytes(crypto::seal(t.key, cert.key, rng_));
      net.send(id(), msg.from, MessageKind::sf_offer, w.take(), {PayloadClass::certificate, PayloadClass::ciphertext});
      transfers_.emplace(tid, std::move(t));
      state_ = State::sending;
      attempt(tid, net);
      break;
    }
    case MessageKind::sf_ack:
    case MessageKind::sf_nack: {
      ByteReader r(msg.payload);
      const auto attempt_id = r.get_string();
      const auto tid = std::stoull(attempt_id.substr(0, attempt_id.find('.')));
      auto it = transfers_.find(tid);
      if (it == transfers_.end() || it->second.done) return;
      it->second.done = true;
      if (msg.kind == MessageKind::sf_ack) {
        state_ = State::delivered;
        return;
      }
      state_ = State::failed;
      failure_ = Errc::auth_failure;
      error_ = r.get_string();
      if (msg.from != it->second.requester)
        net.send(id(), it->second.requester, MessageKind::abort, abort_payload(20, error_, Errc::auth_failure), kControl);
      break;
    }
    default: break;
  }
}

void SfProvider::attempt(std::uint64_t tid, Network& net) {
  auto& t = transfers_.at(tid);
  if (t.path >= t.paths.size()) {
    t.done = true;
    state_ = State::failed;
    failure_ = Errc::protocol_abort;
    error_ = "every relay path timed out";
    net.send(id(), t.requester, MessageKind::abort, abort_payload(20, error_), kControl);
    return;
  }
  ++attempts_;
  const auto& path = t.paths[t.path];
  const std::string attempt_id = std::to_string(tid) + "." + std::to_string(t.path);

  std::vector<crypto::SessionKey> layer(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    layer[i] = crypto::random_session_key(rng_);
    ByteWriter w;
    w.put_string(attempt_id).put_bytes(crypto::seal(layer[i], dir_.key(path[i]), rng_)).put_string(id());
    net.send(id(), path[i], MessageKind::sf_layer_key, w.take(), kCipher);
  }
  // innermost: SF under the transfer key; then one layer per relay, outermost first hop
  auto n = crypto::random_nonce(rng_);
  Bytes data = nonce_and(n, crypto::sym_encrypt(data_, t.key, n));
  for (std::size_t i = path.size(); i-- > 0;) {
    ByteWriter inner;
    inner.put_string(i + 1 < path.size() ? path[i + 1] : t.requester).put_bytes(data);
    n = crypto::random_nonce(rng_);
    data = nonce_and(n, crypto::sym_encrypt(inner.bytes(), layer[i], n));
  }
  ByteWriter w;
  w.put_string(attempt_id).put_bytes(data);
  net.send(id(), path.front(), MessageKind::sf_packet, w.take(), kCipher);
  net.schedule(id(), timeout_, (tid << 16) | t.path);
}

void SfProvider::on_timer(std::uint64_t timer, Network& net) {
  const auto tid = timer >> 16;
  const auto path = timer & 0xffff;
  auto it = transfers_.find(tid);
  if (it == transfers_.end() || it->second.done || it->second.path != path) return;
  ++it->second.path;  // dropped somewhere: try the alternate path
  attempt(tid, net);
}

// ------------------------------------------------------------ relay

Relay::Relay(EntityId id, Rng& rng, bool tamper, bool drop)
    : Entity(std::move(id)), keys_(crypto::KeyPair::generate(rng)), tamper_(tamper), drop_(drop) {}

void Relay::on_message(const Message& msg, Network& net) {
  switch (msg.kind) {
    case MessageKind::sf_layer_key: {
      ByteReader r(msg.payload);
      const auto attempt = r.get_string();
      Layer l;
      l.key = session_key_from(keys_.open(r.get_bytes()));
      l.provider = r.get_string();
      layers_[attempt] = l;
      break;
    }
    case MessageKind::sf_packet: {
      ByteReader r(msg.payload);
      const auto attempt = r.get_string();
      const auto data = r.get_bytes();
      auto it = layers_.find(attempt);
      if (it == layers_.end()) return;
      Bytes inner;
      EntityId next;
      try {
        const auto plain = open_layer(data, it->second.key);
        ByteReader pr(plain);
        next = pr.get_string();
        inner = pr.get_bytes();
      } catch (const Error& e) {
        ByteWriter w;
        w.put_string(attempt).put_string(id() + ": " + e.what());
        net.send(id(), it->second.provider, MessageKind::sf_nack, w.take(), kControl);
        return;
      }
      if (drop_) return;
      if (tamper_ && !inner.empty()) inner[inner.size() / 2] ^= 0x01;
      ByteWriter w;
      w.put_string(attempt).put_bytes(inner);
      net.send(id(), next, MessageKind::sf_packet, w.take(), kCipher);
      break;
    }
    case MessageKind::fragments: {
      // monitor-chosen re-routing of proxy output; payload untouched
      ByteReader r(msg.payload);
      (void)r.get_string();
      (void)r.get<std::uint32_t>();
      const auto dest = r.get_string();
      if (dest != id()) net.send(id(), dest, MessageKind::fragments, msg.payload, msg.classes);
      break;
    }
    default: break;
  }
}

}  // namespace psum::protocol::detail

namespace psum::protocol {

namespace {

class Requester : public Entity {
 public:
  Requester(EntityId id, const detail::Directory& dir, crypto::KeyPair keys, crypto::Certificate cert)
      : Entity(std::move(id)), keys_(std::move(keys)), cert_(std::move(cert)), client_(dir, keys_, cert_) {}
  detail::SfClient& client() { return client_; }
  void on_message(const Message& msg, Network& net) override { client_.handle(id(), msg, net); }

 private:
  crypto::KeyPair keys_;
  crypto::Certificate cert_;
  detail::SfClient client_;
};

}  // namespace

SfTransferResult run_sf_distribution(const Bytes& sf, const SfTransferOptions& opts) {
  require(opts.relays >= 1, "sf distribution: relay path must have at least one relay");
  detail::Directory dir;
  Network net;
  std::uint64_t stream = 0;
  auto rng = [&] { return make_rng(opts.seed, 0x5f00 + stream++); };

  detail::RegistrationCa ca(dir, rng());
  dir.ca_r = ca.public_key();

  auto prov_rng = rng();
  detail::SfProvider provider("provider", dir, opts.timeout, rng());
  auto pkeys = crypto::KeyPair::generate(prov_rng);
  auto pcert = ca.enroll("provider", pkeys.public_key());
  provider.set_identity(std::move(pkeys), std::move(pcert));
  provider.set_data("sf", sf);

  auto req_rng = rng();
  auto rkeys = crypto::KeyPair::generate(req_rng);
  crypto::Certificate rcert;
  if (opts.requester_cert_from_rogue_ca) {
    crypto::CertificateAuthority rogue("CA_R", req_rng);
    Bytes r(16);
    fill_bytes(req_rng, r);
    rcert = crypto::make_anonymous_certificate(rogue, rkeys.public_key(), crypto::make_pseudonym("requester", r), 0);
  } else {
    rcert = ca.enroll("requester", rkeys.public_key());
  }
  Requester requester("requester", dir, std::move(rkeys), std::move(rcert));

  std::vector<std::unique_ptr<detail::Relay>> relays;
  std::vector<std::vector<EntityId>> paths(1 + opts.alternate_paths);
  auto relay_rng = rng();
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (std::size_t i = 0; i < opts.relays; ++i) {
      const bool primary = p == 0;
      auto id = "relay-" + std::to_string(p * opts.relays + i);
      relays.push_back(std::make_unique<detail::Relay>(id, relay_rng, primary && opts.tamper_relay == i,
                                                       primary && opts.drop_relay == i));
      dir.keys[id] = relays.back()->public_key();
      paths[p].push_back(id);
    }

  net.attach(ca);
  net.attach(provider);
  net.attach(requester);
  for (auto& r : relays) net.attach(*r);

  requester.client().request_directly(requester.id(), provider.id(), provider.digest(), paths, net);
  net.run();

  SfTransferResult out;
  const auto& c = requester.client();
  out.delivered = c.state() == detail::SfClient::State::delivered;
  out.provider_digest = provider.digest();
  if (out.delivered) {
    out.data = c.data();
    out.requester_digest = crypto::to_hex(crypto::sha256(out.data));
  }
  if (c.failure()) {
    out.failure = c.failure();
    out.failure_reason = c.error();
  } else if (provider.failure()) {
    out.failure = provider.failure();
    out.failure_reason = provider.error();
  }
  out.attempts = provider.attempts();
  out.relays = paths.front();
  for (const auto& id : net.entities()) out.transcripts[id] = net.transcript(id);
  return out;
}

}  // namespace psum::protocol
