#pragma once

// Entity state machines. Internal to the library: callers drive them
// through Simulation or run_sf_distribution.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psum/detail/binio.hpp"
#include "psum/protocol.hpp"

namespace psum::protocol::detail {

using psum::detail::ByteReader;
using psum::detail::ByteWriter;

// Public keys of everyone, plus the well-known entity names.
struct Directory {
  std::map<EntityId, crypto::PublicKey> keys;
  crypto::PublicKey ca_r;
  crypto::PublicKey ca_ext;
  EntityId merchant = "merchant";
  EntityId monitor = "monitor";
  EntityId registration_ca = "ca_r";
  EntityId judge = "judge";
  EntityId superpeer = "superpeer";

  const crypto::PublicKey& key(const EntityId& who) const;
};

// wire helpers
Bytes pack_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits(const Bytes& packed, std::size_t count);
void put_blocks(ByteWriter& w, const std::vector<EncryptedBlock>& blocks);
std::vector<EncryptedBlock> get_blocks(ByteReader& r);
Bytes abort_payload(int step, const std::string& reason, Errc code = Errc::protocol_abort);
struct AbortInfo {
  int step = 0;
  Errc code = Errc::protocol_abort;
  std::string reason;
};
AbortInfo parse_abort(const Bytes& payload);

// AGR: binds item, pseudonym and a buyer nonce.
struct Agreement {
  std::string item;
  std::string pseudonym_hex;
  Bytes nonce;
  std::uint64_t tick = 0;
  Bytes bytes() const;
  static Agreement parse(const Bytes& b);
};

// Checks cert under CA_R, the AGR signature under the cert key, and that
// the AGR names the cert's pseudonym.
bool verify_purchase_evidence(const crypto::Certificate& cert, const Bytes& agr, const Bytes& sig,
                              const crypto::PublicKey& ca_r);

class RegistrationCa : public Entity {
 public:
  RegistrationCa(const Directory& dir, Rng rng);
  const crypto::PublicKey& public_key() const { return ca_.public_key(); }
  // Out-of-band enrolment for infrastructure peers.
  crypto::Certificate enroll(const std::string& real_id, const crypto::PublicKey& anon_key);
  void on_message(const Message& msg, Network& net) override;
  std::optional<std::pair<std::string, Bytes>> secret_of(const std::string& pseudonym_hex) const;

 private:
  crypto::Certificate issue(const std::string& real_id, const crypto::PublicKey& anon_key);
  const Directory& dir_;
  Rng rng_;
  crypto::CertificateAuthority ca_;
  struct Entry {
    std::string real_id;
    Bytes r;
  };
  std::map<std::string, Entry> registry_;
};

class Merchant : public Entity {
 public:
  struct Lane {
    crypto::PermutationKey sigma;
    crypto::SessionKey key{};
    std::vector<EncryptedBlock> v0, v1;
  };

  Merchant(const Directory& dir, transform::Partition partition, std::string item, Rng rng);
  const crypto::PublicKey& public_key() const { return keys_.public_key(); }
  const transform::BaseFile& base_file() const { return partition_.base; }
  const transform::SupplementaryFile& supplementary_file() const { return partition_.supplementary; }
  const std::vector<TransactionRecord>& ledger() const { return ledger_; }
  const std::vector<Lane>& lanes(const std::string& tid) const;
  std::vector<std::uint8_t> extract(const transform::Content& pirated, bool normalize_gain) const;
  const std::vector<crypto::Pseudonym>& last_accusation() const { return accusation_; }
  const std::optional<Verdict>& last_verdict() const { return verdict_; }
  void publish_supplementary(Network& net, const EntityId& seeder);
  void on_message(const Message& msg, Network& net) override;

 private:
  void on_purchase(const Message& msg, Network& net);
  void on_key_forward(const Message& msg, Network& net);
  void on_fetch(const Message& msg, Network& net);

  const Directory& dir_;
  transform::Partition partition_;
  std::string item_;
  Rng rng_;
  crypto::KeyPair keys_;
  std::vector<TransactionRecord> ledger_;
  std::map<std::string, EntityId> buyer_of_;
  std::map<std::string, std::vector<Lane>> lanes_;
  std::vector<crypto::Pseudonym> accusation_;
  std::optional<Verdict> verdict_;
  std::uint64_t next_tid_ = 0;
};

class Monitor : public Entity {
 public:
  struct Txn {
    TransactionRecord record;
    EntityId buyer;
    std::vector<std::uint8_t> f;
    std::vector<std::size_t> lengths;
    std::vector<EntityId> proxies;
    std::vector<std::vector<std::uint8_t>> ps;
    std::vector<Bytes> sealed_for_merchant;
    std::vector<EntityId> relays;  // per lane, when re-routing
    std::set<EntityId> used;
    std::size_t current_lane = 0;
    std::size_t attempt = 0;
    bool complete = false;
    bool aborted = false;
  };

  Monitor(const Directory& dir, const SystemConfig& cfg, codes::CodeBook book, std::vector<EntityId> pool,
          std::vector<EntityId> relays, Rng rng);
  const crypto::PublicKey& public_key() const { return keys_.public_key(); }
  const codes::CodeBook& book() const { return book_; }
  std::vector<TransactionRecord> ledger() const;
  const Txn* find(const std::string& tid) const;
  double threshold();
  void on_message(const Message& msg, Network& net) override;
  void on_timer(std::uint64_t timer, Network& net) override;

 private:
  struct Timer {
    enum class Type { window, lane } type;
    std::uint64_t window = 0;
    std::string tid;
    std::size_t lane = 0;
    std::size_t attempt = 0;
  };

  void on_fingerprint_request(const Message& msg, Network& net);
  void on_key_delivery(const Message& msg, Network& net);
  void release_window(bool degraded, Network& net);
  void start_lane(Txn& t, Network& net);
  void on_lane_complete(const Message& msg, Network& net);
  void on_trace(const Message& msg, Network& net);
  void on_evidence_request(const Message& msg, Network& net);
  void set_timer(Network& net, std::uint64_t delay, Timer t);

  const Directory& dir_;
  const SystemConfig& cfg_;
  codes::CodeBook book_;
  std::vector<EntityId> pool_;
  std::vector<EntityId> relays_;
  Rng rng_;
  crypto::KeyPair keys_;
  std::map<std::string, Txn> txns_;
  std::vector<std::string> order_;
  std::vector<std::string> pending_;
  std::uint64_t window_ = 0;
  std::size_t requests_ = 0;
  std::map<std::uint64_t, Timer> timers_;
  std::uint64_t next_timer_ = 0;
  std::optional<double> threshold_;
};

class Proxy : public Entity {
 public:
  struct Job {
    std::string tid;
    std::size_t lane = 0;
    std::vector<std::uint8_t> ps;
    EntityId deliver_to;
    EntityId via;
    EntityId assigner;
    std::vector<EncryptedBlock> v0, v1, selected;
    bool done = false;
  };

  Proxy(EntityId id, bool faulty);
  const std::vector<Job>& jobs() const { return jobs_; }
  void on_message(const Message& msg, Network& net) override;

 private:
  bool faulty_;
  std::vector<Job> jobs_;
};

// Client half of the SF transfer, shared by buyers and bare requesters.
class SfClient {
 public:
  enum class State { idle, waiting, delivered, failed };
  SfClient(const Directory& dir, const crypto::KeyPair& anon_keys, const crypto::Certificate& cert);
  void reset(const crypto::KeyPair& anon_keys, const crypto::Certificate& cert);
  void start(const EntityId& self, const std::string& item, Network& net);
  // Returns true if the message belonged to the transfer.
  bool handle(const EntityId& self, const Message& msg, Network& net);
  State state() const { return state_; }
  const Bytes& data() const { return data_; }
  const std::string& expected_digest() const { return digest_; }
  const std::string& error() const { return error_; }
  std::optional<Errc> failure() const { return failure_; }
  void request_directly(const EntityId& self, const EntityId& provider, const std::string& digest,
                        std::vector<std::vector<EntityId>> paths, Network& net);

 private:
  void fail_with(Errc code, const std::string& why);
  const Directory& dir_;
  const crypto::KeyPair* keys_;
  const crypto::Certificate* cert_;
  State state_ = State::idle;
  EntityId provider_;
  std::string digest_;
  std::optional<crypto::SessionKey> key_;
  Bytes data_;
  std::string error_;
  std::optional<Errc> failure_;
};

class Buyer : public Entity {
 public:
  Buyer(EntityId address, BuyerSpec spec, const Directory& dir, crypto::Identity identity, std::string item,
        bool fetch_supplementary, Rng rng);
  const std::vector<PurchaseResult>& results() const { return results_; }
  const BuyerSpec& spec() const { return spec_; }
  void on_message(const Message& msg, Network& net) override;
  void on_timer(std::uint64_t timer, Network& net) override;

 private:
  void begin(Network& net);
  void send_purchase(Network& net);
  void on_key_request(const Message& msg, Network& net);
  void on_fragments(const Message& msg, Network& net);
  void finish_supplementary(Network& net);
  void finish(Network& net);

  BuyerSpec spec_;
  const Directory& dir_;
  crypto::Identity identity_;
  std::string item_;
  bool fetch_sf_;
  Rng rng_;
  std::optional<crypto::KeyPair> anon_keys_;
  std::optional<crypto::Certificate> anon_cert_;
  std::optional<SfClient> sf_;
  std::size_t queued_ = 0;
  bool busy_ = false;
  PurchaseResult cur_;
  std::vector<crypto::PermutationKey> sigmas_;
  std::vector<crypto::SessionKey> keys_;
  std::vector<std::optional<std::vector<std::vector<double>>>> lanes_;
  std::vector<PurchaseResult> results_;
};

class SuperPeer : public Entity {
 public:
  SuperPeer(const Directory& dir, std::vector<EntityId> relays, std::size_t path_length, Rng rng);
  void on_message(const Message& msg, Network& net) override;

 private:
  const Directory& dir_;
  std::vector<EntityId> relays_;
  std::size_t path_length_;
  Rng rng_;
  struct Listing {
    EntityId provider;
    std::string digest;
  };
  std::map<std::string, Listing> index_;
};

class SfProvider : public Entity {
 public:
  enum class State { idle, sending, delivered, failed };
  SfProvider(EntityId id, const Directory& dir, std::uint64_t timeout, Rng rng);
  void set_identity(crypto::KeyPair keys, crypto::Certificate cert);
  void set_data(std::string item, Bytes data);
  const crypto::PublicKey& anon_key() const { return keys_->public_key(); }
  const std::string& digest() const { return digest_; }
  State state() const { return state_; }
  std::size_t attempts() const { return attempts_; }
  std::optional<Errc> failure() const { return failure_; }
  const std::string& error() const { return error_; }
  void on_message(const Message& msg, Network& net) override;
  void on_timer(std::uint64_t timer, Network& net) override;

 private:
  struct Transfer {
    EntityId requester;
    crypto::SessionKey key{};
    std::vector<std::vector<EntityId>> paths;
    std::size_t path = 0;
    bool done = false;
  };
  void attempt(std::uint64_t id, Network& net);
  const Directory& dir_;
  std::uint64_t timeout_;
  Rng rng_;
  std::optional<crypto::KeyPair> keys_;
  std::optional<crypto::Certificate> cert_;
  std::string item_;
  Bytes data_;
  std::string digest_;
  std::map<std::uint64_t, Transfer> transfers_;
  std::uint64_t next_transfer_ = 0;
  State state_ = State::idle;
  std::size_t attempts_ = 0;
  std::optional<Errc> failure_;
  std::string error_;
};

class Relay : public Entity {
 public:
  Relay(EntityId id, Rng& rng, bool tamper, bool drop);
  const crypto::PublicKey& public_key() const { return keys_.public_key(); }
  void on_message(const Message& msg, Network& net) override;

 private:
  crypto::KeyPair keys_;
  bool tamper_, drop_;
  struct Layer {
    crypto::SessionKey key{};
    EntityId provider;
  };
  std::map<std::string, Layer> layers_;
};

class Judge : public Entity {
 public:
  Judge(const Directory& dir, double theta, Rng& rng);
  const crypto::PublicKey& public_key() const { return keys_.public_key(); }
  const std::optional<Verdict>& last_verdict() const { return verdict_; }
  void on_message(const Message& msg, Network& net) override;

 private:
  void decide(Verdict v, Network& net);
  const Directory& dir_;
  double theta_;
  crypto::KeyPair keys_;
  struct Case {
    EntityId claimant;
    std::string tid;
    std::string pseudonym_hex;
    std::vector<std::uint8_t> pc;
    double nc = 0.0;
  };
  std::optional<Case> case_;
  std::optional<Verdict> verdict_;
};

// Timer tags
inline constexpr std::uint64_t kStartTimer = 1;

}  // namespace psum::protocol::detail
