#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "psum/codes.hpp"
#include "psum/error.hpp"
#include "psum/crypto.hpp"
#include "psum/transform.hpp"

namespace psum::protocol {

using Bytes = crypto::Bytes;
using EntityId = std::string;

// What a payload carries, declared by the sender. The leakage checks work
// on these tags.
enum class PayloadClass : std::uint8_t {
  control,
  real_identity,
  pseudonym,
  certificate,
  signature,
  agreement,
  key_material,
  ciphertext,
  fingerprint_bits,
  pirate_codeword,  // bits M extracted from a found copy, not a buyer's f_i
  clear_coefficients,
  verdict,
};
std::string to_string(PayloadClass c);

enum class MessageKind : std::uint8_t {
  register_request,
  recertify_request,
  anon_certificate,
  purchase_request,
  purchase_ack,
  fingerprint_request,
  key_request,
  key_delivery,
  key_forward,
  variants_ready,
  segment_assignment,
  fetch_request,
  encrypted_variants,
  fragments,
  lane_complete,
  abort,
  sf_publish,
  sf_announce,
  sf_lookup,
  sf_providers,
  sf_request,
  sf_offer,
  sf_layer_key,
  sf_packet,
  sf_ack,
  sf_nack,
  trace_request,
  accusation,
  claim,
  evidence_request,
  evidence,
  identity_request,
  identity_response,
  verdict,
};
std::string to_string(MessageKind k);

struct Message {
  std::uint64_t seq = 0;
  std::uint64_t tick = 0;
  EntityId from, to;
  MessageKind kind = MessageKind::abort;
  Bytes payload;
  std::vector<PayloadClass> classes;
};

enum class Direction : std::uint8_t { sent, received };

struct TranscriptEntry {
  std::uint64_t seq = 0;
  std::uint64_t tick = 0;
  Direction direction = Direction::sent;
  EntityId peer;
  MessageKind kind = MessageKind::abort;
  std::string payload_digest;
  std::size_t payload_size = 0;
  std::vector<PayloadClass> classes;
};

using Transcript = std::vector<TranscriptEntry>;

bool contains_class(const Transcript& t, PayloadClass c);

// Multiset of (direction, kind, size): what an observer learns from traffic
// shape alone.
using TranscriptShape = std::multiset<std::tuple<Direction, MessageKind, std::size_t>>;
TranscriptShape shape_of(const Transcript& t);

class Network;

class Entity {
 public:
  explicit Entity(EntityId id) : id_(std::move(id)) {}
  virtual ~Entity() = default;
  Entity(const Entity&) = delete;
  Entity& operator=(const Entity&) = delete;

  const EntityId& id() const { return id_; }
  virtual void on_message(const Message& msg, Network& net) = 0;
  virtual void on_timer(std::uint64_t timer, Network& net) {
    (void)timer;
    (void)net;
  }

 private:
  EntityId id_;
};

// Deterministic single-threaded event loop. Messages are delivered FIFO at
// the current tick; simulated time advances only to the next pending timer.
class Network {
 public:
  void attach(Entity& e);
  void send(const EntityId& from, const EntityId& to, MessageKind kind, Bytes payload,
            std::vector<PayloadClass> classes);
  void schedule(const EntityId& who, std::uint64_t delay, std::uint64_t timer);
  // Runs until no messages or timers remain.
  void run(std::size_t max_events = 50'000'000);

  std::uint64_t now() const { return now_; }
  const std::deque<Message>& log() const { return log_; }
  const Transcript& transcript(const EntityId& who) const;
  std::vector<EntityId> entities() const;

 private:
  std::map<EntityId, Entity*> entities_;
  std::map<EntityId, Transcript> transcripts_;
  std::deque<Message> log_;
  std::deque<std::size_t> queue_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<EntityId, std::uint64_t>> timers_;
  std::uint64_t seq_ = 0, timer_order_ = 0, now_ = 0;
};

// One JSON object per message: {seq, from, to, kind, payload_digest, classes}.
void write_jsonl(std::ostream& out, const Network& net);

// ------------------------------------------------------------ segments

// First n-1 segments have ceil(m/n) bits, the last the remainder.
std::vector<std::size_t> segment_lengths(std::size_t m, std::size_t n);
std::vector<std::vector<std::uint8_t>> segment_fingerprint(std::span<const std::uint8_t> f, std::size_t n);

struct EncryptedBlock {
  crypto::Nonce nonce{};
  Bytes ciphertext;
  friend bool operator==(const EncryptedBlock&, const EncryptedBlock&) = default;
};

// Block k of the output is v1[k] if ps[k] = 1, else v0[k].
std::vector<EncryptedBlock> proxy_select_fragments(std::span<const std::uint8_t> ps,
                                                   std::span<const EncryptedBlock> v0,
                                                   std::span<const EncryptedBlock> v1);

struct SegmentAssignment {
  EntityId proxy;
  std::size_t lane = 0;
  std::size_t first_bit = 0;  // bounds of s_j within f_i
  std::size_t bit_count = 0;
  std::vector<std::uint8_t> ps;  // permuted segment
};

struct TransactionRecord {
  std::string tid;
  Bytes agreement;
  Bytes agreement_signature;
  crypto::Pseudonym pseudonym;
  crypto::Certificate certificate;
  std::optional<std::uint32_t> row;  // only the monitor's copy knows i
  std::uint64_t opened_tick = 0;
  std::uint64_t closed_tick = 0;
  bool degraded_privacy = false;
};

// ------------------------------------------------------------ simulation

struct SystemConfig {
  std::uint64_t seed = 0;
  std::string item = "item-0";
  std::size_t n_proxies = 3;
  std::size_t proxy_pool = 0;  // 0 -> n_proxies + 2
  std::size_t batch_size = 2;
  std::uint64_t tau_ticks = 100;
  std::uint64_t proxy_timeout = 20;
  std::size_t relay_pool = 6;
  std::size_t sf_path_length = 3;
  std::uint64_t sf_timeout = 20;
  // Proxies deliver through a relay picked by the monitor.
  bool monitor_relay_paths = false;
  bool fetch_supplementary = true;
  double theta = 0.9;
  codes::ThresholdPolicy trace_policy{};
  // k-th fingerprint request receives row row_order[k]; empty -> k.
  std::vector<std::uint32_t> row_order;
  std::vector<std::size_t> faulty_proxies;  // pool indices that never answer
  std::optional<std::size_t> tamper_relay;  // relay pool indices
  std::optional<std::size_t> drop_relay;
};

struct BuyerSpec {
  std::string real_id;
  std::uint64_t start_tick = 0;
  bool rotate_pseudonym = true;  // fresh pseudonym per transaction
  bool rogue_ca = false;         // present a certificate from an unknown CA
  // Impersonation: present a captured anonymous certificate with the
  // buyer's own key, or, holding the victim's (real_id, r), ask CA_R to
  // re-certify the victim's pseudonym.
  std::optional<crypto::Certificate> replay_certificate;
  std::optional<std::pair<std::string, Bytes>> insider_secret;
};

struct PurchaseResult {
  std::string real_id;
  EntityId address;
  std::string tid;
  std::optional<crypto::Pseudonym> pseudonym;
  bool completed = false;
  bool aborted = false;
  int abort_step = 0;
  std::string abort_reason;
  bool degraded_privacy = false;
  std::vector<double> approx;  // delivered fingerprinted a_L
  bool supplementary_verified = false;
  std::string supplementary_error;
  std::optional<transform::Content> content;
  std::optional<std::uint32_t> row;  // ground truth, read back from the monitor
};

struct TraceOutcome {
  std::vector<std::uint8_t> pc;
  std::vector<crypto::Pseudonym> accused;
  double threshold = 0.0;
};

struct Claim {
  std::string tid;
  Bytes agreement;
  Bytes agreement_signature;
  crypto::Certificate certificate;
  std::vector<std::uint8_t> pc;
};

struct Verdict {
  enum class Kind { guilty, innocent, rejected_evidence };
  Kind kind = Kind::innocent;
  std::string real_id;  // set for guilty
  double nc = 0.0;
  std::string reason;
};
std::string to_string(Verdict::Kind k);

// What the n proxies hold together after a transaction.
struct CoalitionView {
  struct Lane {
    EntityId proxy;
    std::vector<std::uint8_t> ps;
    std::vector<EncryptedBlock> v0, v1, selected;
  };
  std::vector<Lane> lanes;
};

class Simulation {
 public:
  Simulation(SystemConfig cfg, codes::CodeBook book, transform::Partition partition);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  std::size_t add_buyer(const BuyerSpec& spec);
  void schedule_purchase(std::size_t buyer, std::uint64_t tick);

  // Runs the event loop; returns every finished purchase so far in
  // buyer order.
  std::vector<PurchaseResult> run();

  Network& network();
  const Network& network() const;
  const SystemConfig& config() const;
  const codes::CodeBook& book() const;
  const transform::BaseFile& base_file() const;
  const transform::SupplementaryFile& supplementary_file() const;
  EntityId buyer_address(std::size_t buyer) const;
  std::vector<EntityId> proxy_ids() const;
  std::vector<EntityId> relay_ids() const;
  std::vector<TransactionRecord> merchant_ledger() const;
  std::vector<TransactionRecord> monitor_ledger() const;

  // Merchant extracts pc from a found copy, the monitor traces it.
  TraceOutcome trace_traitor(const transform::Content& pirated, bool normalize_gain = false);
  // Evidence bundle the merchant holds for a transaction.
  Claim make_claim(const std::string& tid, std::vector<std::uint8_t> pc) const;
  Verdict arbitrate(const Claim& claim);

  // Adversary hooks.
  CoalitionView coalition_view(const std::string& tid) const;
  std::vector<crypto::PermutationKey> merchant_permutation_keys(const std::string& tid) const;
  // (real_id, r) behind a pseudonym, as a corrupt insider would hand it over.
  std::optional<std::pair<std::string, Bytes>> pseudonym_secret(const crypto::Pseudonym& p) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ------------------------------------------------------------ SF relay

struct SfTransferOptions {
  std::uint64_t seed = 0;
  std::size_t relays = 3;
  std::size_t alternate_paths = 1;
  std::optional<std::size_t> tamper_relay;  // index on the primary path
  std::optional<std::size_t> drop_relay;
  bool requester_cert_from_rogue_ca = false;
  std::uint64_t timeout = 20;
};

struct SfTransferResult {
  bool delivered = false;
  Bytes data;
  std::string provider_digest;
  std::string requester_digest;
  std::optional<Errc> failure;
  std::string failure_reason;
  std::size_t attempts = 0;
  std::vector<EntityId> relays;  // primary path
  std::map<EntityId, Transcript> transcripts;
};

// Standalone provider -> relays -> requester transfer with layered
// encryption.
SfTransferResult run_sf_distribution(const Bytes& sf, const SfTransferOptions& opts);

}  // namespace psum::protocol
