#include <algorithm>

#include "psum/error.hpp"
#include "simulation_impl.hpp"

namespace psum::protocol {

std::vector<std::size_t> segment_lengths(std::size_t m, std::size_t n) {
  require(n >= 1, "segment_fingerprint: n must be >= 1");
  if (m < n) fail(Errc::invalid_argument, "segment_fingerprint: codeword shorter than the number of proxies");
  const std::size_t l = (m + n - 1) / n;
  if (l * (n - 1) >= m)
    fail(Errc::invalid_argument, "segment_fingerprint: ceiling rule leaves the last segment empty for m=" +
                                     std::to_string(m) + ", n=" + std::to_string(n));
  std::vector<std::size_t> out(n, l);
  out.back() = m - l * (n - 1);
  return out;
}

std::vector<std::vector<std::uint8_t>> segment_fingerprint(std::span<const std::uint8_t> f, std::size_t n) {
  std::vector<std::vector<std::uint8_t>> out;
  std::size_t pos = 0;
  for (auto l : segment_lengths(f.size(), n)) {
    out.emplace_back(f.begin() + static_cast<std::ptrdiff_t>(pos), f.begin() + static_cast<std::ptrdiff_t>(pos + l));
    pos += l;
  }
  return out;
}

std::vector<EncryptedBlock> proxy_select_fragments(std::span<const std::uint8_t> ps,
                                                   std::span<const EncryptedBlock> v0,
                                                   std::span<const EncryptedBlock> v1) {
  if (v0.size() != ps.size() || v1.size() != ps.size())
    fail(Errc::length_mismatch, "proxy_select_fragments: variant streams not aligned with the segment");
  std::vector<EncryptedBlock> out;
  out.reserve(ps.size());
  for (std::size_t k = 0; k < ps.size(); ++k) out.push_back(ps[k] ? v1[k] : v0[k]);
  return out;
}

Simulation::Simulation(SystemConfig cfg, codes::CodeBook book, transform::Partition partition)
    : impl_(std::make_unique<Impl>()) {
  auto& s = *impl_;
  s.cfg = std::move(cfg);
  const auto& c = s.cfg;
  require(c.n_proxies >= 1, "simulation: n_proxies must be >= 1");
  require(c.batch_size >= 1, "simulation: batch size must be >= 1");
  const std::size_t pool = c.proxy_pool ? c.proxy_pool : c.n_proxies + 2;
  require(pool >= c.n_proxies, "simulation: proxy pool smaller than n_proxies");
  require(c.relay_pool >= c.sf_path_length, "simulation: relay pool smaller than the relay path");
  if (book.length() != partition.base.layout.block_count)
    fail(Errc::length_mismatch, "simulation: code length differs from the base file's block count");
  segment_lengths(book.length(), c.n_proxies);  // validates m against n

  s.setup_rng = s.next_rng();
  s.ca_ext = std::make_unique<crypto::CertificateAuthority>("CA_ext", s.setup_rng);
  s.dir.ca_ext = s.ca_ext->public_key();
  s.ca_r = std::make_unique<detail::RegistrationCa>(s.dir, s.next_rng());
  s.dir.ca_r = s.ca_r->public_key();

  s.merchant = std::make_unique<detail::Merchant>(s.dir, std::move(partition), c.item, s.next_rng());
  s.dir.keys[s.dir.merchant] = s.merchant->public_key();

  std::vector<EntityId> proxy_ids, relay_ids;
  for (std::size_t i = 0; i < pool; ++i) {
    const bool faulty = std::find(c.faulty_proxies.begin(), c.faulty_proxies.end(), i) != c.faulty_proxies.end();
    s.proxies.push_back(std::make_unique<detail::Proxy>("proxy-" + std::to_string(i), faulty));
    proxy_ids.push_back(s.proxies.back()->id());
  }
  auto relay_rng = s.next_rng();
  for (std::size_t i = 0; i < c.relay_pool; ++i) {
    s.relays.push_back(std::make_unique<detail::Relay>("relay-" + std::to_string(i), relay_rng, c.tamper_relay == i,
                                                       c.drop_relay == i));
    relay_ids.push_back(s.relays.back()->id());
    s.dir.keys[relay_ids.back()] = s.relays.back()->public_key();
  }

  s.monitor = std::make_unique<detail::Monitor>(s.dir, s.cfg, std::move(book), proxy_ids, relay_ids, s.next_rng());
  s.dir.keys[s.dir.monitor] = s.monitor->public_key();
  auto judge_rng = s.next_rng();
  s.judge = std::make_unique<detail::Judge>(s.dir, c.theta, judge_rng);
  s.dir.keys[s.dir.judge] = s.judge->public_key();
  s.superpeer = std::make_unique<detail::SuperPeer>(s.dir, relay_ids, c.sf_path_length, s.next_rng());

  auto seed_rng = s.next_rng();
  s.seeder = std::make_unique<detail::SfProvider>("seeder", s.dir, c.sf_timeout, s.next_rng());
  auto seeder_keys = crypto::KeyPair::generate(seed_rng);
  auto seeder_cert = s.ca_r->enroll("seeder", seeder_keys.public_key());
  s.seeder->set_identity(std::move(seeder_keys), std::move(seeder_cert));

  s.net.attach(*s.ca_r);
  s.net.attach(*s.merchant);
  s.net.attach(*s.monitor);
  s.net.attach(*s.judge);
  s.net.attach(*s.superpeer);
  s.net.attach(*s.seeder);
  for (auto& p : s.proxies) s.net.attach(*p);
  for (auto& r : s.relays) s.net.attach(*r);

  if (c.fetch_supplementary) {
    s.merchant->publish_supplementary(s.net, s.seeder->id());
    s.net.run();
  }
}

Simulation::~Simulation() = default;

std::size_t Simulation::add_buyer(const BuyerSpec& spec) {
  auto& s = *impl_;
  require(!spec.real_id.empty(), "buyer: real id must not be empty");
  const auto idx = s.buyers.size();
  auto identity = crypto::make_identity(spec.real_id, *s.ca_ext, s.setup_rng);
  s.buyers.push_back(std::make_unique<detail::Buyer>("peer-" + std::to_string(idx), spec, s.dir, std::move(identity),
                                                     s.cfg.item, s.cfg.fetch_supplementary, s.next_rng()));
  s.net.attach(*s.buyers.back());
  schedule_purchase(idx, spec.start_tick);
  return idx;
}

void Simulation::schedule_purchase(std::size_t buyer, std::uint64_t tick) {
  auto& s = *impl_;
  require(buyer < s.buyers.size(), "schedule_purchase: unknown buyer");
  const auto now = s.net.now();
  s.net.schedule(s.buyers[buyer]->id(), tick > now ? tick - now : 0, detail::kStartTimer);
}

std::vector<PurchaseResult> Simulation::run() {
  auto& s = *impl_;
  s.net.run();
  std::vector<PurchaseResult> out;
  for (const auto& b : s.buyers)
    for (auto r : b->results()) {
      if (const auto* t = s.monitor->find(r.tid); t && !r.tid.empty()) {
        r.row = t->record.row;
        r.degraded_privacy = t->record.degraded_privacy;
      }
      out.push_back(std::move(r));
    }
  return out;
}

Network& Simulation::network() { return impl_->net; }
const Network& Simulation::network() const { return impl_->net; }
const SystemConfig& Simulation::config() const { return impl_->cfg; }
const codes::CodeBook& Simulation::book() const { return impl_->monitor->book(); }
const transform::BaseFile& Simulation::base_file() const { return impl_->merchant->base_file(); }
const transform::SupplementaryFile& Simulation::supplementary_file() const {
  return impl_->merchant->supplementary_file();
}

EntityId Simulation::buyer_address(std::size_t buyer) const {
  require(buyer < impl_->buyers.size(), "buyer_address: unknown buyer");
  return impl_->buyers[buyer]->id();
}

std::vector<EntityId> Simulation::proxy_ids() const {
  std::vector<EntityId> out;
  for (const auto& p : impl_->proxies) out.push_back(p->id());
  return out;
}

std::vector<EntityId> Simulation::relay_ids() const {
  std::vector<EntityId> out;
  for (const auto& r : impl_->relays) out.push_back(r->id());
  return out;
}

std::vector<TransactionRecord> Simulation::merchant_ledger() const { return impl_->merchant->ledger(); }
std::vector<TransactionRecord> Simulation::monitor_ledger() const { return impl_->monitor->ledger(); }

CoalitionView Simulation::coalition_view(const std::string& tid) const {
  CoalitionView v;
  for (const auto& p : impl_->proxies)
    for (const auto& job : p->jobs())
      if (job.tid == tid && job.done) v.lanes.push_back({p->id(), job.ps, job.v0, job.v1, job.selected});
  std::vector<std::size_t> lane_of;
  for (const auto& p : impl_->proxies)
    for (const auto& job : p->jobs())
      if (job.tid == tid && job.done) lane_of.push_back(job.lane);
  std::vector<CoalitionView::Lane> sorted(v.lanes.size());
  for (std::size_t i = 0; i < v.lanes.size(); ++i) {
    if (lane_of[i] >= sorted.size()) fail(Errc::protocol_abort, "coalition_view: incomplete transaction " + tid);
    sorted[lane_of[i]] = std::move(v.lanes[i]);
  }
  v.lanes = std::move(sorted);
  return v;
}

std::vector<crypto::PermutationKey> Simulation::merchant_permutation_keys(const std::string& tid) const {
  std::vector<crypto::PermutationKey> out;
  for (const auto& l : impl_->merchant->lanes(tid)) out.push_back(l.sigma);
  return out;
}

std::optional<std::pair<std::string, Bytes>> Simulation::pseudonym_secret(const crypto::Pseudonym& p) const {
  return impl_->ca_r->secret_of(p.hex());
}

}  // namespace psum::protocol
