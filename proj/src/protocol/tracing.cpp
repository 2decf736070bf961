#include <algorithm>

#include "psum/error.hpp"
#include "psum/watermark.hpp"
#include "simulation_impl.hpp"

namespace psum::protocol {

namespace detail {

Judge::Judge(const Directory& dir, double theta, Rng& rng)
    : Entity(dir.judge), dir_(dir), theta_(theta), keys_(crypto::KeyPair::generate(rng)) {}

void Judge::decide(Verdict v, Network& net) {
  verdict_ = v;
  ByteWriter w;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(v.kind)).put_string(v.real_id).put<double>(v.nc).put_string(v.reason);
  std::vector<PayloadClass> classes{PayloadClass::verdict};
  if (v.kind == Verdict::Kind::guilty) classes.push_back(PayloadClass::real_identity);
  net.send(id(), case_->claimant, MessageKind::verdict, w.take(), std::move(classes));
  case_.reset();
}

void Judge::on_message(const Message& msg, Network& net) {
  switch (msg.kind) {
    case MessageKind::claim: {
      Case c;
      c.claimant = msg.from;
      ByteReader r(msg.payload);
      bool ok = false;
      try {
        c.tid = r.get_string();
        const auto agr = r.get_bytes();
        const auto sig = r.get_bytes();
        const auto cert = crypto::Certificate::from_bytes(r.get_bytes());
        const auto m = r.get<std::uint32_t>();
        c.pc = unpack_bits(r.get_bytes(), m);
        c.pseudonym_hex = cert.subject;
        ok = verify_purchase_evidence(cert, agr, sig, dir_.ca_r);
      } catch (const Error&) {
        ok = false;
      }
      case_ = c;
      if (!ok) {
        decide(Verdict{Verdict::Kind::rejected_evidence, "", 0.0, "evidence signatures do not verify"}, net);
        return;
      }
      ByteWriter w;
      w.put_string(c.tid).put_string(c.pseudonym_hex);
      net.send(id(), dir_.monitor, MessageKind::evidence_request, w.take(), {PayloadClass::pseudonym});
      break;
    }
    case MessageKind::evidence: {
      if (!case_ || msg.from != dir_.monitor) return;
      ByteReader r(msg.payload);
      if (r.get_string() != case_->tid) return;
      const bool found = r.get<std::uint8_t>() != 0;
      const auto m = r.get<std::uint32_t>();
      const auto sealed = r.get_bytes();
      if (!found) {
        decide(Verdict{Verdict::Kind::rejected_evidence, "", 0.0, "monitor has no matching transaction"}, net);
        return;
      }
      std::vector<std::uint8_t> f;
      try {
        f = unpack_bits(keys_.open(sealed), m);
      } catch (const Error&) {
        decide(Verdict{Verdict::Kind::rejected_evidence, "", 0.0, "monitor evidence does not open"}, net);
        return;
      }
      if (f.size() != case_->pc.size()) {
        decide(Verdict{Verdict::Kind::rejected_evidence, "", 0.0, "pirate codeword length differs"}, net);
        return;
      }
      case_->nc = watermark::nc(case_->pc, f);
      if (case_->nc < theta_) {
        decide(Verdict{Verdict::Kind::innocent, "", case_->nc, "correlation below threshold"}, net);
        return;
      }
      ByteWriter w;
      w.put_string(case_->pseudonym_hex);
      net.send(id(), dir_.registration_ca, MessageKind::identity_request, w.take(), {PayloadClass::pseudonym});
      break;
    }
    case MessageKind::identity_response: {
      if (!case_ || msg.from != dir_.registration_ca) return;
      ByteReader r(msg.payload);
      const bool found = r.get<std::uint8_t>() != 0;
      const auto real = r.get_string();
      if (!found) {
        decide(Verdict{Verdict::Kind::rejected_evidence, "", case_->nc, "pseudonym unknown to CA_R"}, net);
        return;
      }
      decide(Verdict{Verdict::Kind::guilty, real, case_->nc, "correlation at or above threshold"}, net);
      break;
    }
    default: break;
  }
}

}  // namespace detail

TraceOutcome Simulation::trace_traitor(const transform::Content& pirated, bool normalize_gain) {
  auto& s = *impl_;
  TraceOutcome out;
  out.pc = s.merchant->extract(pirated, normalize_gain);
  detail::ByteWriter w;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(out.pc.size())).put_bytes(detail::pack_bits(out.pc));
  s.net.send(s.dir.merchant, s.dir.monitor, MessageKind::trace_request, w.take(), {PayloadClass::pirate_codeword});
  s.net.run();
  out.accused = s.merchant->last_accusation();
  out.threshold = s.monitor->threshold();
  return out;
}

Claim Simulation::make_claim(const std::string& tid, std::vector<std::uint8_t> pc) const {
  for (const auto& rec : impl_->merchant->ledger())
    if (rec.tid == tid) return Claim{rec.tid, rec.agreement, rec.agreement_signature, rec.certificate, std::move(pc)};
  fail(Errc::invalid_argument, "make_claim: merchant has no transaction " + tid);
}

Verdict Simulation::arbitrate(const Claim& claim) {
  auto& s = *impl_;
  detail::ByteWriter w;
  w.put_string(claim.tid).put_bytes(claim.agreement).put_bytes(claim.agreement_signature);
  w.put_bytes(claim.certificate.bytes());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(claim.pc.size())).put_bytes(detail::pack_bits(claim.pc));
  s.net.send(s.dir.merchant, s.dir.judge, MessageKind::claim, w.take(),
             {PayloadClass::agreement, PayloadClass::signature, PayloadClass::certificate, PayloadClass::pirate_codeword});
  s.net.run();
  const auto& v = s.judge->last_verdict();
  if (!v) fail(Errc::protocol_abort, "arbitrate: judge reached no verdict");
  return *v;
}

}  // namespace psum::protocol
