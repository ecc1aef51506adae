#include "onionchain/disclosure.hpp"

#include "onionchain/canonical.hpp"
#include "onionchain/error.hpp"
#include "onionchain/wire_tags.hpp"

#include <algorithm>
#include <set>

namespace onionchain::disclosure {

using onion::EvidenceRecord;
using onion::LinkedContent;

std::string_view to_string(PleaVerdict v) noexcept
{
    switch (v) {
    case PleaVerdict::Innocent: return "Innocent";
    case PleaVerdict::CulpritNoKey: return "CulpritNoKey";
    case PleaVerdict::CulpritBadSignature: return "CulpritBadSignature";
    }
    return "Unknown";
}

std::string_view to_string(CulpritReason r) noexcept
{
    switch (r) {
    case CulpritReason::TransmitterOrigin: return "TransmitterOrigin";
    case CulpritReason::RefusedPlea: return "RefusedPlea";
    case CulpritReason::ForgedEvidence: return "ForgedEvidence";
    case CulpritReason::CalumniatingReceiver: return "CalumniatingReceiver";
    }
    return "Unknown";
}

namespace {

SymmetricKey key_from(ByteView raw, crypto::KeyPurpose purpose)
{
    if (raw.size() != crypto::kSymmetricKeySize)
        throw Error(Errc::MalformedInput, "symmetric key width");
    SymmetricKey k;
    std::copy(raw.begin(), raw.end(), k.key_bytes.begin());
    k.purpose = purpose;
    return k;
}

}  // namespace

Bytes DisclosureRequest::canonical() const
{
    canonical::Writer w;
    w.bytes(tags::kReqMessageDigest, accused_message_digest.view())
        .bytes(tags::kReqTerminal, terminal_evidence.view())
        .bytes(tags::kReqKey, released_proof_key.key_bytes)
        .u8(tags::kReqKeyPurpose, static_cast<std::uint8_t>(released_proof_key.purpose))
        .str(tags::kReqKeyFrom, released_proof_key.endpoints.first.str())
        .str(tags::kReqKeyTo, released_proof_key.endpoints.second.str());
    return std::move(w).take();
}

DisclosureRequest DisclosureRequest::decode(ByteView bytes, PartyId requester)
{
    canonical::Reader r(bytes);
    DisclosureRequest req;
    req.requester = std::move(requester);
    req.accused_message_digest = Digest::from(r.bytes(tags::kReqMessageDigest));
    req.terminal_evidence = Digest::from(r.bytes(tags::kReqTerminal));
    auto raw = r.bytes(tags::kReqKey);
    auto purpose = r.u8(tags::kReqKeyPurpose);
    if (purpose != 1 && purpose != 2)
        throw Error(Errc::MalformedInput, "key purpose");
    req.released_proof_key = key_from(raw, static_cast<crypto::KeyPurpose>(purpose));
    req.released_proof_key.endpoints.first = PartyId(r.str(tags::kReqKeyFrom));
    req.released_proof_key.endpoints.second = PartyId(r.str(tags::kReqKeyTo));
    r.finish();
    return req;
}

Bytes Vote::statement(const Digest& request, bool approve)
{
    canonical::Writer w;
    w.bytes(tags::kVoteRequest, request.view()).boolean(tags::kVoteApprove, approve);
    return std::move(w).take();
}

Bytes Vote::canonical() const
{
    canonical::Writer w;
    w.bytes(tags::kVoteRequest, request.view())
        .boolean(tags::kVoteApprove, approve)
        .bytes(tags::kVoteSignature, signature.sig_bytes);
    return std::move(w).take();
}

Vote Vote::decode(ByteView bytes, PartyId voter)
{
    canonical::Reader r(bytes);
    Vote v;
    v.voter = std::move(voter);
    v.request = Digest::from(r.bytes(tags::kVoteRequest));
    v.approve = r.boolean(tags::kVoteApprove);
    v.signature.sig_bytes = r.bytes_copy(tags::kVoteSignature);
    r.finish();
    return v;
}

Bytes PleaRecord::canonical() const
{
    canonical::Writer w;
    w.bytes(tags::kPleaRequest, request.view())
        .bytes(tags::kPleaEvidence, evidence.view())
        .str(tags::kPleaPleader, pleader.str());
    if (key)
        w.bytes(tags::kPleaKey, key->key_bytes);
    w.u8(tags::kPleaVerdict, static_cast<std::uint8_t>(verdict));
    return std::move(w).take();
}

PleaRecord PleaRecord::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    PleaRecord p;
    p.request = Digest::from(r.bytes(tags::kPleaRequest));
    p.evidence = Digest::from(r.bytes(tags::kPleaEvidence));
    p.pleader = PartyId(r.str(tags::kPleaPleader));
    if (auto k = r.maybe_bytes(tags::kPleaKey))
        p.key = key_from(*k, crypto::KeyPurpose::Proof);
    auto v = r.u8(tags::kPleaVerdict);
    if (v < 1 || v > 3)
        throw Error(Errc::MalformedInput, "plea verdict");
    p.verdict = static_cast<PleaVerdict>(v);
    r.finish();
    return p;
}

// ---------------------------------------------------------------------------

Digest request_disclosure(onion::Fabric& fabric, const PartyId& requester, const Digest& accused_message_digest,
                          const Digest& terminal_evidence, const SymmetricKey& proof_key)
{
    auto tx = fabric.ledger().find_transaction(terminal_evidence);
    if (!tx || tx->kind != ledger::TxKind::Evidence)
        throw Error(Errc::EvidenceNotFound, terminal_evidence.hex());
    try {
        onion::open_evidence(proof_key, EvidenceRecord::decode(tx->payload));
    } catch (const Error&) {
        throw Error(Errc::KeyDoesNotOpenEvidence, terminal_evidence.hex());
    }
    DisclosureRequest req{requester, accused_message_digest, terminal_evidence, proof_key};
    Digest handle = fabric.submit({ledger::TxKind::DisclosureRequest, req.canonical(), requester});
    fabric.await_commit(handle);
    return handle;
}

Digest request_disclosure(onion::Fabric& fabric, const PartyId& requester, const onion::Message& accused,
                          const Digest& terminal_evidence, const SymmetricKey& proof_key)
{
    return request_disclosure(fabric, requester, accused.digest(), terminal_evidence, proof_key);
}

Digest cast_vote(onion::Fabric& fabric, const PartyId& voter, const Digest& request, bool approve)
{
    Vote v;
    v.voter = voter;
    v.request = request;
    v.approve = approve;
    v.signature = fabric.participant(voter).sign(Vote::statement(request, approve));
    return fabric.submit({ledger::TxKind::DisclosureVote, v.canonical(), voter});
}

TallyResult tally(const ledger::Ledger& ledger, const Digest& request)
{
    TallyResult out;
    auto where = ledger.locate(request);
    if (!where)
        return out;
    if (ledger.get_transaction(request).kind != ledger::TxKind::DisclosureRequest)
        return out;
    const std::uint64_t opened = where->height;
    const std::uint64_t last = opened + kVotingHorizonBlocks;
    out.electorate = ledger.member_count_at(opened);
    out.closed = ledger.height() >= last;

    std::set<PartyId> counted;
    ledger.with_chain([&](std::span<const ledger::Block> chain) {
        for (std::uint64_t h = opened + 1; h <= last && h < chain.size(); ++h) {
            for (const auto& tx : chain[h].body) {
                if (tx.kind != ledger::TxKind::DisclosureVote)
                    continue;
                Vote v;
                try {
                    v = Vote::decode(tx.payload, tx.submitter);
                } catch (const Error&) {
                    continue;
                }
                if (v.request != request || counted.contains(v.voter))
                    continue;
                auto rec = ledger.member(v.voter);
                if (!rec || rec->height > opened)
                    continue;
                if (!crypto::verify(rec->public_key, v.signature, Vote::statement(v.request, v.approve)))
                    continue;
                counted.insert(v.voter);
                (v.approve ? out.approvals : out.rejections) += 1;
            }
        }
    });
    out.approved = out.approvals > out.electorate / 2;
    return out;
}

// ---------------------------------------------------------------------------

PleaResult plea(const ledger::Ledger& ledger, const PartyId& pleader, const Digest& evidence,
                const std::optional<SymmetricKey>& key, bool terminal)
{
    PleaResult res;
    res.pleader = pleader;
    res.evidence = evidence;
    res.released_key = key;

    auto tx = ledger.find_transaction(evidence);
    if (!tx || tx->kind != ledger::TxKind::Evidence)
        throw Error(Errc::TraceBroken, "no evidence at " + evidence.hex());

    auto blame = [&](PleaVerdict v, const PartyId& who, std::string why) {
        res.verdict = v;
        res.blamed = who;
        res.detail = std::move(why);
        return res;
    };

    if (!key)
        return blame(PleaVerdict::CulpritNoKey, pleader, "no proof key released");

    EvidenceRecord record;
    try {
        record = EvidenceRecord::decode(tx->payload);
        res.index = record.index;
        res.opened = onion::open_evidence(*key, record);
    } catch (const Error&) {
        return blame(PleaVerdict::CulpritNoKey, pleader, "released key does not open the evidence");
    }
    const auto& opened = *res.opened;

    // Outer signature: the pleader must have countersigned exactly this content.
    auto self = ledger.member(pleader);
    if (!self || self->public_key != opened.outer.signer || !opened.outer.valid())
        return blame(PleaVerdict::CulpritBadSignature, pleader, "outer signature is not the pleader's");

    // Link: the content must sit where the record says it sits.
    const bool first = record.index == 1;
    auto expected_kind = first ? LinkedContent::Kind::Onion
                               : (terminal ? LinkedContent::Kind::Message : LinkedContent::Kind::Packet);
    if (opened.content.kind != expected_kind)
        return blame(PleaVerdict::CulpritBadSignature, pleader, "content kind does not fit the hop position");
    if (first != !record.prev_handle.has_value() || first != !opened.content.prev.has_value())
        return blame(PleaVerdict::CulpritBadSignature, pleader, "back-pointer inconsistent with hop index");

    auto inner_rec = ledger.member_by_key(opened.inner.signer);
    if (!inner_rec)
        return blame(PleaVerdict::CulpritBadSignature, pleader, "inner signer is not a registered member");

    if (!first) {
        auto prev_tx = ledger.find_transaction(*record.prev_handle);
        if (!prev_tx)
            throw Error(Errc::TraceBroken, "back-pointer " + record.prev_handle->hex() + " resolves to nothing");
        if (prev_tx->kind != ledger::TxKind::Evidence || prev_tx->payload != *opened.content.prev)
            return blame(PleaVerdict::CulpritBadSignature, pleader, "embedded evidence does not match the ledger");
        std::uint32_t prev_index = 0;
        try {
            prev_index = EvidenceRecord::decode(prev_tx->payload).index;
        } catch (const Error&) {
        }
        if (prev_index + 1 != record.index || prev_tx->submitter != inner_rec->party)
            return blame(PleaVerdict::CulpritBadSignature, pleader, "previous evidence belongs to another hop");
        res.prev_evidence = record.prev_handle;
    }

    if (!opened.inner.valid())
        return blame(PleaVerdict::CulpritBadSignature, inner_rec->party, "inner signature fails");

    res.verdict = PleaVerdict::Innocent;
    res.previous_hop = inner_rec->party;
    return res;
}

namespace {

Digest commit_plea(onion::Fabric& fabric, const Digest& request, const PleaResult& r, const PartyId& requester)
{
    PleaRecord rec{request, r.evidence, r.pleader, r.released_key, r.verdict};
    // A refusing node submits nothing; the requester records the refusal.
    PartyId submitter = r.released_key ? r.pleader : requester;
    Digest h = fabric.submit({ledger::TxKind::Plea, rec.canonical(), submitter});
    fabric.await_commit(h);
    return h;
}

}  // namespace

DisclosureOutcome run_disclosure(onion::Fabric& fabric, const Digest& request, PleaResponder& responder)
{
    auto& ledger = fabric.ledger();
    if (!tally(ledger, request).approved)
        throw Error(Errc::NotApproved, request.hex());
    auto req_tx = ledger.get_transaction(request);
    auto req = DisclosureRequest::decode(req_tx.payload, req_tx.submitter);

    DisclosureOutcome out;
    out.request = request;

    PartyId pleader = req.requester;
    Digest evidence = req.terminal_evidence;
    std::optional<SymmetricKey> key = req.released_proof_key;
    std::set<Digest> visited;
    for (bool terminal = true;; terminal = false) {
        if (!visited.insert(evidence).second)
            throw Error(Errc::TraceBroken, "evidence chain loops at " + evidence.hex());
        PleaResult r = plea(ledger, pleader, evidence, key, terminal);
        out.plea_transactions.push_back(commit_plea(fabric, request, r, req.requester));
        out.transcript.push_back(r);

        switch (r.verdict) {
        case PleaVerdict::CulpritNoKey:
            out.culprit = {r.blamed, CulpritReason::RefusedPlea};
            return out;
        case PleaVerdict::CulpritBadSignature:
            out.culprit = {r.blamed, CulpritReason::ForgedEvidence};
            return out;
        case PleaVerdict::Innocent:
            break;
        }
        if (!r.prev_evidence) {
            // EV_1: the inner signer handed over EV_0 and holds no proof key for it.
            out.culprit = {*r.previous_hop, CulpritReason::TransmitterOrigin};
            return out;
        }
        pleader = *r.previous_hop;
        evidence = *r.prev_evidence;
        key = responder.release_proof_key(pleader, evidence);
    }
}

ConfessionResult confession(const ledger::Ledger& ledger, const DisclosureOutcome& outcome,
                            const std::vector<SymmetricKey>& hop_keys)
{
    auto req_tx = ledger.get_transaction(outcome.request);
    auto req = DisclosureRequest::decode(req_tx.payload, req_tx.submitter);

    // Forward order: hops[0] is EV_1, hops.back() is EV_{n+1}.
    std::vector<const PleaResult*> hops;
    for (auto it = outcome.transcript.rbegin(); it != outcome.transcript.rend(); ++it)
        hops.push_back(&*it);
    const bool complete = !hops.empty() && outcome.culprit.reason == CulpritReason::TransmitterOrigin &&
                          std::all_of(hops.begin(), hops.end(), [](const PleaResult* p) {
                              return p->verdict == PleaVerdict::Innocent && p->opened;
                          });
    if (!complete)
        throw Error(Errc::InvalidArgument, "confession needs a walk that reached the transmitter");

    const std::size_t n = hops.size() - 1;
    if (hop_keys.size() < n)
        throw Error(Errc::KeysDoNotOpenOnion, "expected at least " + std::to_string(n) + " hop keys");

    ConfessionResult res;
    res.culprit = outcome.culprit;
    for (std::size_t k = 0; k < n; ++k) {
        const PartyId& relay = hops[k]->pleader;
        const PartyId& next = hops[k + 1]->pleader;
        const bool last = k + 1 == n;
        onion::PeeledLayer layer;
        try {
            layer = onion::peel_layer(hop_keys[k], hops[k]->opened->content.data);
        } catch (const Error&) {
            throw Error(Errc::KeysDoNotOpenOnion, "hop key " + std::to_string(k + 1) + " does not open its layer");
        }
        bool honest = layer.directive.from == relay && layer.directive.to == next && layer.final == last &&
                      layer.inner == hops[k + 1]->opened->content.data;
        if (!honest) {
            res.culprit = {relay, CulpritReason::ForgedEvidence};
            return res;
        }
        if (last)
            res.recovered = onion::Message::decode(layer.inner);
    }
    if (res.recovered.digest() != req.accused_message_digest)
        res.culprit = {req.requester, CulpritReason::CalumniatingReceiver};
    return res;
}

bool audit(const ledger::Ledger& ledger, const Digest& request)
{
    auto req_tx = ledger.find_transaction(request);
    if (!req_tx || req_tx->kind != ledger::TxKind::DisclosureRequest)
        return false;
    auto req = DisclosureRequest::decode(req_tx->payload, req_tx->submitter);

    std::vector<PleaRecord> pleas;
    ledger.with_chain([&](std::span<const ledger::Block> chain) {
        for (const auto& b : chain)
            for (const auto& tx : b.body)
                if (tx.kind == ledger::TxKind::Plea) {
                    auto p = PleaRecord::decode(tx.payload);
                    if (p.request == request)
                        pleas.push_back(std::move(p));
                }
    });
    for (const auto& p : pleas) {
        try {
            auto again = plea(ledger, p.pleader, p.evidence, p.key, p.evidence == req.terminal_evidence);
            if (again.verdict != p.verdict)
                return false;
        } catch (const Error&) {
            return false;
        }
    }
    return !pleas.empty();
}

}  // namespace onionchain::disclosure
