#include "onionchain/canonical.hpp"
#include "onionchain/error.hpp"
#include "onionchain/ledger.hpp"
#include "onionchain/wire_tags.hpp"

namespace onionchain::ledger {

std::string_view to_string(TxKind kind) noexcept
{
    switch (kind) {
    case TxKind::Registration: return "Registration";
    case TxKind::Confliction: return "Confliction";
    case TxKind::Evidence: return "Evidence";
    case TxKind::DisclosureRequest: return "DisclosureRequest";
    case TxKind::DisclosureVote: return "DisclosureVote";
    case TxKind::Plea: return "Plea";
    }
    return "Unknown";
}

std::string_view to_string(RejectReason reason) noexcept
{
    switch (reason) {
    case RejectReason::Malformed: return "Malformed";
    case RejectReason::BadSignature: return "BadSignature";
    case RejectReason::DuplicateKey: return "DuplicateKey";
    case RejectReason::ContestedKey: return "ContestedKey";
    case RejectReason::IdentityMismatch: return "IdentityMismatch";
    case RejectReason::NotTheKeyHolder: return "NotTheKeyHolder";
    }
    return "Unknown";
}

Bytes Transaction::canonical() const
{
    canonical::Writer w;
    w.reserve(payload.size() + 64);
    w.u8(tags::kTxKind, static_cast<std::uint8_t>(kind))
        .bytes(tags::kTxPayload, payload)
        .str(tags::kTxSubmitter, submitter.str());
    return std::move(w).take();
}

Digest Transaction::handle() const { return crypto::digest(canonical()); }

Transaction Transaction::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    Transaction tx;
    auto kind = r.u8(tags::kTxKind);
    if (kind < 1 || kind > 6)
        throw Error(Errc::MalformedInput, "transaction: unknown kind");
    tx.kind = static_cast<TxKind>(kind);
    tx.payload = r.bytes_copy(tags::kTxPayload);
    tx.submitter = PartyId(r.str(tags::kTxSubmitter));
    r.finish();
    return tx;
}

namespace {

void write_unsealed(canonical::Writer& w, const BlockHeader& h)
{
    w.bytes(tags::kHdrPrev, h.prev_hash.view())
        .bytes(tags::kHdrMerkle, h.merkle_root.view())
        .u64(tags::kHdrHeight, h.height)
        .i64(tags::kHdrTimestamp, h.timestamp_ms)
        .str(tags::kHdrSequencer, h.sequencer.str());
}

}  // namespace

Bytes BlockHeader::signing_bytes() const
{
    canonical::Writer w;
    write_unsealed(w, *this);
    return std::move(w).take();
}

Bytes BlockHeader::canonical() const
{
    canonical::Writer w;
    write_unsealed(w, *this);
    w.bytes(tags::kHdrSeal, seal.sig_bytes);
    return std::move(w).take();
}

Digest BlockHeader::digest() const { return crypto::digest(canonical()); }

BlockHeader BlockHeader::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    BlockHeader h;
    h.prev_hash = Digest::from(r.bytes(tags::kHdrPrev));
    h.merkle_root = Digest::from(r.bytes(tags::kHdrMerkle));
    h.height = r.u64(tags::kHdrHeight);
    h.timestamp_ms = r.i64(tags::kHdrTimestamp);
    h.sequencer = PartyId(r.str(tags::kHdrSequencer));
    h.seal.sig_bytes = r.bytes_copy(tags::kHdrSeal);
    r.finish();
    return h;
}

std::vector<Digest> Block::handles() const
{
    std::vector<Digest> out;
    out.reserve(body.size());
    for (const auto& tx : body)
        out.push_back(tx.handle());
    return out;
}

Bytes Confliction::canonical() const
{
    canonical::Writer w;
    w.bytes(tags::kConflictKey, disputed_key.view());
    if (contested)
        w.bytes(tags::kConflictContested, contested->view());
    return std::move(w).take();
}

Confliction Confliction::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    Confliction c;
    c.disputed_key = PublicKey::from(r.bytes(tags::kConflictKey));
    if (auto h = r.maybe_bytes(tags::kConflictContested))
        c.contested = Digest::from(*h);
    r.finish();
    return c;
}

}  // namespace onionchain::ledger
