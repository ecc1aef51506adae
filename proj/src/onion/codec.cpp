#include "onionchain/canonical.hpp"
#include "onionchain/error.hpp"
#include "onionchain/onion.hpp"
#include "onionchain/wire_tags.hpp"

namespace onionchain::onion {

Bytes Message::canonical() const
{
    canonical::Writer w;
    w.reserve(payload.size() + 32);
    w.bytes(tags::kMsgPayload, payload).i64(tags::kMsgTimestamp, timestamp_ms);
    return std::move(w).take();
}

Digest Message::digest() const { return crypto::digest(canonical()); }

Message Message::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    Message m;
    m.payload = r.bytes_copy(tags::kMsgPayload);
    m.timestamp_ms = r.i64(tags::kMsgTimestamp);
    r.finish();
    return m;
}

namespace {

Bytes encode_directive(const RoutingDirective& d)
{
    canonical::Writer w;
    w.str(tags::kDirFrom, d.from.str()).str(tags::kDirTo, d.to.str());
    return std::move(w).take();
}

RoutingDirective decode_directive(ByteView bytes)
{
    canonical::Reader r(bytes);
    RoutingDirective d{PartyId(r.str(tags::kDirFrom)), PartyId(r.str(tags::kDirTo))};
    r.finish();
    if (d.from.empty() || d.to.empty() || d.from == d.to)
        throw Error(Errc::MalformedInput, "routing directive");
    return d;
}

}  // namespace

Bytes seal_layer(const SymmetricKey& key, const RoutingDirective& directive, bool final, ByteView inner)
{
    canonical::Writer w;
    w.reserve(inner.size() + 96);
    w.bytes(tags::kLayerDirective, encode_directive(directive))
        .boolean(tags::kLayerFinal, final)
        .bytes(tags::kLayerInner, inner);
    return crypto::sym_encrypt(key, w.view());
}

PeeledLayer peel_layer(const SymmetricKey& key, ByteView packet)
{
    Bytes plain = crypto::sym_decrypt(key, packet);
    canonical::Reader r(plain);
    PeeledLayer out;
    out.directive = decode_directive(r.bytes(tags::kLayerDirective));
    out.final = r.boolean(tags::kLayerFinal);
    out.inner = r.bytes_copy(tags::kLayerInner);
    r.finish();
    return out;
}

Bytes SignedEnvelope::canonical() const
{
    canonical::Writer w;
    w.reserve(body.size() + 128);
    w.bytes(tags::kEnvSigner, signer.view())
        .bytes(tags::kEnvBody, body)
        .bytes(tags::kEnvSignature, signature.sig_bytes);
    return std::move(w).take();
}

SignedEnvelope SignedEnvelope::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    SignedEnvelope e;
    e.signer = PublicKey::from(r.bytes(tags::kEnvSigner));
    e.body = r.bytes_copy(tags::kEnvBody);
    e.signature.sig_bytes = r.bytes_copy(tags::kEnvSignature);
    r.finish();
    return e;
}

bool SignedEnvelope::valid() const noexcept { return crypto::verify(signer, signature, body); }

Bytes LinkedContent::canonical() const
{
    canonical::Writer w;
    w.reserve(data.size() + (prev ? prev->size() : 0) + 32);
    w.u8(tags::kLinkKind, static_cast<std::uint8_t>(kind)).bytes(tags::kLinkData, data);
    if (prev)
        w.bytes(tags::kLinkPrev, *prev);
    return std::move(w).take();
}

LinkedContent LinkedContent::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    LinkedContent c;
    auto kind = r.u8(tags::kLinkKind);
    if (kind < 1 || kind > 3)
        throw Error(Errc::MalformedInput, "linked content kind");
    c.kind = static_cast<Kind>(kind);
    c.data = r.bytes_copy(tags::kLinkData);
    if (auto prev = r.maybe_bytes(tags::kLinkPrev))
        c.prev = Bytes(prev->begin(), prev->end());
    r.finish();
    return c;
}

Bytes EvidenceRecord::canonical() const
{
    canonical::Writer w;
    w.reserve(ciphertext.size() + 64);
    w.u32(tags::kEvIndex, index).bytes(tags::kEvCiphertext, ciphertext);
    if (prev_handle)
        w.bytes(tags::kEvPrev, prev_handle->view());
    return std::move(w).take();
}

EvidenceRecord EvidenceRecord::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    EvidenceRecord rec;
    rec.index = r.u32(tags::kEvIndex);
    rec.ciphertext = r.bytes_copy(tags::kEvCiphertext);
    if (auto prev = r.maybe_bytes(tags::kEvPrev))
        rec.prev_handle = Digest::from(*prev);
    r.finish();
    return rec;
}

OpenedEvidence open_evidence(const SymmetricKey& proof_key, const EvidenceRecord& record)
{
    Bytes plain = crypto::sym_decrypt(proof_key, record.ciphertext);
    OpenedEvidence out;
    out.outer = SignedEnvelope::decode(plain);
    out.inner = SignedEnvelope::decode(out.outer.body);
    out.content = LinkedContent::decode(out.inner.body);
    return out;
}

bool check_freshness(const Message& message, std::int64_t window_ms, std::int64_t now_ms,
                     std::int64_t skew_ms) noexcept
{
    return now_ms - message.timestamp_ms <= window_ms && message.timestamp_ms <= now_ms + skew_ms;
}

}  // namespace onionchain::onion
