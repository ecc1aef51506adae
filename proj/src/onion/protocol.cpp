#include "onionchain/error.hpp"
#include "onionchain/onion.hpp"

#include <algorithm>

namespace onionchain::onion {

Circuit select_relays(const std::vector<PartyId>& members, const PartyId& transmitter, const PartyId& receiver,
                      std::size_t n, std::mt19937_64& rng)
{
    if (n < kMinRelays)
        throw Error(Errc::NTooSmall, "need at least 3 relays, got " + std::to_string(n));

    std::vector<PartyId> eligible;
    for (const auto& m : members)
        if (m != transmitter && m != receiver && std::find(eligible.begin(), eligible.end(), m) == eligible.end())
            eligible.push_back(m);
    if (eligible.size() < n)
        throw Error(Errc::InsufficientNodes,
                    std::to_string(eligible.size()) + " eligible relays for n=" + std::to_string(n));

    // Partial Fisher-Yates: the first n slots are a uniform ordered sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
        std::swap(eligible[i], eligible[pick(rng)]);
    }
    eligible.resize(n);

    Circuit c;
    c.transmitter = transmitter;
    c.receiver = receiver;
    c.relays = std::move(eligible);
    return c;
}

Bytes build_onion(const Circuit& circuit, const Message& message)
{
    const std::size_t n = circuit.relays.size();
    if (n < kMinRelays)
        throw Error(Errc::NTooSmall);
    if (circuit.hop_keys.size() != n)
        throw Error(Errc::InvalidArgument, "one hop key per relay required");

    Bytes inner = message.canonical();
    for (std::size_t k = n; k-- > 0;) {
        RoutingDirective d{circuit.relays[k], circuit.successor(k)};
        inner = seal_layer(circuit.hop_keys[k], d, k + 1 == n, inner);
    }
    return inner;
}

SignedEnvelope make_envelope(Participant& signer, Bytes body)
{
    SignedEnvelope e;
    e.signer = signer.public_key();
    e.signature = signer.sign(body);
    e.body = std::move(body);
    return e;
}

Handoff prepare_handoff(Participant& inner_signer, LinkedContent content, std::optional<Digest> prev_handle,
                        std::string session)
{
    Handoff h;
    h.inner = make_envelope(inner_signer, content.canonical());
    h.content = std::move(content);
    h.prev_handle = prev_handle;
    h.session = std::move(session);
    return h;
}

namespace {

bool signed_by_member(const ledger::Ledger& ledger, const PartyId& party, const SignedEnvelope& env,
                      ByteView expected_body)
{
    auto rec = ledger.member(party);
    return rec && rec->public_key == env.signer && std::ranges::equal(env.body, expected_body) && env.valid();
}

// The committed previous evidence, as seen by the countersigning node.
ledger::Transaction committed_prev(Fabric& fabric, const PartyId& prev_node, const Handoff& handoff,
                                   std::uint32_t index)
{
    if (!handoff.prev_handle || !fabric.ledger().is_committed(*handoff.prev_handle))
        throw Error(Errc::PrevEvidenceNotCommitted, "EV_" + std::to_string(index - 1));
    auto tx = fabric.ledger().get_transaction(*handoff.prev_handle);
    bool linked = tx.kind == ledger::TxKind::Evidence && tx.submitter == prev_node;
    if (linked) {
        try {
            linked = EvidenceRecord::decode(tx.payload).index + 1 == index;
        } catch (const Error&) {
            linked = false;
        }
    }
    if (!linked)
        throw Error(Errc::BadPrevSignature, "previous evidence does not belong to " + prev_node.str());
    return tx;
}

}  // namespace

Evidence countersign_and_commit(Fabric& fabric, const PartyId& inner_party, const PartyId& outer_party,
                                const SignedEnvelope& inner, std::uint32_t index,
                                std::optional<Digest> prev_handle, const std::string& session)
{
    Participant& outer_p = fabric.participant(outer_party);
    Participant& inner_p = fabric.participant(inner_party);

    SignedEnvelope outer = make_envelope(outer_p, inner.canonical());
    outer_p.note({"countersign", {inner_party}, session});
    fabric.send(outer_party, inner_party, "countersignature", index);
    if (!signed_by_member(fabric.ledger(), outer_party, outer, inner.canonical()))
        throw Error(Errc::BadPrevSignature, outer_party.str() + " returned a countersignature over other content");
    inner_p.note({"countersigned", {outer_party}, session});

    auto pk = fabric.negotiate_key(inner_party, outer_party, crypto::KeyPurpose::Proof, {inner_party, outer_party});
    inner_p.note({"proof-key", {outer_party}, session});
    outer_p.note({"proof-key", {inner_party}, session});

    Evidence ev;
    ev.record.index = index;
    ev.record.ciphertext = crypto::sym_encrypt(pk.responder_copy, outer.canonical());
    ev.record.prev_handle = prev_handle;
    ev.handle = fabric.submit({ledger::TxKind::Evidence, ev.record.canonical(), outer_party});
    fabric.await_commit(ev.handle);
    outer_p.keep_proof_key(ev.handle, pk.responder_copy);
    inner_p.keep_proof_key(ev.handle, pk.initiator_copy);

    // The inner signer checks that what landed on-chain is what it agreed to.
    auto tx = fabric.ledger().get_transaction(ev.handle);
    bool matches = false;
    try {
        matches = open_evidence(pk.initiator_copy, EvidenceRecord::decode(tx.payload)).outer == outer;
    } catch (const Error&) {
        matches = false;
    }
    if (!matches)
        throw Error(Errc::EvidenceMismatch, "EV_" + std::to_string(index));
    return ev;
}

Evidence make_evidence_initial(Fabric& fabric, const PartyId& transmitter, const PartyId& first_relay,
                               ByteView received_onion, const Handoff& handoff)
{
    LinkedContent expected{LinkedContent::Kind::Onion, Bytes(received_onion.begin(), received_onion.end()), {}};
    if (!signed_by_member(fabric.ledger(), transmitter, handoff.inner, expected.canonical()))
        throw Error(Errc::BadTransmitterSignature, first_relay.str() + " refuses to countersign");
    fabric.participant(first_relay).note({"verify-signature", {transmitter}, handoff.session});
    return countersign_and_commit(fabric, transmitter, first_relay, handoff.inner, 1, std::nullopt, handoff.session);
}

Evidence make_evidence_hop(Fabric& fabric, const PartyId& prev_node, const PartyId& this_node,
                           ByteView received_packet, const Handoff& handoff, std::uint32_t index)
{
    auto prev_tx = committed_prev(fabric, prev_node, handoff, index);
    LinkedContent expected{LinkedContent::Kind::Packet, Bytes(received_packet.begin(), received_packet.end()),
                           prev_tx.payload};
    if (!signed_by_member(fabric.ledger(), prev_node, handoff.inner, expected.canonical()))
        throw Error(Errc::BadPrevSignature, this_node.str() + " refuses to countersign");
    fabric.participant(this_node).note({"verify-signature", {prev_node}, handoff.session});
    return countersign_and_commit(fabric, prev_node, this_node, handoff.inner, index, handoff.prev_handle,
                                  handoff.session);
}

Evidence make_evidence_final(Fabric& fabric, const PartyId& last_relay, const PartyId& receiver,
                             const Message& received, const Handoff& handoff, std::uint32_t index)
{
    if (!check_freshness(received, kFreshnessWindowMs, fabric.now_ms()))
        throw Error(Errc::StaleMessage, receiver.str() + " discards a stale message");
    auto prev_tx = committed_prev(fabric, last_relay, handoff, index);
    LinkedContent expected{LinkedContent::Kind::Message, received.canonical(), prev_tx.payload};
    if (!signed_by_member(fabric.ledger(), last_relay, handoff.inner, expected.canonical()))
        throw Error(Errc::BadPrevSignature, receiver.str() + " refuses to countersign");
    fabric.participant(receiver).note({"verify-signature", {last_relay}, handoff.session});
    return countersign_and_commit(fabric, last_relay, receiver, handoff.inner, index, handoff.prev_handle,
                                  handoff.session);
}

Circuit establish_circuit(Fabric& fabric, const PartyId& transmitter, const PartyId& receiver, std::size_t n)
{
    Circuit c = select_relays(fabric.members(), transmitter, receiver, n, fabric.rng());

    std::array<std::uint8_t, 8> sid{};
    std::uint64_t r = fabric.rng()();
    for (auto& b : sid) {
        b = static_cast<std::uint8_t>(r);
        r >>= 8;
    }
    c.session = to_hex(sid);

    for (std::size_t k = 0; k < c.relays.size(); ++k) {
        const PartyId& pred = c.predecessor(k);
        auto hop = fabric.negotiate_key(transmitter, c.relays[k], crypto::KeyPurpose::HopEncryption,
                                        {pred, c.relays[k]});
        c.hop_keys.push_back(hop.initiator_copy);
        Participant& relay = fabric.participant(c.relays[k]);
        relay.keep_hop_key(c.session, hop.responder_copy);
        relay.note({"hop-key", {pred}, c.session});
    }

    Participant& t = fabric.participant(transmitter);
    t.keep_circuit(c);
    std::vector<PartyId> path = c.relays;
    path.push_back(receiver);
    t.note({"circuit", std::move(path), c.session});
    return c;
}

TransmitReceipt run_circuit(Fabric& fabric, const Circuit& circuit, const Message& message, const RelayHook& hook)
{
    const std::size_t n = circuit.relays.size();
    Participant& t = fabric.participant(circuit.transmitter);

    TransmitReceipt receipt;
    receipt.circuit = circuit;
    receipt.message_digest = message.digest();

    Bytes packet = build_onion(circuit, message);
    auto handoff = prepare_handoff(t, {LinkedContent::Kind::Onion, packet, {}}, std::nullopt, circuit.session);
    fabric.send(circuit.transmitter, circuit.relays[0], "onion", 0);
    fabric.participant(circuit.relays[0]).note({"receive", {circuit.transmitter}, circuit.session});
    Evidence prev = make_evidence_initial(fabric, circuit.transmitter, circuit.relays[0], packet, handoff);
    receipt.evidence.push_back(prev.handle);

    PartyId holder = circuit.relays[0];
    for (std::uint32_t hop = 1;; ++hop) {
        Participant& relay = fabric.participant(holder);
        auto key = relay.hop_key(circuit.session);
        if (!key)
            throw Error(Errc::AuthenticationFailure, holder.str() + " holds no hop key for this session");
        PeeledLayer layer = peel_layer(*key, packet);
        if (layer.directive.from != holder)
            throw Error(Errc::MalformedInput, "layer addressed to another relay");
        relay.note({"peel", {layer.directive.to}, circuit.session});
        if (hook)
            hook(hop - 1, layer);
        const PartyId next = layer.directive.to;

        LinkedContent content{layer.final ? LinkedContent::Kind::Message : LinkedContent::Kind::Packet, layer.inner,
                              prev.record.canonical()};
        auto h = prepare_handoff(relay, std::move(content), prev.handle, circuit.session);
        fabric.send(holder, next, layer.final ? "message" : "packet", hop);
        Participant& succ = fabric.participant(next);
        succ.note({"receive", {holder}, circuit.session});

        if (layer.final) {
            Message received = Message::decode(layer.inner);
            prev = make_evidence_final(fabric, holder, next, received, h, hop + 1);
            receipt.evidence.push_back(prev.handle);
            succ.deliver(received, prev.handle);
            break;
        }
        prev = make_evidence_hop(fabric, holder, next, layer.inner, h, hop + 1);
        receipt.evidence.push_back(prev.handle);
        packet = std::move(layer.inner);
        holder = next;
        if (hop > n)
            throw Error(Errc::MalformedInput, "onion has more layers than relays");
    }
    if (!hook && receipt.evidence.size() != n + 1)
        throw Error(Errc::MalformedInput, "evidence count does not match circuit length");
    return receipt;
}

TransmitReceipt transmit(Fabric& fabric, const PartyId& transmitter, const PartyId& receiver, const Message& message,
                         std::size_t n)
{
    Circuit c = establish_circuit(fabric, transmitter, receiver, n);
    return run_circuit(fabric, c, message);
}

}  // namespace onionchain::onion
