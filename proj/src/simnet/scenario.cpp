#include "onionchain/error.hpp"
#include "onionchain/simnet.hpp"

#include <algorithm>
#include <cctype>

namespace onionchain::simnet {

using disclosure::Culprit;
using disclosure::CulpritReason;
using onion::LinkedContent;

std::string_view to_string(ScenarioKind kind) noexcept
{
    switch (kind) {
    case ScenarioKind::Honest: return "honest";
    case ScenarioKind::MaliciousTransmitter: return "malicious-transmitter";
    case ScenarioKind::MaliciousMessenger: return "malicious-messenger";
    case ScenarioKind::Replay: return "replay";
    case ScenarioKind::Calumniating: return "calumniating";
    case ScenarioKind::Collusion: return "collusion";
    }
    return "unknown";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name)
{
    std::string norm;
    for (char c : name)
        if (c != '-' && c != '_')
            norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (auto k : {ScenarioKind::Honest, ScenarioKind::MaliciousTransmitter, ScenarioKind::MaliciousMessenger,
                   ScenarioKind::Replay, ScenarioKind::Calumniating, ScenarioKind::Collusion}) {
        std::string candidate;
        for (char c : to_string(k))
            if (c != '-')
                candidate.push_back(c);
        if (candidate == norm)
            return k;
    }
    return std::nullopt;
}

onion::Message make_message(Network& net, std::size_t bits)
{
    onion::Message m;
    m.payload.resize((bits + 7) / 8);
    for (std::size_t i = 0; i < m.payload.size(); i += 8) {
        std::uint64_t r = net.rng()();
        for (std::size_t j = 0; j < 8 && i + j < m.payload.size(); ++j)
            m.payload[i + j] = static_cast<std::uint8_t>(r >> (8 * j));
    }
    if (bits % 8 != 0 && !m.payload.empty())
        m.payload.back() &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
    m.timestamp_ms = net.now_ms();
    return m;
}

std::size_t count_evidence(const ledger::Ledger& ledger)
{
    return ledger.with_chain([](std::span<const ledger::Block> chain) {
        std::size_t n = 0;
        for (const auto& b : chain)
            n += static_cast<std::size_t>(std::count_if(b.body.begin(), b.body.end(), [](const auto& tx) {
                return tx.kind == ledger::TxKind::Evidence;
            }));
        return n;
    });
}

namespace {

SymmetricKey random_key(Network& net, crypto::KeyPurpose purpose)
{
    SymmetricKey k;
    for (std::size_t i = 0; i < k.key_bytes.size(); i += 8) {
        std::uint64_t r = net.rng()();
        for (std::size_t j = 0; j < 8; ++j)
            k.key_bytes[i + j] = static_cast<std::uint8_t>(r >> (8 * j));
    }
    k.purpose = purpose;
    return k;
}

// A uniformly chosen element of `pool` not in `exclude`.
PartyId pick(Network& net, const std::vector<PartyId>& pool, const std::vector<PartyId>& exclude)
{
    std::vector<PartyId> eligible;
    for (const auto& p : pool)
        if (std::find(exclude.begin(), exclude.end(), p) == exclude.end())
            eligible.push_back(p);
    if (eligible.empty())
        throw Error(Errc::InsufficientNodes, "no eligible party");
    std::uniform_int_distribution<std::size_t> d(0, eligible.size() - 1);
    return eligible[d(net.rng())];
}

void note_refusal(Network& net, ScenarioOutcome& out, const Error& e, const PartyId& who)
{
    out.refusals.emplace_back(to_string(e.code()));
    net.record("refuse", {who}, 0, e.what());
}

}  // namespace

DisclosureRun disclose(Network& net, const PartyId& requester, const Digest& accused_digest, const Digest& terminal,
                       bool garbage_confession)
{
    auto key = net.participant(requester).proof_key(terminal);
    if (!key)
        throw Error(Errc::KeyDoesNotOpenEvidence, requester.str() + " holds no proof key for the terminal evidence");

    DisclosureRun run;
    run.request = disclosure::request_disclosure(net, requester, accused_digest, terminal, *key);
    for (const auto& voter : net.node_ids()) {
        try {
            disclosure::cast_vote(net, voter, run.request, true);
            net.record("vote", {voter}, 0, "approve " + run.request.hex());
        } catch (const Error& e) {
            if (e.code() != Errc::MessageDropped && e.code() != Errc::PeerUnreachable)
                throw;
        }
    }
    net.commit_round();

    run.outcome = disclosure::run_disclosure(net, run.request, net);
    run.culprit = run.outcome.culprit;
    for (const auto& p : run.outcome.transcript)
        net.record("verdict", {p.pleader}, p.index, std::string(disclosure::to_string(p.verdict)));

    if (run.culprit.reason == CulpritReason::TransmitterOrigin) {
        const PartyId& first_relay = run.outcome.transcript.back().pleader;
        std::optional<onion::Circuit> circuit;
        for (auto& c : net.participant(run.culprit.party).circuits())
            if (!c.relays.empty() && c.relays.front() == first_relay)
                circuit = c;
        if (circuit) {
            auto keys = circuit->hop_keys;
            if (garbage_confession)
                for (auto& k : keys)
                    k = random_key(net, crypto::KeyPurpose::HopEncryption);
            try {
                run.confession = disclosure::confession(net.ledger(), run.outcome, keys);
                run.culprit = run.confession->culprit;
            } catch (const Error& e) {
                if (e.code() != Errc::KeysDoNotOpenOnion)
                    throw;
                run.confession_failed = true;
            }
        }
    }
    net.record("verdict", {run.culprit.party}, 0, std::string(disclosure::to_string(run.culprit.reason)));
    return run;
}

namespace {

void attach(ScenarioOutcome& out, DisclosureRun run)
{
    out.request = run.request;
    out.disclosure = std::move(run.outcome);
    out.confession = std::move(run.confession);
    out.confession_failed = run.confession_failed;
    out.culprit = run.culprit;
}

void scenario_honest(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    auto m = make_message(net, cfg.payload_bits);
    auto receipt = onion::transmit(net, out.transmitter, out.receiver, m, cfg.relays);
    out.relays = receipt.circuit.relays;
    out.receipt = receipt;
    if (cfg.disclose)
        attach(out, disclose(net, out.receiver, m.digest(), receipt.evidence.back(), cfg.garbage_confession));
}

// T signs a benign onion but routes a different one; the first relay refuses.
// T then sends the false message properly and is named by disclosure.
void scenario_malicious_transmitter(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    out.adversaries = {out.transmitter};
    auto benign = make_message(net, cfg.payload_bits);
    auto fake = make_message(net, cfg.payload_bits);

    auto circuit = onion::establish_circuit(net, out.transmitter, out.receiver, cfg.relays);
    Bytes ev0_benign = onion::build_onion(circuit, benign);
    Bytes ev0_fake = onion::build_onion(circuit, fake);
    auto handoff = onion::prepare_handoff(net.participant(out.transmitter),
                                          {LinkedContent::Kind::Onion, ev0_benign, {}}, std::nullopt, circuit.session);
    const PartyId& first = circuit.relays.front();
    net.send(out.transmitter, first, "onion", 0);
    try {
        onion::make_evidence_initial(net, out.transmitter, first, ev0_fake, handoff);
    } catch (const Error& e) {
        note_refusal(net, out, e, first);
    }

    auto receipt = onion::transmit(net, out.transmitter, out.receiver, fake, cfg.relays);
    out.relays = receipt.circuit.relays;
    out.receipt = receipt;
    if (cfg.disclose)
        attach(out, disclose(net, out.receiver, fake.digest(), receipt.evidence.back(), cfg.garbage_confession));
}

// B commits a fabricated EV'_2 pointing at the genuine EV_1 and hands m_fake
// to a receiver of its choosing.
void scenario_messenger_forged_evidence(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    auto m = make_message(net, cfg.payload_bits);
    auto receipt = onion::transmit(net, out.transmitter, out.receiver, m, cfg.relays);
    out.relays = receipt.circuit.relays;
    out.receipt = receipt;
    const PartyId b = out.relays[1];
    out.adversaries = {b};

    std::vector<PartyId> exclude = out.relays;
    exclude.push_back(out.transmitter);
    const PartyId victim = pick(net, net.members(), exclude);
    auto fake = make_message(net, cfg.payload_bits);

    Node& bn = net.participant(b);
    Bytes fabricated = net.ledger().get_transaction(receipt.evidence[0]).payload;
    fabricated[fabricated.size() / 2] ^= 0x5a;
    LinkedContent content{LinkedContent::Kind::Packet, fake.canonical(), fabricated};
    auto inner = onion::make_envelope(bn, content.canonical());
    auto outer = onion::make_envelope(bn, inner.canonical());
    auto pk = random_key(net, crypto::KeyPurpose::Proof);
    onion::EvidenceRecord rec{2, crypto::sym_encrypt(pk, outer.canonical()), receipt.evidence[0]};
    Digest forged = net.submit({ledger::TxKind::Evidence, rec.canonical(), b});
    net.await_commit(forged);
    bn.keep_proof_key(forged, pk);

    auto handoff = onion::prepare_handoff(bn, {LinkedContent::Kind::Message, fake.canonical(), rec.canonical()},
                                          forged, "forged");
    net.send(b, victim, "message", 2);
    auto ev = onion::make_evidence_final(net, b, victim, fake, handoff, 3);
    net.participant(victim).deliver(fake, ev.handle);
    out.receiver = victim;

    if (cfg.adversary_refuses_plea)
        net.refuse_pleas(b);
    if (cfg.disclose)
        attach(out, disclose(net, victim, fake.digest(), ev.handle, cfg.garbage_confession));
}

// B keeps the genuine EV_2 but forwards a fake V'_1 it sealed itself under a
// key it negotiated with C, carrying m_fake to a receiver of its choosing.
void scenario_messenger_forged_packet(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    auto circuit = onion::establish_circuit(net, out.transmitter, out.receiver, cfg.relays);
    out.relays = circuit.relays;
    const PartyId b = circuit.relays[1];
    out.adversaries = {b};

    std::vector<PartyId> exclude = circuit.relays;
    exclude.push_back(out.transmitter);
    const PartyId victim = pick(net, net.members(), exclude);
    auto m = make_message(net, cfg.payload_bits);
    auto fake = make_message(net, cfg.payload_bits);

    auto hook = [&](std::size_t k, onion::PeeledLayer& layer) {
        if (k != 1)
            return;
        const PartyId c = layer.directive.to;
        auto key = net.negotiate_key(b, c, crypto::KeyPurpose::HopEncryption, {b, c});
        net.participant(c).keep_hop_key(circuit.session, key.responder_copy);
        layer.inner = onion::seal_layer(key.initiator_copy, {c, victim}, true, fake.canonical());
    };
    auto receipt = onion::run_circuit(net, circuit, m, hook);
    out.receipt = receipt;
    out.receiver = victim;
    if (cfg.disclose)
        attach(out, disclose(net, victim, fake.digest(), receipt.evidence.back(), cfg.garbage_confession));
}

// The last relay resends the delivered message after the freshness window.
void scenario_replay(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    auto m = make_message(net, cfg.payload_bits);
    auto receipt = onion::transmit(net, out.transmitter, out.receiver, m, cfg.relays);
    out.relays = receipt.circuit.relays;
    out.receipt = receipt;
    const PartyId c = out.relays.back();
    out.adversaries = {c};

    out.evidence_before_replay = count_evidence(net.ledger());
    net.advance_clock(onion::kFreshnessWindowMs + 1'000);
    const std::size_t n = out.relays.size();
    const Digest& ev_n = receipt.evidence[n - 1];
    auto handoff = onion::prepare_handoff(
        net.participant(c), {LinkedContent::Kind::Message, m.canonical(), net.ledger().get_transaction(ev_n).payload},
        ev_n, receipt.circuit.session);
    net.send(c, out.receiver, "message", static_cast<std::uint32_t>(n));
    try {
        auto ev = onion::make_evidence_final(net, c, out.receiver, m, handoff, static_cast<std::uint32_t>(n + 1));
        net.participant(out.receiver).deliver(m, ev.handle);
    } catch (const Error& e) {
        if (e.code() != Errc::StaleMessage)
            throw;
        out.discarded = true;
        net.record("discard", {out.receiver}, static_cast<std::uint32_t>(n), e.what());
    }
    out.evidence_after_replay = count_evidence(net.ledger());
}

// R accuses the transmitter of a message it never received.
void scenario_calumniating(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    out.adversaries = {out.receiver};
    auto m = make_message(net, cfg.payload_bits);
    auto receipt = onion::transmit(net, out.transmitter, out.receiver, m, cfg.relays);
    out.relays = receipt.circuit.relays;
    out.receipt = receipt;
    auto fake = make_message(net, cfg.payload_bits);
    if (cfg.disclose)
        attach(out, disclose(net, out.receiver, fake.digest(), receipt.evidence.back(), cfg.garbage_confession));
}

// T and the first relay collude: EV_1 binds a benign onion while A forwards
// the first layer of a fake one.
void scenario_collusion(Network& net, const ScenarioConfig& cfg, ScenarioOutcome& out)
{
    auto circuit = onion::establish_circuit(net, out.transmitter, out.receiver, cfg.relays);
    out.relays = circuit.relays;
    out.adversaries = {out.transmitter, circuit.relays.front()};
    auto benign = make_message(net, cfg.payload_bits);
    auto fake = make_message(net, cfg.payload_bits);
    Bytes v0_fake = onion::peel_layer(circuit.hop_keys[0], onion::build_onion(circuit, fake)).inner;

    auto hook = [&](std::size_t k, onion::PeeledLayer& layer) {
        if (k == 0)
            layer.inner = v0_fake;
    };
    auto receipt = onion::run_circuit(net, circuit, benign, hook);
    out.receipt = receipt;
    if (cfg.disclose)
        attach(out, disclose(net, out.receiver, fake.digest(), receipt.evidence.back(), cfg.garbage_confession));
}

}  // namespace

ScenarioOutcome run_scenario(Network& net, const ScenarioConfig& config)
{
    ScenarioOutcome out;
    out.kind = config.kind;
    auto members = net.members();
    out.transmitter = pick(net, members, {});
    out.receiver = pick(net, members, {out.transmitter});

    switch (config.kind) {
    case ScenarioKind::Honest: scenario_honest(net, config, out); break;
    case ScenarioKind::MaliciousTransmitter: scenario_malicious_transmitter(net, config, out); break;
    case ScenarioKind::MaliciousMessenger:
        if (config.messenger == MessengerVariant::ForgedEvidence)
            scenario_messenger_forged_evidence(net, config, out);
        else
            scenario_messenger_forged_packet(net, config, out);
        break;
    case ScenarioKind::Replay: scenario_replay(net, config, out); break;
    case ScenarioKind::Calumniating: scenario_calumniating(net, config, out); break;
    case ScenarioKind::Collusion: scenario_collusion(net, config, out); break;
    }
    return out;
}

}  // namespace onionchain::simnet
