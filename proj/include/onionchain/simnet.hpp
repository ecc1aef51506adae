#pragma once

// In-process simulated network: nodes with key archives and view logs, a
// logical clock, a round-robin block sequencer, fault injection, and
// scripted adversaries for each attack the protocol is meant to defeat.

#include "onionchain/disclosure.hpp"
#include "onionchain/onion.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace onionchain::simnet {

using crypto::Digest;
using crypto::SymmetricKey;

/// Logical time origin; every network starts here regardless of seed.
inline constexpr std::int64_t kEpochMs = 1'700'000'000'000;
inline constexpr std::size_t kMinMembers = 5;

struct TraceEvent {
    std::uint64_t seq = 0;
    std::int64_t time_ms = 0;
    std::string kind;  // negotiate, submit, commit, send, forward, deliver, discard, vote, plea, verdict, fault
    std::vector<PartyId> parties;
    std::uint32_t hop = 0;
    std::string detail;
};

class Node final : public onion::Participant {
public:
    struct Delivery {
        onion::Message message;
        Digest terminal_evidence;
    };

    Node(PartyId id, crypto::KeyPair keys, bool miner);

    const PartyId& id() const override { return id_; }
    crypto::PublicKey public_key() const override { return keys_.public_key; }
    crypto::Signature sign(ByteView message) override;

    void keep_proof_key(const Digest& evidence, const SymmetricKey& key) override;
    std::optional<SymmetricKey> proof_key(const Digest& evidence) const override;
    void keep_hop_key(const std::string& session, const SymmetricKey& key) override;
    std::optional<SymmetricKey> hop_key(const std::string& session) const override;
    void keep_circuit(const onion::Circuit& circuit) override;
    std::optional<onion::Circuit> circuit(const std::string& session) const override;

    void deliver(const onion::Message& message, const Digest& terminal_evidence) override;
    void note(onion::ViewEvent event) override;

    bool miner() const noexcept { return miner_; }
    const crypto::KeyPair& keys() const noexcept { return keys_; }
    std::vector<Delivery> deliveries() const;
    std::vector<onion::ViewEvent> view() const;
    std::vector<onion::Circuit> circuits() const;

private:
    PartyId id_;
    crypto::KeyPair keys_;
    bool miner_;

    mutable std::mutex mu_;
    std::map<Digest, SymmetricKey> proof_keys_;
    std::map<std::string, SymmetricKey> hop_keys_;
    std::vector<onion::Circuit> circuits_;
    std::vector<Delivery> deliveries_;
    std::vector<onion::ViewEvent> view_;
};

enum class FaultKind { NodeOffline, DropMessage, Delay };

class Network final : public onion::Fabric,
                      public crypto::KeyAgreementChannel,
                      public disclosure::PleaResponder {
public:
    /// Nodes flagged as miners form the ledger's authority roster.
    Network(std::vector<std::unique_ptr<Node>> nodes, std::uint64_t seed);

    // onion::Fabric
    Node& participant(const PartyId& id) override;
    std::vector<PartyId> members() const override;
    crypto::NegotiatedKey negotiate_key(const PartyId& initiator, const PartyId& responder,
                                        crypto::KeyPurpose purpose, std::pair<PartyId, PartyId> naming) override;
    void send(const PartyId& from, const PartyId& to, std::string_view what, std::uint32_t hop) override;
    ledger::Ledger& ledger() override { return *ledger_; }
    Digest submit(ledger::Transaction tx) override;
    void await_commit(const Digest& handle) override;
    std::int64_t now_ms() const override { return clock_ms_; }
    std::mt19937_64& rng() override { return rng_; }

    // crypto::KeyAgreementChannel
    bool reachable(const PartyId& party) const override;
    std::array<std::uint8_t, 32> ephemeral_entropy(const PartyId& party) override;

    // disclosure::PleaResponder: nodes answer from their key archive unless told to refuse.
    std::optional<SymmetricKey> release_proof_key(const PartyId& pleader, const Digest& evidence) override;

    /// Errors: UnknownTarget. `amount` is the delay in ms, or the number of
    /// outgoing messages to drop.
    void inject_fault(FaultKind kind, const PartyId& target, std::int64_t amount = 1);
    void clear_faults();
    void refuse_pleas(const PartyId& party, bool refuse = true);

    /// Commits whatever is pending with the next sequencer in the rotation.
    std::optional<ledger::Block> commit_round();
    void advance_clock(std::int64_t ms) { clock_ms_ += ms; }

    void record(std::string kind, std::vector<PartyId> parties, std::uint32_t hop = 0, std::string detail = {});
    const std::vector<TraceEvent>& trace() const noexcept { return trace_; }
    void set_trace_sink(std::function<void(const TraceEvent&)> sink) { sink_ = std::move(sink); }
    /// One JSON object per line.
    void export_trace(std::ostream& out) const;

    /// Adds a non-mining node; it still has to register to become a member.
    /// Errors: InvalidArgument (id taken).
    Node& add_node(std::unique_ptr<Node> node);
    std::vector<PartyId> node_ids() const;
    bool has_node(const PartyId& id) const { return nodes_.contains(id); }

private:
    std::map<PartyId, std::unique_ptr<Node>> nodes_;
    std::vector<PartyId> sequencers_;
    std::size_t next_sequencer_ = 0;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::mt19937_64 rng_;
    std::int64_t clock_ms_ = kEpochMs;

    std::set<PartyId> offline_;
    std::map<PartyId, std::int64_t> drops_;
    std::map<PartyId, std::int64_t> delays_;
    std::set<PartyId> refusing_;

    std::vector<TraceEvent> trace_;
    std::function<void(const TraceEvent&)> sink_;
};

/// `members` nodes named node-0.., the first `miners` of which mine; all are
/// registered (miners in genesis, the rest through the registration protocol).
/// Errors: TooFewMembers (members < 5), InvalidArgument (miners outside 1..members).
std::unique_ptr<Network> spawn_network(std::size_t members, std::size_t miners, std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class ScenarioKind { Honest, MaliciousTransmitter, MaliciousMessenger, Replay, Calumniating, Collusion };

std::string_view to_string(ScenarioKind kind) noexcept;
/// Accepts the names printed by to_string, case-insensitive, plus kebab-case.
std::optional<ScenarioKind> parse_scenario(std::string_view name);

enum class MessengerVariant {
    ForgedEvidence,  // B commits a fabricated EV'_2 and delivers m_fake itself
    ForgedPacket,    // B forwards a fake V'_1 alongside a genuine EV_2
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Honest;
    std::size_t relays = 3;
    std::size_t payload_bits = 128;
    bool disclose = true;  // run disclosure where the script calls for it
    MessengerVariant messenger = MessengerVariant::ForgedEvidence;
    bool adversary_refuses_plea = false;
    bool garbage_confession = false;  // transmitter releases wrong hop keys
};

struct ScenarioOutcome {
    ScenarioKind kind = ScenarioKind::Honest;
    PartyId transmitter;
    PartyId receiver;  // who ended up holding the message
    std::vector<PartyId> relays;
    std::set<PartyId> adversaries;

    std::optional<onion::TransmitReceipt> receipt;
    std::vector<std::string> refusals;  // protocol errors honest parties raised
    bool discarded = false;
    std::size_t evidence_before_replay = 0;
    std::size_t evidence_after_replay = 0;

    std::optional<Digest> request;
    std::optional<disclosure::DisclosureOutcome> disclosure;
    std::optional<disclosure::ConfessionResult> confession;
    bool confession_failed = false;
    std::optional<disclosure::Culprit> culprit;  // final verdict after confession
};

ScenarioOutcome run_scenario(Network& net, const ScenarioConfig& config);

/// Random payload of `bits` bits (rounded up to whole bytes) from the network rng.
onion::Message make_message(Network& net, std::size_t bits);

/// Request, unanimous approval, the plea walk, and the transmitter's
/// confession when the walk reaches it.
struct DisclosureRun {
    Digest request;
    disclosure::DisclosureOutcome outcome;
    std::optional<disclosure::ConfessionResult> confession;
    bool confession_failed = false;
    disclosure::Culprit culprit;
};

DisclosureRun disclose(Network& net, const PartyId& requester, const Digest& accused_digest, const Digest& terminal,
                       bool garbage_confession = false);

std::size_t count_evidence(const ledger::Ledger& ledger);

}  // namespace onionchain::simnet
