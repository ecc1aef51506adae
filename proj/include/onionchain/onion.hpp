#pragma once

// Message transmission: circuit selection, layered onion construction and
// peeling, and the per-hop evidence chain EV_1..EV_{n+1} committed on the
// ledger before each forward.

#include "onionchain/crypto.hpp"
#include "onionchain/ledger.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace onionchain::onion {

using crypto::Digest;
using crypto::PublicKey;
using crypto::SymmetricKey;

inline constexpr std::int64_t kFreshnessWindowMs = 30'000;
inline constexpr std::int64_t kClockSkewMs = 5'000;
inline constexpr std::size_t kMinRelays = 3;

struct Message {
    Bytes payload;
    std::int64_t timestamp_ms = 0;

    Bytes canonical() const;
    Digest digest() const;
    static Message decode(ByteView bytes);

    friend bool operator==(const Message&, const Message&) = default;
};

struct RoutingDirective {
    PartyId from;
    PartyId to;

    friend bool operator==(const RoutingDirective&, const RoutingDirective&) = default;
};

struct Circuit {
    PartyId transmitter;
    PartyId receiver;
    std::vector<PartyId> relays;
    /// hop_keys[k] is shared with relays[k], named by (predecessor, relays[k]).
    std::vector<SymmetricKey> hop_keys;
    std::string session;

    /// Predecessor of relays[k] (the transmitter for k = 0).
    const PartyId& predecessor(std::size_t k) const { return k == 0 ? transmitter : relays[k - 1]; }
    /// Successor of relays[k] (the receiver for the last relay).
    const PartyId& successor(std::size_t k) const { return k + 1 == relays.size() ? receiver : relays[k + 1]; }
};

/// One removed layer: where to send next, and what to send.
struct PeeledLayer {
    RoutingDirective directive;
    bool final = false;  // `inner` is the canonical Message rather than a ciphertext
    Bytes inner;
};

/// SIGN(SK, body): the body travels with the signature and the signer's key.
struct SignedEnvelope {
    PublicKey signer;
    Bytes body;
    crypto::Signature signature;

    Bytes canonical() const;
    static SignedEnvelope decode(ByteView bytes);
    bool valid() const noexcept;

    friend bool operator==(const SignedEnvelope&, const SignedEnvelope&) = default;
};

/// What the two signatures of an evidence record bind together.
struct LinkedContent {
    enum class Kind : std::uint8_t { Onion = 1, Packet = 2, Message = 3 };

    Kind kind = Kind::Onion;
    Bytes data;               // EV_0, V_{i-2}, or canonical m
    std::optional<Bytes> prev;  // payload of the previous evidence transaction

    Bytes canonical() const;
    static LinkedContent decode(ByteView bytes);

    friend bool operator==(const LinkedContent&, const LinkedContent&) = default;
};

/// Payload of an Evidence transaction.
struct EvidenceRecord {
    std::uint32_t index = 0;
    Bytes ciphertext;
    std::optional<Digest> prev_handle;

    Bytes canonical() const;
    static EvidenceRecord decode(ByteView bytes);

    friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

struct Evidence {
    EvidenceRecord record;
    Digest handle;
};

/// Decrypted evidence: outer envelope wraps the inner one, which wraps the content.
struct OpenedEvidence {
    SignedEnvelope outer;
    SignedEnvelope inner;
    LinkedContent content;
};

struct TransmitReceipt {
    Circuit circuit;  // only the transmitter holds this
    std::vector<Digest> evidence;  // EV_1..EV_{n+1}, hop order
    Digest message_digest;
};

// ---------------------------------------------------------------------------
// The environment a session runs in. simnet provides the implementation.

struct ViewEvent {
    std::string action;
    std::vector<PartyId> peers;  // every party identifier this observation exposed
    std::string session;
};

class Participant {
public:
    virtual ~Participant() = default;

    virtual const PartyId& id() const = 0;
    virtual PublicKey public_key() const = 0;
    virtual crypto::Signature sign(ByteView message) = 0;

    virtual void keep_proof_key(const Digest& evidence, const SymmetricKey& key) = 0;
    virtual std::optional<SymmetricKey> proof_key(const Digest& evidence) const = 0;
    virtual void keep_hop_key(const std::string& session, const SymmetricKey& key) = 0;
    virtual std::optional<SymmetricKey> hop_key(const std::string& session) const = 0;
    virtual void keep_circuit(const Circuit& circuit) = 0;
    virtual std::optional<Circuit> circuit(const std::string& session) const = 0;

    virtual void deliver(const Message& message, const Digest& terminal_evidence) = 0;
    virtual void note(ViewEvent event) = 0;
};

class Fabric {
public:
    virtual ~Fabric() = default;

    /// Errors: UnknownTarget.
    virtual Participant& participant(const PartyId& id) = 0;
    /// Parties eligible for relay selection.
    virtual std::vector<PartyId> members() const = 0;

    /// Errors: PeerUnreachable.
    virtual crypto::NegotiatedKey negotiate_key(const PartyId& initiator, const PartyId& responder,
                                                crypto::KeyPurpose purpose,
                                                std::pair<PartyId, PartyId> naming) = 0;
    /// Moves one protocol message. Errors: PeerUnreachable, MessageDropped.
    virtual void send(const PartyId& from, const PartyId& to, std::string_view what, std::uint32_t hop) = 0;

    virtual ledger::Ledger& ledger() = 0;
    /// Places a transaction in the ledger's pending pool.
    virtual Digest submit(ledger::Transaction tx) = 0;
    /// Drives block production until `handle` commits. Errors: NotFound if it was rejected.
    virtual void await_commit(const Digest& handle) = 0;

    virtual std::int64_t now_ms() const = 0;
    virtual std::mt19937_64& rng() = 0;
};

// ---------------------------------------------------------------------------

/// Errors: NTooSmall (n < 3), InsufficientNodes (fewer than n eligible relays).
Circuit select_relays(const std::vector<PartyId>& members, const PartyId& transmitter, const PartyId& receiver,
                      std::size_t n, std::mt19937_64& rng);

/// EV_0. Requires one hop key per relay.
Bytes build_onion(const Circuit& circuit, const Message& message);
/// Wraps `inner` in one layer under `key`; build_onion applies this n times.
Bytes seal_layer(const SymmetricKey& key, const RoutingDirective& directive, bool final, ByteView inner);
/// Errors: AuthenticationFailure, MalformedInput.
PeeledLayer peel_layer(const SymmetricKey& key, ByteView packet);

bool check_freshness(const Message& message, std::int64_t window_ms, std::int64_t now_ms,
                     std::int64_t skew_ms = kClockSkewMs) noexcept;

SignedEnvelope make_envelope(Participant& signer, Bytes body);

/// Decrypts and parses one evidence record. Errors: AuthenticationFailure, MalformedInput.
OpenedEvidence open_evidence(const SymmetricKey& proof_key, const EvidenceRecord& record);

/// The inner signer's half of a handoff: SIGN(SK_prev, content).
struct Handoff {
    LinkedContent content;
    SignedEnvelope inner;
    std::optional<Digest> prev_handle;
    std::string session;
};

Handoff prepare_handoff(Participant& inner_signer, LinkedContent content, std::optional<Digest> prev_handle,
                        std::string session);

/// EV_1: the first relay checks T's signature over the onion it received,
/// countersigns, and commits under a fresh proof key.
/// Errors: BadTransmitterSignature, EvidenceMismatch.
Evidence make_evidence_initial(Fabric& fabric, const PartyId& transmitter, const PartyId& first_relay,
                               ByteView received_onion, const Handoff& handoff);

/// EV_i for 2 <= i <= n. `this_node` rebuilds the content from the packet it
/// received and the committed EV_{i-1} before countersigning.
/// Errors: PrevEvidenceNotCommitted, BadPrevSignature, EvidenceMismatch.
Evidence make_evidence_hop(Fabric& fabric, const PartyId& prev_node, const PartyId& this_node,
                           ByteView received_packet, const Handoff& handoff, std::uint32_t index);

/// EV_{n+1}, produced by the last relay and the receiver.
/// Errors: StaleMessage, PrevEvidenceNotCommitted, BadPrevSignature, EvidenceMismatch.
Evidence make_evidence_final(Fabric& fabric, const PartyId& last_relay, const PartyId& receiver,
                             const Message& received, const Handoff& handoff, std::uint32_t index);

/// Outer half shared by the three constructors: countersign, negotiate the
/// proof key, encrypt, submit, wait for commit, and let the inner signer
/// check what landed on the ledger.
Evidence countersign_and_commit(Fabric& fabric, const PartyId& inner_party, const PartyId& outer_party,
                                const SignedEnvelope& inner, std::uint32_t index,
                                std::optional<Digest> prev_handle, const std::string& session);

/// Chooses relays and negotiates one hop key per relay. Relays only ever see
/// their predecessor as the key-exchange peer.
Circuit establish_circuit(Fabric& fabric, const PartyId& transmitter, const PartyId& receiver, std::size_t n);

/// Called after relay k peels its layer and before it forwards. Honest runs
/// pass none; scripted adversaries use it to substitute what gets forwarded.
using RelayHook = std::function<void(std::size_t k, PeeledLayer& layer)>;

/// Runs the hop sequence for an established circuit.
TransmitReceipt run_circuit(Fabric& fabric, const Circuit& circuit, const Message& message,
                            const RelayHook& hook = {});

TransmitReceipt transmit(Fabric& fabric, const PartyId& transmitter, const PartyId& receiver, const Message& message,
                         std::size_t n);

}  // namespace onionchain::onion
