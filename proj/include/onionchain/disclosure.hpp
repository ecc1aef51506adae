#pragma once

// Identity disclosure: a majority-approved request, the backward walk of
// pleas of innocence over the evidence chain, and the transmitter's
// confession that lets everyone re-peel the original onion.

#include "onionchain/onion.hpp"

#include <optional>
#include <string>
#include <vector>

namespace onionchain::disclosure {

using crypto::Digest;
using crypto::SymmetricKey;

inline constexpr std::uint64_t kVotingHorizonBlocks = 3;

struct DisclosureRequest {
    PartyId requester;  // the transaction submitter; not part of the payload
    Digest accused_message_digest;
    Digest terminal_evidence;
    SymmetricKey released_proof_key;

    Bytes canonical() const;
    static DisclosureRequest decode(ByteView bytes, PartyId requester);
};

struct Vote {
    PartyId voter;  // the transaction submitter
    Digest request;
    bool approve = false;
    crypto::Signature signature;

    /// The bytes the voter signs.
    static Bytes statement(const Digest& request, bool approve);
    Bytes canonical() const;
    static Vote decode(ByteView bytes, PartyId voter);
};

enum class PleaVerdict : std::uint8_t { Innocent = 1, CulpritNoKey = 2, CulpritBadSignature = 3 };
enum class CulpritReason : std::uint8_t {
    TransmitterOrigin = 1,
    RefusedPlea = 2,
    ForgedEvidence = 3,
    CalumniatingReceiver = 4,
};

std::string_view to_string(PleaVerdict v) noexcept;
std::string_view to_string(CulpritReason r) noexcept;

struct PleaResult {
    PartyId pleader;
    Digest evidence;
    std::optional<SymmetricKey> released_key;
    std::optional<onion::OpenedEvidence> opened;
    std::uint32_t index = 0;
    PleaVerdict verdict = PleaVerdict::CulpritNoKey;
    PartyId blamed;  // set for culprit verdicts
    std::optional<PartyId> previous_hop;  // inner signer, set when Innocent
    std::optional<Digest> prev_evidence;  // EV_{i-1}, absent at EV_1
    std::string detail;
};

struct Culprit {
    PartyId party;
    CulpritReason reason = CulpritReason::TransmitterOrigin;

    friend bool operator==(const Culprit&, const Culprit&) = default;
};

struct DisclosureOutcome {
    Digest request;
    Culprit culprit;
    std::vector<PleaResult> transcript;  // terminal evidence first
    std::vector<Digest> plea_transactions;
};

/// Plea transaction payload.
struct PleaRecord {
    Digest request;
    Digest evidence;
    PartyId pleader;
    std::optional<SymmetricKey> key;
    PleaVerdict verdict = PleaVerdict::CulpritNoKey;

    Bytes canonical() const;
    static PleaRecord decode(ByteView bytes);
};

/// Who answers when the walk names a node. nullopt models refusal (no plea
/// within the allowed time).
class PleaResponder {
public:
    virtual ~PleaResponder() = default;
    virtual std::optional<SymmetricKey> release_proof_key(const PartyId& pleader, const Digest& evidence) = 0;
};

/// Errors: EvidenceNotFound, KeyDoesNotOpenEvidence.
Digest request_disclosure(onion::Fabric& fabric, const PartyId& requester, const Digest& accused_message_digest,
                          const Digest& terminal_evidence, const SymmetricKey& proof_key);
Digest request_disclosure(onion::Fabric& fabric, const PartyId& requester, const onion::Message& accused,
                          const Digest& terminal_evidence, const SymmetricKey& proof_key);

/// Signs and submits a vote; the caller decides when to commit.
Digest cast_vote(onion::Fabric& fabric, const PartyId& voter, const Digest& request, bool approve);

struct TallyResult {
    std::size_t approvals = 0;
    std::size_t rejections = 0;
    std::size_t electorate = 0;  // members at request height
    bool approved = false;
    bool closed = false;  // horizon has elapsed
};

/// Counts one valid committed vote per member inside the voting horizon.
/// Approval can be reported before the horizon closes since later votes cannot revoke it.
TallyResult tally(const ledger::Ledger& ledger, const Digest& request);

/// Pure: a function of committed data and the released key only.
/// `terminal` marks EV_{n+1}, whose content is the delivered message.
/// Errors: TraceBroken if the evidence or its back-pointer is missing.
PleaResult plea(const ledger::Ledger& ledger, const PartyId& pleader, const Digest& evidence,
                const std::optional<SymmetricKey>& key, bool terminal);

/// Errors: NotApproved, TraceBroken.
DisclosureOutcome run_disclosure(onion::Fabric& fabric, const Digest& request, PleaResponder& responder);

struct ConfessionResult {
    onion::Message recovered;
    Culprit culprit;
};

/// Re-peels every hop with the transmitter's hop keys and compares each
/// relay's attested input with its attested output, then the recovered
/// message with the accused one.
/// Errors: KeysDoNotOpenOnion (the culprit stays the transmitter).
ConfessionResult confession(const ledger::Ledger& ledger, const DisclosureOutcome& outcome,
                            const std::vector<SymmetricKey>& hop_keys);

/// Recomputes every committed plea for `request`; true iff all verdicts match.
bool audit(const ledger::Ledger& ledger, const Digest& request);

}  // namespace onionchain::disclosure
