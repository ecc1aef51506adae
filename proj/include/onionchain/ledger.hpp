#pragma once

// Permissioned append-only ledger. A single logical state machine: blocks
// are produced by a configured miner set (round-robin in practice), finality
// is immediate, and every block header is sealed by its sequencer.

#include "onionchain/crypto.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace onionchain::ledger {

using crypto::Digest;
using crypto::PublicKey;

enum class TxKind : std::uint8_t {
    Registration = 1,
    Confliction = 2,
    Evidence = 3,
    DisclosureRequest = 4,
    DisclosureVote = 5,
    Plea = 6,
};

std::string_view to_string(TxKind kind) noexcept;

struct Transaction {
    TxKind kind = TxKind::Registration;
    Bytes payload;
    PartyId submitter;

    Bytes canonical() const;
    /// digest(canonical()): the transaction's handle.
    Digest handle() const;
    static Transaction decode(ByteView bytes);

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct BlockHeader {
    Digest prev_hash;
    Digest merkle_root;
    std::uint64_t height = 0;
    std::int64_t timestamp_ms = 0;
    PartyId sequencer;  // empty for genesis
    crypto::Signature seal;  // sequencer's signature over signing_bytes()

    Bytes signing_bytes() const;
    Bytes canonical() const;
    Digest digest() const;
    static BlockHeader decode(ByteView bytes);

    friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

struct Block {
    BlockHeader header;
    std::vector<Transaction> body;

    std::vector<Digest> handles() const;

    friend bool operator==(const Block&, const Block&) = default;
};

/// A node allowed to record blocks. Its registration lives in genesis.
struct Miner {
    PartyId id;
    crypto::KeyPair keys;
};

struct MemberRecord {
    PartyId party;
    PublicKey public_key;
    Digest handle;
    std::uint64_t height = 0;
};

struct TxLocation {
    std::uint64_t height = 0;
    std::size_t index = 0;
};

enum class RejectReason : std::uint8_t {
    Malformed,
    BadSignature,
    DuplicateKey,
    ContestedKey,
    IdentityMismatch,
    NotTheKeyHolder,
};

std::string_view to_string(RejectReason reason) noexcept;

/// A pending transaction dropped at commit time.
struct Rejection {
    Digest handle;
    Transaction tx;
    RejectReason reason;
};

// ---------------------------------------------------------------------------
// Merkle tree over transaction handles; odd levels duplicate their last node.

struct MerkleProof {
    struct Step {
        Digest sibling;
        bool sibling_on_left = false;
    };
    std::vector<Step> path;
};

Digest merkle_root(std::span<const Digest> leaves);
MerkleProof merkle_proof(std::span<const Digest> leaves, std::size_t index);
bool verify_merkle_proof(const Digest& leaf, const MerkleProof& proof, const Digest& root);

// ---------------------------------------------------------------------------

/// Payload of a Confliction transaction: the holder contests a key.
struct Confliction {
    PublicKey disputed_key;
    std::optional<Digest> contested;  // the offending request, when known

    Bytes canonical() const;
    static Confliction decode(ByteView bytes);
};

class Ledger {
public:
    using Clock = std::function<std::int64_t()>;

    /// Builds the genesis block, which registers every miner. An empty clock
    /// means wall-clock milliseconds.
    explicit Ledger(std::vector<Miner> miners, Clock clock = {});

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    /// Errors: NotRegistered (non-member, non-registration), DuplicateHandle.
    Digest submit_transaction(Transaction tx);

    /// Errors: NotMiner, EmptyPending (nothing pending or everything rejected).
    Block commit_pending(const PartyId& sequencer);

    /// Errors: NotFound for unknown or still-pending handles.
    Transaction get_transaction(const Digest& handle) const;
    std::optional<Transaction> find_transaction(const Digest& handle) const;
    std::optional<TxLocation> locate(const Digest& handle) const;
    bool is_committed(const Digest& handle) const;
    bool is_pending(const Digest& handle) const;

    std::optional<MemberRecord> member(const PartyId& party) const;
    std::optional<MemberRecord> member_by_key(const PublicKey& key) const;
    std::vector<MemberRecord> members() const;
    std::size_t member_count() const;
    /// Distinct parties whose registration committed at or below `height`.
    std::size_t member_count_at(std::uint64_t height) const;
    bool is_contested(const PublicKey& key) const;

    bool is_miner(const PartyId& party) const;
    std::vector<PartyId> miners() const;

    std::uint64_t height() const;
    Block block(std::uint64_t height) const;
    std::vector<Block> chain() const;
    std::vector<Transaction> pending() const;
    std::vector<Rejection> rejected() const;

    /// Invoked after each committed block, outside the ledger lock.
    void on_commit(std::function<void(const Block&)> observer);

    /// Read-only access to the chain under the shared lock.
    template <typename Fn>
    decltype(auto) with_chain(Fn&& fn) const
    {
        std::shared_lock lock(mu_);
        return fn(std::span<const Block>(chain_));
    }

private:
    struct PendingEntry {
        Digest handle;
        Transaction tx;
    };

    void index_block(const Block& block);
    std::optional<RejectReason> admit(const Transaction& tx, std::map<PublicKey, PartyId>& block_keys,
                                      std::map<PublicKey, PartyId>& block_contests) const;
    std::int64_t now() const;

    mutable std::shared_mutex mu_;
    Clock clock_;
    std::map<PartyId, crypto::KeyPair> miners_;
    std::vector<Block> chain_;
    std::vector<PendingEntry> pending_;
    std::set<Digest> pending_handles_;
    std::map<Digest, TxLocation> index_;
    std::map<PartyId, MemberRecord> members_;
    std::map<PublicKey, MemberRecord> members_by_key_;
    std::map<PublicKey, PartyId> contested_;
    std::vector<Rejection> rejected_;
    std::vector<std::function<void(const Block&)>> observers_;
};

/// True iff heights, back-references, Merkle roots, and sequencer seals all
/// check out. Seal keys come from the genesis miner registrations.
bool verify_chain(std::span<const Block> chain);
bool verify_chain(const Ledger& ledger);

// Line-delimited chain file: `H <hex header>` followed by that block's
// `T <hex tx>` lines, genesis first.
void write_chain(std::ostream& out, std::span<const Block> chain);
/// Errors: MalformedInput on unparseable lines.
std::vector<Block> read_chain(std::istream& in);

}  // namespace onionchain::ledger
