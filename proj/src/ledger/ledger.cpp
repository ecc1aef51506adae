#include "onionchain/ledger.hpp"

#include "onionchain/error.hpp"
#include "onionchain/registry/request.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>

namespace onionchain::ledger {

namespace {

Transaction miner_registration(const Miner& m)
{
    registry::RegistrationRequest req;
    req.public_key = m.keys.public_key;
    req.identity = m.id.str();
    req.signature = crypto::sign(m.keys.secret_key, registry::identity_statement(req.identity));
    return {TxKind::Registration, req.canonical(), m.id};
}

}  // namespace

Ledger::Ledger(std::vector<Miner> miners, Clock clock) : clock_(std::move(clock))
{
    if (miners.empty())
        throw Error(Errc::InvalidArgument, "ledger needs at least one miner");

    Block genesis;
    for (auto& m : miners) {
        if (m.id.empty() || miners_.contains(m.id))
            throw Error(Errc::InvalidArgument, "miner ids must be unique and non-empty");
        genesis.body.push_back(miner_registration(m));
        miners_.emplace(m.id, m.keys);
    }
    auto handles = genesis.handles();
    genesis.header.merkle_root = merkle_root(handles);
    genesis.header.timestamp_ms = now();
    chain_.push_back(genesis);
    index_block(chain_.back());
}

std::int64_t Ledger::now() const
{
    if (clock_)
        return clock_();
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Digest Ledger::submit_transaction(Transaction tx)
{
    std::unique_lock lock(mu_);
    if (tx.kind != TxKind::Registration && !members_.contains(tx.submitter))
        throw Error(Errc::NotRegistered, tx.submitter.str());
    Digest handle = tx.handle();
    if (pending_handles_.contains(handle) || index_.contains(handle))
        throw Error(Errc::DuplicateHandle, handle.hex());
    pending_handles_.insert(handle);
    pending_.push_back({handle, std::move(tx)});
    return handle;
}

std::optional<RejectReason> Ledger::admit(const Transaction& tx, std::map<PublicKey, PartyId>& block_keys,
                                          std::map<PublicKey, PartyId>& block_contests) const
{
    switch (tx.kind) {
    case TxKind::Registration: {
        registry::RegistrationRequest req;
        try {
            req = registry::RegistrationRequest::decode(tx.payload);
        } catch (const Error&) {
            return RejectReason::Malformed;
        }
        if (!registry::signature_valid(req))
            return RejectReason::BadSignature;
        if (req.identity != tx.submitter.str())
            return RejectReason::IdentityMismatch;
        if (members_by_key_.contains(req.public_key) || block_keys.contains(req.public_key))
            return RejectReason::DuplicateKey;
        if (contested_.contains(req.public_key) || block_contests.contains(req.public_key))
            return RejectReason::ContestedKey;
        block_keys.emplace(req.public_key, tx.submitter);
        return std::nullopt;
    }
    case TxKind::Confliction: {
        Confliction c;
        try {
            c = Confliction::decode(tx.payload);
        } catch (const Error&) {
            return RejectReason::Malformed;
        }
        auto holder = members_.find(tx.submitter);
        if (holder == members_.end() || holder->second.public_key != c.disputed_key)
            return RejectReason::NotTheKeyHolder;
        block_contests.emplace(c.disputed_key, tx.submitter);
        return std::nullopt;
    }
    default:
        return std::nullopt;
    }
}

Block Ledger::commit_pending(const PartyId& sequencer)
{
    Block block;
    std::vector<std::function<void(const Block&)>> observers;
    {
        std::unique_lock lock(mu_);
        auto miner = miners_.find(sequencer);
        if (miner == miners_.end())
            throw Error(Errc::NotMiner, sequencer.str());
        if (pending_.empty())
            throw Error(Errc::EmptyPending);

        std::stable_partition(pending_.begin(), pending_.end(),
                              [](const PendingEntry& e) { return e.tx.kind == TxKind::Confliction; });

        std::map<PublicKey, PartyId> block_keys;
        std::map<PublicKey, PartyId> block_contests;
        for (auto& entry : pending_) {
            if (auto reason = admit(entry.tx, block_keys, block_contests))
                rejected_.push_back({entry.handle, std::move(entry.tx), *reason});
            else
                block.body.push_back(std::move(entry.tx));
        }
        pending_.clear();
        pending_handles_.clear();
        if (block.body.empty())
            throw Error(Errc::EmptyPending, "every pending transaction was rejected");

        const BlockHeader& prev = chain_.back().header;
        auto handles = block.handles();
        block.header.prev_hash = prev.digest();
        block.header.merkle_root = merkle_root(handles);
        block.header.height = prev.height + 1;
        block.header.timestamp_ms = std::max(now(), prev.timestamp_ms);
        block.header.sequencer = sequencer;
        block.header.seal = crypto::sign(miner->second.secret_key, block.header.signing_bytes());

        chain_.push_back(block);
        index_block(chain_.back());
        observers = observers_;
    }
    for (auto& fn : observers)
        fn(block);
    return block;
}

void Ledger::index_block(const Block& block)
{
    for (std::size_t i = 0; i < block.body.size(); ++i) {
        const Transaction& tx = block.body[i];
        Digest handle = tx.handle();
        index_.emplace(handle, TxLocation{block.header.height, i});
        if (tx.kind == TxKind::Registration) {
            auto req = registry::RegistrationRequest::decode(tx.payload);
            MemberRecord rec{tx.submitter, req.public_key, handle, block.header.height};
            members_.try_emplace(tx.submitter, rec);
            members_by_key_.try_emplace(req.public_key, rec);
        } else if (tx.kind == TxKind::Confliction) {
            auto c = Confliction::decode(tx.payload);
            contested_.try_emplace(c.disputed_key, tx.submitter);
        }
    }
}

Transaction Ledger::get_transaction(const Digest& handle) const
{
    if (auto tx = find_transaction(handle))
        return *std::move(tx);
    throw Error(Errc::NotFound, handle.hex());
}

std::optional<Transaction> Ledger::find_transaction(const Digest& handle) const
{
    std::shared_lock lock(mu_);
    auto it = index_.find(handle);
    if (it == index_.end())
        return std::nullopt;
    return chain_[it->second.height].body[it->second.index];
}

std::optional<TxLocation> Ledger::locate(const Digest& handle) const
{
    std::shared_lock lock(mu_);
    auto it = index_.find(handle);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

bool Ledger::is_committed(const Digest& handle) const
{
    std::shared_lock lock(mu_);
    return index_.contains(handle);
}

bool Ledger::is_pending(const Digest& handle) const
{
    std::shared_lock lock(mu_);
    return pending_handles_.contains(handle);
}

std::optional<MemberRecord> Ledger::member(const PartyId& party) const
{
    std::shared_lock lock(mu_);
    auto it = members_.find(party);
    if (it == members_.end())
        return std::nullopt;
    return it->second;
}

std::optional<MemberRecord> Ledger::member_by_key(const PublicKey& key) const
{
    std::shared_lock lock(mu_);
    auto it = members_by_key_.find(key);
    if (it == members_by_key_.end())
        return std::nullopt;
    return it->second;
}

std::vector<MemberRecord> Ledger::members() const
{
    std::shared_lock lock(mu_);
    std::vector<MemberRecord> out;
    out.reserve(members_.size());
    for (const auto& [_, rec] : members_)
        out.push_back(rec);
    return out;
}

std::size_t Ledger::member_count() const
{
    std::shared_lock lock(mu_);
    return members_.size();
}

std::size_t Ledger::member_count_at(std::uint64_t height) const
{
    std::shared_lock lock(mu_);
    return static_cast<std::size_t>(std::count_if(members_.begin(), members_.end(),
                                                  [&](const auto& kv) { return kv.second.height <= height; }));
}

bool Ledger::is_contested(const PublicKey& key) const
{
    std::shared_lock lock(mu_);
    return contested_.contains(key);
}

bool Ledger::is_miner(const PartyId& party) const
{
    std::shared_lock lock(mu_);
    return miners_.contains(party);
}

std::vector<PartyId> Ledger::miners() const
{
    std::shared_lock lock(mu_);
    std::vector<PartyId> out;
    for (const auto& [id, _] : miners_)
        out.push_back(id);
    return out;
}

std::uint64_t Ledger::height() const
{
    std::shared_lock lock(mu_);
    return chain_.back().header.height;
}

Block Ledger::block(std::uint64_t height) const
{
    std::shared_lock lock(mu_);
    if (height >= chain_.size())
        throw Error(Errc::NotFound, "block height " + std::to_string(height));
    return chain_[height];
}

std::vector<Block> Ledger::chain() const
{
    std::shared_lock lock(mu_);
    return chain_;
}

std::vector<Transaction> Ledger::pending() const
{
    std::shared_lock lock(mu_);
    std::vector<Transaction> out;
    for (const auto& e : pending_)
        out.push_back(e.tx);
    return out;
}

std::vector<Rejection> Ledger::rejected() const
{
    std::shared_lock lock(mu_);
    return rejected_;
}

void Ledger::on_commit(std::function<void(const Block&)> observer)
{
    std::unique_lock lock(mu_);
    observers_.push_back(std::move(observer));
}

}  // namespace onionchain::ledger
