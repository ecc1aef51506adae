#include "onionchain/simnet.hpp"

#include "onionchain/error.hpp"
#include "onionchain/registry.hpp"

#include <json.hpp>

#include <ostream>

namespace onionchain::simnet {

Node::Node(PartyId id, crypto::KeyPair keys, bool miner) : id_(std::move(id)), keys_(std::move(keys)), miner_(miner) {}

crypto::Signature Node::sign(ByteView message) { return crypto::sign(keys_.secret_key, message); }

void Node::keep_proof_key(const Digest& evidence, const SymmetricKey& key)
{
    std::lock_guard lock(mu_);
    proof_keys_.insert_or_assign(evidence, key);
}

std::optional<SymmetricKey> Node::proof_key(const Digest& evidence) const
{
    std::lock_guard lock(mu_);
    auto it = proof_keys_.find(evidence);
    if (it == proof_keys_.end())
        return std::nullopt;
    return it->second;
}

void Node::keep_hop_key(const std::string& session, const SymmetricKey& key)
{
    std::lock_guard lock(mu_);
    hop_keys_.insert_or_assign(session, key);
}

std::optional<SymmetricKey> Node::hop_key(const std::string& session) const
{
    std::lock_guard lock(mu_);
    auto it = hop_keys_.find(session);
    if (it == hop_keys_.end())
        return std::nullopt;
    return it->second;
}

void Node::keep_circuit(const onion::Circuit& circuit)
{
    std::lock_guard lock(mu_);
    circuits_.push_back(circuit);
}

std::optional<onion::Circuit> Node::circuit(const std::string& session) const
{
    std::lock_guard lock(mu_);
    for (auto it = circuits_.rbegin(); it != circuits_.rend(); ++it)
        if (it->session == session)
            return *it;
    return std::nullopt;
}

void Node::deliver(const onion::Message& message, const Digest& terminal_evidence)
{
    std::lock_guard lock(mu_);
    deliveries_.push_back({message, terminal_evidence});
}

void Node::note(onion::ViewEvent event)
{
    std::lock_guard lock(mu_);
    view_.push_back(std::move(event));
}

std::vector<Node::Delivery> Node::deliveries() const
{
    std::lock_guard lock(mu_);
    return deliveries_;
}

std::vector<onion::ViewEvent> Node::view() const
{
    std::lock_guard lock(mu_);
    return view_;
}

std::vector<onion::Circuit> Node::circuits() const
{
    std::lock_guard lock(mu_);
    return circuits_;
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<std::unique_ptr<Node>> nodes, std::uint64_t seed) : rng_(seed)
{
    std::vector<ledger::Miner> miners;
    for (auto& n : nodes) {
        if (n->miner()) {
            miners.push_back({n->id(), n->keys()});
            sequencers_.push_back(n->id());
        }
        PartyId id = n->id();
        if (!nodes_.emplace(id, std::move(n)).second)
            throw Error(Errc::InvalidArgument, "duplicate node id " + id.str());
    }
    ledger_ = std::make_unique<ledger::Ledger>(std::move(miners), [this] { return clock_ms_; });
}

Node& Network::participant(const PartyId& id)
{
    auto it = nodes_.find(id);
    if (it == nodes_.end())
        throw Error(Errc::UnknownTarget, id.str());
    return *it->second;
}

std::vector<PartyId> Network::members() const
{
    std::vector<PartyId> out;
    for (const auto& rec : ledger_->members())
        out.push_back(rec.party);
    return out;
}

std::vector<PartyId> Network::node_ids() const
{
    std::vector<PartyId> out;
    for (const auto& [id, _] : nodes_)
        out.push_back(id);
    return out;
}

Node& Network::add_node(std::unique_ptr<Node> node)
{
    PartyId id = node->id();
    auto [it, fresh] = nodes_.emplace(id, std::move(node));
    if (!fresh)
        throw Error(Errc::InvalidArgument, "duplicate node id " + id.str());
    return *it->second;
}

bool Network::reachable(const PartyId& party) const { return nodes_.contains(party) && !offline_.contains(party); }

std::array<std::uint8_t, 32> Network::ephemeral_entropy(const PartyId&)
{
    std::array<std::uint8_t, 32> out{};
    for (std::size_t i = 0; i < out.size(); i += 8) {
        std::uint64_t r = rng_();
        for (std::size_t j = 0; j < 8; ++j)
            out[i + j] = static_cast<std::uint8_t>(r >> (8 * j));
    }
    return out;
}

crypto::NegotiatedKey Network::negotiate_key(const PartyId& initiator, const PartyId& responder,
                                             crypto::KeyPurpose purpose, std::pair<PartyId, PartyId> naming)
{
    participant(initiator);
    participant(responder);
    for (const auto* p : {&initiator, &responder}) {
        if (!reachable(*p)) {
            record("fault", {*p}, 0, "offline during key agreement");
            throw Error(Errc::PeerUnreachable, p->str());
        }
    }
    record("negotiate", {initiator, responder}, 0, std::string(crypto::to_string(purpose)));
    return crypto::negotiate_key(*this, initiator, responder, purpose, std::move(naming));
}

void Network::send(const PartyId& from, const PartyId& to, std::string_view what, std::uint32_t hop)
{
    participant(from);
    participant(to);
    for (const auto* p : {&from, &to}) {
        if (offline_.contains(*p)) {
            record("fault", {from, to}, hop, p->str() + " offline");
            throw Error(Errc::PeerUnreachable, p->str());
        }
    }
    if (auto it = drops_.find(from); it != drops_.end() && it->second > 0) {
        --it->second;
        record("fault", {from, to}, hop, "dropped " + std::string(what));
        throw Error(Errc::MessageDropped, from.str() + " -> " + to.str());
    }
    if (auto it = delays_.find(from); it != delays_.end())
        clock_ms_ += it->second;
    bool relay_hop = what == "packet" || what == "message";
    record(relay_hop ? "forward" : "send", {from, to}, hop, std::string(what));
}

Digest Network::submit(ledger::Transaction tx)
{
    const PartyId submitter = tx.submitter;
    if (offline_.contains(submitter)) {
        record("fault", {submitter}, 0, "offline submitter");
        throw Error(Errc::PeerUnreachable, submitter.str());
    }
    if (auto it = drops_.find(submitter); it != drops_.end() && it->second > 0) {
        --it->second;
        record("fault", {submitter}, 0, "dropped " + std::string(ledger::to_string(tx.kind)));
        throw Error(Errc::MessageDropped, submitter.str());
    }
    std::string kind(ledger::to_string(tx.kind));
    Digest h = ledger_->submit_transaction(std::move(tx));
    record("submit", {submitter}, 0, kind + " " + h.hex());
    return h;
}

std::optional<ledger::Block> Network::commit_round()
{
    if (ledger_->pending().empty())
        return std::nullopt;
    const PartyId& seq = sequencers_[next_sequencer_++ % sequencers_.size()];
    try {
        ledger::Block b = ledger_->commit_pending(seq);
        std::string handles;
        for (const auto& h : b.handles()) {
            if (!handles.empty())
                handles += ',';
            handles += h.hex();
        }
        record("commit", {seq}, static_cast<std::uint32_t>(b.header.height), handles);
        return b;
    } catch (const Error& e) {
        if (e.code() != Errc::EmptyPending)
            throw;
        return std::nullopt;
    }
}

void Network::await_commit(const Digest& handle)
{
    if (ledger_->is_committed(handle))
        return;
    if (!ledger_->is_pending(handle))
        throw Error(Errc::NotFound, "not pending: " + handle.hex());
    commit_round();
    if (!ledger_->is_committed(handle))
        throw Error(Errc::NotFound, "rejected at commit: " + handle.hex());
}

std::optional<SymmetricKey> Network::release_proof_key(const PartyId& pleader, const Digest& evidence)
{
    if (refusing_.contains(pleader) || offline_.contains(pleader)) {
        record("plea", {pleader}, 0, "refused " + evidence.hex());
        return std::nullopt;
    }
    auto key = participant(pleader).proof_key(evidence);
    record("plea", {pleader}, 0, (key ? "released " : "no key for ") + evidence.hex());
    return key;
}

void Network::inject_fault(FaultKind kind, const PartyId& target, std::int64_t amount)
{
    if (!has_node(target))
        throw Error(Errc::UnknownTarget, target.str());
    switch (kind) {
    case FaultKind::NodeOffline: offline_.insert(target); break;
    case FaultKind::DropMessage: drops_[target] += amount; break;
    case FaultKind::Delay: delays_[target] = amount; break;
    }
}

void Network::clear_faults()
{
    offline_.clear();
    drops_.clear();
    delays_.clear();
}

void Network::refuse_pleas(const PartyId& party, bool refuse)
{
    if (!has_node(party))
        throw Error(Errc::UnknownTarget, party.str());
    if (refuse)
        refusing_.insert(party);
    else
        refusing_.erase(party);
}

void Network::record(std::string kind, std::vector<PartyId> parties, std::uint32_t hop, std::string detail)
{
    TraceEvent ev{trace_.size(), clock_ms_, std::move(kind), std::move(parties), hop, std::move(detail)};
    trace_.push_back(std::move(ev));
    if (sink_)
        sink_(trace_.back());
}

void Network::export_trace(std::ostream& out) const
{
    for (const auto& ev : trace_) {
        nlohmann::json j;
        j["seq"] = ev.seq;
        j["time_ms"] = ev.time_ms;
        j["kind"] = ev.kind;
        auto& parties = j["parties"] = nlohmann::json::array();
        for (const auto& p : ev.parties)
            parties.push_back(p.str());
        j["hop"] = ev.hop;
        j["detail"] = ev.detail;
        out << j.dump() << '\n';
    }
}

std::unique_ptr<Network> spawn_network(std::size_t members, std::size_t miners, std::uint64_t seed)
{
    if (members < kMinMembers)
        throw Error(Errc::TooFewMembers, std::to_string(members) + " < " + std::to_string(kMinMembers));
    if (miners == 0 || miners > members)
        throw Error(Errc::InvalidArgument, "miner count must be in 1..members");

    std::mt19937_64 key_rng(seed ^ 0x6f6e696f6e6b6579ULL);
    std::vector<std::unique_ptr<Node>> nodes;
    for (std::size_t i = 0; i < members; ++i)
        nodes.push_back(std::make_unique<Node>(PartyId("node-" + std::to_string(i)),
                                               crypto::generate_keypair(key_rng()), i < miners));

    std::vector<std::pair<PartyId, crypto::KeyPair>> joiners;
    for (const auto& n : nodes)
        if (!n->miner())
            joiners.emplace_back(n->id(), n->keys());

    auto net = std::make_unique<Network>(std::move(nodes), seed);
    for (const auto& [id, keys] : joiners) {
        auto req = registry::build_registration_request(id.str(), keys);
        auto verdict = registry::validate_registration(req, net->ledger());
        if (auto* ok = std::get_if<registry::Accepted>(&verdict))
            net->record("submit", {id}, 0, "Registration " + ok->handle.hex());
    }
    net->commit_round();
    return net;
}

}  // namespace onionchain::simnet
