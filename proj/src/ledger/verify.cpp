#include "onionchain/error.hpp"
#include "onionchain/ledger.hpp"
#include "onionchain/registry/request.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace onionchain::ledger {

namespace {

// Miner keys as registered in genesis; nullopt if genesis is malformed.
std::optional<std::map<PartyId, PublicKey>> genesis_roster(const Block& genesis)
{
    std::map<PartyId, PublicKey> roster;
    for (const auto& tx : genesis.body) {
        if (tx.kind != TxKind::Registration)
            return std::nullopt;
        registry::RegistrationRequest req;
        try {
            req = registry::RegistrationRequest::decode(tx.payload);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (req.identity != tx.submitter.str() || !registry::signature_valid(req))
            return std::nullopt;
        if (!roster.emplace(tx.submitter, req.public_key).second)
            return std::nullopt;
    }
    return roster;
}

}  // namespace

bool verify_chain(std::span<const Block> chain)
{
    if (chain.empty())
        return false;

    // Structural pass first: it is cheap and catches most tampering.
    std::set<Digest> seen;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Block& b = chain[i];
        const BlockHeader& h = b.header;
        if (h.height != i || b.body.empty())
            return false;
        auto handles = b.handles();
        if (merkle_root(handles) != h.merkle_root)
            return false;
        for (const auto& hd : handles)
            if (!seen.insert(hd).second)
                return false;
        if (i == 0) {
            if (!h.prev_hash.is_zero() || !h.sequencer.empty() || !h.seal.sig_bytes.empty())
                return false;
        } else {
            const BlockHeader& prev = chain[i - 1].header;
            if (h.prev_hash != prev.digest() || h.timestamp_ms < prev.timestamp_ms)
                return false;
        }
    }

    auto roster = genesis_roster(chain.front());
    if (!roster || roster->empty())
        return false;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const BlockHeader& h = chain[i].header;
        auto key = roster->find(h.sequencer);
        if (key == roster->end() || !crypto::verify(key->second, h.seal, h.signing_bytes()))
            return false;
    }
    return true;
}

bool verify_chain(const Ledger& ledger)
{
    return ledger.with_chain([](std::span<const Block> chain) { return verify_chain(chain); });
}

void write_chain(std::ostream& out, std::span<const Block> chain)
{
    for (const auto& b : chain) {
        out << "H " << to_hex(b.header.canonical()) << '\n';
        for (const auto& tx : b.body)
            out << "T " << to_hex(tx.canonical()) << '\n';
    }
}

std::vector<Block> read_chain(std::istream& in)
{
    std::vector<Block> chain;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fail = [&](const std::string& why) {
            return Error(Errc::MalformedInput, "chain file line " + std::to_string(lineno) + ": " + why);
        };
        if (line.size() < 2 || line[1] != ' ')
            throw fail("expected `H <hex>` or `T <hex>`");
        char kind = line[0];
        if (kind != 'H' && kind != 'T')
            throw fail("unknown record type");
        if (kind == 'T' && chain.empty())
            throw fail("transaction before first header");
        try {
            auto raw = from_hex(std::string_view(line).substr(2));
            if (kind == 'H')
                chain.push_back({BlockHeader::decode(raw), {}});
            else
                chain.back().body.push_back(Transaction::decode(raw));
        } catch (const Error& e) {
            throw fail(e.what());
        }
    }
    return chain;
}

}  // namespace onionchain::ledger
