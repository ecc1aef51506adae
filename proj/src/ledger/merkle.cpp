#include "onionchain/ledger.hpp"

#include "onionchain/error.hpp"

namespace onionchain::ledger {

namespace {

Digest node_hash(const Digest& left, const Digest& right)
{
    Bytes buf;
    buf.reserve(1 + 2 * crypto::kDigestSize);
    buf.push_back(0x01);
    buf.insert(buf.end(), left.hash_bytes.begin(), left.hash_bytes.end());
    buf.insert(buf.end(), right.hash_bytes.begin(), right.hash_bytes.end());
    return crypto::digest(buf);
}

std::vector<Digest> next_level(const std::vector<Digest>& level)
{
    std::vector<Digest> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
        const Digest& right = i + 1 < level.size() ? level[i + 1] : level[i];
        up.push_back(node_hash(level[i], right));
    }
    return up;
}

}  // namespace

Digest merkle_root(std::span<const Digest> leaves)
{
    if (leaves.empty())
        return Digest::zero();
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1)
        level = next_level(level);
    return level.front();
}

MerkleProof merkle_proof(std::span<const Digest> leaves, std::size_t index)
{
    if (index >= leaves.size())
        throw Error(Errc::InvalidArgument, "merkle_proof: index out of range");
    MerkleProof proof;
    std::vector<Digest> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        std::size_t sibling = index ^ 1u;
        if (sibling >= level.size())
            sibling = index;  // duplicated last node
        proof.path.push_back({level[sibling], (index & 1u) != 0});
        level = next_level(level);
        index /= 2;
    }
    return proof;
}

bool verify_merkle_proof(const Digest& leaf, const MerkleProof& proof, const Digest& root)
{
    Digest acc = leaf;
    for (const auto& step : proof.path)
        acc = step.sibling_on_left ? node_hash(step.sibling, acc) : node_hash(acc, step.sibling);
    return acc == root;
}

}  // namespace onionchain::ledger
