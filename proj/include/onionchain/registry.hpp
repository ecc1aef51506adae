#pragma once

// Registration protocol: request construction, network-side validation,
// confliction by the legitimate key holder, and membership lookup.

#include "onionchain/ledger.hpp"
#include "onionchain/registry/request.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace onionchain::registry {

RegistrationRequest build_registration_request(std::string_view identity, const crypto::KeyPair& keypair);

/// Identity validity check. An empty allowlist admits everyone.
class Allowlist {
public:
    Allowlist() = default;
    explicit Allowlist(const std::set<std::string>& ids) : ids_(ids.begin(), ids.end()) {}

    bool allows(std::string_view identity) const;

private:
    std::set<std::string, std::less<>> ids_;
};

enum class RejectReason { BadSignature, DuplicateKey, IdentityNotAllowed };

std::string_view to_string(RejectReason reason) noexcept;

struct Accepted {
    crypto::Digest handle;  // pending registration transaction
    /// Set when the identity already holds a committed registration under another key.
    bool duplicate_identity = false;
};

struct Rejected {
    RejectReason reason;
};

using Validation = std::variant<Accepted, Rejected>;

/// Checks the request against committed ledger state and, on accept, submits
/// it as a Registration transaction. Empty identities are never allowed.
Validation validate_registration(const RegistrationRequest& req, ledger::Ledger& ledger,
                                 const Allowlist& allowlist = {});

/// Submits a Confliction contesting `disputed_key`.
/// Errors: NotTheKeyHolder unless the claimant's committed key is `disputed_key`.
crypto::Digest raise_confliction(const PartyId& claimant, const crypto::PublicKey& disputed_key,
                                 ledger::Ledger& ledger, std::optional<crypto::Digest> contested = std::nullopt);

std::optional<ledger::MemberRecord> lookup_public_key(const PartyId& party, const ledger::Ledger& ledger);
std::optional<ledger::MemberRecord> lookup_public_key(const crypto::PublicKey& key, const ledger::Ledger& ledger);

}  // namespace onionchain::registry
