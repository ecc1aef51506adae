#include "onionchain/registry.hpp"

#include "onionchain/error.hpp"

namespace onionchain::registry {

RegistrationRequest build_registration_request(std::string_view identity, const crypto::KeyPair& keypair)
{
    RegistrationRequest req;
    req.public_key = keypair.public_key;
    req.identity = std::string(identity);
    req.signature = crypto::sign(keypair.secret_key, identity_statement(identity));
    return req;
}

bool Allowlist::allows(std::string_view identity) const
{
    if (identity.empty())
        return false;
    return ids_.empty() || ids_.contains(identity);
}

std::string_view to_string(RejectReason reason) noexcept
{
    switch (reason) {
    case RejectReason::BadSignature: return "BadSignature";
    case RejectReason::DuplicateKey: return "DuplicateKey";
    case RejectReason::IdentityNotAllowed: return "IdentityNotAllowed";
    }
    return "Unknown";
}

Validation validate_registration(const RegistrationRequest& req, ledger::Ledger& ledger, const Allowlist& allowlist)
{
    if (!allowlist.allows(req.identity))
        return Rejected{RejectReason::IdentityNotAllowed};
    if (!signature_valid(req))
        return Rejected{RejectReason::BadSignature};
    if (ledger.member_by_key(req.public_key) || ledger.is_contested(req.public_key))
        return Rejected{RejectReason::DuplicateKey};

    Accepted ok;
    ok.duplicate_identity = ledger.member(PartyId(req.identity)).has_value();
    ok.handle = ledger.submit_transaction({ledger::TxKind::Registration, req.canonical(), PartyId(req.identity)});
    return ok;
}

crypto::Digest raise_confliction(const PartyId& claimant, const crypto::PublicKey& disputed_key,
                                 ledger::Ledger& ledger, std::optional<crypto::Digest> contested)
{
    auto rec = ledger.member(claimant);
    if (!rec || rec->public_key != disputed_key)
        throw Error(Errc::NotTheKeyHolder, claimant.str());
    ledger::Confliction c{disputed_key, contested};
    return ledger.submit_transaction({ledger::TxKind::Confliction, c.canonical(), claimant});
}

std::optional<ledger::MemberRecord> lookup_public_key(const PartyId& party, const ledger::Ledger& ledger)
{
    return ledger.member(party);
}

std::optional<ledger::MemberRecord> lookup_public_key(const crypto::PublicKey& key, const ledger::Ledger& ledger)
{
    return ledger.member_by_key(key);
}

}  // namespace onionchain::registry
