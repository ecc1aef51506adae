#pragma once

#include "onionchain/crypto.hpp"

#include <string>

namespace onionchain::registry {

/// regReq = (PubK || S), plus the identity S was computed over.
struct RegistrationRequest {
    crypto::PublicKey public_key;
    std::string identity;
    crypto::Signature signature;

    Bytes canonical() const;
    static RegistrationRequest decode(ByteView bytes);

    friend bool operator==(const RegistrationRequest&, const RegistrationRequest&) = default;
};

/// The exact bytes the identity signature covers.
Bytes identity_statement(std::string_view identity);

/// True iff the signature verifies against the attached key over the attached identity.
bool signature_valid(const RegistrationRequest& req) noexcept;

}  // namespace onionchain::registry
