#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onionchain {

enum class Errc {
    // crypto
    AuthenticationFailure,
    PeerUnreachable,
    MalformedInput,
    // ledger
    NotRegistered,
    DuplicateHandle,
    NotMiner,
    EmptyPending,
    NotFound,
    // registry
    NotTheKeyHolder,
    // onion
    InsufficientNodes,
    NTooSmall,
    BadTransmitterSignature,
    BadPrevSignature,
    PrevEvidenceNotCommitted,
    StaleMessage,
    EvidenceMismatch,
    MessageDropped,
    // disclosure
    EvidenceNotFound,
    KeyDoesNotOpenEvidence,
    NotApproved,
    TraceBroken,
    KeysDoNotOpenOnion,
    // simnet
    TooFewMembers,
    UnknownTarget,
    // generic
    InvalidArgument,
};

/// Coarse grouping used for process exit codes.
enum class ErrorFamily { Crypto, Ledger, Registry, Onion, Disclosure, Simnet, Usage };

std::string_view to_string(Errc code) noexcept;
ErrorFamily family_of(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    explicit Error(Errc code);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace onionchain
