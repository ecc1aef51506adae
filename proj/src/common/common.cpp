#include "onionchain/bytes.hpp"
#include "onionchain/error.hpp"

namespace onionchain {

std::string to_hex(ByteView data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0F]);
    }
    return out;
}

namespace {

int nibble(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0)
        throw Error(Errc::MalformedInput, "hex: odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(Errc::MalformedInput, "hex: invalid character");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::AuthenticationFailure: return "AuthenticationFailure";
    case Errc::PeerUnreachable: return "PeerUnreachable";
    case Errc::MalformedInput: return "MalformedInput";
    case Errc::NotRegistered: return "NotRegistered";
    case Errc::DuplicateHandle: return "DuplicateHandle";
    case Errc::NotMiner: return "NotMiner";
    case Errc::EmptyPending: return "EmptyPending";
    case Errc::NotFound: return "NotFound";
    case Errc::NotTheKeyHolder: return "NotTheKeyHolder";
    case Errc::InsufficientNodes: return "InsufficientNodes";
    case Errc::NTooSmall: return "NTooSmall";
    case Errc::BadTransmitterSignature: return "BadTransmitterSignature";
    case Errc::BadPrevSignature: return "BadPrevSignature";
    case Errc::PrevEvidenceNotCommitted: return "PrevEvidenceNotCommitted";
    case Errc::StaleMessage: return "StaleMessage";
    case Errc::EvidenceMismatch: return "EvidenceMismatch";
    case Errc::MessageDropped: return "MessageDropped";
    case Errc::EvidenceNotFound: return "EvidenceNotFound";
    case Errc::KeyDoesNotOpenEvidence: return "KeyDoesNotOpenEvidence";
    case Errc::NotApproved: return "NotApproved";
    case Errc::TraceBroken: return "TraceBroken";
    case Errc::KeysDoNotOpenOnion: return "KeysDoNotOpenOnion";
    case Errc::TooFewMembers: return "TooFewMembers";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

ErrorFamily family_of(Errc code) noexcept
{
    switch (code) {
    case Errc::AuthenticationFailure:
    case Errc::PeerUnreachable:
    case Errc::MalformedInput:
        return ErrorFamily::Crypto;
    case Errc::NotRegistered:
    case Errc::DuplicateHandle:
    case Errc::NotMiner:
    case Errc::EmptyPending:
    case Errc::NotFound:
        return ErrorFamily::Ledger;
    case Errc::NotTheKeyHolder:
        return ErrorFamily::Registry;
    case Errc::InsufficientNodes:
    case Errc::NTooSmall:
    case Errc::BadTransmitterSignature:
    case Errc::BadPrevSignature:
    case Errc::PrevEvidenceNotCommitted:
    case Errc::StaleMessage:
    case Errc::EvidenceMismatch:
    case Errc::MessageDropped:
        return ErrorFamily::Onion;
    case Errc::EvidenceNotFound:
    case Errc::KeyDoesNotOpenEvidence:
    case Errc::NotApproved:
    case Errc::TraceBroken:
    case Errc::KeysDoNotOpenOnion:
        return ErrorFamily::Disclosure;
    case Errc::TooFewMembers:
    case Errc::UnknownTarget:
        return ErrorFamily::Simnet;
    case Errc::InvalidArgument:
        return ErrorFamily::Usage;
    }
    return ErrorFamily::Usage;
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

Error::Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

}  // namespace onionchain
