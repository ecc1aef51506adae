#pragma once

// Cryptographic contracts used by every protocol module: signing keys,
// authenticated symmetric encryption, hashing, and pairwise key agreement.
// Primitives: Ed25519 signatures, AES-128-GCM, SHA-256, X25519 + HKDF.

#include "onionchain/bytes.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace onionchain::crypto {

inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSymmetricKeySize = 16;  // AES-128
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kCiphertextOverhead = kNonceSize + kTagSize;

struct PublicKey {
    std::array<std::uint8_t, kPublicKeySize> bytes{};

    ByteView view() const noexcept { return bytes; }
    std::string hex() const { return to_hex(bytes); }
    static PublicKey from(ByteView raw);  // throws MalformedInput on wrong width

    friend auto operator<=>(const PublicKey&, const PublicKey&) = default;
};

/// Signing secret. Holds the 32-byte seed plus a cached library handle.
class SecretKey {
public:
    explicit SecretKey(const std::array<std::uint8_t, kSecretKeySize>& seed);

    const std::array<std::uint8_t, kSecretKeySize>& seed() const noexcept { return seed_; }
    PublicKey public_key() const;

    friend bool operator==(const SecretKey& a, const SecretKey& b) noexcept { return a.seed_ == b.seed_; }

private:
    friend struct SecretKeyAccess;
    std::array<std::uint8_t, kSecretKeySize> seed_;
    std::shared_ptr<void> handle_;
};

struct KeyPair {
    PublicKey public_key;
    SecretKey secret_key;
};

struct Signature {
    Bytes sig_bytes;

    friend bool operator==(const Signature&, const Signature&) = default;
};

struct Digest {
    std::array<std::uint8_t, kDigestSize> hash_bytes{};

    ByteView view() const noexcept { return hash_bytes; }
    std::string hex() const { return to_hex(hash_bytes); }
    bool is_zero() const noexcept;
    static Digest zero() noexcept { return {}; }
    static Digest from(ByteView raw);
    static Digest from_hex(std::string_view hex);

    friend auto operator<=>(const Digest&, const Digest&) = default;
};

enum class KeyPurpose : std::uint8_t { HopEncryption = 1, Proof = 2 };

std::string_view to_string(KeyPurpose p) noexcept;

struct SymmetricKey {
    std::array<std::uint8_t, kSymmetricKeySize> key_bytes{};
    KeyPurpose purpose = KeyPurpose::HopEncryption;
    /// Ordered pair naming the adjacent hops the key belongs to (K_{x-y}).
    std::pair<PartyId, PartyId> endpoints;

    /// Key identity is its secret material; naming metadata is ignored.
    friend bool operator==(const SymmetricKey& a, const SymmetricKey& b) noexcept
    {
        return a.key_bytes == b.key_bytes;
    }
};

/// Deterministic under a seed; fresh OS randomness otherwise.
KeyPair generate_keypair(std::optional<std::uint64_t> seed = std::nullopt);
KeyPair keypair_from_seed_bytes(const std::array<std::uint8_t, kSecretKeySize>& seed);

Signature sign(const SecretKey& secret_key, ByteView message);
/// Never throws; malformed keys or signatures verify as false.
bool verify(const PublicKey& public_key, const Signature& sig, ByteView message) noexcept;

/// Output layout: nonce || ciphertext || tag. The nonce is synthetic
/// (derived from key and plaintext), so encryption is deterministic.
Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext);
/// Throws Error(AuthenticationFailure) on a wrong key or any tampering.
Bytes sym_decrypt(const SymmetricKey& key, ByteView ciphertext);
/// Non-throwing variant of sym_decrypt.
std::optional<Bytes> try_sym_decrypt(const SymmetricKey& key, ByteView ciphertext);

Digest digest(ByteView message);
/// Fills `out` with OS randomness.
void random_bytes(std::span<std::uint8_t> out);

// ---------------------------------------------------------------------------
// Key agreement: a two-message X25519 exchange. Only the public shares cross
// the wire; both ends run HKDF over the shared secret and the transcript.

struct KeyShare {
    PartyId from;
    PartyId to;
    KeyPurpose purpose = KeyPurpose::HopEncryption;
    std::array<std::uint8_t, 32> public_share{};
};

/// Transport the exchange runs over (the simulated network in practice).
class KeyAgreementChannel {
public:
    virtual ~KeyAgreementChannel() = default;
    virtual bool reachable(const PartyId& party) const = 0;
    /// 32 bytes of secret randomness for `party`'s ephemeral key.
    virtual std::array<std::uint8_t, 32> ephemeral_entropy(const PartyId& party) = 0;
    /// Called for every share placed on the wire.
    virtual void on_share(const KeyShare&) {}
};

struct NegotiatedKey {
    SymmetricKey initiator_copy;
    SymmetricKey responder_copy;
    KeyShare offer;
    KeyShare reply;
};

/// Errors: PeerUnreachable if either end is unreachable on `channel`.
/// `naming` labels the resulting key; it defaults to (initiator, responder).
NegotiatedKey negotiate_key(KeyAgreementChannel& channel, const PartyId& initiator,
                            const PartyId& responder, KeyPurpose purpose,
                            std::optional<std::pair<PartyId, PartyId>> naming = std::nullopt);

}  // namespace onionchain::crypto
