#include "onionchain/crypto.hpp"

#include "onionchain/canonical.hpp"
#include "onionchain/error.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/params.h>
#include <openssl/rand.h>

#include <algorithm>
#include <cstring>

namespace onionchain::crypto {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const noexcept { EVP_MD_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const noexcept { EVP_CIPHER_CTX_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const noexcept { EVP_PKEY_CTX_free(p); }
};
struct KdfDeleter {
    void operator()(EVP_KDF* p) const noexcept { EVP_KDF_free(p); }
};
struct KdfCtxDeleter {
    void operator()(EVP_KDF_CTX* p) const noexcept { EVP_KDF_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

[[noreturn]] void library_failure(const char* what)
{
    throw std::runtime_error(std::string("openssl: ") + what);
}

// OpenSSL takes a non-null pointer even for empty input.
const unsigned char* ptr_or_empty(ByteView v) noexcept
{
    static const unsigned char empty = 0;
    return v.empty() ? &empty : v.data();
}

std::array<std::uint8_t, 32> hash_seed(std::uint64_t seed)
{
    canonical::Writer w;
    w.str(1, "onionchain.keypair").u64(2, seed);
    return digest(w.view()).hash_bytes;
}

}  // namespace

// ---------------------------------------------------------------------------
// Keys and signatures

struct SecretKeyAccess {
    static EVP_PKEY* handle(const SecretKey& k) noexcept { return static_cast<EVP_PKEY*>(k.handle_.get()); }
};

PublicKey PublicKey::from(ByteView raw)
{
    if (raw.size() != kPublicKeySize)
        throw Error(Errc::MalformedInput, "public key width");
    PublicKey pk;
    std::copy(raw.begin(), raw.end(), pk.bytes.begin());
    return pk;
}

SecretKey::SecretKey(const std::array<std::uint8_t, kSecretKeySize>& seed) : seed_(seed)
{
    EVP_PKEY* raw = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed_.data(), seed_.size());
    if (raw == nullptr)
        library_failure("ed25519 private key");
    handle_ = std::shared_ptr<void>(raw, [](void* p) { EVP_PKEY_free(static_cast<EVP_PKEY*>(p)); });
}

PublicKey SecretKey::public_key() const
{
    PublicKey pk;
    std::size_t len = pk.bytes.size();
    if (EVP_PKEY_get_raw_public_key(SecretKeyAccess::handle(*this), pk.bytes.data(), &len) != 1
        || len != kPublicKeySize)
        library_failure("ed25519 public key");
    return pk;
}

KeyPair keypair_from_seed_bytes(const std::array<std::uint8_t, kSecretKeySize>& seed)
{
    SecretKey sk(seed);
    auto pk = sk.public_key();
    return KeyPair{pk, std::move(sk)};
}

KeyPair generate_keypair(std::optional<std::uint64_t> seed)
{
    std::array<std::uint8_t, kSecretKeySize> bytes{};
    if (seed)
        bytes = hash_seed(*seed);
    else
        random_bytes(bytes);
    return keypair_from_seed_bytes(bytes);
}

Signature sign(const SecretKey& secret_key, ByteView message)
{
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, SecretKeyAccess::handle(secret_key)) != 1)
        library_failure("sign init");
    Signature sig;
    sig.sig_bytes.resize(kSignatureSize);
    std::size_t len = sig.sig_bytes.size();
    if (EVP_DigestSign(ctx.get(), sig.sig_bytes.data(), &len, ptr_or_empty(message), message.size()) != 1)
        library_failure("sign");
    sig.sig_bytes.resize(len);
    return sig;
}

bool verify(const PublicKey& public_key, const Signature& sig, ByteView message) noexcept
{
    if (sig.sig_bytes.size() != kSignatureSize)
        return false;
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.bytes.data(),
                                            public_key.bytes.size()));
    if (!key)
        return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        return false;
    return EVP_DigestVerify(ctx.get(), sig.sig_bytes.data(), sig.sig_bytes.size(), ptr_or_empty(message),
                            message.size())
        == 1;
}

// ---------------------------------------------------------------------------
// Symmetric encryption

std::string_view to_string(KeyPurpose p) noexcept
{
    switch (p) {
    case KeyPurpose::HopEncryption: return "hop-encryption";
    case KeyPurpose::Proof: return "proof";
    }
    return "unknown";
}

Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext)
{
    std::array<std::uint8_t, 32> mac{};
    unsigned int mac_len = 0;
    if (HMAC(EVP_sha256(), key.key_bytes.data(), static_cast<int>(key.key_bytes.size()), ptr_or_empty(plaintext),
             plaintext.size(), mac.data(), &mac_len)
        == nullptr)
        library_failure("hmac");

    Bytes out(kNonceSize + plaintext.size() + kTagSize);
    std::copy_n(mac.begin(), kNonceSize, out.begin());

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr) != 1
        || EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.key_bytes.data(), out.data()) != 1)
        library_failure("gcm init");

    int len = 0;
    std::size_t written = 0;
    // EVP lengths are int; feed large payloads in chunks.
    constexpr std::size_t chunk = 1u << 30;
    for (std::size_t off = 0; off < plaintext.size(); off += chunk) {
        auto n = std::min(chunk, plaintext.size() - off);
        if (EVP_EncryptUpdate(ctx.get(), out.data() + kNonceSize + off, &len, plaintext.data() + off,
                              static_cast<int>(n))
            != 1)
            library_failure("gcm update");
        written += static_cast<std::size_t>(len);
    }
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceSize + written, &len) != 1)
        library_failure("gcm final");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, out.data() + kNonceSize + plaintext.size())
        != 1)
        library_failure("gcm tag");
    return out;
}

std::optional<Bytes> try_sym_decrypt(const SymmetricKey& key, ByteView ciphertext)
{
    if (ciphertext.size() < kCiphertextOverhead)
        return std::nullopt;
    const auto body_len = ciphertext.size() - kCiphertextOverhead;
    auto nonce = ciphertext.first(kNonceSize);
    auto body = ciphertext.subspan(kNonceSize, body_len);
    auto tag = ciphertext.last(kTagSize);

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr) != 1
        || EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr) != 1
        || EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.key_bytes.data(), nonce.data()) != 1)
        library_failure("gcm init");

    Bytes out(body_len);
    int len = 0;
    constexpr std::size_t chunk = 1u << 30;
    for (std::size_t off = 0; off < body_len; off += chunk) {
        auto n = std::min(chunk, body_len - off);
        if (EVP_DecryptUpdate(ctx.get(), out.data() + off, &len, body.data() + off, static_cast<int>(n)) != 1)
            return std::nullopt;
    }
    std::array<std::uint8_t, kTagSize> tag_copy{};
    std::copy(tag.begin(), tag.end(), tag_copy.begin());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag_copy.data()) != 1)
        return std::nullopt;
    std::uint8_t sink[16];
    if (EVP_DecryptFinal_ex(ctx.get(), sink, &len) != 1)
        return std::nullopt;
    return out;
}

Bytes sym_decrypt(const SymmetricKey& key, ByteView ciphertext)
{
    auto out = try_sym_decrypt(key, ciphertext);
    if (!out)
        throw Error(Errc::AuthenticationFailure, "symmetric decryption failed");
    return std::move(*out);
}

// ---------------------------------------------------------------------------
// Hashing and randomness

bool Digest::is_zero() const noexcept
{
    return std::all_of(hash_bytes.begin(), hash_bytes.end(), [](auto b) { return b == 0; });
}

Digest Digest::from(ByteView raw)
{
    if (raw.size() != kDigestSize)
        throw Error(Errc::MalformedInput, "digest width");
    Digest d;
    std::copy(raw.begin(), raw.end(), d.hash_bytes.begin());
    return d;
}

Digest Digest::from_hex(std::string_view hex) { return from(onionchain::from_hex(hex)); }

Digest digest(ByteView message)
{
    Digest d;
    unsigned int len = 0;
    if (EVP_Digest(ptr_or_empty(message), message.size(), d.hash_bytes.data(), &len, EVP_sha256(), nullptr) != 1)
        library_failure("sha256");
    return d;
}

void random_bytes(std::span<std::uint8_t> out)
{
    if (!out.empty() && RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        library_failure("rand");
}

// ---------------------------------------------------------------------------
// Key agreement

namespace {

struct Ephemeral {
    PkeyPtr key;
    std::array<std::uint8_t, 32> public_share{};

    explicit Ephemeral(const std::array<std::uint8_t, 32>& entropy)
        : key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, entropy.data(), entropy.size()))
    {
        if (!key)
            library_failure("x25519 key");
        std::size_t len = public_share.size();
        if (EVP_PKEY_get_raw_public_key(key.get(), public_share.data(), &len) != 1)
            library_failure("x25519 public");
    }

    Bytes agree(const std::array<std::uint8_t, 32>& peer_share) const
    {
        PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_share.data(), peer_share.size()));
        PkeyCtxPtr ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
        if (!peer || !ctx || EVP_PKEY_derive_init(ctx.get()) != 1
            || EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1)
            library_failure("x25519 derive init");
        std::size_t len = 0;
        if (EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1)
            library_failure("x25519 derive size");
        Bytes secret(len);
        if (EVP_PKEY_derive(ctx.get(), secret.data(), &len) != 1)
            library_failure("x25519 derive");
        secret.resize(len);
        return secret;
    }
};

std::array<std::uint8_t, kSymmetricKeySize> hkdf(ByteView secret, ByteView info)
{
    std::unique_ptr<EVP_KDF, KdfDeleter> kdf(EVP_KDF_fetch(nullptr, "HKDF", nullptr));
    if (!kdf)
        library_failure("hkdf fetch");
    std::unique_ptr<EVP_KDF_CTX, KdfCtxDeleter> ctx(EVP_KDF_CTX_new(kdf.get()));
    if (!ctx)
        library_failure("hkdf ctx");

    static const char salt[] = "onionchain.kdf";
    char digest_name[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest_name, 0),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, const_cast<std::uint8_t*>(secret.data()),
                                          secret.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, const_cast<char*>(salt), sizeof(salt) - 1),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, const_cast<std::uint8_t*>(info.data()),
                                          info.size()),
        OSSL_PARAM_construct_end(),
    };
    std::array<std::uint8_t, kSymmetricKeySize> out{};
    if (EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) != 1)
        library_failure("hkdf derive");
    return out;
}

Bytes transcript_info(KeyPurpose purpose, const std::pair<PartyId, PartyId>& naming, const KeyShare& offer,
                      const KeyShare& reply)
{
    canonical::Writer w;
    w.u8(1, static_cast<std::uint8_t>(purpose))
        .str(2, naming.first.str())
        .str(3, naming.second.str())
        .bytes(4, offer.public_share)
        .bytes(5, reply.public_share);
    return std::move(w).take();
}

}  // namespace

NegotiatedKey negotiate_key(KeyAgreementChannel& channel, const PartyId& initiator, const PartyId& responder,
                            KeyPurpose purpose, std::optional<std::pair<PartyId, PartyId>> naming)
{
    if (initiator == responder)
        throw Error(Errc::InvalidArgument, "key agreement needs two distinct parties");
    if (!channel.reachable(initiator))
        throw Error(Errc::PeerUnreachable, initiator.str());
    if (!channel.reachable(responder))
        throw Error(Errc::PeerUnreachable, responder.str());

    auto names = naming.value_or(std::make_pair(initiator, responder));

    Ephemeral ours(channel.ephemeral_entropy(initiator));
    KeyShare offer{initiator, responder, purpose, ours.public_share};
    channel.on_share(offer);

    Ephemeral theirs(channel.ephemeral_entropy(responder));
    KeyShare reply{responder, initiator, purpose, theirs.public_share};
    channel.on_share(reply);

    auto info = transcript_info(purpose, names, offer, reply);
    auto initiator_secret = ours.agree(reply.public_share);
    auto responder_secret = theirs.agree(offer.public_share);

    NegotiatedKey out;
    out.initiator_copy = SymmetricKey{hkdf(initiator_secret, info), purpose, names};
    out.responder_copy = SymmetricKey{hkdf(responder_secret, info), purpose, names};
    out.offer = std::move(offer);
    out.reply = std::move(reply);
    return out;
}

}  // namespace onionchain::crypto
