#include "onionchain/registry/request.hpp"

#include "onionchain/canonical.hpp"
#include "onionchain/wire_tags.hpp"

namespace onionchain::registry {

Bytes identity_statement(std::string_view identity)
{
    canonical::Writer w;
    w.str(tags::kRegIdentity, identity);
    return std::move(w).take();
}

Bytes RegistrationRequest::canonical() const
{
    canonical::Writer w;
    w.bytes(tags::kRegPublicKey, public_key.view())
        .str(tags::kRegIdentity, identity)
        .bytes(tags::kRegSignature, signature.sig_bytes);
    return std::move(w).take();
}

RegistrationRequest RegistrationRequest::decode(ByteView bytes)
{
    canonical::Reader r(bytes);
    RegistrationRequest req;
    req.public_key = crypto::PublicKey::from(r.bytes(tags::kRegPublicKey));
    req.identity = r.str(tags::kRegIdentity);
    req.signature.sig_bytes = r.bytes_copy(tags::kRegSignature);
    r.finish();
    return req;
}

bool signature_valid(const RegistrationRequest& req) noexcept
{
    try {
        return crypto::verify(req.public_key, req.signature, identity_statement(req.identity));
    } catch (...) {
        return false;
    }
}

}  // namespace onionchain::registry
