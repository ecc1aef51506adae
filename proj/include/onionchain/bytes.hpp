#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace onionchain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) { return {s.begin(), s.end()}; }

std::string to_hex(ByteView data);
/// Throws Error(MalformedInput) on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// Externally meaningful identifier of a party; also its identity string.
class PartyId {
public:
    PartyId() = default;
    explicit PartyId(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const PartyId&, const PartyId&) = default;
    friend bool operator==(const PartyId&, const PartyId&) = default;

private:
    std::string value_;
};

}  // namespace onionchain

template <>
struct std::hash<onionchain::PartyId> {
    std::size_t operator()(const onionchain::PartyId& p) const noexcept
    {
        return std::hash<std::string>{}(p.str());
    }
};
