#pragma once

// Canonical byte encoding shared by every signed, hashed, or encrypted
// structure. A structure is an ordered run of fields, each laid out as
//
//   [tag : 1 byte][length : 4 bytes, big-endian][payload : length bytes]
//
// Integers are fixed-width big-endian payloads; nested structures are
// embedded as the payload of a single field. Decoders are strict: tags must
// appear in the declared order and trailing bytes are rejected.

#include "onionchain/bytes.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace onionchain::canonical {

using Tag = std::uint8_t;

inline constexpr std::size_t kFieldOverhead = 5;
inline constexpr std::size_t kMaxFieldLength = 0xFFFFFFFFu;

class Writer {
public:
    Writer& bytes(Tag tag, ByteView payload);
    Writer& str(Tag tag, std::string_view s) { return bytes(tag, as_bytes(s)); }
    Writer& u64(Tag tag, std::uint64_t v);
    Writer& i64(Tag tag, std::int64_t v) { return u64(tag, static_cast<std::uint64_t>(v)); }
    Writer& u32(Tag tag, std::uint32_t v);
    Writer& u8(Tag tag, std::uint8_t v);
    Writer& boolean(Tag tag, bool v) { return u8(tag, v ? 1 : 0); }

    /// Reserve room for large payloads before writing them.
    void reserve(std::size_t n) { out_.reserve(n); }

    const Bytes& view() const& noexcept { return out_; }
    Bytes take() && noexcept { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(ByteView data) noexcept : data_(data) {}

    ByteView bytes(Tag tag);
    Bytes bytes_copy(Tag tag);
    std::string str(Tag tag);
    std::uint64_t u64(Tag tag);
    std::int64_t i64(Tag tag) { return static_cast<std::int64_t>(u64(tag)); }
    std::uint32_t u32(Tag tag);
    std::uint8_t u8(Tag tag);
    bool boolean(Tag tag);

    /// Field is optional: returns nullopt if the next tag differs or input ended.
    std::optional<ByteView> maybe_bytes(Tag tag);

    bool at_end() const noexcept { return pos_ == data_.size(); }
    /// Throws MalformedInput if anything is left unread.
    void finish() const;

private:
    ByteView field(Tag tag);

    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace onionchain::canonical
