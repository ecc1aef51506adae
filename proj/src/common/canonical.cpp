#include "onionchain/canonical.hpp"

#include "onionchain/error.hpp"

#include <string>

namespace onionchain::canonical {

namespace {

void put_be(Bytes& out, std::uint64_t v, int width)
{
    for (int shift = (width - 1) * 8; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint64_t get_be(ByteView in)
{
    std::uint64_t v = 0;
    for (auto b : in)
        v = (v << 8) | b;
    return v;
}

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(Errc::MalformedInput, "canonical: " + what);
}

}  // namespace

Writer& Writer::bytes(Tag tag, ByteView payload)
{
    if (payload.size() > kMaxFieldLength)
        throw Error(Errc::InvalidArgument, "canonical: field too large");
    out_.push_back(tag);
    put_be(out_, payload.size(), 4);
    out_.insert(out_.end(), payload.begin(), payload.end());
    return *this;
}

Writer& Writer::u64(Tag tag, std::uint64_t v)
{
    out_.push_back(tag);
    put_be(out_, 8, 4);
    put_be(out_, v, 8);
    return *this;
}

Writer& Writer::u32(Tag tag, std::uint32_t v)
{
    out_.push_back(tag);
    put_be(out_, 4, 4);
    put_be(out_, v, 4);
    return *this;
}

Writer& Writer::u8(Tag tag, std::uint8_t v)
{
    out_.push_back(tag);
    put_be(out_, 1, 4);
    out_.push_back(v);
    return *this;
}

ByteView Reader::field(Tag tag)
{
    if (data_.size() - pos_ < kFieldOverhead)
        malformed("truncated field header");
    if (data_[pos_] != tag)
        malformed("unexpected tag " + std::to_string(data_[pos_]) + ", wanted " + std::to_string(tag));
    auto len = get_be(data_.subspan(pos_ + 1, 4));
    pos_ += kFieldOverhead;
    if (data_.size() - pos_ < len)
        malformed("truncated field payload");
    auto out = data_.subspan(pos_, len);
    pos_ += len;
    return out;
}

ByteView Reader::bytes(Tag tag) { return field(tag); }

Bytes Reader::bytes_copy(Tag tag)
{
    auto v = field(tag);
    return {v.begin(), v.end()};
}

std::string Reader::str(Tag tag)
{
    auto v = field(tag);
    return {v.begin(), v.end()};
}

std::uint64_t Reader::u64(Tag tag)
{
    auto v = field(tag);
    if (v.size() != 8)
        malformed("u64 width");
    return get_be(v);
}

std::uint32_t Reader::u32(Tag tag)
{
    auto v = field(tag);
    if (v.size() != 4)
        malformed("u32 width");
    return static_cast<std::uint32_t>(get_be(v));
}

std::uint8_t Reader::u8(Tag tag)
{
    auto v = field(tag);
    if (v.size() != 1)
        malformed("u8 width");
    return v[0];
}

bool Reader::boolean(Tag tag)
{
    auto v = u8(tag);
    if (v > 1)
        malformed("boolean value");
    return v == 1;
}

std::optional<ByteView> Reader::maybe_bytes(Tag tag)
{
    if (at_end() || data_[pos_] != tag)
        return std::nullopt;
    return field(tag);
}

void Reader::finish() const
{
    if (!at_end())
        malformed("trailing bytes");
}

}  // namespace onionchain::canonical
