#pragma once

// Minimal protocol-buffer wire reader over a byte span. Every read is
// bounds-checked; malformed input raises DecodeError carrying the absolute
// offset of the offending byte.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osmfac/error.hpp"

namespace osmfac::wire {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class WireType : std::uint8_t { Varint = 0, Fixed64 = 1, LengthDelimited = 2, Fixed32 = 5 };

inline std::int64_t zigzag_decode(std::uint64_t v) noexcept {
    return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

inline std::uint64_t zigzag_encode(std::int64_t v) noexcept {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

struct Field {
    std::uint32_t number = 0;
    WireType type = WireType::Varint;
    std::uint64_t varint = 0;   // Varint / Fixed32 / Fixed64 payload
    ByteView bytes;             // LengthDelimited payload
    std::size_t offset = 0;     // absolute offset of the payload
};

class Reader {
public:
    /// `base` is the absolute offset of data[0], used for error reporting.
    explicit Reader(ByteView data, std::size_t base = 0) : data_(data), base_(base) {}

    bool at_end() const noexcept { return pos_ >= data_.size(); }
    std::size_t offset() const noexcept { return base_ + pos_; }

    std::uint64_t read_varint(std::uint32_t field = 0) {
        std::uint64_t value = 0;
        const std::size_t start = pos_;
        for (unsigned shift = 0; shift < 64; shift += 7) {
            if (pos_ >= data_.size())
                throw DecodeError("truncated varint", base_ + start, field);
            const std::uint8_t b = data_[pos_++];
            if (shift == 63 && (b & 0x7e))
                throw DecodeError("varint exceeds 64 bits", base_ + start, field);
            value |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return value;
        }
        throw DecodeError("varint exceeds 64 bits", base_ + start, field);
    }

    /// Reads the next field; false at end of buffer.
    bool next(Field& f) {
        if (at_end()) return false;
        const std::size_t key_offset = offset();
        const std::uint64_t key = read_varint();
        const std::uint64_t number = key >> 3;
        if (number == 0 || number > 0x1fffffff)
            throw DecodeError("invalid field number", key_offset);
        f.number = static_cast<std::uint32_t>(number);
        f.offset = offset();
        switch (key & 7) {
        case 0:
            f.type = WireType::Varint;
            f.varint = read_varint(f.number);
            break;
        case 1:
            f.type = WireType::Fixed64;
            f.varint = read_fixed(8, f.number);
            break;
        case 2: {
            f.type = WireType::LengthDelimited;
            const std::uint64_t len = read_varint(f.number);
            if (len > data_.size() - pos_)
                throw DecodeError("length-delimited field overruns buffer", key_offset, f.number);
            f.offset = offset();
            f.bytes = data_.subspan(pos_, static_cast<std::size_t>(len));
            pos_ += static_cast<std::size_t>(len);
            break;
        }
        case 5:
            f.type = WireType::Fixed32;
            f.varint = read_fixed(4, f.number);
            break;
        default:
            throw DecodeError("unsupported wire type " + std::to_string(key & 7), key_offset, f.number);
        }
        return true;
    }

private:
    std::uint64_t read_fixed(std::size_t n, std::uint32_t field) {
        if (n > data_.size() - pos_) throw DecodeError("truncated fixed-width field", offset(), field);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }

    ByteView data_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

inline void expect_type(const Field& f, WireType t) {
    if (f.type != t) throw DecodeError("unexpected wire type", f.offset, f.number);
}

/// Appends a repeated integer field, accepting both packed and unpacked encodings.
template <typename T, bool Zigzag>
void append_repeated(const Field& f, std::vector<T>& out) {
    auto convert = [](std::uint64_t v) -> T {
        if constexpr (Zigzag) return static_cast<T>(zigzag_decode(v));
        else return static_cast<T>(v);
    };
    if (f.type == WireType::Varint) {
        out.push_back(convert(f.varint));
        return;
    }
    expect_type(f, WireType::LengthDelimited);
    Reader r(f.bytes, f.offset);
    while (!r.at_end()) out.push_back(convert(r.read_varint(f.number)));
}

inline std::string as_string(const Field& f) {
    expect_type(f, WireType::LengthDelimited);
    return std::string(f.bytes.begin(), f.bytes.end());
}

inline std::int64_t as_int64(const Field& f) {
    expect_type(f, WireType::Varint);
    return static_cast<std::int64_t>(f.varint);
}

inline std::int64_t as_sint64(const Field& f) {
    expect_type(f, WireType::Varint);
    return zigzag_decode(f.varint);
}

}  // namespace osmfac::wire
