#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace osmfac {

/// Base of every error the library throws on bad input or broken contracts.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary input. `offset` is a byte position inside the buffer
/// being decoded (file offset for framing errors).
class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t offset, std::uint32_t field = 0)
        : Error(what + " (offset " + std::to_string(offset) +
                (field ? ", field " + std::to_string(field) : std::string{}) + ")"),
          offset_(offset), field_(field) {}

    std::size_t offset() const noexcept { return offset_; }
    std::uint32_t field() const noexcept { return field_; }

private:
    std::size_t offset_;
    std::uint32_t field_;
};

class OverflowError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

/// Payload length disagrees with what the container declared.
class IntegrityError : public Error {
public:
    using Error::Error;
};

class UnsupportedCompression : public Error {
public:
    explicit UnsupportedCompression(std::string variant)
        : Error("unsupported blob compression: " + variant), variant_(std::move(variant)) {}
    const std::string& variant() const noexcept { return variant_; }

private:
    std::string variant_;
};

/// A decoded value breaks a data-model invariant (empty way, lat out of range...).
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Tag-string / CSV / TSV syntax error at a character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Precondition violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-fatal conditions, counted by name. Not thread-safe; use one per worker
/// and merge.
class WarningCounters {
public:
    void bump(std::string_view name, std::uint64_t n = 1) { counts_[std::string(name)] += n; }
    std::uint64_t get(std::string_view name) const {
        auto it = counts_.find(std::string(name));
        return it == counts_.end() ? 0 : it->second;
    }
    void merge(const WarningCounters& other) {
        for (const auto& [k, v] : other.counts_) counts_[k] += v;
    }
    const std::map<std::string, std::uint64_t>& all() const noexcept { return counts_; }
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& [k, v] : counts_) t += v;
        return t;
    }

private:
    std::map<std::string, std::uint64_t> counts_;
};

inline void warn(WarningCounters* w, std::string_view name) {
    if (w) w->bump(name);
}

}  // namespace osmfac
