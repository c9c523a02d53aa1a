#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace osmfac::text {

/// Lower-cases ASCII and Latin letters, maps precomposed Latin letters to
/// their unaccented base (é -> e, œ -> oe) and drops combining marks
/// U+0300..U+036F. Other code points pass through unchanged.
std::string fold(std::string_view utf8);

/// True for bytes that belong to a word: ASCII alphanumerics and any byte of
/// a multi-byte UTF-8 sequence.
inline bool is_word_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

/// Splits on non-word bytes; empty pieces dropped.
std::vector<std::string_view> words(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

std::vector<std::string> split(std::string_view s, char sep);

/// Upper-case ASCII letter or a precomposed upper-case Latin letter.
bool starts_capitalized(std::string_view word) noexcept;

}  // namespace osmfac::text
