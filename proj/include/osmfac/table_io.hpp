#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace osmfac {

/// A delimited text table with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // 1-based source line of each row

    std::optional<std::size_t> find_column(std::string_view name) const;
    /// ConfigError when absent.
    std::size_t column(std::string_view name) const;
};

/// Tab-separated, no quoting. Blank lines and lines starting with `#` are
/// skipped; the first remaining line is the header.
Table parse_tsv(std::string_view text);

/// RFC 4180 style: `"` quoting with `""` escapes, fields may span lines.
/// A leading UTF-8 BOM is ignored. ParseError on an unterminated quote.
Table parse_csv(std::string_view text);

std::string read_file_text(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

}  // namespace osmfac
