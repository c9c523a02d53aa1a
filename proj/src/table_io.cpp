#include "osmfac/table_io.hpp"

#include <fstream>
#include <sstream>

#include "osmfac/error.hpp"
#include "osmfac/text.hpp"

namespace osmfac {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
    if (auto c = find_column(name)) return *c;
    throw ConfigError("missing column '" + std::string(name) + "'");
}

Table parse_tsv(std::string_view text) {
    Table t;
    std::size_t line_no = 0;
    bool have_header = false;
    for (const std::string& raw : text::split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty() || line.front() == '#') continue;
        auto fields = text::split(line, '\t');
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                                 " tab-separated fields, got " + std::to_string(fields.size()),
                             line_no);
        t.rows.push_back(std::move(fields));
        t.row_lines.push_back(line_no);
    }
    return t;
}

Table parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    Table t;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool have_header = false;
    std::size_t line_no = 1, record_line = 1, quote_start = 0;

    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        const bool blank = record.size() == 1 && record.front().empty();
        if (!blank) {
            if (!have_header) {
                t.header = std::move(record);
                have_header = true;
            } else {
                t.rows.push_back(std::move(record));
                t.row_lines.push_back(record_line);
            }
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            quote_start = i;
            break;
        case ',':
            record.push_back(std::move(field));
            field.clear();
            break;
        case '\r': break;
        case '\n':
            end_record();
            record_line = ++line_no;
            break;
        default: field.push_back(c);
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field", quote_start);
    if (!field.empty() || !record.empty()) end_record();
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        t.rows[i].resize(std::max(t.rows[i].size(), t.header.size()));
    return t;
}

std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace osmfac
