#include "osmfac/tag_resolution.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "osmfac/builtin_data.hpp"
#include "osmfac/table_io.hpp"

namespace osmfac {

namespace {

std::optional<BuildingClass> parse_target(std::string_view cls, std::string_view category, std::size_t line) {
    if (cls == "other") return std::nullopt;
    if (auto fc = facility_class(cls, category)) return fc;
    throw ConfigError("key schema line " + std::to_string(line) + ": unknown class/category '" + std::string(cls) +
                      "/" + std::string(category) + "'");
}

std::string label(std::string_view key, std::string_view value) {
    std::string s(key);
    s += '=';
    s += value;
    return s;
}

void append_quoted(std::string& out, std::string_view s) {
    out.push_back('`');
    for (char c : s) {
        if (c == '`') out.push_back('`');
        out.push_back(c);
    }
    out.push_back('`');
}

class TagStringParser {
public:
    explicit TagStringParser(std::string_view s) : s_(s) {}

    TagMap parse(WarningCounters* warnings) {
        TagMap out;
        skip_ws();
        expect('{');
        skip_ws();
        if (peek() == '}') {
            ++pos_;
        } else {
            while (true) {
                std::string key = quoted();
                skip_ws();
                expect(':');
                skip_ws();
                std::string value = quoted();
                if (out.set(std::move(key), std::move(value))) warn(warnings, "tags.duplicate_key");
                skip_ws();
                if (pos_ >= s_.size()) throw ParseError("unbalanced braces: missing '}'", pos_);
                const char c = s_[pos_++];
                if (c == '}') break;
                if (c != ',') throw ParseError(std::string("expected ',' or '}' but found '") + c + "'", pos_ - 1);
                skip_ws();
            }
        }
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected characters after '}'", pos_);
        return out;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    void expect(char c) {
        if (pos_ >= s_.size()) {
            if (c == '}' || c == ':') throw ParseError("unbalanced braces: unexpected end of text", pos_);
            throw ParseError(std::string("expected '") + c + "' but text ended", pos_);
        }
        if (s_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    std::string quoted() {
        if (pos_ >= s_.size()) throw ParseError("unbalanced braces: unexpected end of text", pos_);
        if (s_[pos_] != '`') throw ParseError("expected '`'", pos_);
        const std::size_t start = pos_++;
        std::string out;
        while (true) {
            if (pos_ >= s_.size()) throw ParseError("unterminated quoted segment", start);
            const char c = s_[pos_];
            if (c == '`') {
                if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '`') {
                    out.push_back('`');
                    pos_ += 2;
                    continue;
                }
                ++pos_;
                return out;
            }
            out.push_back(c);
            ++pos_;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

KeySchema KeySchema::parse(std::string_view tsv) {
    const Table t = parse_tsv(tsv);
    const std::size_t c_key = t.column("key"), c_value = t.column("value"), c_class = t.column("class"),
                      c_cat = t.column("category"), c_prio = t.column("priority");
    KeySchema schema;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.row_lines[i];
        int priority = 0;
        const std::string& p = row[c_prio];
        if (auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), priority);
            ec != std::errc{} || ptr != p.data() + p.size())
            throw ConfigError("key schema line " + std::to_string(line) + ": bad priority '" + p + "'");

        const std::string& key = row[c_key];
        if (key.empty()) throw ConfigError("key schema line " + std::to_string(line) + ": empty key");
        auto it = std::find_if(schema.rules_.begin(), schema.rules_.end(),
                               [&](const KeyRule& r) { return r.key == key; });
        if (it == schema.rules_.end()) {
            if (std::any_of(schema.rules_.begin(), schema.rules_.end(),
                            [&](const KeyRule& r) { return r.priority == priority; }))
                throw ConfigError("key schema line " + std::to_string(line) + ": priority " + p +
                                  " already used by another key");
            schema.rules_.push_back(KeyRule{key, priority, {}, std::nullopt});
            it = std::prev(schema.rules_.end());
        } else if (it->priority != priority) {
            throw ConfigError("key schema line " + std::to_string(line) + ": key '" + key +
                              "' listed with two priorities");
        }

        auto target = parse_target(row[c_class], row[c_cat], line);
        if (row[c_value] == "*") {
            if (target && target->top() == TopClass::Other) target.reset();
            it->fallback = target;
        } else {
            it->values[row[c_value]] = target;
        }
    }
    std::sort(schema.rules_.begin(), schema.rules_.end(),
              [](const KeyRule& a, const KeyRule& b) { return a.priority < b.priority; });
    return schema;
}

KeySchema KeySchema::load(const std::filesystem::path& path) { return parse(read_file_text(path)); }

const KeySchema& KeySchema::builtin() {
    static const KeySchema schema = parse(builtin::kKeySchemaTsv);
    return schema;
}

std::vector<std::string> KeySchema::recognized_keys() const {
    std::vector<std::string> keys;
    for (const auto& r : rules_) keys.push_back(r.key);
    return keys;
}

KeySchema::Resolution KeySchema::resolve(const TagMap& tags) const {
    for (const KeyRule& rule : rules_) {
        const auto value = tags.get(rule.key);
        if (!value) continue;
        const auto hit = rule.values.find(*value);
        const std::optional<BuildingClass>& target = hit != rule.values.end() ? hit->second : rule.fallback;
        if (target) return {*target, rule.key};
        return {Other{label(rule.key, *value)}, rule.key};
    }
    return {Unresolved{}, std::nullopt};
}

BuildingClass resolve_structured(const TagMap& tags, const KeySchema& schema) { return schema.resolve(tags).cls; }

UnstructuredText serialize_unstructured(const TagMap& tags) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : tags) {
        if (!first) out += ", ";
        first = false;
        append_quoted(out, k);
        out += " : ";
        append_quoted(out, v);
    }
    out += '}';
    return {std::move(out)};
}

TagMap parse_tag_string(std::string_view text, WarningCounters* warnings) {
    return TagStringParser(text).parse(warnings);
}

std::pair<BuildingClass, UnstructuredText> split_resolved_unresolved(const RawElement& element,
                                                                    const KeySchema& schema) {
    auto res = schema.resolve(element.tags);
    TagMap leftover;
    for (const auto& [k, v] : element.tags)
        if (!res.key || k != *res.key) leftover.set(k, v);
    return {std::move(res.cls), serialize_unstructured(leftover)};
}

}  // namespace osmfac
