#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "osmfac/building_class.hpp"
#include "osmfac/element.hpp"
#include "osmfac/error.hpp"
#include "osmfac/tag_map.hpp"

namespace osmfac {

/// Structured-key vocabulary: which keys count, in what order, and how their
/// values map onto building classes.
///
/// File format (tab-separated, UTF-8, `#` comments):
///
///     key  value  class  category  priority
///
/// `value` is `*` for the key-level fallback; `class` is school, clinic or
/// other. Lower priority numbers are scanned first. Values mapped to `other`
/// (and keys without a fallback row) resolve to Other("key=value").
class KeySchema {
public:
    static KeySchema parse(std::string_view tsv);
    static KeySchema load(const std::filesystem::path& path);
    /// The schema compiled into the library (data/key_schema.tsv).
    static const KeySchema& builtin();

    /// Recognized keys, highest priority first.
    std::vector<std::string> recognized_keys() const;

    struct Resolution {
        BuildingClass cls;
        std::optional<std::string> key;  // winning key, absent when Unresolved
    };
    Resolution resolve(const TagMap& tags) const;

private:
    struct KeyRule {
        std::string key;
        int priority = 0;
        // nullopt target => Other("key=value")
        std::map<std::string, std::optional<BuildingClass>, std::less<>> values;
        std::optional<BuildingClass> fallback;
    };
    std::vector<KeyRule> rules_;  // sorted by priority
};

BuildingClass resolve_structured(const TagMap& tags, const KeySchema& schema);

/// Brace-delimited tag text, e.g. {`name` : `Niger hospital`}.
struct UnstructuredText {
    std::string text;
    friend bool operator==(const UnstructuredText&, const UnstructuredText&) = default;
};

/// Canonical form: {`k1` : `v1`, `k2` : `v2`}, backticks doubled.
UnstructuredText serialize_unstructured(const TagMap& tags);

/// Inverse of serialize_unstructured; accepts any whitespace around the
/// delimiters. Duplicate keys: last wins, counted as "tags.duplicate_key".
/// Throws ParseError with a character offset.
TagMap parse_tag_string(std::string_view text, WarningCounters* warnings = nullptr);

/// Structured class plus the serialization of every tag not consumed by the
/// winning key (all tags when Unresolved).
std::pair<BuildingClass, UnstructuredText> split_resolved_unresolved(const RawElement& element,
                                                                    const KeySchema& schema);

}  // namespace osmfac
